"""Published CSV schemas of the fttm toolkit and a validating loader."""

import csv

import numpy as np


class SchemaError(ValueError):
    """Input CSV does not match the published schema."""


#: Required columns per figure kind, in no particular order.
SCHEMAS = {
    "trace": ("period_index", "peak_time_s", "fwhm_s", "peak_amplitude",
              "mapped_freq_hz", "boundary_flag"),
    "width_surface": ("k_hz_per_s", "bandwidth_hz", "fwhm_time_s",
                      "fwhm_freq_hz"),
    "response": ("freq_hz", "re", "im", "mag_db"),
    "spectrogram": ("time_s", "freq_hz", "magnitude"),
    "error_stats": ("true_sep_hz", "pump_sweep_hz", "snr_db", "trials",
                    "failures", "max_abs_error_hz", "mean_error_hz",
                    "stddev_error_hz"),
}

#: Columns that may legitimately be empty (unmapped pulses).
_OPTIONAL_VALUES = {"mapped_freq_hz"}


def load_csv(path, kind):
    """Read a CSV and return a dict of float arrays keyed by column.

    Raises SchemaError naming the first offending column when the header or
    a value does not conform.
    """
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    required = SCHEMAS[kind]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for col in required:
        vals = []
        for i, row in enumerate(rows):
            raw = row[col]
            if raw == "" and col in _OPTIONAL_VALUES:
                vals.append(np.nan)
                continue
            try:
                vals.append(float(raw))
            except (TypeError, ValueError):
                raise SchemaError(
                    f"{path}: row {i + 2}, column {col!r}: "
                    f"not a number ({raw!r})")
        out[col] = np.array(vals)
    return out
