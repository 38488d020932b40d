"""Time-frequency diagrams stacked from consecutive sweep periods.

Each sweep period contributes one spectrogram row: the photodetected
envelope of that period is resampled onto a uniform frequency axis through
the time-to-frequency mapping, so the temporal resolution equals the sweep
period and the frequency window is exactly the sweep span.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ProcessingError, ValidationError
from .filters import FilterSpec, apply_filter, nominal_width
from .signals import (DEFAULT_OVERSAMPLING, NoiseSpec, SutSpec, SweepConfig,
                      add_awgn, synthesize_probe_chirp, synthesize_sut)
from .engine import CalibrationOffset, heterodyne, photodetect

_BINARY_MAGIC = b"FTTM"
_BINARY_VERSION = 1
_BIN_HEADER = struct.Struct("<4sIQQ")


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Magnitude grid: one row per sweep period, columns on the sweep span."""

    time_axis: np.ndarray   # period midpoints, seconds
    freq_axis: np.ndarray   # Hz, uniform over [f_start, f_stop]
    magnitudes: np.ndarray  # linear power, rows x cols, >= 0

    def __post_init__(self):
        t = np.asarray(self.time_axis, dtype=float)
        f = np.asarray(self.freq_axis, dtype=float)
        m = np.asarray(self.magnitudes, dtype=float)
        if t.ndim != 1 or f.ndim != 1 or m.shape != (t.size, f.size):
            raise ValidationError("spectrogram axis/grid dimensions inconsistent")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(f) <= 0):
            raise ValidationError("spectrogram axes must be strictly increasing")
        if np.any(m < 0):
            raise ValidationError("spectrogram magnitudes must be >= 0")
        object.__setattr__(self, "time_axis", t)
        object.__setattr__(self, "freq_axis", f)
        object.__setattr__(self, "magnitudes", m)


def run_stft(sut: SutSpec, sweep: SweepConfig, filter_spec: FilterSpec,
             duration: float, freq_bins: int,
             sample_rate: Optional[float] = None,
             noise: Optional[NoiseSpec] = None,
             calibration: Optional[CalibrationOffset] = None) -> Spectrogram:
    """Run the pipeline over many periods and stack the rows.

    SUT content outside the sweep span simply does not appear in the grid.
    Magnitudes are linear power, normalized so the global maximum is one.
    """
    if duration < 2.0 * sweep.period:
        raise ValidationError("duration must cover at least two sweep periods")
    if freq_bins < 16:
        raise ValidationError("freq_bins must be >= 16")
    n_periods = int(math.floor(duration / sweep.period + 1e-9))
    if sample_rate is None:
        top = max(sut.max_frequency(), sweep.f_stop,
                  filter_spec.center + sweep.span / 2.0 + nominal_width(filter_spec))
        sample_rate = DEFAULT_OVERSAMPLING * top
        sample_rate = round(sample_rate * sweep.period) / sweep.period

    probe = synthesize_probe_chirp(sweep, n_periods, sample_rate)
    sig = synthesize_sut(sut, sample_rate, probe.duration)
    mixed = heterodyne(sig, probe, filter_spec.center)
    if noise is not None and noise.enabled:
        mixed = add_awgn(mixed, noise)
    env = photodetect(apply_filter(mixed, filter_spec))
    env_vals = np.real(env.samples)

    offset = calibration.time_offset if calibration else 0.0
    k = sweep.rate
    freq_axis = np.linspace(sweep.f_start, sweep.f_stop, freq_bins)
    rel_pos = ((freq_axis - sweep.f_start) / k + offset) * sample_rate
    sample_idx = np.arange(len(env_vals))
    rows = np.empty((n_periods, freq_bins))
    for p in range(n_periods):
        pos = p * sweep.period * sample_rate + rel_pos
        rows[p] = np.interp(pos, sample_idx, env_vals, left=0.0, right=0.0)
    peak = rows.max()
    if peak > 0:
        rows /= peak
    time_axis = (np.arange(n_periods) + 0.5) * sweep.period
    return Spectrogram(time_axis, freq_axis, rows)


def ridge_width(spec: Spectrogram, period_index: int) -> float:
    """FWHM (Hz) of the main lobe in one spectrogram row."""
    if not 0 <= period_index < spec.magnitudes.shape[0]:
        raise ValidationError("period_index out of range")
    row = spec.magnitudes[period_index]
    peak = float(np.max(row))
    if peak <= 0.0:
        raise ProcessingError(f"row {period_index} has no lobe")
    half = peak / 2.0
    i = int(np.argmax(row))
    f = spec.freq_axis

    def crossing(step):
        j = i
        while 0 <= j + step < len(row):
            nxt = j + step
            if row[nxt] < half:
                frac = (row[j] - half) / (row[j] - row[nxt])
                return f[j] + frac * (f[nxt] - f[j])
            j = nxt
        return None

    left, right = crossing(-1), crossing(+1)
    if left is None or right is None:
        raise ProcessingError(f"row {period_index}: lobe not bounded by "
                              "half-power crossings")
    return right - left


def ridge_frequencies(spec: Spectrogram) -> np.ndarray:
    """Per-row frequency of the ridge maximum (parabolic refinement)."""
    rows = spec.magnitudes
    idx = np.argmax(rows, axis=1)
    df = spec.freq_axis[1] - spec.freq_axis[0]
    out = spec.freq_axis[idx].astype(float)
    for r, i in enumerate(idx):
        if 0 < i < rows.shape[1] - 1:
            y0, y1, y2 = rows[r, i - 1], rows[r, i], rows[r, i + 1]
            denom = y0 - 2.0 * y1 + y2
            if denom < 0:
                out[r] += df * min(0.5, max(-0.5, 0.5 * (y0 - y2) / denom))
    return out


def spectrogram_to_csv(spec: Spectrogram, path):
    """Long-form CSV `time_s,freq_hz,magnitude`, row-major."""
    with open(path, "w", newline="") as fh:
        fh.write("time_s,freq_hz,magnitude\n")
        for t, row in zip(spec.time_axis, spec.magnitudes):
            for f, m in zip(spec.freq_axis, row):
                fh.write(f"{t:.17g},{f:.17g},{m:.17g}\n")


def write_spectrogram(spec: Spectrogram, path):
    """Compact binary: FTTM header, axis lengths, axes, then the grid (f8 LE)."""
    with open(path, "wb") as fh:
        fh.write(_BIN_HEADER.pack(_BINARY_MAGIC, _BINARY_VERSION,
                                  spec.magnitudes.shape[0],
                                  spec.magnitudes.shape[1]))
        fh.write(spec.time_axis.astype("<f8").tobytes())
        fh.write(spec.freq_axis.astype("<f8").tobytes())
        fh.write(spec.magnitudes.astype("<f8").tobytes())


def read_spectrogram(path) -> Spectrogram:
    with open(path, "rb") as fh:
        magic, version, n_rows, n_cols = _BIN_HEADER.unpack(fh.read(_BIN_HEADER.size))
        if magic != _BINARY_MAGIC:
            raise ValidationError(f"not an FTTM spectrogram file: magic {magic!r}")
        if version != _BINARY_VERSION:
            raise ValidationError(f"unsupported spectrogram version {version}")
        t = np.frombuffer(fh.read(8 * n_rows), dtype="<f8")
        f = np.frombuffer(fh.read(8 * n_cols), dtype="<f8")
        m = np.frombuffer(fh.read(8 * n_rows * n_cols), dtype="<f8")
    return Spectrogram(t, f, m.reshape(n_rows, n_cols))
