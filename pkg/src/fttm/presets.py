"""Built-in scenario presets.

Each preset is a plain config dict in the same schema the CLI accepts, so
``fttm <command> --preset <name>`` behaves exactly like running with a JSON
file that contains the returned document.  Frequencies are Hz, times are
seconds.  A filter ``natural_fwhm`` of ``"fitted"`` is resolved at run time
to the linewidth that reproduces the reference zero-sweep pulse width.
"""

from __future__ import annotations

import copy

from .errors import ValidationError

#: Factor applied by --desk-scale: carriers and spans divided by this,
#: periods and durations divided with them so sweep rates are preserved.
DESK_SCALE_FACTOR = 10.0


def _simulate(sweep, filt, tones, periods=2):
    return {
        "command": "simulate",
        "sweep": sweep,
        "filter": filt,
        "sut": {"kind": "tones", "tones": tones},
        "periods": periods,
    }


def _ideal(center, bandwidth):
    return {"family": "ideal", "center": center, "bandwidth": bandwidth}


def _sbs(center, pump_sweep, natural_fwhm="fitted"):
    return {"family": "sbs", "center": center,
            "natural_fwhm": natural_fwhm, "pump_sweep_range": pump_sweep}


def _fig3_fast(bandwidth):
    # ideal-filter pulse shapes at 10 GHz/us
    sweep = {"f_start": 0.0, "f_stop": 5.0e9, "period": 0.5e-6}
    return _simulate(sweep, _ideal(0.6e9, bandwidth), [[2.5e9, 1.0]])


def _fig3_rate(span):
    # fixed 100 MHz ideal filter, sweep rate set by the span
    sweep = {"f_start": 0.0, "f_stop": span, "period": 1.0e-6}
    return _simulate(sweep, _ideal(0.6e9, 100e6), [[span / 2.0, 1.0]])


def _fig5():
    return {
        "command": "simulate",
        "output": "response",
        "filter": _sbs(0.0, 0.0, natural_fwhm=20e6),
        "pump_sweeps": [i * 30e6 for i in range(8)],   # 0 .. 210 MHz
        "grid_step": 0.2e6,
    }


def _fig6():
    return {
        "command": "simulate",
        "sweep": {"f_start": 4.8e9, "f_stop": 8.8e9, "period": 1.0e-6},
        "filter": _sbs(0.6e9, 0.0),
        "pump_sweeps": [0.0, 30e6, 60e6, 90e6, 120e6, 150e6],
        "sut": {"kind": "tones", "tones": [[6.8e9, 1.0]]},
        "periods": 2,
    }


def _fig7():
    return {
        "command": "sweep-bw",
        "rates": [1e15, 2e15, 4e15],
        "filter": _sbs(0.0, 0.0),
        "pump_sweeps": [0.0, 30e6, 60e6, 90e6, 120e6, 150e6],
    }


def _fig8():
    return {
        "command": "stft",
        "sweeps": [
            {"f_start": 4.8e9, "f_stop": 5.8e9, "period": 1.0e-6},
            {"f_start": 4.8e9, "f_stop": 6.8e9, "period": 1.0e-6},
            {"f_start": 4.8e9, "f_stop": 8.8e9, "period": 1.0e-6},
        ],
        "filter": _sbs(0.6e9, 0.0),
        "pump_sweeps": [0.0, 30e6, 60e6],
        "sut": {"kind": "lfm", "f0": 4.8e9, "f1": 8.8e9, "duration": 200e-6},
        "duration": 200e-6,
        "freq_bins": 400,
    }


def _fig9():
    return {
        "command": "two-tone",
        "rates": [1e15, 2e15, 4e15],
        "filter": _sbs(0.0, 0.0),
        "pump_sweeps": [0.0, 30e6, 60e6],
        "dip_db": 3.0,
    }


def _fig10():
    suts = [
        {"kind": "dual_chirp_lfm", "f0": 4.8e9, "f1": 8.8e9,
         "duration": 200e-6},
        {"kind": "step_frequency",
         "frequencies": [5.3e9, 6.3e9, 7.3e9, 8.3e9], "dwell": 50e-6},
        {"kind": "frequency_hopping",
         "frequencies": [5.1e9, 7.9e9, 5.9e9, 8.3e9, 6.6e9, 7.3e9,
                         5.5e9, 8.0e9], "dwell": 25e-6},
    ]
    return {
        "command": "stft",
        "sweeps": [{"f_start": 4.8e9, "f_stop": 8.8e9, "period": 1.0e-6}],
        "filter": _sbs(0.6e9, 0.0),
        "pump_sweeps": [0.0, 30e6, 60e6],
        "suts": suts,
        "duration": 200e-6,
        "freq_bins": 400,
    }


def _fig11():
    return {
        "command": "measure",
        "rate": 4e15,
        "filter": _sbs(0.0, 0.0),
        "pump_sweeps": [0.0, 90e6],
        "true_seps": [500e6, 1.0e9],
        "trials": 50,
        "noise": {"enabled": True, "snr_db": "calibrated", "seed": 0},
        "calibration_target_hz": 40e6,
    }


_PRESETS = {
    "fig3a": lambda: _fig3_fast(25e6),
    "fig3b": lambda: _fig3_fast(100e6),
    "fig3c": lambda: _fig3_fast(400e6),
    "fig3d": lambda: _fig3_rate(1.0e9),
    "fig3e": lambda: _fig3_rate(2.0e9),
    "fig3f": lambda: _fig3_rate(4.0e9),
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig11": _fig11,
}


def preset_names():
    return sorted(_PRESETS)


def load_preset(name: str) -> dict:
    try:
        builder = _PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return builder()


_FREQ_KEYS = {"f_start", "f_stop", "f0", "f1", "center", "true_seps",
              "frequencies"}
_TIME_KEYS = {"period", "duration", "dwell"}


def apply_desk_scale(config: dict) -> dict:
    """Shift carriers down and shorten periods; sweep rates are untouched.

    Filter widths (bandwidth, natural linewidth, pump sweep range) are not
    scaled either: pulse widths depend only on them and the sweep rate, so
    the scaled scenario reproduces the same pulse shapes with a tenth of
    the samples.  Tone amplitudes and counts are unchanged.
    """
    def scale(obj, parent_key=None):
        if isinstance(obj, dict):
            out = {}
            for key, val in obj.items():
                if key in _FREQ_KEYS or key in _TIME_KEYS:
                    out[key] = scale_leaf(val)
                elif key == "tones":
                    out[key] = [[f / DESK_SCALE_FACTOR, a] for f, a in val]
                else:
                    out[key] = scale(val, key)
            return out
        if isinstance(obj, list):
            return [scale(v, parent_key) for v in obj]
        return obj

    def scale_leaf(val):
        if isinstance(val, list):
            return [v / DESK_SCALE_FACTOR for v in val]
        return val / DESK_SCALE_FACTOR

    return scale(copy.deepcopy(config))
