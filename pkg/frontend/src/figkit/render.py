"""One renderer per figure kind.

All renderers are read-only with respect to their inputs and write a single
image file.  Spectrogram heatmaps use a -40 dB floor relative to the global
maximum; time runs along x, frequency along y.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import SchemaError, load_csv

#: Heatmap dynamic range floor, dB below the global maximum.
DB_FLOOR = -40.0

_FIGSIZE = (7.0, 4.5)
_DPI = 120


def _axes_limits(ax, overrides):
    if overrides.get("xmin") is not None or overrides.get("xmax") is not None:
        ax.set_xlim(overrides.get("xmin"), overrides.get("xmax"))
    if overrides.get("ymin") is not None or overrides.get("ymax") is not None:
        ax.set_ylim(overrides.get("ymin"), overrides.get("ymax"))


def _save(fig, out_path):
    fig.tight_layout()
    fig.savefig(out_path, dpi=_DPI)
    plt.close(fig)


def render_trace(inputs, out_path, overrides):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for path in inputs:
        data = load_csv(path, "trace")
        for period in np.unique(data["period_index"]):
            sel = data["period_index"] == period
            t = data["peak_time_s"][sel] * 1e9
            a = data["peak_amplitude"][sel]
            w = data["fwhm_s"][sel] * 1e9 / 2.0
            ax.errorbar(t, a, xerr=w, fmt="o", capsize=3,
                        label=f"period {int(period)}")
    ax.set_xlabel("time in period (ns)")
    ax.set_ylabel("detected power (arb.)")
    ax.set_ylim(bottom=0)
    ax.legend(loc="best", fontsize="small")
    _axes_limits(ax, overrides)
    _save(fig, out_path)


def render_width_surface(inputs, out_path, overrides):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for path in inputs:
        data = load_csv(path, "width_surface")
        for k in np.unique(data["k_hz_per_s"]):
            sel = data["k_hz_per_s"] == k
            b = data["bandwidth_hz"][sel]
            w = data["fwhm_time_s"][sel] * 1e9
            order = np.argsort(b)
            b, w = b[order], w[order]
            line, = ax.plot(b / 1e6, w, "o-",
                            label=f"k = {k / 1e15:g} GHz/us")
            i = int(np.argmin(w))
            ax.plot(b[i] / 1e6, w[i], "v", markersize=12,
                    color=line.get_color())
    ax.set_xscale("log")
    ax.set_xlabel("filter bandwidth (MHz)")
    ax.set_ylabel("pulse FWHM (ns)")
    ax.legend(loc="best", fontsize="small")
    _axes_limits(ax, overrides)
    _save(fig, out_path)


def render_response(inputs, out_path, overrides):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for path in inputs:
        data = load_csv(path, "response")
        ax.plot(data["freq_hz"] / 1e6, data["mag_db"], label=str(path))
    ax.set_xlabel("frequency (MHz)")
    ax.set_ylabel("gain (dB)")
    ax.set_ylim(bottom=DB_FLOOR)
    if len(inputs) > 1:
        ax.legend(loc="best", fontsize="x-small")
    _axes_limits(ax, overrides)
    _save(fig, out_path)


def render_spectrogram(inputs, out_path, overrides):
    if len(inputs) != 1:
        raise SchemaError("spectrogram takes exactly one input CSV")
    data = load_csv(inputs[0], "spectrogram")
    times = np.unique(data["time_s"])
    freqs = np.unique(data["freq_hz"])
    if times.size * freqs.size != data["magnitude"].size:
        raise SchemaError(f"{inputs[0]}: column 'magnitude' does not fill a "
                          "complete time x frequency grid")
    grid = data["magnitude"].reshape(times.size, freqs.size)
    peak = grid.max()
    if peak <= 0:
        raise SchemaError(f"{inputs[0]}: column 'magnitude' is all zero")
    db = 10.0 * np.log10(np.maximum(grid / peak, 10 ** (DB_FLOOR / 10.0)))
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    mesh = ax.pcolormesh(times * 1e6, freqs / 1e9, db.T, cmap="inferno",
                         vmin=DB_FLOOR, vmax=0.0, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="power (dB)")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("frequency (GHz)")
    ax.set_xlim(times[0] * 1e6, times[-1] * 1e6)
    ax.set_ylim(freqs[0] / 1e9, freqs[-1] / 1e9)
    _axes_limits(ax, overrides)
    _save(fig, out_path)


def render_error_stats(inputs, out_path, overrides):
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    width = 0.35
    for path in inputs:
        data = load_csv(path, "error_stats")
        pumps = np.unique(data["pump_sweep_hz"])
        seps = np.unique(data["true_sep_hz"])
        x = np.arange(len(seps))
        for j, pump in enumerate(pumps):
            maxes, stds = [], []
            for sep in seps:
                sel = (data["pump_sweep_hz"] == pump) \
                    & (data["true_sep_hz"] == sep)
                maxes.append(data["max_abs_error_hz"][sel].mean() / 1e6)
                stds.append(data["stddev_error_hz"][sel].mean() / 1e6)
            ax.bar(x + (j - (len(pumps) - 1) / 2.0) * width, maxes, width,
                   yerr=stds, capsize=4,
                   label=f"pump sweep {pump / 1e6:g} MHz")
        ax.set_xticks(x)
        ax.set_xticklabels([f"{s / 1e6:g}" for s in seps])
    ax.set_xlabel("true separation (MHz)")
    ax.set_ylabel("max |error| (MHz)")
    ax.legend(loc="best", fontsize="small")
    _axes_limits(ax, overrides)
    _save(fig, out_path)


KINDS = {
    "trace": render_trace,
    "width_surface": render_width_surface,
    "response": render_response,
    "spectrogram": render_spectrogram,
    "error_stats": render_error_stats,
}


def render(kind, inputs, out_path, overrides=None):
    """Render one figure; raises SchemaError on malformed input."""
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    KINDS[kind](list(inputs), out_path, overrides or {})
