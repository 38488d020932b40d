"""Command-line interface.

Every subcommand takes a JSON config (or a named preset), runs the
corresponding pipeline, writes its CSV/binary outputs into --out, and drops
a manifest.json describing the run.  Exit codes: 0 success, 2 invalid
input, 3 processing failure.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import __version__
from .errors import ProcessingError, ValidationError
from .signals import (DEFAULT_OVERSAMPLING, DualChirpLfm, FrequencyHopping,
                      Lfm, NoiseSpec, StepFrequency, SweepConfig, Tones,
                      add_awgn, synthesize_probe_chirp, synthesize_sut)
from .filters import (BroadenedSbs, IdealBpf, Lorentzian, apply_filter,
                      frequency_response, nominal_width, response_to_csv)
from .engine import (detect_pulses, heterodyne, map_time_to_frequency,
                     photodetect, pulses_to_csv)
from .analysis import (calibrate_measurement_snr, fitted_natural_fwhm,
                       interval_measurement_error, predicted_widths,
                       resolution_to_csv, simulate_pulse_width,
                       two_tone_min_separation, width_surface_to_csv)
from .stft import run_stft, spectrogram_to_csv, write_spectrogram
from .presets import apply_desk_scale, load_preset, preset_names


def _max_workers() -> int:
    env = os.environ.get("FTTM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValidationError(f"FTTM_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise ValidationError("FTTM_THREADS must be >= 1")
        return n
    return min(4, os.cpu_count() or 1)


def _load_config(config_path, preset, desk_scale) -> dict:
    if config_path and preset:
        raise ValidationError("pass either --config or --preset, not both")
    if config_path:
        with open(config_path) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config is not valid JSON: {exc}")
        if "config" in cfg and "outputs" in cfg:
            cfg = cfg["config"]   # accept a previous run's manifest
    elif preset:
        cfg = load_preset(preset)
    else:
        raise ValidationError("either --config or --preset is required")
    if desk_scale:
        cfg = apply_desk_scale(cfg)
    return cfg


def _parse_sweep(doc) -> SweepConfig:
    try:
        return SweepConfig(float(doc["f_start"]), float(doc["f_stop"]),
                           float(doc["period"]))
    except KeyError as exc:
        raise ValidationError(f"sweep config missing key {exc}")


def _parse_filter(doc, pump_sweep=None):
    family = doc.get("family")
    center = float(doc.get("center", 0.0))
    if family == "ideal":
        return IdealBpf(center=center, bandwidth=float(doc["bandwidth"]))
    if family == "lorentzian":
        return Lorentzian(center=center,
                          natural_fwhm=_linewidth(doc["natural_fwhm"]))
    if family == "sbs":
        sweep = pump_sweep if pump_sweep is not None \
            else float(doc.get("pump_sweep_range", 0.0))
        return BroadenedSbs(center=center,
                            natural_fwhm=_linewidth(doc["natural_fwhm"]),
                            pump_sweep_range=sweep)
    raise ValidationError(f"filter.family must be ideal/lorentzian/sbs, "
                          f"got {family!r}")


def _linewidth(value) -> float:
    if value == "fitted":
        return fitted_natural_fwhm()
    return float(value)


def _parse_sut(doc):
    kind = doc.get("kind")
    if kind == "tones":
        return Tones(tuple((f, a) for f, a in doc["tones"]))
    if kind == "lfm":
        return Lfm(float(doc["f0"]), float(doc["f1"]), float(doc["duration"]))
    if kind == "dual_chirp_lfm":
        return DualChirpLfm(float(doc["f0"]), float(doc["f1"]),
                            float(doc["duration"]))
    if kind in ("step_frequency", "frequency_hopping"):
        dwell = float(doc["dwell"])
        steps = tuple((float(f), dwell) for f in doc["frequencies"])
        cls = StepFrequency if kind == "step_frequency" else FrequencyHopping
        return cls(steps)
    raise ValidationError(f"unknown sut.kind {kind!r}")


def _parse_noise(doc) -> NoiseSpec:
    if not doc or not doc.get("enabled"):
        return NoiseSpec(False)
    return NoiseSpec(True, float(doc["snr_db"]), int(doc.get("seed", 0)))


def _sample_rate(cfg, sweep: SweepConfig, sut, filt) -> float:
    if cfg.get("sample_rate"):
        return float(cfg["sample_rate"])
    width = nominal_width(filt)
    top = max(sut.max_frequency(), sweep.f_stop,
              filt.center + (sut.max_frequency() - sweep.f_start) + 3 * width)
    fs = DEFAULT_OVERSAMPLING * top
    return round(fs * sweep.period) / sweep.period


class _Manifest:
    def __init__(self, command, cfg, desk_scale, out_dir):
        self.doc = {
            "tool": "fttm",
            "version": __version__,
            "command": command,
            "desk_scale": bool(desk_scale),
            "config": cfg,
            "derived": {},
            "outputs": [],
        }
        self.out_dir = out_dir
        self.t0 = time.time()

    def path(self, name: str) -> str:
        full = os.path.join(self.out_dir, name)
        self.doc["outputs"].append(name)
        return full

    def write(self):
        self.doc["wall_time_s"] = round(time.time() - self.t0, 3)
        with open(os.path.join(self.out_dir, "manifest.json"), "w") as fh:
            json.dump(self.doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _common(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="JSON config file")(fn)
    fn = click.option("--preset", type=click.Choice(preset_names()),
                      default=None, help="built-in scenario")(fn)
    fn = click.option("--desk-scale", is_flag=True,
                      help="shift carriers down 10x (sweep rates preserved)")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False),
                      default=".", help="output directory")(fn)
    return fn


def _run(command, handler, config_path, preset, desk_scale, out_dir):
    try:
        cfg = _load_config(config_path, preset, desk_scale)
        os.makedirs(out_dir, exist_ok=True)
        manifest = _Manifest(command, cfg, desk_scale, out_dir)
        handler(cfg, manifest)
        manifest.write()
    except ValidationError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except ProcessingError as exc:
        click.echo(f"processing error: {exc}", err=True)
        sys.exit(3)
    sys.exit(0)


@click.group()
@click.version_option(__version__)
def main():
    """Swept-filter frequency-to-time acquisition simulator."""


# --- simulate -----------------------------------------------------------------


def _simulate_responses(cfg, manifest):
    base = cfg["filter"]
    step = float(cfg.get("grid_step", 0.2e6))
    for pump in cfg.get("pump_sweeps", [None]):
        filt = _parse_filter(base, pump)
        width = nominal_width(filt)
        span = max(8.0 * width, 0.5e9)
        resp = frequency_response(filt, filt.center - span,
                                  filt.center + span, step)
        tag = f"{int(round((pump or 0.0) / 1e6)):03d}"
        response_to_csv(resp, manifest.path(f"response_sweep{tag}.csv"))


def _simulate_pulses(cfg, manifest):
    sweep = _parse_sweep(cfg["sweep"])
    sut = _parse_sut(cfg["sut"])
    noise = _parse_noise(cfg.get("noise"))
    periods = int(cfg.get("periods", 2))
    threshold = float(cfg.get("threshold_frac", 0.5))
    for pump in cfg.get("pump_sweeps", [None]):
        filt = _parse_filter(cfg["filter"], pump)
        fs = _sample_rate(cfg, sweep, sut, filt)
        probe = synthesize_probe_chirp(sweep, periods, fs)
        sig = synthesize_sut(sut, fs, probe.duration)
        mixed = heterodyne(sig, probe, filt.center)
        if noise.enabled:
            mixed = add_awgn(mixed, noise)
        env = photodetect(apply_filter(mixed, filt))
        train = map_time_to_frequency(detect_pulses(env, sweep, threshold))
        if pump is None:
            name = "pulses.csv"
        else:
            name = f"pulses_sweep{int(round(pump / 1e6)):03d}.csv"
        pulses_to_csv(train, manifest.path(name))
    manifest.doc["derived"]["sweep_rate_hz_per_s"] = sweep.rate


def cmd_simulate(cfg, manifest):
    if cfg.get("output") == "response":
        _simulate_responses(cfg, manifest)
    else:
        _simulate_pulses(cfg, manifest)


@main.command("simulate")
@_common
def simulate_cmd(config_path, preset, desk_scale, out_dir):
    """Run the pulse pipeline (or dump filter responses) for one scenario."""
    _run("simulate", cmd_simulate, config_path, preset, desk_scale, out_dir)


# --- sweep-bw -----------------------------------------------------------------


def cmd_sweep_bw(cfg, manifest):
    rates = [float(k) for k in cfg["rates"]]
    base = cfg["filter"]
    if base.get("family") == "ideal":
        variants = [float(b) for b in cfg["bandwidths"]]
        make = lambda b: _parse_filter({**base, "bandwidth": b})
    else:
        variants = [float(s) for s in cfg["pump_sweeps"]]
        make = lambda s: _parse_filter(base, s)
    points = [(k, v) for k in rates for v in variants]

    def one(point):
        k, v = point
        filt = make(v)
        report = simulate_pulse_width(filt, k)
        return (k, nominal_width(filt), report.fwhm_time, report.fwhm_frequency)

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        rows = list(pool.map(one, points))
    width_surface_to_csv(rows, manifest.path("width_surface.csv"))


@main.command("sweep-bw")
@_common
def sweep_bw_cmd(config_path, preset, desk_scale, out_dir):
    """Pulse-width surface over sweep rates and filter bandwidths."""
    _run("sweep-bw", cmd_sweep_bw, config_path, preset, desk_scale, out_dir)


# --- stft ---------------------------------------------------------------------


def cmd_stft(cfg, manifest):
    sweeps = [_parse_sweep(d) for d in
              (cfg["sweeps"] if "sweeps" in cfg else [cfg["sweep"]])]
    suts = [_parse_sut(d) for d in
            (cfg["suts"] if "suts" in cfg else [cfg["sut"]])]
    pumps = cfg.get("pump_sweeps", [None])
    duration = float(cfg["duration"])
    bins = int(cfg.get("freq_bins", 400))
    noise = _parse_noise(cfg.get("noise"))
    panels = [(si, sw, pi, p, ui, sut)
              for si, sw in enumerate(sweeps)
              for pi, p in enumerate(pumps)
              for ui, sut in enumerate(suts)]

    def one(panel):
        si, sw, pi, pump, ui, sut = panel
        filt = _parse_filter(cfg["filter"], pump)
        spec = run_stft(sut, sw, filt, duration, bins,
                        noise=noise if noise.enabled else None)
        return panel, spec

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        results = list(pool.map(one, panels))
    multi_sut = len(suts) > 1
    for (si, sw, pi, pump, ui, sut), spec in results:
        parts = [f"k{int(round(sw.rate / 1e15))}"]
        if pump is not None:
            parts.append(f"sweep{int(round(pump / 1e6)):03d}")
        if multi_sut:
            parts.append(f"sut{ui}")
        stem = "stft_" + "_".join(parts)
        spectrogram_to_csv(spec, manifest.path(stem + ".csv"))
        write_spectrogram(spec, manifest.path(stem + ".bin"))


@main.command("stft")
@_common
def stft_cmd(config_path, preset, desk_scale, out_dir):
    """Stack sweep periods into time-frequency diagrams."""
    _run("stft", cmd_stft, config_path, preset, desk_scale, out_dir)


# --- two-tone -----------------------------------------------------------------


def cmd_two_tone(cfg, manifest):
    rates = [float(k) for k in cfg["rates"]]
    pumps = [float(s) for s in cfg["pump_sweeps"]]
    dip_db = float(cfg.get("dip_db", 3.0))
    points = [(k, s) for k in rates for s in pumps]

    def one(point):
        k, s = point
        filt = _parse_filter(cfg["filter"], s)
        sep = two_tone_min_separation(filt, k, dip_db=dip_db)
        return (k, s, sep)

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        rows = list(pool.map(one, points))
    resolution_to_csv(rows, manifest.path("resolution.csv"))


@main.command("two-tone")
@_common
def two_tone_cmd(config_path, preset, desk_scale, out_dir):
    """Minimum resolvable two-tone separation over a scenario grid."""
    _run("two-tone", cmd_two_tone, config_path, preset, desk_scale, out_dir)


# --- measure ------------------------------------------------------------------


def cmd_measure(cfg, manifest):
    rate = float(cfg["rate"])
    pumps = [float(s) for s in cfg["pump_sweeps"]]
    seps = [float(s) for s in cfg["true_seps"]]
    trials = int(cfg.get("trials", 50))
    noise_doc = dict(cfg.get("noise") or {})
    snr = noise_doc.get("snr_db")
    seed = int(noise_doc.get("seed", 0))
    enabled = bool(noise_doc.get("enabled"))
    if enabled and snr == "calibrated":
        target = float(cfg.get("calibration_target_hz", 40e6))
        filt0 = _parse_filter(cfg["filter"], pumps[0])
        snr = calibrate_measurement_snr(filt0, rate, seps[0],
                                        target_error=target,
                                        trials=trials, seed=seed)
        manifest.doc["derived"]["calibrated_snr_db"] = snr
    rows = []
    for sep in seps:
        for pump in pumps:
            filt = _parse_filter(cfg["filter"], pump)
            noise = NoiseSpec(True, float(snr), seed) if enabled \
                else NoiseSpec(False)
            stats = interval_measurement_error(sep, filt, rate, noise, trials)
            rows.append((sep, pump, noise.snr_db if enabled else math.nan,
                         stats))
    path = manifest.path("error_stats.csv")
    with open(path, "w", newline="") as fh:
        fh.write("true_sep_hz,pump_sweep_hz,snr_db,trials,failures,"
                 "max_abs_error_hz,mean_error_hz,stddev_error_hz\n")
        for sep, pump, snr_db, st in rows:
            fh.write(f"{sep:.17g},{pump:.17g},{snr_db:.17g},{st.trials},"
                     f"{st.failures},{st.max_abs_error:.17g},"
                     f"{st.mean_error:.17g},{st.stddev_error:.17g}\n")


@main.command("measure")
@_common
def measure_cmd(config_path, preset, desk_scale, out_dir):
    """Noisy two-tone interval measurement statistics."""
    _run("measure", cmd_measure, config_path, preset, desk_scale, out_dir)


# --- plan ---------------------------------------------------------------------


def cmd_plan(cfg, manifest):
    rate = float(cfg.get("rate") or cfg["k"])
    if rate <= 0:
        raise ValidationError("plan: sweep rate must be positive")
    b_star = math.sqrt(rate)
    model = predicted_widths(b_star, rate)
    report = {
        "sweep_rate_hz_per_s": rate,
        "b_star_hz": b_star,
        "width_star_s": model.combined,
        "resolution_star_hz": rate * model.combined,
    }
    manifest.doc["derived"].update(report)
    path = manifest.path("plan.csv")
    with open(path, "w", newline="") as fh:
        fh.write("k_hz_per_s,b_star_hz,width_star_s,resolution_star_hz\n")
        fh.write(f"{rate:.17g},{b_star:.17g},{model.combined:.17g},"
                 f"{rate * model.combined:.17g}\n")
    for key, val in report.items():
        click.echo(f"{key}: {val:.6g}")


@main.command("plan")
@_common
def plan_cmd(config_path, preset, desk_scale, out_dir):
    """Closed-form optimal-bandwidth report for a sweep rate."""
    _run("plan", cmd_plan, config_path, preset, desk_scale, out_dir)


if __name__ == "__main__":
    main()
