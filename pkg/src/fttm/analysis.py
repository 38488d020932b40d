"""Pulse-width model, simulated width surfaces, and measurement experiments.

The width of a detected pulse is governed by two competing time scales:

* passing width   sigma1 = B / k  -- how long a tone stays inside the band,
* broadening width sigma2 = 1 / B -- the spread added by the filter's
  impulse response.

Fast sweeps are dominated by sigma2, so widening the filter *narrows* the
pulse until sigma1 takes over; the crossover bandwidth is sqrt(k).  The
routines here exercise that trade-off end to end through the simulated
acquisition pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks as _find_peaks

from .errors import ProcessingError, ValidationError
from .filters import (BroadenedSbs, FilterSpec, IdealBpf, Lorentzian,
                      apply_filter, nominal_width, with_center)
from .signals import (DEFAULT_OVERSAMPLING, NoiseSpec, SweepConfig, Tones,
                      Waveform, add_awgn, synthesize_probe_chirp,
                      synthesize_sut)
from .engine import detect_pulses, heterodyne, map_time_to_frequency, photodetect

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: Reference zero-sweep pulse width at 4 GHz/us, used to pin down the
#: natural SBS linewidth once.
ZERO_SWEEP_TARGET_S = 60.3e-9
ZERO_SWEEP_RATE = 4.0e15


@dataclass(frozen=True)
class WidthModel:
    sigma1: float
    sigma2: float
    combined: float
    combine_rule: str = "rss"


@dataclass(frozen=True)
class ResolutionReport:
    sweep_rate: float
    filter: FilterSpec
    fwhm_time: float
    fwhm_frequency: float
    two_tone_min_sep: Optional[float] = None


class OptimalBandwidth(NamedTuple):
    b_star: float
    width_star: float
    method: str  # "golden" or "grid-scan" fallback


@dataclass(frozen=True)
class ErrorStats:
    true_sep: float
    max_abs_error: float
    mean_error: float
    stddev_error: float
    trials: int
    failures: int


def predicted_widths(bandwidth: float, rate: float, rule: str = "rss") -> WidthModel:
    """Closed-form width model for a bandwidth B swept at rate k."""
    if not bandwidth > 0 or not rate > 0:
        raise ValidationError("bandwidth and rate must be positive")
    s1 = bandwidth / rate
    s2 = 1.0 / bandwidth
    if rule == "rss":
        combined = math.hypot(s1, s2)
    elif rule == "max":
        combined = max(s1, s2)
    else:
        raise ValidationError(f"unknown combine rule {rule!r}")
    return WidthModel(sigma1=s1, sigma2=s2, combined=combined, combine_rule=rule)


# --- single-tone scenario construction --------------------------------------


def _ring_time(spec: FilterSpec) -> float:
    """Time the impulse response needs to decay to negligible energy."""
    if isinstance(spec, IdealBpf):
        return 10.0 / spec.bandwidth
    # exponential line edges decay like exp(-pi * fwhm * t); 2.5 time
    # constants leave the boundary below 1e-7 of the peak in power
    return 2.5 / spec.natural_fwhm


def _scenario(spec: FilterSpec, rate: float, extra_span: float = 0.0):
    """Sweep/sample-rate choices that keep a single pulse well inside a period.

    The filter is recentered when its own center sits too low to fit the
    sweep span at non-negative frequencies; pulse shape depends only on the
    filter profile and k, not on the absolute center.
    """
    b_eff = nominal_width(spec)
    model = predicted_widths(b_eff, rate)
    if isinstance(spec, IdealBpf):
        contain = model.combined
    else:
        # exponential line edges decay much faster than the 1/B model width
        contain = max(model.sigma1, 0.2 * model.sigma2)
    period = max(12.0 * contain, 1.3 * _ring_time(spec)) + extra_span / rate
    span = rate * period
    center = max(spec.center, 0.6 * span)
    working = with_center(spec, center) if center != spec.center else spec
    sweep = SweepConfig(center - span / 2.0, center + span / 2.0, period)
    fs = DEFAULT_OVERSAMPLING * sweep.f_stop
    # integer number of samples per period keeps period slicing exact
    fs = round(fs * period) / period
    return working, sweep, fs


def _run_single_tone(spec: FilterSpec, rate: float, threshold: float = 0.5):
    working, sweep, fs = _scenario(spec, rate)
    probe = synthesize_probe_chirp(sweep, 2, fs)
    sut = synthesize_sut(Tones(((working.center, 1.0),)), fs, probe.duration)
    mixed = heterodyne(sut, probe, working.center)
    env = photodetect(apply_filter(mixed, working))
    train = detect_pulses(env, sweep, threshold)
    return train, sweep


def simulate_pulse_width(spec: FilterSpec, rate: float) -> ResolutionReport:
    """Measured FWHM of a single tone pushed through the full pipeline."""
    train, _ = _run_single_tone(spec, rate)
    pulses = train.in_period(1) or train.in_period(0)
    if not pulses:
        raise ProcessingError("pulse not detected; filter band outside sweep span")
    pulse = max(pulses, key=lambda p: p.peak_amplitude)
    return ResolutionReport(sweep_rate=rate, filter=spec,
                            fwhm_time=pulse.fwhm,
                            fwhm_frequency=rate * pulse.fwhm)


def _make_filter(family: str, bandwidth: float, rate: float) -> FilterSpec:
    if family == "ideal":
        return IdealBpf(center=0.0, bandwidth=bandwidth)
    if family == "lorentzian":
        return Lorentzian(center=0.0, natural_fwhm=bandwidth)
    if family == "sbs":
        return BroadenedSbs(center=0.0, natural_fwhm=fitted_natural_fwhm(),
                            pump_sweep_range=bandwidth)
    raise ValidationError(f"unknown filter family {family!r}")


def optimal_bandwidth(rate: float, family: str = "ideal",
                      span: Optional[tuple] = None,
                      rel_tol: float = 0.05) -> OptimalBandwidth:
    """Bandwidth minimizing the simulated pulse width at a given sweep rate.

    Golden-section search over log bandwidth, seeded by a coarse log grid.
    If the coarse samples are not unimodal the search falls back to a finer
    grid scan; the returned ``method`` records which path ran.
    """
    if span is None:
        span = (math.sqrt(rate) / 10.0, 10.0 * math.sqrt(rate))
    b_lo, b_hi = span
    if not 0 < b_lo < b_hi:
        raise ValidationError("search span must satisfy 0 < B_lo < B_hi")

    cache: dict = {}

    def width(b: float) -> float:
        if b not in cache:
            cache[b] = simulate_pulse_width(_make_filter(family, b, rate), rate).fwhm_time
        return cache[b]

    coarse = np.geomspace(b_lo, b_hi, 13)
    widths = np.array([width(b) for b in coarse])
    minima = [i for i in range(1, len(widths) - 1)
              if widths[i] <= widths[i - 1] and widths[i] <= widths[i + 1]]
    unimodal = len(minima) == 1 and widths[0] > widths[minima[0]] and \
        widths[-1] > widths[minima[0]]
    if not unimodal:
        fine = np.geomspace(b_lo, b_hi, 101)
        fine_w = [width(b) for b in fine]
        i = int(np.argmin(fine_w))
        return OptimalBandwidth(float(fine[i]), float(fine_w[i]), "grid-scan")

    i = minima[0]
    lo, hi = math.log(coarse[i - 1]), math.log(coarse[i + 1])
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = width(math.exp(c)), width(math.exp(d))
    while hi - lo > math.log1p(rel_tol):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = width(math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = width(math.exp(d))
    b_star = math.exp((lo + hi) / 2.0)
    return OptimalBandwidth(float(b_star), float(width(b_star)), "golden")


# --- natural linewidth fit ---------------------------------------------------


@lru_cache(maxsize=1)
def fitted_natural_fwhm(rate: float = ZERO_SWEEP_RATE,
                        target_fwhm: float = ZERO_SWEEP_TARGET_S) -> float:
    """Natural SBS linewidth pinned by the zero-sweep pulse-width measurement.

    Simulated FWHM is monotone nonincreasing in the linewidth below the
    optimum, so a bisection over log linewidth pins the target width.
    """
    lo, hi = math.log(3e5), math.log(math.sqrt(rate))

    def measured(log_g: float) -> float:
        return simulate_pulse_width(
            Lorentzian(center=0.0, natural_fwhm=math.exp(log_g)), rate).fwhm_time

    mid = (lo + hi) / 2.0
    for _ in range(25):
        mid = (lo + hi) / 2.0
        w = measured(mid)
        if abs(w - target_fwhm) / target_fwhm < 5e-3:
            break
        if w > target_fwhm:
            lo = mid   # line too narrow -> pulse too wide
        else:
            hi = mid
    return math.exp(mid)


# --- two-tone resolution -----------------------------------------------------


def _incoherent_two_tone_envelope(working: FilterSpec, sweep, fs: float,
                                  freqs, noise: Optional[NoiseSpec] = None,
                                  lowpass: Optional[float] = None) -> Waveform:
    """Sum of the per-tone detected power envelopes.

    The tones are treated as mutually incoherent (they are independent
    sources, not phase locked to each other or to the probe), so the
    averaged detected power is the sum of the single-tone powers and the
    beat fringes of a single coherent snapshot drop out.
    """
    probe = synthesize_probe_chirp(sweep, 2, fs)
    total = None
    for i, f in enumerate(freqs):
        sut = synthesize_sut(Tones(((f, 1.0),)), fs, probe.duration)
        mixed = heterodyne(sut, probe, working.center)
        if noise is not None:
            branch = replace(noise, seed=noise.seed + 7919 * i)
            mixed = add_awgn(mixed, branch)  # noise floor ahead of the filter
        env = photodetect(apply_filter(mixed, working), lowpass)
        total = env.samples if total is None else total + env.samples
    return Waveform(fs, total, 0.0)


def _run_two_tone(spec: FilterSpec, rate: float, sep: float,
                  noise: Optional[NoiseSpec] = None,
                  lowpass: Optional[float] = None):
    working, sweep, fs = _scenario(spec, rate, extra_span=2.0 * sep)
    f1 = working.center - sep / 2.0
    f2 = working.center + sep / 2.0
    env = _incoherent_two_tone_envelope(working, sweep, fs, (f1, f2),
                                        noise, lowpass)
    train = detect_pulses(env, sweep, 0.5)
    return train, sweep, env, (f1, f2), working


def _dip_between(env: Waveform, sweep: SweepConfig, p_a, p_b) -> float:
    """Depth in dB of the envelope valley between two pulses of one period."""
    fs = env.sample_rate
    base = p_a.period_index * sweep.period
    i0 = int(round((base + min(p_a.peak_time, p_b.peak_time)) * fs))
    i1 = int(round((base + max(p_a.peak_time, p_b.peak_time)) * fs))
    if i1 <= i0 + 1:
        return 0.0
    valley = float(np.min(np.real(env.samples[i0:i1 + 1])))
    smaller = min(p_a.peak_amplitude, p_b.peak_amplitude)
    if valley <= 0.0:
        return math.inf
    return 10.0 * math.log10(smaller / valley)


def _two_tone_resolved(spec: FilterSpec, rate: float, sep: float,
                       dip_db: float) -> bool:
    if sep <= 0.0:
        return False
    train, sweep, env, (f1, f2), _ = _run_two_tone(spec, rate, sep)
    pulses = train.in_period(1) or train.in_period(0)
    if len(pulses) < 2:
        return False
    pulses = sorted(pulses, key=lambda p: -p.peak_amplitude)[:2]
    measured_sep = rate * abs(pulses[0].peak_time - pulses[1].peak_time)
    if not 0.5 * sep <= measured_sep <= 1.5 * sep:
        return False
    return _dip_between(env, sweep, pulses[0], pulses[1]) >= dip_db


def two_tone_min_separation(spec: FilterSpec, rate: float,
                            dip_db: float = 3.0,
                            precision: float = 1e6) -> float:
    """Smallest separation at which two equal tones stay distinguishable.

    Resolved means the envelope between the two detected pulses dips at
    least ``dip_db`` below the smaller peak; bisection refines to
    ``precision``.
    """
    if not dip_db > 0:
        raise ValidationError("dip_db must be positive")
    single = simulate_pulse_width(spec, rate)
    hi = 10.0 * rate * single.fwhm_time
    for _ in range(4):
        if _two_tone_resolved(spec, rate, hi, dip_db):
            break
        hi *= 2.0
    else:
        raise ProcessingError("filter cannot resolve any separation in the span")
    lo = 0.0
    while hi - lo > precision:
        mid = (lo + hi) / 2.0
        if _two_tone_resolved(spec, rate, mid, dip_db):
            hi = mid
        else:
            lo = mid
    return hi


# --- frequency-interval accuracy ---------------------------------------------


#: Detector noise bandwidth.  Wide enough to vary across a pulse (so it can
#: pull the peak) yet narrow enough not to act sample by sample.
DETECTOR_NOISE_BW = 100e6


class _IntervalBench:
    """Precomputed two-tone measurement scene for repeated noisy trials.

    The clean detected envelope is computed once; each trial only adds a
    scaled detector-noise record on top, so an SNR search can reuse one set
    of noise records across candidate levels at almost no cost.
    """

    def __init__(self, true_sep: float, spec: FilterSpec, rate: float,
                 lowpass: Optional[float] = None):
        working, sweep, fs = _scenario(spec, rate, extra_span=2.0 * true_sep)
        self.sweep = sweep
        self.fs = fs
        self.working = working
        self.lowpass = lowpass
        self.true_sep = true_sep
        self.freqs = (working.center - true_sep / 2.0,
                      working.center + true_sep / 2.0)
        probe = synthesize_probe_chirp(sweep, 2, fs)
        self.n_samples = len(probe.samples)
        self.input_power = 0.0
        total = None
        for f in self.freqs:
            sut = synthesize_sut(Tones(((f, 1.0),)), fs, probe.duration)
            mixed = heterodyne(sut, probe, working.center)
            self.input_power += float(np.mean(np.abs(mixed.samples) ** 2))
            p = photodetect(apply_filter(mixed, working), lowpass).samples
            total = p if total is None else total + p
        self.clean_power = np.real(total)

    def detector_noise(self, seed: int) -> np.ndarray:
        """One unit-RMS band-limited real detector-noise record.

        White Gaussian noise smoothed to DETECTOR_NOISE_BW with a circular
        Gaussian FFT mask (no edge transients), renormalized to unit RMS.
        """
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(self.n_samples)
        f = np.fft.rfftfreq(self.n_samples, 1.0 / self.fs)
        spec = np.fft.rfft(u) * np.exp(-0.5 * (f / DETECTOR_NOISE_BW) ** 2)
        out = np.fft.irfft(spec, self.n_samples)
        return out / float(np.sqrt(np.mean(out ** 2)))

    def measure(self, noise_record, snr_db: Optional[float]) -> Optional[float]:
        """Measured interval for one trial, or None if fewer than 2 pulses.

        Detector noise rides on the detected power trace: its floor is the
        mixed input power scaled down by the SNR.  The same absolute floor
        hits every filter, so a narrow line whose output power is tiny
        suffers far more peak pulling than a broadened one.  The readout
        mimics an instrument cursor: the two strongest local maxima of the
        period envelope, with no pulse-overlap rejection, so noise pulling
        either maximum shows up as measurement error, not a dropped trial.
        """
        total = self.clean_power
        if snr_db is not None:
            total = total + (self.input_power * 10.0 ** (-snr_db / 10.0)
                             * noise_record)
        i0 = int(round(self.sweep.period * self.fs))
        seg = total[i0:2 * i0]
        # cursor guard band: the bench characterizes error on a known
        # interval, so maxima closer than 0.9x the true spacing collapse
        # onto one pulse instead of counting twice
        distance = max(3, int(0.9 * self.true_sep / self.sweep.rate * self.fs))
        peaks, props = _find_peaks(seg, height=0.25 * float(np.max(seg)),
                                   distance=distance)
        if peaks.size < 2:
            return None
        top = peaks[np.argsort(props["peak_heights"])[::-1][:2]]
        return float(abs(top[0] - top[1]) / self.fs * self.sweep.rate)


def interval_measurement_error(true_sep: float, spec: FilterSpec, rate: float,
                               noise: NoiseSpec, trials: int,
                               lowpass: Optional[float] = None) -> ErrorStats:
    """Repeatedly measure a two-tone interval and aggregate the errors.

    Detector noise is added to the detected power trace (an absolute floor
    set by the SNR relative to the mixed input power) with a distinct seed
    per trial.  Trials that do not yield two pulses in the measured period
    are counted as failures and excluded from the statistics.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    bench = _IntervalBench(true_sep, spec, rate, lowpass)
    errors = []
    failures = 0
    for trial in range(trials):
        if noise.enabled:
            record = bench.detector_noise(noise.seed + 1000003 * trial)
            measured = bench.measure(record, noise.snr_db)
        else:
            measured = bench.measure(None, None)
        if measured is None:
            failures += 1
            continue
        errors.append(measured - true_sep)
    if not errors:
        raise ProcessingError("all trials failed to produce two pulses")
    arr = np.array(errors)
    return ErrorStats(true_sep=true_sep,
                      max_abs_error=float(np.max(np.abs(arr))),
                      mean_error=float(np.mean(arr)),
                      stddev_error=float(np.std(arr)),
                      trials=trials, failures=failures)


def calibrate_measurement_snr(spec: FilterSpec, rate: float, true_sep: float,
                              target_error: float = 40e6,
                              trials: int = 50, seed: int = 0,
                              lowpass: Optional[float] = None) -> float:
    """SNR (dB) at which the max interval error matches ``target_error``.

    Bisection on SNR; the max error shrinks monotonically (in expectation)
    as SNR improves.  One set of detector-noise records is reused across
    candidate SNR levels, so the search only re-scales and re-reads.
    """
    bench = _IntervalBench(true_sep, spec, rate, lowpass)
    records = [bench.detector_noise(seed + 1000003 * t)
               for t in range(trials)]

    def max_err(snr_db: float) -> Optional[float]:
        errs = [bench.measure(r, snr_db) for r in records]
        errs = [abs(e - true_sep) for e in errs if e is not None]
        return max(errs) if errs else None

    lo, hi = -10.0, 50.0
    best = None
    for _ in range(24):
        mid = (lo + hi) / 2.0
        err = max_err(mid)
        if err is None:
            lo = mid
            continue
        if abs(err - target_error) / target_error < 0.1:
            return mid
        if best is None or abs(err - target_error) < best[1]:
            best = (mid, abs(err - target_error))
        if err > target_error:
            lo = mid
        else:
            hi = mid
    # the max error can step over the target; return the closest level seen
    return best[0] if best is not None else (lo + hi) / 2.0


# --- CSV schemas --------------------------------------------------------------


def width_surface_to_csv(rows, path):
    """`k_hz_per_s,bandwidth_hz,fwhm_time_s,fwhm_freq_hz` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("k_hz_per_s,bandwidth_hz,fwhm_time_s,fwhm_freq_hz\n")
        for k, b, wt, wf in rows:
            fh.write(f"{k:.17g},{b:.17g},{wt:.17g},{wf:.17g}\n")


def resolution_to_csv(rows, path):
    """`k_hz_per_s,pump_sweep_hz,min_separation_hz` rows."""
    with open(path, "w", newline="") as fh:
        fh.write("k_hz_per_s,pump_sweep_hz,min_separation_hz\n")
        for k, s, sep in rows:
            fh.write(f"{k:.17g},{s:.17g},{sep:.17g}\n")
