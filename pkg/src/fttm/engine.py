"""The acquisition pipeline: chirped carrier, fixed filter, pulse detection.

Equivalent-baseband model of the chirped-carrier architecture: the signal
under test is mixed against the periodic probe chirp and re-centered on the
filter, so a tone at f crosses the filter center at t = (f - f_start) / k
within each sweep period.  The detected pulse positions are then mapped back
to frequency with the same law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy import signal as _sps

from .errors import ProcessingError, ValidationError
from .signals import SweepConfig, Waveform

_LOG_FLOOR = 1e-300

#: Cap on measured peak candidates per period; beyond this the envelope is
#: noise-dominated and the extra candidates cannot change the outcome.
_MAX_CANDIDATES = 64


@dataclass(frozen=True)
class DetectedPulse:
    period_index: int
    peak_time: float          # seconds within the sweep period
    fwhm: float               # seconds
    peak_amplitude: float     # envelope (power) units
    mapped_frequency: Optional[float] = None
    boundary_flag: bool = False
    out_of_band: bool = False

    def __post_init__(self):
        if self.peak_time < 0:
            raise ValidationError("pulse.peak_time must be >= 0")
        if not self.fwhm > 0:
            raise ValidationError("pulse.fwhm must be positive")
        if not self.peak_amplitude > 0:
            raise ValidationError("pulse.peak_amplitude must be positive")


@dataclass(frozen=True)
class CalibrationOffset:
    time_offset: float
    reference_frequency: float


@dataclass(frozen=True)
class PulseTrain:
    sweep: SweepConfig
    pulses: tuple = ()
    calibration: Optional[CalibrationOffset] = None

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses,
                              key=lambda p: (p.period_index, p.peak_time)))
        object.__setattr__(self, "pulses", pulses)

    def in_period(self, period_index: int):
        return [p for p in self.pulses if p.period_index == period_index]

    def fwhm_frequencies(self) -> np.ndarray:
        """FWHM of each pulse expressed in Hz through the sweep rate."""
        return self.sweep.rate * np.array([p.fwhm for p in self.pulses])


def heterodyne(sut: Waveform, probe: Waveform, filter_center: float) -> Waveform:
    """Mix the SUT against the probe and re-center on the filter.

    A SUT tone at f produces an instantaneous difference frequency of
    filter_center + (f - f_start) - k*t inside each period, i.e. it crosses
    the filter center at t = (f - f_start) / k.
    """
    if sut.sample_rate != probe.sample_rate:
        raise ValidationError("heterodyne: sample rates differ")
    if len(sut.samples) != len(probe.samples):
        raise ValidationError("heterodyne: lengths differ")
    t = sut.times()
    mixed = sut.samples * np.conj(probe.samples) * np.exp(2j * np.pi * filter_center * t)
    return Waveform(sut.sample_rate, mixed, sut.start_time)


def photodetect(w: Waveform, lowpass_cutoff: Optional[float] = None) -> Waveform:
    """Square-law detection |x|^2, optionally smoothed by a 4th-order low-pass."""
    env = np.abs(w.samples) ** 2
    if lowpass_cutoff is not None:
        nyq = w.sample_rate / 2.0
        if lowpass_cutoff >= nyq:
            raise ValidationError("photodetect: low-pass cutoff must be below Nyquist")
        sos = _sps.butter(4, lowpass_cutoff / nyq, output="sos")
        env = _sps.sosfiltfilt(sos, env)
        np.clip(env, 0.0, None, out=env)
    return Waveform(w.sample_rate, env.astype(complex), w.start_time,
                    dict(w.metadata))


def _parabolic_offset(y0: float, y1: float, y2: float) -> float:
    """Sub-sample offset of a parabola fit through log-power samples."""
    l0 = math.log(max(y0, _LOG_FLOOR))
    l1 = math.log(max(y1, _LOG_FLOOR))
    l2 = math.log(max(y2, _LOG_FLOOR))
    denom = l0 - 2.0 * l1 + l2
    if denom >= 0.0:
        return 0.0
    return min(0.5, max(-0.5, 0.5 * (l0 - l2) / denom))


def _half_crossing(seg: np.ndarray, peak_idx: int, half: float, step: int):
    """Walk from the peak until the envelope drops below ``half``.

    Returns the interpolated crossing position (fractional index) and whether
    the segment edge was hit before crossing.
    """
    i = peak_idx
    last = len(seg) - 1
    while 0 <= i + step <= last:
        j = i + step
        if seg[j] < half:
            frac = (seg[i] - half) / (seg[i] - seg[j])
            return i + step * frac, False
        i = j
    return float(i), True


def detect_pulses(envelope: Waveform, sweep: SweepConfig,
                  threshold_frac: float = 0.5) -> PulseTrain:
    """Locate pulses in a photodetected envelope, one sweep period at a time.

    Within each period, local maxima above ``threshold_frac`` of the period
    maximum are kept, strongest first, discarding any peak closer than one
    FWHM to an already accepted one.  Peak times use parabolic interpolation
    on log power; widths use linearly interpolated half-power crossings.
    """
    if not 0.0 < threshold_frac < 1.0:
        raise ValidationError("threshold_frac must be in (0, 1)")
    if envelope.duration < sweep.period * (1.0 - 1e-9):
        raise ValidationError("envelope shorter than one sweep period")
    env = np.real(envelope.samples)
    fs = envelope.sample_rate
    n_periods = int(math.floor(envelope.duration / sweep.period + 1e-9))
    pulses = []
    for p in range(n_periods):
        i0 = int(round(p * sweep.period * fs))
        i1 = min(int(round((p + 1) * sweep.period * fs)), len(env))
        seg = env[i0:i1]
        if seg.size < 3:
            continue
        pmax = float(np.max(seg))
        if pmax <= 0.0:
            continue
        if np.max(seg) == np.min(seg):
            raise ProcessingError(f"degenerate flat envelope in period {p}")
        candidates, _ = _sps.find_peaks(seg, height=threshold_frac * pmax)
        if candidates.size == 0:
            # monotone segment: the maximum sits on an edge
            candidates = np.array([int(np.argmax(seg))])
        elif candidates.size > _MAX_CANDIDATES:
            # noise-dominated segment; only the strongest peaks can matter
            order = np.argsort(seg[candidates])[::-1]
            candidates = candidates[order[:_MAX_CANDIDATES]]
        measured = []
        for idx in candidates:
            idx = int(idx)
            if 0 < idx < len(seg) - 1:
                off = _parabolic_offset(seg[idx - 1], seg[idx], seg[idx + 1])
            else:
                off = 0.0
            peak_val = float(seg[idx])
            left, left_edge = _half_crossing(seg, idx, peak_val / 2.0, -1)
            right, right_edge = _half_crossing(seg, idx, peak_val / 2.0, +1)
            fwhm = (right - left) / fs
            if fwhm <= 0.0:
                continue
            t = (idx + off) / fs
            measured.append((peak_val, t, fwhm, left_edge or right_edge))
        measured.sort(key=lambda m: -m[0])
        accepted = []
        for peak_val, t, fwhm, edge_hit in measured:
            if any(abs(t - t_a) < max(fwhm, f_a) for _, t_a, f_a, _ in accepted):
                continue
            accepted.append((peak_val, t, fwhm, edge_hit))
        for peak_val, t, fwhm, edge_hit in accepted:
            boundary = edge_hit or t < fwhm or t > sweep.period - fwhm
            pulses.append(DetectedPulse(
                period_index=p,
                peak_time=min(max(t, 0.0), sweep.period * (1.0 - 1e-15)),
                fwhm=fwhm,
                peak_amplitude=peak_val,
                boundary_flag=bool(boundary),
            ))
    return PulseTrain(sweep=sweep, pulses=tuple(pulses))


def calibrate_reference(train: PulseTrain, reference_frequency: float) -> CalibrationOffset:
    """Derive the FTTM time offset from a known reference tone.

    In each period the pulse nearest the expected crossing time of the
    reference is used; offsets are averaged over periods.
    """
    sweep = train.sweep
    expected = (reference_frequency - sweep.f_start) / sweep.rate
    offsets = []
    periods = sorted({p.period_index for p in train.pulses})
    for p in periods:
        in_p = train.in_period(p)
        if not in_p:
            continue
        best = min(in_p, key=lambda q: abs(q.peak_time - expected))
        if abs(best.peak_time - expected) <= sweep.period / 2.0:
            offsets.append(best.peak_time - expected)
    if not offsets:
        raise ProcessingError(
            "no pulse within half a period of the expected reference position")
    return CalibrationOffset(time_offset=float(np.mean(offsets)),
                             reference_frequency=reference_frequency)


def map_time_to_frequency(train: PulseTrain) -> PulseTrain:
    """Attach mapped frequencies f = f_start + k (t - offset) to every pulse.

    A missing calibration is treated as an explicit zero offset.  Pulses that
    map outside the sweep span are flagged out-of-band but retained.
    """
    sweep = train.sweep
    offset = train.calibration.time_offset if train.calibration else 0.0
    mapped = []
    for p in train.pulses:
        f = sweep.f_start + sweep.rate * (p.peak_time - offset)
        mapped.append(replace(p, mapped_frequency=f,
                              out_of_band=not sweep.f_start <= f <= sweep.f_stop))
    return PulseTrain(sweep=sweep, pulses=tuple(mapped),
                      calibration=train.calibration)


def pulses_to_csv(train: PulseTrain, path):
    """Write the pulses CSV with the published column schema."""
    with open(path, "w", newline="") as fh:
        fh.write("period_index,peak_time_s,fwhm_s,peak_amplitude,"
                 "mapped_freq_hz,boundary_flag\n")
        for p in train.pulses:
            mapped = "" if p.mapped_frequency is None else f"{p.mapped_frequency:.17g}"
            fh.write(f"{p.period_index},{p.peak_time:.17g},{p.fwhm:.17g},"
                     f"{p.peak_amplitude:.17g},{mapped},{int(p.boundary_flag)}\n")
