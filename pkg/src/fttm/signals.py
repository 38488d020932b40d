"""Complex-baseband waveforms and the signals that feed the acquisition pipeline.

All signals are represented as analytic (single-sideband) complex records, so
the sample rate only has to cover the occupied band once.  The periodic probe
chirp resets its phase at every period boundary; only the per-period envelope
is consumed downstream, so cross-period coherence is not needed.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ValidationError

#: Minimum oversampling factor relative to the highest instantaneous frequency.
MIN_OVERSAMPLING = 2.5

#: Default oversampling used when a scenario picks its own sample rate.
DEFAULT_OVERSAMPLING = 4.0

_WAVEFORM_MAGIC = b"FTTM"
_WAVEFORM_VERSION = 1


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled complex baseband record.

    Sample n sits at time ``start_time + n / sample_rate``.  ``metadata`` holds
    processing annotations (e.g. filter transient extents); it never affects
    numerical results.
    """

    sample_rate: float
    samples: np.ndarray
    start_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("samples must be a non-empty 1-D sequence")
        if not np.iscomplexobj(samples):
            samples = samples.astype(np.complex128)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self.samples)) / self.sample_rate

    def power(self) -> np.ndarray:
        """Instantaneous power |x|^2 as a real array."""
        return np.abs(self.samples) ** 2


@dataclass(frozen=True)
class SweepConfig:
    """Periodic linear probe chirp: f_start -> f_stop every period."""

    f_start: float
    f_stop: float
    period: float

    def __post_init__(self):
        if not self.f_stop > self.f_start:
            raise ValidationError("sweep.f_stop must exceed f_start")
        if not self.period > 0:
            raise ValidationError("sweep.period must be positive")

    @property
    def rate(self) -> float:
        """Sweep rate k in Hz/s."""
        return (self.f_stop - self.f_start) / self.period

    @property
    def span(self) -> float:
        return self.f_stop - self.f_start


# --- signals under test -----------------------------------------------------


@dataclass(frozen=True)
class Tones:
    """Stationary multi-tone signal: list of (frequency_hz, amplitude)."""

    tones: tuple

    def __post_init__(self):
        tones = tuple((float(f), float(a)) for f, a in self.tones)
        if not tones:
            raise ValidationError("sut.tones must be non-empty")
        for f, a in tones:
            if f < 0:
                raise ValidationError("sut.tones: frequencies must be >= 0")
            if a <= 0:
                raise ValidationError("sut.tones: amplitudes must be positive")
        object.__setattr__(self, "tones", tones)

    def max_frequency(self) -> float:
        return max(f for f, _ in self.tones)


@dataclass(frozen=True)
class Lfm:
    """Linear FM sweep f0 -> f1 over ``duration``; repeats periodically."""

    f0: float
    f1: float
    duration: float

    def __post_init__(self):
        if self.f0 < 0 or self.f1 < 0:
            raise ValidationError("sut.lfm: frequencies must be >= 0")
        if not self.duration > 0:
            raise ValidationError("sut.lfm: duration must be positive")

    def max_frequency(self) -> float:
        return max(self.f0, self.f1)


@dataclass(frozen=True)
class DualChirpLfm:
    """Superposition of an up-chirp f0->f1 and the mirrored down-chirp."""

    f0: float
    f1: float
    duration: float

    def __post_init__(self):
        if self.f0 < 0 or self.f1 < 0:
            raise ValidationError("sut.dual_chirp: frequencies must be >= 0")
        if not self.duration > 0:
            raise ValidationError("sut.dual_chirp: duration must be positive")

    def max_frequency(self) -> float:
        return max(self.f0, self.f1)


@dataclass(frozen=True)
class StepFrequency:
    """Sequence of (frequency_hz, dwell_s) steps, cycled."""

    steps: tuple

    def __post_init__(self):
        steps = tuple((float(f), float(d)) for f, d in self.steps)
        if not steps:
            raise ValidationError("sut.steps must be non-empty")
        for f, d in steps:
            if f < 0:
                raise ValidationError("sut.steps: frequencies must be >= 0")
            if d <= 0:
                raise ValidationError("sut.steps: dwells must be positive")
        object.__setattr__(self, "steps", steps)

    def max_frequency(self) -> float:
        return max(f for f, _ in self.steps)


@dataclass(frozen=True)
class FrequencyHopping(StepFrequency):
    """Same layout as StepFrequency; kept distinct for scenario labeling."""


SutSpec = Union[Tones, Lfm, DualChirpLfm, StepFrequency, FrequencyHopping]


@dataclass(frozen=True)
class NoiseSpec:
    """Additive white Gaussian noise at a given SNR, seeded for repeatability."""

    enabled: bool = False
    snr_db: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.enabled and not math.isfinite(self.snr_db):
            raise ValidationError("noise.snr_db must be finite when enabled")


# --- synthesis --------------------------------------------------------------


def _check_rate(sample_rate: float, max_freq: float, what: str):
    if sample_rate < MIN_OVERSAMPLING * max_freq:
        raise ValidationError(
            f"sample rate {sample_rate:.4g} Hz too low for {what} "
            f"(needs >= {MIN_OVERSAMPLING} x {max_freq:.4g} Hz)"
        )


def _phase_from_freq(inst_freq: np.ndarray, sample_rate: float) -> np.ndarray:
    """Phase-continuous integration of an instantaneous-frequency track."""
    phase = np.empty_like(inst_freq)
    phase[0] = 0.0
    np.cumsum(inst_freq[:-1], out=phase[1:])
    return 2.0 * np.pi * phase / sample_rate


def synthesize_sut(spec: SutSpec, sample_rate: float, duration: float) -> Waveform:
    """Synthesize the signal under test as a unit-amplitude analytic signal."""
    if not duration > 0:
        raise ValidationError("duration must be positive")
    _check_rate(sample_rate, spec.max_frequency(), "signal under test")
    n = int(round(duration * sample_rate))
    if n == 0:
        raise ValidationError("duration shorter than one sample")
    t = np.arange(n) / sample_rate

    if isinstance(spec, Tones):
        samples = np.zeros(n, dtype=np.complex128)
        for f, a in spec.tones:
            samples += a * np.exp(2j * np.pi * f * t)
        return Waveform(sample_rate, samples)

    if isinstance(spec, Lfm):
        tau = np.mod(t, spec.duration)
        inst = spec.f0 + (spec.f1 - spec.f0) * tau / spec.duration
        return Waveform(sample_rate, np.exp(1j * _phase_from_freq(inst, sample_rate)))

    if isinstance(spec, DualChirpLfm):
        up = synthesize_sut(Lfm(spec.f0, spec.f1, spec.duration), sample_rate, duration)
        down = synthesize_sut(Lfm(spec.f1, spec.f0, spec.duration), sample_rate, duration)
        return Waveform(sample_rate, up.samples + down.samples)

    if isinstance(spec, (StepFrequency, FrequencyHopping)):
        freqs = np.array([f for f, _ in spec.steps])
        dwells = np.array([d for _, d in spec.steps])
        edges = np.concatenate(([0.0], np.cumsum(dwells)))
        tau = np.mod(t, edges[-1])
        idx = np.clip(np.searchsorted(edges, tau, side="right") - 1, 0, len(freqs) - 1)
        inst = freqs[idx]
        return Waveform(sample_rate, np.exp(1j * _phase_from_freq(inst, sample_rate)))

    raise ValidationError(f"unknown SUT spec {type(spec).__name__}")


def synthesize_probe_chirp(cfg: SweepConfig, n_periods: int, sample_rate: float) -> Waveform:
    """Periodic linear probe chirp; phase resets at each period boundary."""
    if n_periods < 1:
        raise ValidationError("n_periods must be >= 1")
    _check_rate(sample_rate, cfg.f_stop, "probe chirp")
    n = int(round(n_periods * cfg.period * sample_rate))
    t = np.arange(n) / sample_rate
    tau = np.mod(t, cfg.period)
    phase = 2.0 * np.pi * (cfg.f_start * tau + 0.5 * cfg.rate * tau**2)
    return Waveform(sample_rate, np.exp(1j * phase))


def add_awgn(w: Waveform, noise: NoiseSpec) -> Waveform:
    """Add complex white Gaussian noise at ``snr_db`` relative to input RMS."""
    if not noise.enabled:
        return w
    rng = np.random.default_rng(noise.seed)
    signal_power = float(np.mean(np.abs(w.samples) ** 2))
    noise_power = signal_power / 10.0 ** (noise.snr_db / 10.0)
    scale = math.sqrt(noise_power / 2.0)
    n = len(w.samples)
    noise_samples = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return Waveform(w.sample_rate, w.samples + noise_samples, w.start_time, dict(w.metadata))


# --- raw waveform file format ----------------------------------------------

_HEADER = struct.Struct("<4sIddQ")


def write_waveform(path, w: Waveform):
    """Write the little-endian FTTM raw waveform file."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_WAVEFORM_MAGIC, _WAVEFORM_VERSION,
                              w.sample_rate, w.start_time, len(w.samples)))
        interleaved = np.empty(2 * len(w.samples), dtype="<f8")
        interleaved[0::2] = np.real(w.samples)
        interleaved[1::2] = np.imag(w.samples)
        fh.write(interleaved.tobytes())


def read_waveform(path) -> Waveform:
    with open(path, "rb") as fh:
        magic, version, sample_rate, start_time, count = _HEADER.unpack(
            fh.read(_HEADER.size))
        if magic != _WAVEFORM_MAGIC:
            raise ValidationError(f"not an FTTM waveform file: bad magic {magic!r}")
        if version != _WAVEFORM_VERSION:
            raise ValidationError(f"unsupported waveform format version {version}")
        raw = np.frombuffer(fh.read(16 * count), dtype="<f8")
        if raw.size != 2 * count:
            raise ValidationError("truncated waveform file")
    return Waveform(sample_rate, raw[0::2] + 1j * raw[1::2], start_time)


def instantaneous_frequency(w: Waveform) -> np.ndarray:
    """Phase-difference frequency estimate; length len(w) - 1."""
    phase = np.unwrap(np.angle(w.samples))
    return np.diff(phase) * w.sample_rate / (2.0 * np.pi)
