import math

import numpy as np
import pytest

from fttm import (DualChirpLfm, FrequencyHopping, Lfm, NoiseSpec,
                  StepFrequency, SweepConfig, Tones, ValidationError,
                  Waveform, add_awgn, instantaneous_frequency, read_waveform,
                  synthesize_probe_chirp, synthesize_sut, write_waveform)

FS = 10e9


def test_waveform_basics():
    w = Waveform(FS, np.ones(100, dtype=complex), start_time=1e-6)
    assert len(w) == 100
    assert w.duration == pytest.approx(100 / FS)
    assert w.times()[0] == pytest.approx(1e-6)
    assert np.allclose(w.power(), 1.0)


def test_waveform_validation():
    with pytest.raises(ValidationError):
        Waveform(0.0, np.ones(4, dtype=complex))
    with pytest.raises(ValidationError):
        Waveform(FS, np.zeros((2, 2), dtype=complex))
    with pytest.raises(ValidationError):
        Waveform(FS, np.array([], dtype=complex))


def test_sweep_config():
    sw = SweepConfig(1e9, 5e9, 1e-6)
    assert sw.rate == pytest.approx(4e15)
    assert sw.span == pytest.approx(4e9)
    with pytest.raises(ValidationError):
        SweepConfig(5e9, 1e9, 1e-6)
    with pytest.raises(ValidationError):
        SweepConfig(1e9, 5e9, 0.0)


def test_tone_synthesis_is_unit_amplitude_exponential():
    sut = synthesize_sut(Tones(((1e9, 1.0),)), FS, 1e-6)
    t = np.arange(len(sut)) / FS
    assert np.allclose(sut.samples, np.exp(2j * np.pi * 1e9 * t))


def test_two_tone_beat_has_full_contrast():
    # sum of equal tones df apart beats at df with envelope touching zero
    df = 100e6
    sut = synthesize_sut(Tones(((1e9, 1.0), (1e9 + df, 1.0))), FS, 1e-6)
    env = np.abs(sut.samples)
    assert np.max(env) == pytest.approx(2.0, rel=1e-3)
    assert np.min(env) < 1e-2
    inst = instantaneous_frequency(Waveform(FS, sut.samples ** 2))
    # squared signal contains the 2f and beat mixing products; just check
    # the envelope period instead
    peaks = np.where(env > 1.999)[0]
    assert np.any(peaks > 0)


def test_lfm_instantaneous_frequency_tracks_ramp():
    sut = synthesize_sut(Lfm(0.5e9, 1.5e9, 1e-6), FS, 1e-6)
    inst = instantaneous_frequency(sut)
    t = np.arange(len(inst)) / FS
    expected = 0.5e9 + 1e15 * t
    assert np.max(np.abs(inst - expected)) < 2e6


def test_lfm_repeats_periodically():
    sut = synthesize_sut(Lfm(0.2e9, 1.0e9, 0.5e-6), FS, 1.5e-6)
    inst = instantaneous_frequency(sut)
    n = int(0.5e-6 * FS)
    # start of second ramp returns to f0
    assert abs(inst[n + 5] - 0.2e9) < 0.01e9


def test_dual_chirp_contains_both_slopes():
    sut = synthesize_sut(DualChirpLfm(0.2e9, 1.2e9, 1e-6), FS, 1e-6)
    # at the crossing point the two chirps are at the same frequency and the
    # amplitude doubles; elsewhere the envelope beats
    env = np.abs(sut.samples)
    assert np.max(env) > 1.9


def test_step_and_hop_tracks():
    steps = ((0.5e9, 0.2e-6), (1.5e9, 0.2e-6))
    for cls in (StepFrequency, FrequencyHopping):
        sut = synthesize_sut(cls(steps), FS, 0.4e-6)
        inst = instantaneous_frequency(sut)
        mid_first = int(0.1e-6 * FS)
        mid_second = int(0.3e-6 * FS)
        assert abs(inst[mid_first] - 0.5e9) < 1e6
        assert abs(inst[mid_second] - 1.5e9) < 1e6
        assert cls(steps).max_frequency() == pytest.approx(1.5e9)


def test_sut_validation():
    with pytest.raises(ValidationError):
        Tones(())
    with pytest.raises(ValidationError):
        Tones(((1e9, 0.0),))
    with pytest.raises(ValidationError):
        Lfm(-1.0, 1e9, 1e-6)
    with pytest.raises(ValidationError):
        StepFrequency(((1e9, 0.0),))
    with pytest.raises(ValidationError):
        synthesize_sut(Tones(((5e9, 1.0),)), 10e9, 1e-6)  # undersampled


def test_probe_chirp_phase_resets_each_period():
    sw = SweepConfig(0.5e9, 1.5e9, 0.5e-6)
    probe = synthesize_probe_chirp(sw, 3, FS)
    n = int(round(0.5e-6 * FS))
    # the first sample of every period matches the very first sample
    assert probe.samples[n] == pytest.approx(probe.samples[0])
    assert probe.samples[2 * n] == pytest.approx(probe.samples[0])
    inst = instantaneous_frequency(probe)
    assert abs(inst[5] - 0.5e9) < 5e6
    assert abs(inst[n - 5] - 1.5e9) < 10e6


def test_probe_chirp_validation():
    sw = SweepConfig(0.5e9, 6e9, 0.5e-6)
    with pytest.raises(ValidationError):
        synthesize_probe_chirp(sw, 0, FS)
    with pytest.raises(ValidationError):
        synthesize_probe_chirp(sw, 2, FS)  # 2.5x oversampling violated


def test_awgn_snr_level():
    w = synthesize_sut(Tones(((1e9, 1.0),)), FS, 10e-6)
    noisy = add_awgn(w, NoiseSpec(True, 20.0, seed=7))
    noise = noisy.samples - w.samples
    snr = 10 * math.log10(np.mean(np.abs(w.samples) ** 2)
                          / np.mean(np.abs(noise) ** 2))
    assert snr == pytest.approx(20.0, abs=0.3)
    # disabled noise is a no-op, same object content
    assert add_awgn(w, NoiseSpec(False)) is w


def test_awgn_is_seeded():
    w = synthesize_sut(Tones(((1e9, 1.0),)), FS, 1e-6)
    a = add_awgn(w, NoiseSpec(True, 10.0, seed=3))
    b = add_awgn(w, NoiseSpec(True, 10.0, seed=3))
    c = add_awgn(w, NoiseSpec(True, 10.0, seed=4))
    assert np.array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


def test_waveform_file_roundtrip(tmp_path):
    w = Waveform(FS, np.exp(2j * np.pi * np.linspace(0, 1, 1000)), 2.5e-6)
    path = tmp_path / "wave.bin"
    write_waveform(path, w)
    back = read_waveform(path)
    assert back.sample_rate == w.sample_rate
    assert back.start_time == w.start_time
    assert np.array_equal(back.samples, w.samples)


def test_waveform_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValidationError):
        read_waveform(path)
