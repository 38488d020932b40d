"""Swept-filter frequency-to-time-mapping acquisition simulator."""

from .errors import ProcessingError, ValidationError
from .signals import (DualChirpLfm, FrequencyHopping, Lfm, NoiseSpec,
                      StepFrequency, SutSpec, SweepConfig, Tones, Waveform,
                      add_awgn, instantaneous_frequency, read_waveform,
                      synthesize_probe_chirp, synthesize_sut, write_waveform)
from .filters import (BroadenedSbs, FilterSpec, FrequencyResponse, IdealBpf,
                      Lorentzian, apply_filter, complex_gain, direct_convolve,
                      frequency_response, impulse_response, is_flat_top,
                      response_to_csv, three_db_bandwidth, with_center)
from .engine import (CalibrationOffset, DetectedPulse, PulseTrain,
                     calibrate_reference, detect_pulses, heterodyne,
                     map_time_to_frequency, photodetect, pulses_to_csv)
from .analysis import (ErrorStats, OptimalBandwidth, ResolutionReport,
                       WidthModel, calibrate_measurement_snr,
                       fitted_natural_fwhm, interval_measurement_error,
                       optimal_bandwidth, predicted_widths,
                       resolution_to_csv, simulate_pulse_width,
                       two_tone_min_separation, width_surface_to_csv)
from .stft import (Spectrogram, read_spectrogram, ridge_frequencies,
                   ridge_width, run_stft, spectrogram_to_csv,
                   write_spectrogram)
from .presets import (DESK_SCALE_FACTOR, apply_desk_scale, load_preset,
                      preset_names)

__version__ = "0.1.0"
