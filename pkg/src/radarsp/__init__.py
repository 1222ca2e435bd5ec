"""radarsp: range-azimuth-Doppler radar processing with an adaptive
SARP/MJARP pipeline switch, fixed-point emulation, and an ISAC simulator."""

from .config import RadarConfig
from .waveform import GolayPair, PulseTrain, build_pulse_train, freq_domain_sequences, golay_pair
from .scene import ChannelModel, DataCube, Target, make_channel, sample_rcs, scnr, synthesize_cube
from .pipelines import (Detection, OpCounter, RangeAzimuthMap, SteeringMatrix, fast_time_fft,
                        jarp_map, mf_freq, mf_time, mjarp_slow_time_sample, noncoherent_profile,
                        op_report, peak_search_1d, peak_search_2d, run_single_target, sarp_dbf,
                        steering_matrix, table2_expected)
from .clean import CleanConfig, clean_iterate, default_threshold, psr_synthesize
from .doppler import (ConvergenceError, QrFactors, SlowTimeVector, SmoothedCovariance,
                      VelocityGrid, complex_sqrt_polar, evd_qr_algorithm, fft_doppler,
                      givens_qr, music_spectrum, music_velocity, slow_time_vectors,
                      spatial_smooth, spectrum_peaks)
from .fxp import (FixedPointFormat, StageFormats, fxp_fft, music_spectrum_quantized,
                  quantize, run_quantized_pipeline)
from .adaptive import (RspChoice, SwitchPolicy, estimate_noise_floor, localize_with_modes,
                       reconfigurable_localize, select_rsp)

__version__ = "0.1.0"
