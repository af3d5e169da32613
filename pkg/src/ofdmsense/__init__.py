"""Mono-static MIMO-OFDM sensing: echo simulation, joint and successive
angle-range-velocity estimation, performance analysis and a Monte-Carlo
experiment harness."""

__version__ = "0.1.0"

from .config import (SPEED_OF_LIGHT, SystemConfig, Target, check_cp_window,
                     db_to_linear, dbm_to_watts, desk_scale, full_scale,
                     linear_to_db, watts_to_dbm)
from .core import (doppler_freq, path_loss, range_freq, rx_spatial_freq,
                   steering_vector, tx_spatial_freq)
from .cubes import EchoCube, EstimateSet, RadarCube
from .echosim import reflection_coefficients, simulate_echo_cube
from .estimator import (AngularSpectrum, ScalingFactors, estimate_joint,
                        find_peaks, range_doppler_dft, recover_params,
                        remove_coefficients, scaling_factors, spatial_dft)
from .separate import estimate_separate
from .analysis import (empirical_output_snr, max_unambiguous, output_snr,
                       received_snr, resolutions, rmse, rmse_over_trials,
                       trial_squared_errors)
from .txgen import (CommChannel, TxSignal, assemble_tx, comm_rx,
                    gen_qam_symbols, make_tx, qam_constellation,
                    rayleigh_channel, zf_precoder)
from .harness import (ExperimentConfig, SceneSpec, aggregate_rmse,
                      experiment_from_dict, experiment_from_file,
                      export_radar_image, run_sweep)

__all__ = [name for name in dir() if not name.startswith("_")]
