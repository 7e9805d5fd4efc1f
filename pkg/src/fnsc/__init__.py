"""Pseudospectral toolkit for the fractional Navier-Stokes equations with
rotation: critical-norm analysis on dyadic frequency shells, exact
semigroup/window multipliers, Picard solvers for evolving and stationary
mild solutions, and the large-rotation existence scan.
"""

from .grid import (FrequencyGrid, SpectralField, forward_transform,
                   inverse_transform, pointwise_tensor_product,
                   tensor_divergence)
from .frame import (FBParams, LPFrame, build_frame, fb_norm, fb_norm_integral,
                    time_fb_norm, check_bernstein, check_embedding,
                    check_scaling, dyadic_rescale)
from .symbols import (PhysicalParams, rotation_matrix, leray_symbol,
                      semigroup_symbol, duhamel_weights, stationary_kernel,
                      x_norm_weights, apply_leray, apply_semigroup,
                      apply_duhamel, apply_stationary_kernel, x_norm)
from .nonlinear import (nonlinear_divergence, bilinear_step, forcing_term,
                        paraproduct_T, paraproduct_R,
                        verify_paraproduct_identity)
from .solver import (SolverConfig, NormSeries, PicardResult, GateError,
                     DivergenceError, picard_solve, evolve, theorem1_gate,
                     stability_experiment)
from .stationary import (StationaryResult, OmegaScanResult, stationary_picard,
                         verify_stationary_equivalence, uniqueness_probe,
                         region_decomposition, estimate_omega_threshold,
                         converge_to_stationary_experiment)
from .snapshot import read_snapshot, write_snapshot
from .datagen import (taylor_green, random_band, single_mode,
                      homogeneous_like, generate_data)
from .calibrate import load_calibration, frozen_K, frozen_epsilon
from .experiments import run_experiment, verify_suite, config_reference

__version__ = "0.1.0"

__all__ = [
    "FrequencyGrid", "SpectralField", "forward_transform", "inverse_transform",
    "pointwise_tensor_product", "tensor_divergence",
    "FBParams", "LPFrame", "build_frame", "fb_norm", "fb_norm_integral",
    "time_fb_norm", "check_bernstein", "check_embedding", "check_scaling",
    "dyadic_rescale",
    "PhysicalParams", "rotation_matrix", "leray_symbol", "semigroup_symbol",
    "duhamel_weights", "stationary_kernel", "x_norm_weights", "apply_leray",
    "apply_semigroup", "apply_duhamel", "apply_stationary_kernel", "x_norm",
    "nonlinear_divergence", "bilinear_step", "forcing_term", "paraproduct_T",
    "paraproduct_R", "verify_paraproduct_identity",
    "SolverConfig", "NormSeries", "PicardResult", "GateError",
    "DivergenceError", "picard_solve", "evolve", "theorem1_gate",
    "stability_experiment",
    "StationaryResult", "OmegaScanResult", "stationary_picard",
    "verify_stationary_equivalence", "uniqueness_probe",
    "region_decomposition", "estimate_omega_threshold",
    "converge_to_stationary_experiment",
    "read_snapshot", "write_snapshot",
    "taylor_green", "random_band", "single_mode", "homogeneous_like",
    "generate_data",
    "load_calibration", "frozen_K", "frozen_epsilon",
    "run_experiment", "verify_suite", "config_reference",
]
