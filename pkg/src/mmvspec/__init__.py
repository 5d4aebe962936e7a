"""Gridless spectral estimation from multiple snapshots.

Ensembles of joint sinusoids are recovered from complete, incomplete, or
noisy observations through three routes: atomic-norm semidefinite programs
solved by ADMM (with dual-polynomial frequency localization), regularized
Toeplitz covariance estimation from compressive rows, and classical
subspace methods on the estimated covariance. Gridded baselines and
Cramer-Rao comparisons round out the toolbox, plus a config-driven
experiment harness behind the ``mmvspec`` command.
"""

from ._version import __version__
from .atomic import (AdmmOptions, AdmmState, SolveReport, SolveResult,
                     admm_complete, admm_denoise, dual_norm, extract_dual,
                     tau_for_awgn)
from .baselines import (FREQ_SUCCESS_THRESHOLD, SIGNAL_SUCCESS_THRESHOLD,
                        CrbInput, GroupLassoResult, fisher_crb, freq_mse,
                        freq_success, group_lasso_dft, normalized_error,
                        per_vector_mse, signal_success)
from .covariance import (CovarianceEstimate, CovarianceSample,
                         StreamingCovariance, covariance_exact,
                         effective_rank, estimate_toeplitz, lambda_heuristic,
                         lambda_oracle, sample_covariance)
from .dualpoly import (DualPolynomial, LocalizationResult, eval_dual_poly,
                       locate_frequencies, locate_peaks, recover_amplitudes)
from .errors import (CertificateError, DataFormatError, DomainError,
                     FullRankError, IllPosedError, SolverFailureError)
from .experiments import (ExperimentConfig, ExperimentResult,
                          apply_full_overrides, config_from_dict,
                          config_to_dict, load_config, run_experiment)
from .model import (CoefficientMatrix, FrequencySet, ObservationMask,
                    SignalEnsemble, ToeplitzSpec, atom, diag_sum,
                    draw_frequencies, is_complete_sparse_ruler,
                    mask_project, min_separation, rng_from_seed,
                    sample_coefficients, steering_matrix, synthesize,
                    toeplitz_adjoint, toeplitz_embed, upsilon_weights,
                    wrap_distance)
from .subspace import (PseudospectrumCurve, SubspaceSplit,
                       VandermondeDecomposition, estimate_model_order,
                       fit_powers, music_pseudospectrum, root_music,
                       subspace_split, toeplitz_first_row,
                       vandermonde_decompose)

__all__ = [
    "__version__",
    # model
    "FrequencySet", "CoefficientMatrix", "SignalEnsemble", "ObservationMask",
    "ToeplitzSpec", "atom", "steering_matrix", "synthesize", "toeplitz_embed",
    "toeplitz_adjoint", "diag_sum", "upsilon_weights", "min_separation",
    "is_complete_sparse_ruler", "mask_project", "wrap_distance",
    "rng_from_seed", "sample_coefficients", "draw_frequencies",
    # atomic-norm programs
    "AdmmOptions", "AdmmState", "SolveReport", "SolveResult", "admm_denoise",
    "admm_complete", "tau_for_awgn", "dual_norm", "extract_dual",
    # dual polynomial
    "DualPolynomial", "LocalizationResult", "eval_dual_poly", "locate_peaks",
    "locate_frequencies", "recover_amplitudes",
    # covariance
    "CovarianceSample", "CovarianceEstimate", "StreamingCovariance",
    "sample_covariance", "estimate_toeplitz", "covariance_exact",
    "lambda_heuristic", "lambda_oracle", "effective_rank",
    # subspace
    "SubspaceSplit", "PseudospectrumCurve", "VandermondeDecomposition",
    "subspace_split", "estimate_model_order", "root_music",
    "music_pseudospectrum", "vandermonde_decompose", "fit_powers",
    "toeplitz_first_row",
    # baselines and metrics
    "CrbInput", "fisher_crb", "GroupLassoResult", "group_lasso_dft",
    "normalized_error", "per_vector_mse", "freq_mse", "signal_success",
    "freq_success", "SIGNAL_SUCCESS_THRESHOLD", "FREQ_SUCCESS_THRESHOLD",
    # experiments
    "ExperimentConfig", "ExperimentResult", "config_from_dict",
    "config_to_dict", "load_config", "apply_full_overrides", "run_experiment",
    # errors
    "DomainError", "SolverFailureError", "CertificateError", "IllPosedError",
    "FullRankError", "DataFormatError",
]
