from .errors import DebiasedPolyfitError
from .experiments import (
    ExperimentConfig,
    TrialRecord,
    check_unbiased,
    relative_error,
    run_bias_study,
    run_error_curves,
    verify_trials,
)
from .orthopoly import (
    Measure,
    OrthoBasis,
    best_fit_coeffs,
    build_basis,
    eval_basis,
    gauss_rule,
    integrate,
    leverage,
)
from .randmat import (
    RngState,
    TridiagonalMatrix,
    sample_gue_dense_oracle,
    sample_gue_tridiag,
    sample_haar_unitary_batch,
    sample_haar_unitary_eigs,
    sample_jacobi_tridiag,
)
from .regression import (
    Method,
    PolyFit,
    debiased_fit,
    fourier_debiased_fit,
    leverage_only_fit,
    roots_of_unity_fit,
    weighted_ls_fit,
)
from .sampling import (
    NodeSet,
    dpp_density_oracle,
    sample_dpp_nodes,
    sample_leverage_nodes,
)
from .targets import best_fit, parse_target
from .trieig import tridiag_eigenvalues
from .version import __version__  # noqa: F401

__all__ = [
    "DebiasedPolyfitError",
    "ExperimentConfig",
    "Measure",
    "Method",
    "NodeSet",
    "OrthoBasis",
    "PolyFit",
    "RngState",
    "TrialRecord",
    "TridiagonalMatrix",
    "best_fit",
    "best_fit_coeffs",
    "build_basis",
    "check_unbiased",
    "debiased_fit",
    "dpp_density_oracle",
    "eval_basis",
    "fourier_debiased_fit",
    "gauss_rule",
    "integrate",
    "leverage",
    "leverage_only_fit",
    "parse_target",
    "relative_error",
    "roots_of_unity_fit",
    "run_bias_study",
    "run_error_curves",
    "sample_dpp_nodes",
    "sample_gue_dense_oracle",
    "sample_gue_tridiag",
    "sample_haar_unitary_batch",
    "sample_haar_unitary_eigs",
    "sample_jacobi_tridiag",
    "sample_leverage_nodes",
    "tridiag_eigenvalues",
    "verify_trials",
    "weighted_ls_fit",
]
