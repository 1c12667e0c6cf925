"""Low-rank Bayesian matrix completion with a Gaussian-Wishart hierarchical prior.

Two interchangeable solvers: `solve_exact` (closed-form coordinate updates)
and `solve_gamp` (per-column message passing against one shared
eigendecomposition per outer iteration).
"""

from .backend import backend_name
from .data import (
    ObservedMatrix,
    SyntheticInstance,
    generate_synthetic,
    holdout_split,
    load_gray_image,
    load_masked_csv,
    load_ratings,
    mask_pixels,
    save_gray_image,
    save_masked_csv,
)
from .errors import NumericalError, ValidationError
from .metrics import allelic_error_rate, nmae, psnr, relative_error, ssim, success
from .model import (
    GraphLaplacian,
    HyperParams,
    ScaledIdentity,
    ScaleMatrix,
    SecondOrderDifference,
    build_scale_matrix,
    lemma1_residual,
    log_marginal_prior,
)
from .vb_exact import PosteriorState, SolverConfig, solve_exact
from .vb_gamp import effective_rank, solve_gamp

__version__ = "0.1.0"

__all__ = [
    "GraphLaplacian",
    "HyperParams",
    "NumericalError",
    "ObservedMatrix",
    "PosteriorState",
    "ScaleMatrix",
    "ScaledIdentity",
    "SecondOrderDifference",
    "SolverConfig",
    "SyntheticInstance",
    "ValidationError",
    "allelic_error_rate",
    "backend_name",
    "build_scale_matrix",
    "effective_rank",
    "generate_synthetic",
    "holdout_split",
    "lemma1_residual",
    "load_gray_image",
    "load_masked_csv",
    "load_ratings",
    "log_marginal_prior",
    "mask_pixels",
    "nmae",
    "psnr",
    "relative_error",
    "save_gray_image",
    "save_masked_csv",
    "solve_exact",
    "solve_gamp",
    "ssim",
    "success",
]
