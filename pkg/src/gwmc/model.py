"""Hierarchical Gaussian-Wishart prior for low-rank matrix completion.

Columns x_n of the latent matrix X share a zero-mean Gaussian prior with a
common precision matrix Sigma; Sigma carries a Wishart hyperprior with scale
matrix W and nu degrees of freedom; the observation noise precision gamma
carries a Gamma(a, b) hyperprior.  Integrating Sigma out gives a marginal
prior on X proportional to |W^-1 + X X^T|^(-(nu+N)/2), i.e. a log-sum
penalty on the spectrum of X X^T, which is what makes the model low-rank
promoting.  This module holds the hyperparameters, the scale-matrix
constructions, and two diagnostic evaluations of that marginal prior.
"""

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NumericalError, ValidationError
from .linalg import chol_logdet, spd_inverse, sym


@dataclass(frozen=True)
class ScaledIdentity:
    """W = scale * I; scale = 1/eps with eps the marginal-prior smoothing floor."""

    scale: float = 1e10

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"ScaledIdentity scale must be > 0, got {self.scale}")


@dataclass(frozen=True)
class SecondOrderDifference:
    """W = F^T F with F the tridiagonal second-order difference operator.

    Promotes smoothness along the column index in addition to low rank.
    """


@dataclass(frozen=True)
class GraphLaplacian:
    """W = D - A + eps_hat*I for the Gaussian-kernel chain graph.

    a_ij = exp(-|i-j|^2 / theta^2), d_ii = sum_j a_ij.  The self-weight
    a_ii = 1 is kept in the degree sum; it cancels against A on the
    diagonal, leaving net diagonal sum_{j != i} a_ij + eps_hat.
    """

    theta: float = math.sqrt(3.0)
    eps_hat: float = 1e-6

    def __post_init__(self):
        if not self.theta > 0:
            raise ValidationError(f"GraphLaplacian theta must be > 0, got {self.theta}")
        if not self.eps_hat > 0:
            raise ValidationError(f"GraphLaplacian eps_hat must be > 0, got {self.eps_hat}")


WMatrixSpec = Union[ScaledIdentity, SecondOrderDifference, GraphLaplacian]


@dataclass(frozen=True)
class HyperParams:
    """Gamma(a, b) noise hyperprior, Wishart degrees of freedom nu, and the W spec.

    Defaults a = b = 1e-10 and nu = 1 are the non-informative settings used
    throughout the experiments.  nu only needs to be positive: the Wishart
    hyperprior may be improper, its posterior (nu + N degrees of freedom)
    is always proper for N >= 1.
    """

    a: float = 1e-10
    b: float = 1e-10
    nu: float = 1.0
    w_spec: WMatrixSpec = field(default_factory=ScaledIdentity)

    def __post_init__(self):
        for name in ("a", "b", "nu"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"HyperParams.{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class ScaleMatrix:
    """A realized Wishart scale matrix W together with its cached inverse."""

    w: np.ndarray
    w_inv: np.ndarray

    @property
    def dim(self):
        return self.w.shape[0]


def build_scale_matrix(spec, m):
    """Realize a WMatrixSpec at dimension m, caching the inverse.

    Every variant yields a symmetric positive-definite W; a failed Cholesky
    (possible only through degenerate parameters) raises NumericalError
    naming the variant.
    """
    if m < 2:
        raise ValidationError(f"scale matrix dimension must be >= 2, got {m}")
    if isinstance(spec, ScaledIdentity):
        eye = np.eye(m)
        return ScaleMatrix(w=spec.scale * eye, w_inv=eye / spec.scale)
    if isinstance(spec, SecondOrderDifference):
        f = np.zeros((m, m))
        idx = np.arange(m)
        f[idx, idx] = -2.0
        f[idx[:-1], idx[:-1] + 1] = 1.0
        f[idx[1:], idx[1:] - 1] = 1.0
        w = f.T @ f
    elif isinstance(spec, GraphLaplacian):
        idx = np.arange(m, dtype=float)
        a = np.exp(-((idx[:, None] - idx[None, :]) ** 2) / spec.theta**2)
        d = np.diag(a.sum(axis=1))
        w = d - a + spec.eps_hat * np.eye(m)
    else:
        raise ValidationError(f"unknown scale-matrix spec {spec!r}")
    w = sym(w)
    try:
        w_inv = spd_inverse(w)
    except NumericalError as exc:
        raise NumericalError(
            f"scale matrix for {type(spec).__name__} is not positive definite"
        ) from exc
    return ScaleMatrix(w=w, w_inv=w_inv)


def log_marginal_prior(x, w, nu):
    """Log of the Sigma-marginalized prior on X, up to an X-independent constant.

    Returns -((nu + N)/2) * log|W^-1 + X X^T|.  The additive normalization
    (multivariate gamma and power-of-two factors) is dropped; values are
    only comparable at fixed (M, N, nu, W).
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    return -0.5 * (nu + n) * chol_logdet(w.w_inv + x @ x.T)


def lemma1_residual(x, w):
    """log|X X^T + W^-1| - (log|W^-1| + log|I_N + X^T W X|).

    Mathematically zero for every real X and positive-definite W (block
    determinant identity); evaluated with independent Cholesky
    log-determinants on both sides, so it doubles as a numerical
    correctness oracle for the factorization paths.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    lhs = chol_logdet(x @ x.T + w.w_inv)
    rhs = chol_logdet(w.w_inv) + chol_logdet(np.eye(n) + x.T @ w.w @ x)
    return lhs - rhs
