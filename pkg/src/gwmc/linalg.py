"""Dense symmetric linear-algebra helpers.

All log-determinants go through a Cholesky factorization so that matrices
whose determinants overflow/underflow in the raw product representation
(scale matrices here span ~10**(+-10*M)) stay representable: we only ever
sum logs of Cholesky diagonal entries.
"""

import numpy as np
import scipy.linalg

from .errors import NumericalError


def sym(a):
    """Symmetric part of a square matrix."""
    return 0.5 * (a + a.T)


def chol_logdet(a):
    """log|A| for symmetric positive-definite A via Cholesky."""
    try:
        c = np.linalg.cholesky(sym(a))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("matrix not positive definite in log-determinant") from exc
    return 2.0 * float(np.sum(np.log(np.diagonal(c))))


def spd_inverse(a, jitter=0.0):
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    jitter > 0 adds jitter*I before factorizing (last-resort regularization,
    off by default).
    """
    m = a.shape[0]
    b = sym(a)
    if jitter > 0.0:
        b = b + jitter * np.eye(m)
    try:
        c, low = scipy.linalg.cho_factor(b, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError("matrix not positive definite in inverse") from exc
    inv = scipy.linalg.cho_solve((c, low), np.eye(m), check_finite=False)
    return sym(inv)


def eigh_floored(a, floor):
    """Symmetric eigendecomposition with eigenvalues clamped below at `floor`."""
    s, u = np.linalg.eigh(sym(a))
    return np.maximum(s, floor), u
