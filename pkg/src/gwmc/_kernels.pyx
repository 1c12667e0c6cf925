# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the per-column kernels in ``_kernels_py``.

Same contracts as the pure-NumPy module; the exact sweep runs LAPACK
getrf/getri per column on a single reused buffer, the message-passing
sweeps run BLAS gemm for the four matrix products and fuse every
elementwise stage into single passes.  Both kernels release the GIL
around their numeric loops, so callers may chunk columns over threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport daxpy, dgemm, dgemv
from scipy.linalg.cython_lapack cimport dgetrf, dgetri

from .errors import NumericalError, ValidationError

BACKEND_NAME = "compiled"


def exact_qx_sweep(values, mask, sigma_mean, gamma_mean):
    """One exact q_x sweep over all columns; see _kernels_py.exact_qx_sweep."""
    cdef int m = values.shape[0]
    cdef int n_cols = values.shape[1]
    cdef double[::1, :] y = np.asfortranarray(values, dtype=np.float64)
    cdef double[::1, :] msk = np.asfortranarray(mask, dtype=np.float64)
    cdef double[::1, :] sig = np.asfortranarray(sigma_mean, dtype=np.float64)
    cdef double gamma = gamma_mean

    x_mean_arr = np.empty((m, n_cols), order="F")
    q_diag_arr = np.empty((m, n_cols), order="F")
    q_sum_arr = np.zeros((m, m), order="F")
    cdef double[::1, :] x_mean = x_mean_arr
    cdef double[::1, :] q_diag = q_diag_arr
    cdef double[::1, :] q_sum = q_sum_arr

    cdef double[::1, :] a = np.empty((m, m), order="F")
    cdef double[::1] oy = np.empty(m)
    cdef int[::1] ipiv = np.empty(m, dtype=np.int32)

    cdef int info = 0
    cdef int lwork = -1
    cdef double wk = 0.0
    dgetri(&m, &a[0, 0], &m, &ipiv[0], &wk, &lwork, &info)
    lwork = <int> wk
    if lwork < m:
        lwork = m
    cdef double[::1] work = np.empty(lwork)

    cdef int n, i, j
    cdef int ione = 1
    cdef int mm = m * m
    cdef int fail_col = -1
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef char trans_n = b'N'

    with nogil:
        for n in range(n_cols):
            memcpy(&a[0, 0], &sig[0, 0], mm * sizeof(double))
            for j in range(m):
                a[j, j] += gamma * msk[j, n]
                oy[j] = msk[j, n] * y[j, n]
            dgetrf(&m, &m, &a[0, 0], &m, &ipiv[0], &info)
            if info != 0:
                fail_col = n
                break
            dgetri(&m, &a[0, 0], &m, &ipiv[0], &work[0], &lwork, &info)
            if info != 0:
                fail_col = n
                break
            dgemv(&trans_n, &m, &m, &gamma, &a[0, 0], &m, &oy[0], &ione, &zero,
                  &x_mean[0, n], &ione)
            for j in range(m):
                q_diag[j, n] = a[j, j]
            daxpy(&mm, &one, &a[0, 0], &ione, &q_sum[0, 0], &ione)
    if fail_col >= 0:
        raise NumericalError(f"singular q_x system at column {fail_col}")
    return x_mean_arr, q_diag_arr, q_sum_arr


def gamp_qx_sweeps(values, mask, u, s, u_sq, xi_in, mu0, n_sweeps_in, damping=1.0,
                   phi_init=1e-5):
    """Batched message-passing sweeps; see _kernels_py.gamp_qx_sweeps."""
    cdef int n_sweeps = n_sweeps_in
    if n_sweeps < 1:
        raise ValidationError("n_sweeps must be >= 1")
    cdef int m = values.shape[0]
    cdef int n_cols = values.shape[1]
    cdef double xi = xi_in
    cdef double damp = damping
    cdef double keep = 1.0 - damp

    cdef double[::1, :] y = np.asfortranarray(values, dtype=np.float64)
    cdef double[::1, :] msk = np.asfortranarray(mask, dtype=np.float64)
    cdef double[::1, :] uf = np.asfortranarray(u, dtype=np.float64)
    cdef double[::1, :] usqf = np.asfortranarray(u_sq, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(s, dtype=np.float64)

    mu_arr = np.array(mu0, dtype=np.float64, order="F", copy=True)
    phi_arr = np.full((m, n_cols), phi_init, order="F")
    psi_arr = np.zeros((m, n_cols), order="F")
    phi_first_arr = np.empty((m, n_cols), order="F")
    cdef double[::1, :] mu = mu_arr
    cdef double[::1, :] phi = phi_arr
    cdef double[::1, :] psi = psi_arr
    cdef double[::1, :] phi_first = phi_first_arr

    cdef double[::1, :] z = np.empty((m, n_cols), order="F")
    cdef double[::1, :] tp = np.empty((m, n_cols), order="F")
    cdef double[::1, :] ts = np.empty((m, n_cols), order="F")
    cdef double[::1, :] trden = np.empty((m, n_cols), order="F")
    cdef double[::1, :] g = np.empty((m, n_cols), order="F")

    cdef char trans_t = b'T'
    cdef char trans_n = b'N'
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef int sweep, i, j
    cdef int bad_i = -1, bad_j = -1, bad_sweep = -1
    cdef double p, den, tau_r, phi_o, mu_new, phi_new, r

    with nogil:
        for sweep in range(n_sweeps):
            # z = U^T mu ; tp = Usq phi
            dgemm(&trans_t, &trans_n, &m, &n_cols, &m, &one, &uf[0, 0], &m,
                  &mu[0, 0], &m, &zero, &z[0, 0], &m)
            dgemm(&trans_n, &trans_n, &m, &n_cols, &m, &one, &usqf[0, 0], &m,
                  &phi[0, 0], &m, &zero, &tp[0, 0], &m)
            for j in range(n_cols):
                for i in range(m):
                    p = z[i, j] - tp[i, j] * psi[i, j]
                    den = 1.0 + sv[i] * tp[i, j]
                    psi[i, j] = damp * (-sv[i] * p / den) + keep * psi[i, j]
                    ts[i, j] = sv[i] / den
            # trden = Usq^T ts ; g = U psi
            dgemm(&trans_t, &trans_n, &m, &n_cols, &m, &one, &usqf[0, 0], &m,
                  &ts[0, 0], &m, &zero, &trden[0, 0], &m)
            dgemm(&trans_n, &trans_n, &m, &n_cols, &m, &one, &uf[0, 0], &m,
                  &psi[0, 0], &m, &zero, &g[0, 0], &m)
            bad_i = -1
            for j in range(n_cols):
                for i in range(m):
                    tau_r = 1.0 / trden[i, j]
                    r = mu[i, j] + tau_r * g[i, j]
                    if msk[i, j] != 0.0:
                        phi_o = tau_r / (1.0 + xi * tau_r)
                        mu_new = phi_o * (xi * y[i, j] + r / tau_r)
                        phi_new = phi_o
                    else:
                        mu_new = r
                        phi_new = tau_r
                    mu[i, j] = damp * mu_new + keep * mu[i, j]
                    phi[i, j] = damp * phi_new + keep * phi[i, j]
                    if bad_i < 0 and not isfinite(mu[i, j]):
                        bad_i = i
                        bad_j = j
            if bad_i >= 0:
                bad_sweep = sweep
                break
            if sweep == 0:
                for j in range(n_cols):
                    for i in range(m):
                        phi_first[i, j] = phi[i, j]
    if bad_sweep >= 0:
        raise NumericalError(
            f"non-finite message at sweep {bad_sweep}, coordinate ({bad_i},{bad_j})"
        )
    return mu_arr, phi_first_arr, phi_arr, psi_arr
