"""Fast solver: one eigendecomposition per outer iteration plus per-column
message passing, then the same Wishart and Gamma updates as the exact solver.

Per outer iteration each column warm-starts its posterior MEAN from the
previous iteration while the message state (variances, output messages)
re-initializes; the output messages are indexed by the current eigenbasis,
which changes between iterations, so carrying them over is ill-defined
(eigenvector sign/ordering changes scramble them).  The variance estimate
fed to the moment updates is the one-sweep value; the remaining sweeps
refine the means, whose fixed point is the exact factor mean.
"""

import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import backend
from .errors import ValidationError
from .gamp import PHI_INIT, spectral_decompose
from .linalg import sym
from .model import HyperParams, build_scale_matrix
from .vb_exact import (
    PosteriorState,
    SolverConfig,
    _chunks,
    _init_gamma,
    update_qgamma,
    update_qsigma,
)


def _gamp_sweep_all(values, mask_f, spectral, gamma_mean, mu_warm, config):
    """Inner message-passing sweeps for all columns through the kernel backend."""
    n_threads = config.n_threads if config.parallel_columns else 1
    args = (spectral.u, spectral.s, spectral.u_squared, gamma_mean)
    if n_threads <= 1:
        mu, phi_first, _, _ = backend.gamp_qx_sweeps(
            values, mask_f, *args, mu_warm, config.inner_gamp_iters, config.damping, PHI_INIT
        )
        return mu, phi_first
    parts = _chunks(values.shape[1], n_threads)
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        futs = [
            pool.submit(
                backend.gamp_qx_sweeps,
                values[:, lo:hi],
                mask_f[:, lo:hi],
                *args,
                mu_warm[:, lo:hi],
                config.inner_gamp_iters,
                config.damping,
                PHI_INIT,
            )
            for lo, hi in parts
        ]
        results = [f.result() for f in futs]
    mu = np.concatenate([r[0] for r in results], axis=1)
    phi_first = np.concatenate([r[1] for r in results], axis=1)
    return mu, phi_first


def solve_gamp(observed, hyper=None, config=None):
    """Run the message-passing-accelerated coordinate updates to convergence.

    Same contract and orientation handling as solve_exact; the returned
    state carries per-column marginal variances (M, N) instead of full
    covariances, and a wall-time entry per outer iteration.
    """
    hyper = hyper if hyper is not None else HyperParams()
    config = config if config is not None else SolverConfig()
    if observed.observed_count < 1:
        raise ValidationError("no observations")
    transposed = observed.shape[0] > observed.shape[1]
    work = observed.transposed() if transposed else observed
    m, n_cols = work.shape
    w = build_scale_matrix(hyper.w_spec, m)
    mask_f = work.mask.astype(float)
    values = work.values

    sigma_mean = np.eye(m)
    gamma_mean = _init_gamma(work)
    mu = values.copy()
    x_prev = mu.copy()
    phi_first = np.full((m, n_cols), PHI_INIT)
    w_hat, nu_hat = w.w, hyper.nu + n_cols
    c_tilde, d_tilde = 0.5 * work.observed_count + hyper.a, hyper.b

    iter_seconds = []
    converged = False
    n_iters = 0
    for _ in range(config.max_outer_iters):
        t0 = time.perf_counter()
        spectral = spectral_decompose(sigma_mean, config.eig_floor)
        mu, phi_first = _gamp_sweep_all(values, mask_f, spectral, gamma_mean, mu, config)
        xxT = sym(mu @ mu.T + np.diag(phi_first.sum(axis=1)))
        w_hat, nu_hat = update_qsigma(xxT, w, hyper.nu, n_cols)
        sigma_mean = sym(nu_hat * w_hat)
        x2 = mu**2 + phi_first
        c_tilde, d_tilde = update_qgamma(work, mu, x2, hyper.a, hyper.b)
        gamma_mean = min(c_tilde / d_tilde, config.gamma_cap)
        iter_seconds.append(time.perf_counter() - t0)
        n_iters += 1
        delta = np.linalg.norm(mu - x_prev) / max(np.linalg.norm(mu), 1e-300)
        x_prev = mu.copy()
        if delta < config.rel_tol:
            converged = True
            break

    xxT = sym(mu @ mu.T + np.diag(phi_first.sum(axis=1)))
    return PosteriorState(
        x_mean=mu,
        x_col_cov=phi_first,
        sigma_w_hat=w_hat,
        sigma_nu_hat=nu_hat,
        gamma_c=c_tilde,
        gamma_d=d_tilde,
        sigma_mean=sigma_mean,
        gamma_mean=gamma_mean,
        xxT_mean=xxT,
        n_iters=n_iters,
        converged=converged,
        iter_seconds=iter_seconds,
        transposed=transposed,
        backend="gamp",
    )


def effective_rank(posterior, threshold_ratio=1e-3):
    """Count of eigenvalues of <XX^T> above threshold_ratio times the largest."""
    if not threshold_ratio > 0:
        raise ValidationError("threshold_ratio must be > 0")
    eigs = np.linalg.eigvalsh(sym(posterior.xxT_mean))
    top = eigs[-1] if eigs.size else 0.0
    if top <= 0:
        return 0
    return int(np.count_nonzero(eigs > threshold_ratio * top))
