"""Per-column message-passing approximation of the Gaussian factor q_x.

The exact factor update for one column needs (Sigma + gamma*diag(o))^-1.
Because the column prior N(0, Sigma^-1) does not factorize, message passing
is run on an equivalent surrogate regression problem instead: observe
b = U^T x + e with e ~ N(0, S^-1), where Sigma = U diag(s) U^T, under the
factorized pseudo-prior

    p(x_m) = N(kappa_m, 1/xi)   if pi_m = 1 (entry observed)
    p(x_m) = const               if pi_m = 0 (flat),

with b = 0, kappa = y_n, pi = o_n, xi = the current noise-precision mean.
The surrogate's posterior is exactly q_x(x_n), and both its prior and its
noise factorize, so scalar-function message passing applies.  The mean
fixed point of the sweeps solves (Sigma + xi*Pi) mu = xi*Pi*kappa exactly,
whatever the variance messages are; the variance messages themselves are
per-coordinate approximations whose one-sweep value (from the small-phi
initialization) is the estimate consumed by the outer solver.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .linalg import sym

PHI_INIT = 1e-5


@dataclass
class SpectralCache:
    """Eigendecomposition of the current precision mean, shared by all columns.

    u has orthonormal columns, s holds the (floored) eigenvalues, and
    u_squared caches the elementwise square of u^T for variance propagation.
    """

    u: np.ndarray
    s: np.ndarray
    u_squared: np.ndarray


@dataclass
class GampColumnState:
    """All message-passing quantities for one column."""

    mu_x: np.ndarray
    phi_x: np.ndarray
    r_hat: np.ndarray
    tau_r: np.ndarray
    p_hat: np.ndarray
    tau_p: np.ndarray
    psi_hat: np.ndarray
    tau_s: np.ndarray
    z_hat: np.ndarray

    def copy(self):
        return GampColumnState(**{k: getattr(self, k).copy() for k in self.__dict__})


@dataclass
class SurrogateProblem:
    """Fixed inputs of the per-column surrogate regression (b is always zero)."""

    spectral: SpectralCache
    b: np.ndarray
    kappa: np.ndarray
    pi: np.ndarray
    xi: float


def spectral_decompose(sigma_mean, eig_floor=1e-12):
    """Symmetric eigendecomposition with an eigenvalue floor.

    Raises on input that is not symmetric within 1e-8 relative tolerance.
    """
    a = np.asarray(sigma_mean, dtype=float)
    scale = max(float(np.max(np.abs(a))), 1.0)
    if np.max(np.abs(a - a.T)) > 1e-8 * scale:
        raise ValidationError("spectral_decompose requires a symmetric matrix")
    if not eig_floor > 0:
        raise ValidationError("eig_floor must be positive")
    s, u = np.linalg.eigh(sym(a))
    return SpectralCache(u=u, s=np.maximum(s, eig_floor), u_squared=(u.T) ** 2)


def init_column_state(y_n, o_n):
    """Fresh state: means at the observed values, small variances, zero messages."""
    y_n = np.asarray(y_n, dtype=float)
    pi = np.asarray(o_n, dtype=float)
    m = y_n.shape[0]
    return GampColumnState(
        mu_x=pi * y_n,
        phi_x=np.full(m, PHI_INIT),
        r_hat=np.zeros(m),
        tau_r=np.ones(m),
        p_hat=np.zeros(m),
        tau_p=np.ones(m),
        psi_hat=np.zeros(m),
        tau_s=np.ones(m),
        z_hat=np.zeros(m),
    )


def make_problem(y_n, o_n, spectral, gamma_mean):
    y_n = np.asarray(y_n, dtype=float)
    pi = np.asarray(o_n, dtype=float)
    return SurrogateProblem(
        spectral=spectral, b=np.zeros(y_n.shape[0]), kappa=y_n, pi=pi, xi=float(gamma_mean)
    )


def g_in(r_hat, tau_r, pi, kappa, xi):
    """Input scalar function: posterior mean and variance under the pseudo-prior.

    Observed (pi = 1):   phi = tau_r / (1 + xi*tau_r),  mu = phi*(xi*kappa + r_hat/tau_r).
    Unobserved (pi = 0): mu = r_hat, phi = tau_r (flat prior passes the message through).
    """
    r_hat = np.asarray(r_hat, dtype=float)
    tau_r = np.asarray(tau_r, dtype=float)
    phi_obs = tau_r / (1.0 + xi * tau_r)
    mu_obs = phi_obs * (xi * np.asarray(kappa, dtype=float) + r_hat / tau_r)
    observed = np.asarray(pi) != 0
    mu = np.where(observed, mu_obs, r_hat)
    phi = np.where(observed, phi_obs, tau_r)
    return mu, phi


def g_out(p_hat, tau_p, b, s):
    """Output scalar function and its negated derivative.

    psi = s*(b - p_hat)/(1 + s*tau_p);  tau_s = s/(1 + s*tau_p).
    """
    s = np.asarray(s, dtype=float)
    den = 1.0 + s * np.asarray(tau_p, dtype=float)
    psi = s * (np.asarray(b, dtype=float) - np.asarray(p_hat, dtype=float)) / den
    tau_s = s / den
    return psi, tau_s


def gamp_iterate(state, problem, n_iters, damping=1.0):
    """Run n_iters full message-passing sweeps on one column, returning new state.

    Each sweep: (1) project the current belief through U^T with the Onsager
    correction, (2) apply g_out, (3) aggregate messages back per coordinate,
    (4) apply g_in.  With damping < 1, new (mu, phi, psi) are blended with
    the previous values.
    """
    if n_iters < 1:
        raise ValidationError("n_iters must be >= 1")
    sp = problem.spectral
    u, s, usq = sp.u, sp.s, sp.u_squared
    st = state.copy()
    keep = 1.0 - damping
    for it in range(n_iters):
        st.z_hat = u.T @ st.mu_x
        st.tau_p = usq @ st.phi_x
        st.p_hat = st.z_hat - st.tau_p * st.psi_hat
        psi_new, st.tau_s = g_out(st.p_hat, st.tau_p, problem.b, s)
        st.psi_hat = damping * psi_new + keep * st.psi_hat
        st.tau_r = 1.0 / (usq.T @ st.tau_s)
        st.r_hat = st.mu_x + st.tau_r * (u @ st.psi_hat)
        mu_new, phi_new = g_in(st.r_hat, st.tau_r, problem.pi, problem.kappa, problem.xi)
        st.mu_x = damping * mu_new + keep * st.mu_x
        st.phi_x = damping * phi_new + keep * st.phi_x
        if not np.all(np.isfinite(st.mu_x)):
            bad = int(np.argmax(~np.isfinite(st.mu_x)))
            raise NumericalError(f"non-finite message at sweep {it}, coordinate {bad}")
    return st


def approximate_qx_column(y_n, o_n, spectral, gamma_mean, warm=None, config=None):
    """Approximate mean and marginal variances of q_x for one column.

    Starts from `warm` when given (a previous GampColumnState, continued
    as-is), otherwise from the fresh initialization.  Runs
    config.inner_gamp_iters sweeps.  The variance estimate returned is the
    one-sweep value -- the first sweep after initialization, matching the
    one-iteration operating point of the solver; when warm-started the
    first sweep continues the warm variance trajectory instead.  Additional
    sweeps refine the means (their fixed point is the exact posterior mean
    for any variance state).
    """
    from .vb_exact import SolverConfig  # local import to avoid a cycle

    if config is None:
        config = SolverConfig()
    problem = make_problem(y_n, o_n, spectral, gamma_mean)
    st = warm.copy() if warm is not None else init_column_state(y_n, o_n)
    st = gamp_iterate(st, problem, 1, config.damping)
    phi_report = st.phi_x.copy()
    if config.inner_gamp_iters > 1:
        st = gamp_iterate(st, problem, config.inner_gamp_iters - 1, config.damping)
    return st.mu_x.copy(), phi_report, st
