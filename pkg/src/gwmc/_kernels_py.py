"""Pure-NumPy implementations of the two hot per-column kernels.

These are the fallback twins of the compiled extension in ``_kernels.pyx``;
``backend`` picks whichever is available.  Both kernels treat columns as
independent problems sharing (Sigma, gamma) respectively (U, s, xi).
"""

import numpy as np

from .errors import NumericalError

BACKEND_NAME = "python"


def exact_qx_sweep(values, mask, sigma_mean, gamma_mean):
    """One exact q_x sweep over all columns.

    Per column n: Q_n = (Sigma + gamma*diag(o_n))^-1 via LU inversion,
    mu_n = gamma * Q_n (o_n * y_n).  Returns the posterior means (M, N),
    the per-column marginal variances diag(Q_n) as an (M, N) matrix, and
    the accumulated sum of the Q_n (M, M).
    """
    m, n_cols = values.shape
    x_mean = np.empty((m, n_cols))
    q_diag = np.empty((m, n_cols))
    q_sum = np.zeros((m, m))
    idx = np.arange(m)
    oy = np.where(mask, values, 0.0)
    for n in range(n_cols):
        a = sigma_mean.copy()
        a[idx, idx] += gamma_mean * mask[:, n]
        try:
            q = np.linalg.inv(a)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular q_x system at column {n}") from exc
        x_mean[:, n] = gamma_mean * (q @ oy[:, n])
        q_diag[:, n] = q[idx, idx]
        q_sum += q
    return x_mean, q_diag, q_sum


def gamp_qx_sweeps(values, mask, u, s, u_sq, xi, mu0, n_sweeps, damping=1.0, phi_init=1e-5):
    """Run n_sweeps message-passing sweeps on every column at once.

    State per column: posterior mean mu, marginal variance phi, output
    messages psi; psi starts at 0 and phi at phi_init.  Returns the final
    means, the variances after the first sweep (the one-iteration estimate
    the outer solver consumes), the final variances, and the final psi.
    """
    m, n_cols = values.shape
    obs = mask.astype(bool)
    mu = mu0.copy()
    phi = np.full((m, n_cols), phi_init)
    psi = np.zeros((m, n_cols))
    phi_first = None
    s_col = s[:, None]
    for sweep in range(n_sweeps):
        z_hat = u.T @ mu
        tau_p = u_sq @ phi
        p_hat = z_hat - tau_p * psi
        den = 1.0 + s_col * tau_p
        psi_new = -s_col * p_hat / den
        tau_s = s_col / den
        psi = damping * psi_new + (1.0 - damping) * psi
        tau_r = 1.0 / (u_sq.T @ tau_s)
        r_hat = mu + tau_r * (u @ psi)
        phi_obs = tau_r / (1.0 + xi * tau_r)
        mu_new = np.where(obs, phi_obs * (xi * values + r_hat / tau_r), r_hat)
        phi_new = np.where(obs, phi_obs, tau_r)
        mu = damping * mu_new + (1.0 - damping) * mu
        phi = damping * phi_new + (1.0 - damping) * phi
        if sweep == 0:
            phi_first = phi.copy()
        if not np.all(np.isfinite(mu)):
            bad = np.argwhere(~np.isfinite(mu))[0]
            raise NumericalError(
                f"non-finite message at sweep {sweep}, coordinate ({bad[0]},{bad[1]})"
            )
    return mu, phi_first, phi, psi
