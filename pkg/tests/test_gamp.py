"""Per-column message passing: scalar functions, sweeps, and the dense oracle."""

import numpy as np
import pytest

from gwmc.errors import ValidationError
from gwmc.gamp import (
    approximate_qx_column,
    g_in,
    g_out,
    gamp_iterate,
    init_column_state,
    make_problem,
    spectral_decompose,
)
from gwmc.vb_exact import SolverConfig

from conftest import random_spd, random_spd_uniform


def dense_posterior(sigma, xi, pi, kappa):
    """Closed-form surrogate posterior (test oracle, independent of the solver)."""
    q = np.linalg.inv(sigma + xi * np.diag(pi))
    mu = xi * (q @ (pi * kappa))
    return mu, np.diag(q).copy()


def iterate_to_mean_convergence(st, problem, tol=1e-12, max_sweeps=5000, block=25):
    for _ in range(0, max_sweeps, block):
        nxt = gamp_iterate(st, problem, block, 1.0)
        if np.max(np.abs(nxt.mu_x - st.mu_x)) < tol:
            return nxt
        st = nxt
    return st


class TestSpectralDecompose:
    def test_identity(self):
        sp = spectral_decompose(np.eye(4))
        np.testing.assert_allclose(sp.s, np.ones(4))
        np.testing.assert_allclose((sp.u * sp.s) @ sp.u.T, np.eye(4), atol=1e-12)

    def test_diagonal_sorted_ascending(self):
        sp = spectral_decompose(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(sp.s, [1.0, 4.0])
        np.testing.assert_allclose((sp.u * sp.s) @ sp.u.T, np.diag([4.0, 1.0]), atol=1e-12)

    def test_random_reconstruction_and_orthogonality(self, rng):
        a = random_spd(rng, 16)
        sp = spectral_decompose(a)
        np.testing.assert_allclose((sp.u * sp.s) @ sp.u.T, a, atol=1e-10)
        assert np.linalg.norm(sp.u.T @ sp.u - np.eye(16)) < 1e-10
        np.testing.assert_allclose(sp.u_squared, (sp.u.T) ** 2)

    def test_floor_applied(self):
        sp = spectral_decompose(np.diag([0.0, 2.0]), eig_floor=1e-12)
        assert sp.s[0] == 1e-12

    def test_asymmetric_rejected(self, rng):
        a = rng.standard_normal((5, 5))
        with pytest.raises(ValidationError):
            spectral_decompose(a)


class TestScalarFunctions:
    def test_g_in_unobserved_passthrough(self):
        mu, phi = g_in(3.7, 0.2, 0, 9.9, 1.0)
        assert mu == 3.7 and phi == 0.2

    def test_g_in_observed_direct_evaluation(self):
        mu, phi = g_in(1.0, 1.0, 1, 2.0, 1.0)
        assert np.isclose(phi, 0.5)
        assert np.isclose(mu, 1.5)

    def test_g_in_flat_prior_limit(self):
        mu, phi = g_in(0.8, 0.3, 1, 5.0, 1e-14)
        assert np.isclose(mu, 0.8, atol=1e-12)
        assert np.isclose(phi, 0.3, atol=1e-12)

    def test_g_out_zero_residual(self):
        psi, _ = g_out(1.25, 0.4, 1.25, 2.0)
        assert psi == 0.0

    def test_g_out_direct_evaluation(self):
        psi, tau_s = g_out(0.0, 0.5, 1.0, 2.0)
        assert np.isclose(psi, 1.0)
        assert np.isclose(tau_s, 1.0)

    def test_g_out_no_onsager_smoothing(self):
        psi, tau_s = g_out(0.25, 0.0, 1.0, 3.0)
        assert np.isclose(psi, 3.0 * 0.75)
        assert np.isclose(tau_s, 3.0)


class TestGampIterate:
    def test_fully_observed_identity_fixed_point(self, rng):
        m = 6
        y = rng.standard_normal(m)
        o = np.ones(m)
        sp = spectral_decompose(np.eye(m))
        problem = make_problem(y, o, sp, 1.0)
        st = iterate_to_mean_convergence(init_column_state(y, o), problem)
        np.testing.assert_allclose(st.mu_x, 0.5 * y, atol=1e-9)

    def test_all_unobserved_stays_at_prior_mean(self, rng):
        m = 5
        y = rng.standard_normal(m)
        o = np.zeros(m)
        sp = spectral_decompose(random_spd(rng, m))
        problem = make_problem(y, o, sp, 1.0)
        st = gamp_iterate(init_column_state(y, o), problem, 20, 1.0)
        np.testing.assert_allclose(st.mu_x, np.zeros(m), atol=1e-12)

    def test_converged_means_match_dense_oracle(self, rng):
        m = 16
        sigma = random_spd(rng, m)
        sp = spectral_decompose(sigma)
        xi = 1.3
        y = rng.standard_normal(m)
        o = (rng.random(m) < 0.5).astype(float)
        problem = make_problem(y, o, sp, xi)
        st = iterate_to_mean_convergence(init_column_state(y, o), problem)
        mu_star, _ = dense_posterior(sigma, xi, o, y)
        assert np.max(np.abs(st.mu_x - mu_star)) < 1e-4

    def test_variance_positivity_through_sweeps(self, rng):
        for _ in range(1000):
            m = int(rng.integers(2, 65))
            sigma = random_spd(rng, m)
            sp = spectral_decompose(sigma)
            y = rng.standard_normal(m)
            o = (rng.random(m) < rng.uniform(0.2, 1.0)).astype(float)
            st = gamp_iterate(
                init_column_state(y, o), make_problem(y, o, sp, np.exp(rng.normal())), 3, 1.0
            )
            assert np.all(st.phi_x > 0)
            assert np.all(st.tau_r > 0)
            assert np.all(st.tau_p > 0)
            assert np.all(st.tau_s > 0)

    def test_orthogonality_identity_gives_uniform_tau_r(self, rng):
        m = 12
        sp = spectral_decompose(random_spd(rng, m))
        # column sums of squared eigenvector entries are exactly one
        np.testing.assert_allclose(sp.u_squared.sum(axis=0), np.ones(m), atol=1e-12)
        const = 3.7
        tau_r = 1.0 / (sp.u_squared.T @ np.full(m, const))
        np.testing.assert_allclose(tau_r, np.full(m, 1.0 / const), rtol=1e-12)

    def test_n_iters_must_be_positive(self, rng):
        sp = spectral_decompose(np.eye(3))
        y = rng.standard_normal(3)
        problem = make_problem(y, np.ones(3), sp, 1.0)
        with pytest.raises(ValidationError):
            gamp_iterate(init_column_state(y, np.ones(3)), problem, 0, 1.0)


class TestApproximateQxColumn:
    def test_warm_fixed_point_left_unchanged(self, rng):
        m = 8
        sigma = random_spd(rng, m)
        sp = spectral_decompose(sigma)
        y = rng.standard_normal(m)
        o = (rng.random(m) < 0.7).astype(float)
        o[0] = 1.0
        problem = make_problem(y, o, sp, 1.1)
        st = init_column_state(y, o)
        for _ in range(200):
            nxt = gamp_iterate(st, problem, 25, 1.0)
            moved = max(
                np.max(np.abs(nxt.mu_x - st.mu_x)), np.max(np.abs(nxt.phi_x - st.phi_x))
            )
            st = nxt
            if moved < 1e-15:
                break
        cfg = SolverConfig(inner_gamp_iters=4)
        mu, phi, _ = approximate_qx_column(y, o, sp, 1.1, warm=st, config=cfg)
        np.testing.assert_allclose(mu, st.mu_x, atol=1e-12)
        np.testing.assert_allclose(phi, st.phi_x, atol=1e-12)

    def test_cold_variances_close_to_dense_marginals(self, rng):
        # the one-sweep variance report against the closed-form diagonal,
        # on moderately conditioned SPD draws (eigenvalues in [0.6, 1.6])
        worst = 0.0
        for _ in range(20):
            m = 16
            sigma = random_spd_uniform(rng, m)
            sp = spectral_decompose(sigma)
            xi = 1.0
            y = rng.standard_normal(m)
            o = (rng.random(m) < 0.5).astype(float)
            o[0] = 1.0
            _, phi, _ = approximate_qx_column(
                y, o, sp, xi, config=SolverConfig(inner_gamp_iters=1)
            )
            _, var_star = dense_posterior(sigma, xi, o, y)
            worst = max(worst, float(np.max(np.abs(phi - var_star) / var_star)))
        assert worst < 0.25

    def test_mask_invariance(self, rng):
        m = 10
        sp = spectral_decompose(random_spd(rng, m))
        y = rng.standard_normal(m)
        o = (rng.random(m) < 0.5).astype(float)
        o[:2] = [1.0, 0.0]
        cfg = SolverConfig(inner_gamp_iters=6)
        mu1, phi1, _ = approximate_qx_column(y, o, sp, 2.0, config=cfg)
        y2 = y.copy()
        y2[o == 0] = -333.0
        mu2, phi2, _ = approximate_qx_column(y2, o, sp, 2.0, config=cfg)
        np.testing.assert_array_equal(mu1, mu2)
        np.testing.assert_array_equal(phi1, phi2)
