"""Shared fixtures and the acceptance-criteria summary hook."""

import os

# single-threaded BLAS for deterministic numerics and meaningful timings;
# must happen before numpy loads
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

_ACCEPTANCE = []


def record_acceptance(num, desc, passed):
    """Register one acceptance-criterion outcome for the end-of-run summary."""
    _ACCEPTANCE.append((num, desc, bool(passed)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, desc, ok in sorted(_ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {status} - {desc}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_spd(rng, m, cond_boost=1.0):
    """Well-conditioned random SPD matrix with order-1 entries."""
    a = rng.standard_normal((m, m))
    return a @ a.T / m + cond_boost * np.eye(m)


def random_spd_uniform(rng, m, lo=0.6, hi=1.6):
    """SPD matrix with eigenvalues uniform in [lo, hi] and Haar eigenvectors."""
    lam = rng.uniform(lo, hi, m)
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)
