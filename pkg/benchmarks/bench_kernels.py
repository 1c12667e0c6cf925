"""Compare the compiled kernels against the pure-NumPy twins.

Run from the repository root after an editable install:

    OPENBLAS_NUM_THREADS=1 python benchmarks/bench_kernels.py

Sizes are (rows, columns) of the observed matrix; each cell reports the
best-of-repeats wall time of one full sweep and the compiled speedup.
"""

import argparse
import time

import numpy as np

from gwmc import _kernels_py
from gwmc.gamp import spectral_decompose

try:
    from gwmc import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _best(f, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50x100,100x200,200x200,400x200")
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--sweeps", type=int, default=10, help="message-passing sweeps per call")
    args = parser.parse_args()

    if _kernels_c is None:
        print("compiled kernels unavailable; only the NumPy twin will run")
    rng = np.random.default_rng(0)
    header = f"{'size':>10} {'kernel':>8} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for token in args.sizes.split(","):
        m, n = (int(v) for v in token.split("x"))
        values = rng.standard_normal((m, n))
        mask = (rng.random((m, n)) < 0.5).astype(float)
        mask[0, :] = 1.0
        a = rng.standard_normal((m, m))
        sigma = a @ a.T / m + np.eye(m)
        spectral = spectral_decompose(sigma)
        mu0 = np.where(mask > 0, values, 0.0)

        cases = {
            "exact": lambda mod: mod.exact_qx_sweep(values, mask, sigma, 2.0),
            "gamp": lambda mod: mod.gamp_qx_sweeps(
                values, mask, spectral.u, spectral.s, spectral.u_squared,
                2.0, mu0, args.sweeps, 1.0,
            ),
        }
        for name, call in cases.items():
            t_py = _best(lambda: call(_kernels_py), args.repeats)
            if _kernels_c is not None:
                t_c = _best(lambda: call(_kernels_c), args.repeats)
                print(f"{token:>10} {name:>8} {t_py * 1e3:9.2f}ms {t_c * 1e3:9.2f}ms "
                      f"{t_py / t_c:7.2f}x")
            else:
                print(f"{token:>10} {name:>8} {t_py * 1e3:9.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
