"""Per-outer-iteration wall-time probes for the two solvers.

Used by the complexity acceptance check and the benchmarks/ scripts.  Run
as a module for a quick table:

    OPENBLAS_NUM_THREADS=1 python -m gwmc.bench --m-list 100,200,400 --n 200 --json
"""

import argparse
import json
import sys

import numpy as np

from .data import generate_synthetic
from .model import HyperParams
from .vb_exact import SolverConfig, solve_exact
from .vb_gamp import solve_gamp

_SOLVERS = {"exact": solve_exact, "gamp": solve_gamp}


def median_iter_seconds(solver_name, m, n, k=5, rho=0.5, iters=8, seed=0):
    """Median wall time of one outer iteration at the given problem size.

    The solver runs a fixed number of iterations (the convergence check is
    disabled by an unreachable tolerance) on one synthetic instance.
    """
    inst = generate_synthetic(m, n, k, rho, seed=seed)
    config = SolverConfig(max_outer_iters=iters, rel_tol=1e-300)
    state = _SOLVERS[solver_name](inst.observed, HyperParams(), config)
    return float(np.median(state.iter_seconds))


def run_grid(solvers, m_list, n, iters, seed, repeats=1):
    """Per (solver, M): best-of-`repeats` median per-iteration wall time.

    Repeats are interleaved across sizes so slow machine-load drift hits
    every cell roughly equally; the minimum of the medians is the
    least-contaminated estimate.
    """
    out = {name: {str(m): [] for m in m_list} for name in solvers}
    for rep in range(repeats):
        for name in solvers:
            for m in m_list:
                out[name][str(m)].append(
                    median_iter_seconds(name, m, n, iters=iters, seed=seed + rep)
                )
    return {
        name: {m: float(np.min(ts)) for m, ts in per_m.items()}
        for name, per_m in out.items()
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description="per-iteration timing probe")
    parser.add_argument("--solvers", default="exact,gamp")
    parser.add_argument("--m-list", default="100,200,400")
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--iters", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args(argv)
    solvers = [s for s in args.solvers.split(",") if s]
    m_list = [int(tok) for tok in args.m_list.split(",") if tok]
    grid = run_grid(solvers, m_list, args.n, args.iters, args.seed, args.repeats)
    if args.json:
        sys.stdout.write(json.dumps(grid, sort_keys=True) + "\n")
    else:
        for name, times in grid.items():
            row = "  ".join(f"M={m}: {t * 1e3:9.2f} ms" for m, t in times.items())
            sys.stdout.write(f"{name:>6}  {row}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
