"""Per-outer-iteration scaling of the two solvers (thin wrapper over gwmc.bench).

    OPENBLAS_NUM_THREADS=1 python benchmarks/bench_complexity.py
"""

import sys

from gwmc.bench import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:] or ["--m-list", "100,200,400", "--n", "200", "--repeats", "3"]))
