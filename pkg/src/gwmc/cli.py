"""Command-line front end: run completions on files, sweep synthetic
benchmarks, and report rating-prediction error.

Exit codes: 0 success, 1 input/validation failure, 2 numerical failure.
Reports are JSON with a stable schema (`schema_version`); wall-clock
timings are only written with --timings so that default reports are
byte-identical across reruns at a fixed seed.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data, metrics
from .backend import backend_name
from .errors import NumericalError, ValidationError
from .model import GraphLaplacian, HyperParams, ScaledIdentity, SecondOrderDifference
from .vb_exact import SolverConfig, solve_exact
from .vb_gamp import effective_rank, solve_gamp

SCHEMA_VERSION = 1


def _add_solver_flags(p):
    p.add_argument("--solver", default="gamp", help="exact | gamp (synth-bench: comma list)")
    p.add_argument("--w", default="identity", choices=["identity", "difference", "laplacian"],
                   help="scale-matrix variant")
    p.add_argument("--w-scale", type=float, default=1e10, help="scale for --w identity")
    p.add_argument("--theta", type=float, default=np.sqrt(3.0), help="kernel width for --w laplacian")
    p.add_argument("--eps-hat", type=float, default=1e-6, help="diagonal shift for --w laplacian")
    p.add_argument("--nu", type=float, default=1.0, help="Wishart degrees of freedom")
    p.add_argument("--gamma-a", type=float, default=1e-10, help="Gamma shape hyperparameter")
    p.add_argument("--gamma-b", type=float, default=1e-10, help="Gamma rate hyperparameter")
    p.add_argument("--rel-tol", type=float, default=1e-5, help="outer convergence tolerance")
    p.add_argument("--max-iters", type=int, default=200, help="outer iteration cap")
    p.add_argument("--inner-iters", type=int, default=10, help="message-passing sweeps per column")
    p.add_argument("--damping", type=float, default=1.0, help="message damping in (0,1]")
    p.add_argument("--gamma-cap", type=float, default=1e12, help="noise precision cap")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--threads", type=int, default=1, help="column-level worker threads")
    p.add_argument("--timings", action="store_true",
                   help="include wall-clock fields in reports (breaks byte reproducibility)")


def _hyper(args):
    if args.w == "identity":
        spec = ScaledIdentity(scale=args.w_scale)
    elif args.w == "difference":
        spec = SecondOrderDifference()
    else:
        spec = GraphLaplacian(theta=args.theta, eps_hat=args.eps_hat)
    return HyperParams(a=args.gamma_a, b=args.gamma_b, nu=args.nu, w_spec=spec)


def _config(args):
    return SolverConfig(
        max_outer_iters=args.max_iters,
        rel_tol=args.rel_tol,
        gamma_cap=args.gamma_cap,
        inner_gamp_iters=args.inner_iters,
        damping=args.damping,
        parallel_columns=args.threads > 1,
        n_threads=args.threads,
        seed=args.seed,
    )


def _solve(observed, args, solver_name):
    solver = {"exact": solve_exact, "gamp": solve_gamp}.get(solver_name)
    if solver is None:
        raise ValidationError(f"unknown solver {solver_name!r}")
    return solver(observed, _hyper(args), _config(args))


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _state_report(state, args):
    report = {
        "schema_version": SCHEMA_VERSION,
        "backend_kernels": backend_name(),
        "solver": state.backend,
        "rows": state.reconstruction.shape[0],
        "cols": state.reconstruction.shape[1],
        "iterations": state.n_iters,
        "converged": state.converged,
        "noise_precision_mean": state.gamma_mean,
        "effective_rank": effective_rank(state),
        "seed": args.seed,
        "w": args.w,
    }
    if args.timings:
        report["iter_seconds"] = state.iter_seconds
    return report


def cmd_complete(args):
    path = Path(args.input)
    is_image = path.suffix.lower() in (".pgm", ".pnm")
    observed = data.load_gray_image(path) if is_image else data.load_masked_csv(path)
    if args.keep_fraction is not None:
        if not is_image:
            raise ValidationError("--keep-fraction applies to graymap inputs only")
        observed = data.mask_pixels(observed, args.keep_fraction, args.seed)
    state = _solve(observed, args, args.solver)
    x_hat = state.reconstruction

    if args.out:
        if is_image:
            data.save_gray_image(args.out, x_hat)
        else:
            data.save_masked_csv(
                args.out, data.ObservedMatrix(x_hat, np.ones(x_hat.shape, dtype=bool))
            )

    report = _state_report(state, args)
    report["command"] = "complete"
    report["input"] = str(args.input)
    report["observed_count"] = observed.observed_count
    if args.truth:
        truth = data.load_gray_image(args.truth) if is_image else data.load_masked_csv(args.truth)
        t = truth.values
        report["metrics"] = {
            "relative_error": metrics.relative_error(t, x_hat),
            "success": bool(metrics.success(t, x_hat)),
        }
        if is_image:
            p = metrics.psnr(t, x_hat)
            report["metrics"]["psnr_db"] = "inf" if np.isinf(p) else p
            report["metrics"]["ssim"] = metrics.ssim(t, x_hat)
    if args.report:
        _write_json(args.report, report)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_synth_bench(args):
    ranks = [int(tok) for tok in args.ranks.split(",") if tok]
    rhos = [float(tok) for tok in args.rhos.split(",") if tok]
    solvers = [tok.strip() for tok in args.solver.split(",") if tok.strip()]
    if args.trials < 1:
        raise ValidationError("--trials must be >= 1")
    header = ["solver", "m", "n", "rank", "rho", "trials", "noise_std",
              "successes", "success_rate", "mean_rel_error", "mean_iters"]
    if args.timings:
        header.append("mean_iter_seconds")
    lines = [",".join(header)]
    counter = 0
    for solver_name in solvers:
        for rho in rhos:
            for k in ranks:
                errs, iters, med_secs, succ = [], [], [], 0
                for trial in range(args.trials):
                    inst = data.generate_synthetic(
                        args.m, args.n, k, rho, noise_std=args.noise,
                        seed=args.seed + 7919 * counter,
                    )
                    counter += 1
                    state = _solve(inst.observed, args, solver_name)
                    err = metrics.relative_error(inst.x_true, state.reconstruction)
                    errs.append(err)
                    iters.append(state.n_iters)
                    med_secs.append(float(np.median(state.iter_seconds)))
                    succ += int(err < metrics.SUCCESS_THRESHOLD)
                row = [solver_name, str(args.m), str(args.n), str(k), repr(rho),
                       str(args.trials), repr(args.noise), str(succ),
                       repr(succ / args.trials), repr(float(np.mean(errs))),
                       repr(float(np.mean(iters)))]
                if args.timings:
                    row.append(repr(float(np.mean(med_secs))))
                lines.append(",".join(row))
    table = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 0


def cmd_rate_predict(args):
    observed = data.load_ratings(args.ratings, args.r_min, args.r_max)
    train, test = data.holdout_split(observed, args.train_fraction, args.seed)
    if test.observed_count == 0:
        raise ValidationError("empty holdout: lower --train-fraction")
    if train.observed_count == 0:
        raise ValidationError("empty training set: raise --train-fraction")
    state = _solve(train, args, args.solver)
    x_hat = state.reconstruction
    global_mean = float(train.values[train.mask].mean())
    report = _state_report(state, args)
    report["command"] = "rate-predict"
    report["ratings"] = str(args.ratings)
    report["train_fraction"] = args.train_fraction
    report["train_count"] = train.observed_count
    report["test_count"] = test.observed_count
    report["nmae"] = metrics.nmae(test.values, x_hat, test.mask, args.r_min, args.r_max)
    report["nmae_global_mean"] = metrics.nmae(
        test.values, np.full(x_hat.shape, global_mean), test.mask, args.r_min, args.r_max
    )
    if args.report:
        _write_json(args.report, report)
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gwmc", description="Bayesian low-rank matrix completion"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete", help="complete a masked CSV matrix or graymap image")
    p.add_argument("--input", required=True, help="masked-CSV or binary P5 graymap path")
    p.add_argument("--out", help="completed matrix output (same format as input)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--truth", help="ground truth (same format as input) for metrics")
    p.add_argument("--keep-fraction", type=float, default=None,
                   help="randomly keep this fraction of pixels (graymap input)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("synth-bench", help="success-rate grid over (rank, sampling ratio)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--ranks", required=True, help="comma list of ranks")
    p.add_argument("--rhos", required=True, help="comma list of sampling ratios")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.0, help="observation noise std")
    p.add_argument("--out", help="CSV output path (stdout when omitted)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_synth_bench)

    p = sub.add_parser("rate-predict", help="hold out ratings and report NMAE")
    p.add_argument("--ratings", required=True, help="user,item,rating CSV path")
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--r-min", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=5.0)
    p.add_argument("--report", help="JSON report path (stdout when omitted)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_rate_predict)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
