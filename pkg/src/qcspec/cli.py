"""Command-line interface.

Subcommands mirror the workflow: build crossing series from a series file
(qcser), estimate a spectrum surface (spec lw|ar|ars|sar), simulate the
benchmark processes (simulate), compute truth surfaces (truth), score an
estimate against a truth grid (eval), and rasterize a grid to a PNG (plot).

Exit codes: 0 success, 2 input/usage error, 3 estimation error,
4 consistency error between grids.
"""

import argparse
import sys

import numpy as np

from . import evaluate, gridio, heatmap, simulate
from .series import qacf, qcser
from .spectrum import spec_ar, spec_ars, spec_lw, spec_sar
from .spline import SplineBasis

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_ESTIMATION = 3
EXIT_CONSISTENCY = 4


def parse_alphas(text):
    """Parse a level grid: 'start:stop:step', a comma list, or one value."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("range syntax is start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError("need stop >= start and step > 0")
        count = int(round((stop - start) / step)) + 1
        return np.linspace(start, stop, count)
    return np.array([float(p) for p in text.split(",")])


def _fail(message, code):
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_series(path):
    return gridio.read_series(path)


def cmd_qcser(args):
    try:
        y = _load_series(args.input)
        qcs = qcser(y, args.alphas)
    except (OSError, ValueError) as exc:
        return _fail(exc, EXIT_INPUT)
    gridio.write_qcs(args.output, qcs)
    return EXIT_OK


def cmd_spec(args):
    try:
        y = _load_series(args.input)
    except (OSError, ValueError) as exc:
        return _fail(exc, EXIT_INPUT)
    basis = None
    if args.knots is not None:
        basis = SplineBasis.with_dimension(args.alphas[0], args.alphas[-1], args.knots)
    try:
        qcs = qcser(y, args.alphas)
        if args.estimator == "lw":
            grid = spec_lw(qacf(qcs, args.M), args.M, normalized=args.normalized)
        elif args.estimator == "ar":
            grid = spec_ar(qcs, p=args.p, pmax=args.pmax, normalized=args.normalized)
        elif args.estimator == "ars":
            grid = spec_ars(
                qcs, p=args.p, pmax=args.pmax, basis=basis, normalized=args.normalized
            )
        else:
            grid = spec_sar(
                qcs,
                p=args.p,
                lam=getattr(args, "lambda"),
                pmax=args.pmax,
                basis=basis,
                normalized=args.normalized,
            )
    except (ValueError, np.linalg.LinAlgError) as exc:
        return _fail(exc, EXIT_ESTIMATION)
    gridio.write_grid(args.output, grid, meta={"n": qcs.n})
    return EXIT_OK


def cmd_simulate(args):
    try:
        spec = simulate.SimSpec(args.case, args.n, args.seed, args.burn_in)
    except ValueError as exc:
        return _fail(exc, EXIT_INPUT)
    gridio.write_series(args.output, simulate.generate(spec))
    return EXIT_OK


def cmd_truth(args):
    try:
        if args.case == 1 and not args.mc:
            grid = simulate.truth_gaussian(simulate.CASE1_COEFFS, args.alphas, n=args.n)
        else:
            grid = simulate.truth_mc(
                simulate.SimSpec(args.case, max(args.n, 64), args.seed),
                args.alphas,
                maxlag=args.maxlag,
                n=args.n,
                n_long=args.nlong,
                reps=args.reps,
            )
    except ValueError as exc:
        return _fail(exc, EXIT_ESTIMATION)
    gridio.write_grid(args.output, grid, meta={"case": args.case, "n": args.n})
    return EXIT_OK


def cmd_eval(args):
    try:
        est = gridio.read_grid(args.estimate)
        truth = gridio.read_grid(args.truth)
    except (OSError, ValueError) as exc:
        return _fail(exc, EXIT_INPUT)
    try:
        floored_est, count = evaluate.floor_spectrum(est)
        kld_val = evaluate.kld(floored_est, truth)
        rmse_val = evaluate.rmse(est, truth)
    except ValueError as exc:
        return _fail(exc, EXIT_CONSISTENCY)
    if count:
        print(f"floored {count} nonpositive cells for KLD")
    print(f"KLD {kld_val:.10g}")
    print(f"RMSE {rmse_val:.10g}")
    return EXIT_OK


def cmd_plot(args):
    try:
        grid = gridio.read_grid(args.grid)
    except (OSError, ValueError) as exc:
        return _fail(exc, EXIT_INPUT)
    width, height = heatmap.save_heatmap(args.output, grid, scale=args.scale)
    print(f"wrote {args.output} ({width}x{height})")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qcspec",
        description="Quantile-crossing spectrum estimation for stationary time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    default_alphas = evaluate.DEFAULT_ALPHAS

    p = sub.add_parser("qcser", help="build a quantile-crossing matrix from a series file")
    p.add_argument("input", help="series file, one value per line ('#' comments)")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--alphas", type=parse_alphas, default=default_alphas,
                   metavar="SPEC", help="levels: start:stop:step or comma list (default 0.05:0.95:0.01)")
    p.set_defaults(func=cmd_qcser)

    p = sub.add_parser("spec", help="estimate a spectrum surface from a series file")
    p.add_argument("estimator", choices=["lw", "ar", "ars", "sar"])
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--alphas", type=parse_alphas, default=default_alphas, metavar="SPEC")
    p.add_argument("--p", type=int, default=None, help="AR order (default: average-AIC)")
    p.add_argument("--pmax", type=int, default=20, help="maximum order for AIC search")
    p.add_argument("--M", type=int, default=None, help="lag-window bandwidth (lw only)")
    p.add_argument("--lambda", type=float, default=None, dest="lambda",
                   help="smoothing parameter (sar; default: GCV)")
    p.add_argument("--knots", type=int, default=None,
                   help="spline basis dimension K (default 14)")
    p.add_argument("--normalized", action="store_true",
                   help="divide by alpha*(1-alpha)")
    p.set_defaults(func=cmd_spec)

    p = sub.add_parser("simulate", help="simulate a benchmark process")
    p.add_argument("--case", type=int, required=True, choices=[1, 2, 3])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("truth", help="compute a truth surface for a benchmark case")
    p.add_argument("--case", type=int, required=True, choices=[1, 2, 3])
    p.add_argument("--n", type=int, required=True, help="target series length (sets the Fourier grid)")
    p.add_argument("--seed", type=int, default=20260810)
    p.add_argument("--alphas", type=parse_alphas, default=default_alphas, metavar="SPEC")
    p.add_argument("--mc", action="store_true", help="Monte Carlo oracle even for case 1")
    p.add_argument("--reps", type=int, default=8)
    p.add_argument("--nlong", type=int, default=2**17)
    p.add_argument("--maxlag", type=int, default=512)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("eval", help="score an estimate grid against a truth grid")
    p.add_argument("estimate")
    p.add_argument("truth")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="rasterize a grid file to a PNG heatmap")
    p.add_argument("grid")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--scale", type=int, default=4, help="pixels per grid cell")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "spec" and args.estimator == "lw" and args.M is None:
        parser.error("spec lw requires --M")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
