"""Command-line entry point: ``svdsfa {gen,train,apply,tables}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .driving import (
    EmbeddingSpec,
    LogisticConfig,
    TimeSeries,
    align,
    driving_force,
    embed,
    logistic_series,
)
from .experiments import (
    DEFAULT_EPSILONS,
    DEFAULT_M,
    DEFAULT_SIGMAS,
    ExperimentPlan,
    prepare,
    write_tables,
)
from .sfa import apply_model
from .spectra import DEFAULT_EPSILON, numerical_rank


class UsageError(Exception):
    """Invalid flags or inputs; maps to exit code 2."""


def _series_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=float, default=1.2)
    p.add_argument("--length", type=int, default=6000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--w0", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svdsfa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a driven logistic-map series as CSV")
    _series_args(gen)
    gen.add_argument("--noise", type=float, default=0.0, help="std of injected Gaussian noise")
    gen.add_argument("--out", help="output CSV (default: stdout)")

    tr = sub.add_parser("train", help="embed a series and train an SFA model")
    tr.add_argument("--input", required=True, help="series CSV (t,value)")
    tr.add_argument("--m", type=int, required=True)
    tr.add_argument("--tau", type=int, default=1)
    tr.add_argument("--method", choices=("gen", "svd"), default="svd")
    tr.add_argument("--eps", type=float, default=DEFAULT_EPSILON)
    tr.add_argument("--chunk-size", type=int, default=None)
    tr.add_argument("--out", required=True, help="model JSON")

    ap = sub.add_parser("apply", help="apply a model to a series")
    ap.add_argument("--model", required=True)
    ap.add_argument("--input", required=True)
    ap.add_argument("--tau", type=int, default=1)
    ap.add_argument("--k", type=int, default=1)
    ap.add_argument("--align", action="store_true", help="append the aligned driving force")
    ap.add_argument("--out", help="output CSV (default: stdout)")
    ap.add_argument("--plot-data", metavar="DIR",
                    help="also write y1.csv and gamma_aligned.csv traces into DIR")

    tb = sub.add_parser("tables", help="run the experiment sweep and write CSV tables")
    _series_args(tb)
    tb.add_argument("--tau", type=int, default=1)
    tb.add_argument("--m", type=int, action="append", help="embedding dimension (repeatable)")
    tb.add_argument("--noise", type=float, action="append", help="noise amplitude (repeatable)")
    tb.add_argument("--eps", type=float, action="append", help="cutoff for the epsilon study (repeatable)")
    tb.add_argument("--method", choices=("gen", "svd"), action="append")
    tb.add_argument("--rank-tol", default="eps", choices=("eps", "machine"),
                    help="rank(B) by the epsilon cutoff or by machine precision")
    tb.add_argument("--jobs", type=int, default=1)
    tb.add_argument("--out", default=".", help="output directory")
    return parser


def _config(args, noise: float) -> LogisticConfig:
    try:
        return LogisticConfig(args.q, args.length, args.w0, args.burn_in, noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen(args) -> int:
    config = _config(args, args.noise)
    series = logistic_series(config)
    echo = sys.stdout if args.out else sys.stderr
    print(f"q={config.q} length={config.length} burn_in={config.burn_in} w0={config.w0} "
          f"noise={config.noise_sigma} seed={config.seed}", file=echo)
    io.write_series_csv(args.out or sys.stdout, series.t, series.values)
    if args.out:
        print(f"wrote {args.out}")
    return 0


def _read_scalar_series(path):
    try:
        t, values, _ = io.read_series_csv(path)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    if values.shape[1] != 1:
        raise UsageError(f"{path}: expected a single value column")
    return t, values[:, 0]


def cmd_train(args) -> int:
    if args.m < 1 or args.tau < 1:
        raise UsageError("--m and --tau must be positive")
    if not 0 < args.eps < 1:
        raise UsageError("--eps must lie in (0, 1)")
    t, values = _read_scalar_series(args.input)
    prep = prepare(TimeSeries(values, t), args.m, args.tau, args.chunk_size)
    model = prep.train(args.method, args.eps)
    io.save_model(model, args.out)

    lam = ", ".join(f"{x:.6g}" for x in model.eigenvalues[:5])
    label = "N_G" if model.method == "GEN_EIG" else "P"
    print(f"method={model.method} m={args.m} tau={args.tau} eps={args.eps:g}")
    print(f"M={model.expanded_dim}")
    print(f"rank(B)={numerical_rank(prep.moments.b, args.eps)} (eps cutoff), "
          f"{numerical_rank(prep.moments.b, None)} (machine precision)")
    print(f"{label}={model.n_components}")
    print(f"lambda_1..5: {lam}")
    print(f"rank_deficient={model.rank_deficient} unstable={model.unstable} solver={model.solver}")
    print(f"wrote {args.out}")
    return 0


def cmd_apply(args) -> int:
    try:
        model = io.load_model(args.model)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from exc
    t, values = _read_scalar_series(args.input)
    m = model.preprocessor.input_dim
    emb = embed(TimeSeries(values, t), EmbeddingSpec(m, args.tau))
    if not 1 <= args.k <= model.n_components:
        raise UsageError(f"requested k={args.k} but only {model.n_components} components available")
    y = apply_model(model, emb.values, args.k)
    columns = [f"y{j + 1}" for j in range(args.k)]
    data = y
    fit = None
    if args.align or args.plot_data:
        fit = align(driving_force(emb.t), y[:, 0])
    if args.align:
        data = np.column_stack([y, fit.aligned])
        columns.append("gamma_aligned")
    io.write_series_csv(args.out or sys.stdout, emb.t, data, columns)
    if args.plot_data:
        out = Path(args.plot_data)
        out.mkdir(parents=True, exist_ok=True)
        io.write_series_csv(out / "y1.csv", emb.t, y[:, 0], ("y1",))
        io.write_series_csv(out / "gamma_aligned.csv", emb.t, fit.aligned, ("gamma_aligned",))
    if args.align:
        corr = float(np.corrcoef(driving_force(emb.t), y[:, 0])[0, 1])
        print(f"a={fit.a:.6g} b={fit.b:.6g} mse={fit.mse:.6g} correlation={corr:.6f}",
              file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_tables(args) -> int:
    methods = tuple(args.method) if args.method else ("gen", "svd")
    try:
        plan = ExperimentPlan(
            q=args.q, length=args.length, burn_in=args.burn_in, w0=args.w0, seed=args.seed,
            tau=args.tau,
            m_list=tuple(args.m) if args.m else DEFAULT_M,
            sigma_list=tuple(args.noise) if args.noise else DEFAULT_SIGMAS,
            epsilon_list=tuple(args.eps) if args.eps else DEFAULT_EPSILONS,
            methods=methods,
            output_dir=args.out,
            jobs=args.jobs,
            rank_epsilon=None if args.rank_tol == "machine" else DEFAULT_EPSILON,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for path in write_tables(plan):
        print(f"wrote {path}")
    return 0


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "apply": cmd_apply, "tables": cmd_tables}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"svdsfa {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"svdsfa {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
