"""Command line entry point: ``adapted-empirical <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import Dims, format_float, read_sample_csv, write_sample_csv
from .experiments import (
    NODE_PAIR_BUDGET,
    deviation_experiment,
    gap_demo,
    plot_rate_svg,
    rate_experiment,
    write_rate_csv,
    write_tail_csv,
    write_trials_csv,
)
from .grid import GridSpec, project_paths
from .measure import dump_tree, empirical, adapted_empirical, load_tree, read_measure_csv
from .models import ModelKind, ModelSpec, ground_truth_tree, sample
from .nested import BudgetExceeded, aw_nested, bicausal_lp_oracle, DEFAULT_ORACLE_CAP
from .ot import wp_discrete

EXIT_BUDGET = 3


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="gaussian_walk", choices=[k.value for k in ModelKind])
    p.add_argument("--d", type=int, default=1, help="state dimension")
    p.add_argument("--T", type=int, default=2, help="number of time steps")
    p.add_argument("--dt", type=float, default=0.01, help="time step (black_scholes, sde)")
    p.add_argument("--preset", default="linear", help="drift/vol preset for sde")
    p.add_argument("--ar", type=float, default=0.5, help="AR(1) coefficient")
    p.add_argument("--radius", type=float, default=1.0, help="uniform_cube half-width")
    p.add_argument("--x0", type=float, default=1.0, help="sde starting value")
    p.add_argument("--tree", default=None, help="custom_tree preset name or tree-dump path")


def _model_from_args(args) -> ModelSpec:
    dims = Dims(args.d, args.T)
    if args.model == ModelKind.CUSTOM_TREE.value:
        tree = ground_truth_tree(args.tree)
        dims = tree.dims
    return ModelSpec(
        args.model, dims, dt=args.dt, preset=args.preset, ar=args.ar, radius=args.radius, x0=args.x0, tree=args.tree
    )


def _add_experiment_args(p: argparse.ArgumentParser, default_n: str) -> None:
    _add_model_args(p)
    p.add_argument("--grid", default="uniform", choices=["uniform", "nonuniform", "none"])
    p.add_argument("--n-list", default=default_n, help="comma separated sample sizes")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", default="proxy:131072", help="'truth' or 'proxy:M'")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-pairs", type=int, default=NODE_PAIR_BUDGET)


def _n_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_sample(args) -> int:
    s = sample(_model_from_args(args), args.n, args.seed)
    if args.out in (None, "-"):
        write_sample_csv(s, sys.stdout)
    else:
        write_sample_csv(s, args.out)
    return 0


def _grid_for(args, dims: Dims, n: int) -> GridSpec:
    N = args.n_override if args.n_override is not None else n
    return GridSpec.tuned(args.grid, dims, N)


def cmd_project(args) -> int:
    s = read_sample_csv(args.input)
    spec = _grid_for(args, s.dims, s.n)
    rings, z, mid, time_rings = project_paths(spec, s.paths)
    out = Path(args.out)
    write_sample_csv(mid, out)
    cells = Path(args.cells) if args.cells else out.with_name(out.stem + ".cells.csv")
    T, d = s.dims.T, s.dims.d
    header = ["ring"] + [f"ring_t{t}" for t in range(T)] + [f"z_t{t}_c{c}" for t in range(T) for c in range(d)]
    lines = [",".join(header)]
    for j, tr, zz in zip(rings, time_rings, z):
        lines.append(",".join(str(int(v)) for v in [j, *tr, *zz]))
    cells.write_text("\n".join(lines) + "\n")
    return 0


def cmd_tree(args) -> int:
    s = read_sample_csv(args.input)
    if args.grid == "none":
        tree = empirical(s)
    else:
        tree = adapted_empirical(s, _grid_for(args, s.dims, s.n))
    text = dump_tree(tree)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def cmd_w1(args) -> int:
    mu, nu = read_measure_csv(args.mu), read_measure_csv(args.nu)
    value, plan = wp_discrete(mu, nu, args.p)
    print(f"W_{args.p:g} = {format_float(value)}{'' if plan.exact else '  (float supplies)'}")
    if args.plan:
        lines = ["i,j,mass"] + [f"{i},{j},{format_float(m)}" for i, j, m in zip(plan.rows, plan.cols, plan.mass)]
        text = "\n".join(lines) + "\n"
        if args.plan == "-":
            sys.stdout.write(text)
        else:
            Path(args.plan).write_text(text)
    return 0


def cmd_aw(args) -> int:
    mu = load_tree(Path(args.mu).read_text())
    nu = load_tree(Path(args.nu).read_text())
    try:
        value, _ = aw_nested(mu, nu, args.p, max_pairs=args.max_pairs)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"AW = {format_float(value)}")
    if args.oracle:
        try:
            lp = bicausal_lp_oracle(mu, nu, args.p, max_pairs=args.oracle_cap)
        except BudgetExceeded as exc:
            print(f"oracle skipped: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        print(f"LP oracle = {format_float(lp)}")
        print(f"discrepancy = {format_float(abs(value - lp))}")
    return 0


def cmd_rate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rep = rate_experiment(
            _model_from_args(args), args.grid, _n_list(args.n_list), args.trials, args.seed,
            args.reference, workers=args.workers, max_pairs=args.max_pairs,
        )
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    write_rate_csv(rep, out / "rate.csv")
    write_trials_csv(rep, out / "trials.csv")
    if args.plot:
        plot_rate_svg(rep, out / "plot.svg")
    for r in rep.rows:
        print(f"N={r.N:>8d}  mean={r.mean:.6g}  std={r.std:.3g}  trials={r.trials}")
    print(f"slope={rep.slope:.4f} +- {rep.slope_stderr:.4f}  theoretical={rep.theoretical_slope:.4f}")
    print(f"audit: {rep.audited} checked, {rep.audit_skipped} skipped, {rep.audit_violations} violations")
    return 0


def cmd_deviate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    N = args.n if args.n is not None else _n_list(args.n_list)[0]
    try:
        rep = deviation_experiment(
            _model_from_args(args), args.grid, N, args.trials, None, args.seed,
            args.reference, workers=args.workers, max_pairs=args.max_pairs,
        )
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    write_tail_csv(rep, out / "tail.csv")
    write_trials_csv(rep, out / "trials.csv")
    print(f"N={rep.N} trials={rep.trials} mean={rep.mean:.6g} spearman(log tail, x^2)={rep.spearman:.4f}")
    for note in rep.notes:
        print(f"reference: {note}")
    return 0


def cmd_gap_demo(args) -> int:
    lines = ["epsilon,W,AW,gap"]
    for eps in args.epsilon:
        rep = gap_demo(eps)
        print(rep)
        lines.append(",".join(format_float(v) for v in (rep.epsilon, rep.w, rep.aw, rep.gap)))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "gap.csv").write_text("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adapted-empirical", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw paths from a model and write PathSample CSV")
    _add_model_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    for name, func, helptext in (
        ("project", cmd_project, "project a PathSample CSV onto grid midpoints"),
        ("tree", cmd_tree, "build the (adapted) empirical tree of a PathSample CSV as a tree dump"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        choices = ["uniform", "nonuniform"] + (["none"] if name == "tree" else [])
        p.add_argument("--grid", default="uniform", choices=choices)
        p.add_argument("--n-override", type=int, default=None, help="tune the grid to this N instead")
        p.add_argument("--out", required=name == "project", default=None if name == "project" else "-")
        if name == "project":
            p.add_argument("--cells", default=None, help="CellId sidecar CSV (default <out>.cells.csv)")
        p.set_defaults(func=func)

    p = sub.add_parser("w1", help="exact Wasserstein distance between two measure CSVs")
    p.add_argument("mu")
    p.add_argument("nu")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--plan", default=None, help="write the optimal plan as CSV ('-' for stdout)")
    p.set_defaults(func=cmd_w1)

    p = sub.add_parser("aw", help="adapted Wasserstein distance between two tree dumps")
    p.add_argument("mu")
    p.add_argument("nu")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--oracle", action="store_true", help="also solve the bicausal LP and report the discrepancy")
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--max-pairs", type=int, default=NODE_PAIR_BUDGET)
    p.set_defaults(func=cmd_aw)

    p = sub.add_parser("rate", help="convergence-rate experiment")
    _add_experiment_args(p, "64,256,1024,4096,16384")
    p.add_argument("--plot", action="store_true", help="also write plot.svg")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("deviate", help="concentration (tail) experiment at one N")
    _add_experiment_args(p, "256")
    p.add_argument("--n", type=int, default=None, help="sample size (overrides --n-list)")
    p.set_defaults(func=cmd_deviate, trials=500)

    p = sub.add_parser("gap-demo", help="W versus AW on the two-point example")
    _add_experiment_args(p, "")
    p.add_argument("--epsilon", type=float, nargs="+", default=[0.25])
    p.set_defaults(func=cmd_gap_demo, out=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
