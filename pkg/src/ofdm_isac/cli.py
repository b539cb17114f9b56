"""Command-line surface: scenario validation, bound evaluation, convergence
diagnostics, boundary sweeps, and the time-sharing comparison.

Every subcommand reads a JSON scenario, writes a CSV (stdout or --out) plus
a short human-readable summary, and optionally renders a PNG figure next to
the CSV. Runs are byte-reproducible for a fixed --seed.

Exit codes: 0 success, 1 usage error, 2 infeasible or invalid scenario,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acrb import acrb, convergence_report
from .fim import Scope, expected_bcrb
from .numerics import NotPositiveDefinite
from .optimizer import (Infeasible, ParetoPoint, capacity, pareto_sweep,
                        sensing_optimal_closed_form, sensing_optimal_numeric,
                        time_sharing_segment, waterfill_c_optimal)
from .scenario import (PowerAllocation, ScenarioError, SeededStream,
                       load_scenario, sample_targets)


@dataclass(frozen=True)
class Table:
    """Tabular records destined for one CSV file."""

    header: tuple
    rows: tuple


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(records: Table, path) -> None:
    """Write records bit-stably: header row, '\\n' endings, 17 significant
    digits, rows in the given (deterministic) order."""
    lines = [",".join(records.header)]
    lines.extend(",".join(_format_cell(cell) for cell in row)
                 for row in records.rows)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _say(args, message: str) -> None:
    # keep stdout clean for CSV when no --out is given
    stream = sys.stderr if args.out is None else sys.stdout
    print(message, file=stream)


def _load_cfg(args):
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read scenario file: {exc}") from None
    return load_scenario(text)


class UsageError(Exception):
    pass


def _figure_path(args):
    if getattr(args, "no_figure", False):
        return None
    if getattr(args, "figure", None):
        return args.figure
    if args.out is not None:
        return str(Path(args.out).with_suffix(".png"))
    return None


def _reference_allocation(name: str, cfg, thetas, scope) -> PowerAllocation:
    if name == "uniform":
        return PowerAllocation.uniform(cfg)
    if name == "waterfill":
        return waterfill_c_optimal(cfg)
    return sensing_optimal_numeric(cfg, thetas, scope)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    cfg = _load_cfg(args)
    _say(args, f"scenario OK: N={cfg.n_subcarriers} M={cfg.n_symbols} "
               f"K={cfg.n_targets} f0={cfg.subcarrier_spacing_hz:g} Hz "
               f"P={cfg.total_power:g} cap={cfg.per_entry_power_cap:g}")
    emit_csv(Table(("field", "value"),
                   (("n_subcarriers", cfg.n_subcarriers),
                    ("n_symbols", cfg.n_symbols),
                    ("n_targets", cfg.n_targets),
                    ("subcarrier_spacing_hz", cfg.subcarrier_spacing_hz),
                    ("total_power", cfg.total_power),
                    ("per_entry_power_cap", cfg.per_entry_power_cap))),
             args.out)
    return 0


def _bound_pair(args, cfg):
    scope = Scope(args.scope)
    stream = SeededStream(args.seed)
    thetas = sample_targets(cfg.priors, args.n_theta, stream.child("theta"))
    alloc = _reference_allocation(args.allocation, cfg, thetas, scope)
    acrb_value = acrb(alloc, thetas, cfg, scope)
    bcrb_mean, bcrb_se = expected_bcrb(alloc, cfg, args.n_x, args.n_theta,
                                       stream, scope)
    gap = abs(bcrb_mean - acrb_value) / acrb_value
    return alloc, acrb_value, bcrb_mean, bcrb_se, gap


def _cmd_bcrb(args) -> int:
    cfg = _load_cfg(args)
    _, acrb_value, bcrb_mean, bcrb_se, gap = _bound_pair(args, cfg)
    emit_csv(Table(("metric", "value"),
                   (("bcrb_mean", bcrb_mean), ("bcrb_std_error", bcrb_se),
                    ("acrb", acrb_value), ("relative_gap", gap))), args.out)
    _say(args, f"expected BCRB = {bcrb_mean:.6e} (se {bcrb_se:.2e}), "
               f"ACRB = {acrb_value:.6e}, relative gap = {gap:.4e} "
               f"[scope={args.scope}, allocation={args.allocation}, seed={args.seed}]")
    return 0


def _cmd_acrb(args) -> int:
    cfg = _load_cfg(args)
    _, acrb_value, bcrb_mean, bcrb_se, gap = _bound_pair(args, cfg)
    emit_csv(Table(("metric", "value"),
                   (("acrb", acrb_value), ("bcrb_mean", bcrb_mean),
                    ("bcrb_std_error", bcrb_se), ("relative_gap", gap))), args.out)
    _say(args, f"ACRB = {acrb_value:.6e}, expected BCRB = {bcrb_mean:.6e}, "
               f"relative gap = {gap:.4e} "
               f"[scope={args.scope}, allocation={args.allocation}, seed={args.seed}]")
    return 0


def _cmd_converge(args) -> int:
    cfg = _load_cfg(args)
    n_grid = [int(tok) for tok in args.n_grid.split(",") if tok.strip()]
    stream = SeededStream(args.seed)
    level = PowerAllocation.uniform(cfg, level=cfg.per_entry_power_cap)
    report = convergence_report(cfg, level, n_grid, stream.child("converge"))
    emit_csv(Table(("N", "quantity", "param", "value"), tuple(report.rows)),
             args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_convergence
        plot_convergence(report.rows, fig)
        _say(args, f"figure written to {fig}")
    ns, block_err = report.series("blockdiag_error", "median")
    trend = ", ".join(f"N={n}: {e:.4f}" for n, e in zip(ns, block_err))
    _say(args, f"cross-block error medians: {trend} "
               f"(delay gap {report.delay_gap:.4e} s, seed={args.seed})")
    return 0


def _sweep(args, cfg):
    scope = Scope(args.scope)
    stream = SeededStream(args.seed)
    thetas = sample_targets(cfg.priors, args.n_theta, stream.child("theta"))
    return scope, pareto_sweep(cfg, thetas, args.points, scope)


def _cmd_pareto(args) -> int:
    cfg = _load_cfg(args)
    scope, points = _sweep(args, cfg)
    rows = tuple((pt.weight, pt.distortion, pt.capacity, scope.value)
                 for pt in points)
    emit_csv(Table(("lambda", "distortion", "capacity_bits", "scope"), rows),
             args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_pareto
        segment = time_sharing_segment(points[0], points[-1], len(points))
        plot_pareto(rows, fig, scope.value, timeshare=segment)
        _say(args, f"figure written to {fig}")
    _say(args, f"{len(points)} boundary points, distortion "
               f"[{points[0].distortion:.6e}, {points[-1].distortion:.6e}], "
               f"capacity [{points[0].capacity:.6e}, {points[-1].capacity:.6e}] "
               f"bits [scope={scope.value}, seed={args.seed}]")
    return 0


def _cmd_sensing_opt(args) -> int:
    cfg = _load_cfg(args)
    scope = Scope(args.scope)
    stream = SeededStream(args.seed)
    thetas = sample_targets(cfg.priors, args.n_theta, stream.child("theta"))
    try:
        seed_alloc = sensing_optimal_closed_form(cfg)
        alloc = sensing_optimal_numeric(cfg, thetas, scope, init=seed_alloc)
        how = "closed form + numeric refinement"
    except ValueError:
        alloc = sensing_optimal_numeric(cfg, thetas, scope)
        how = "numeric (nonzero-mean prior)"
    rows = tuple((n + 1, m + 1, alloc.powers[n, m])
                 for n in range(cfg.n_subcarriers)
                 for m in range(cfg.n_symbols))
    emit_csv(Table(("n", "m", "power"), rows), args.out)
    _say(args, f"sensing-optimal allocation via {how}: "
               f"acrb={acrb(alloc, thetas, cfg, scope):.6e} "
               f"capacity={capacity(alloc, cfg):.6e} bits "
               f"[scope={scope.value}, seed={args.seed}]")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_cfg(args)
    scope, points = _sweep(args, cfg)
    s_point, c_point = points[0], points[-1]
    d_span = c_point.distortion - s_point.distortion
    rows = []
    for pt in points:
        if d_span > 0.0:
            t = (pt.distortion - s_point.distortion) / d_span
        else:
            t = 0.0
        c_ts = (1.0 - t) * s_point.capacity + t * c_point.capacity
        rows.append((pt.distortion, pt.capacity, c_ts))
    emit_csv(Table(("distortion", "capacity_joint", "capacity_timeshare"),
                   tuple(rows)), args.out)
    fig = _figure_path(args)
    if fig is not None:
        from .plotting import plot_compare
        plot_compare(rows, fig, scope.value)
        _say(args, f"figure written to {fig}")
    interior = rows[1:-1]
    if interior:
        gains = [(r[1] - r[2]) / r[2] for r in interior]
        _say(args, f"joint vs time sharing at matched distortion: "
                   f"max gain {max(gains):.2%}, mean gain "
                   f"{sum(gains) / len(gains):.2%} over {len(interior)} interior "
                   f"points [scope={scope.value}, seed={args.seed}]")
    else:
        _say(args, "no interior points to compare")
    s_loss = 1.0 - s_point.capacity / c_point.capacity
    _say(args, f"capacity loss at the sensing-optimal point: {s_loss:.2%}")
    return 0


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdm-isac",
        description="capacity vs sensing-accuracy tradeoffs for OFDM links")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, points=False, grid=False, mc=True, figure=False,
               allocation=False):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--scope", choices=["full", "delay"], default="delay",
                       help="distortion scope (default delay)")
        p.add_argument("--out", default=None,
                       help="CSV output path (default stdout)")
        if mc:
            p.add_argument("--n-theta", type=int, default=64,
                           help="prior draws (default 64)")
            p.add_argument("--n-x", type=int, default=128,
                           help="symbol draws (default 128)")
        if points:
            p.add_argument("--points", type=int, default=25,
                           help="boundary points (default 25)")
        if grid:
            p.add_argument("--n-grid", default="64,256,1024",
                           help="comma-separated subcarrier counts")
        if figure:
            p.add_argument("--figure", default=None,
                           help="PNG path (default: next to --out)")
            p.add_argument("--no-figure", action="store_true",
                           help="skip figure rendering")
        if allocation:
            p.add_argument("--allocation",
                           choices=["uniform", "waterfill", "sensing"],
                           default="uniform",
                           help="allocation the bounds are evaluated at")

    common(sub.add_parser("validate", help="check a scenario file"), mc=False)
    common(sub.add_parser("bcrb", help="Monte Carlo expected exact bound"),
           allocation=True)
    common(sub.add_parser("acrb", help="asymptotic bound and gap"),
           allocation=True)
    common(sub.add_parser("converge", help="large-N convergence diagnostics"),
           grid=True, mc=False, figure=True)
    common(sub.add_parser("pareto", help="trace the capacity/distortion boundary"),
           points=True, figure=True)
    common(sub.add_parser("sensing-opt", help="sensing-optimal allocation"))
    common(sub.add_parser("compare", help="joint design vs time sharing"),
           points=True, figure=True)
    return parser


_HANDLERS = {
    "validate": _cmd_validate,
    "bcrb": _cmd_bcrb,
    "acrb": _cmd_acrb,
    "converge": _cmd_converge,
    "pareto": _cmd_pareto,
    "sensing-opt": _cmd_sensing_opt,
    "compare": _cmd_compare,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ScenarioError, Infeasible, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotPositiveDefinite, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
