"""Command-line front end: solve, compare, benchmark, validate."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cartesian_op import KernelCheckError
from .experiments import MethodRun, benchmark, compare, run_method
from .model import ConfigError
from .oracle import NumericalError
from .scenarios import builtin_names, resolve_scenario
from .specfun import SpecfunRangeError

EXIT_OK, EXIT_CONFIG, EXIT_NOCONV, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _sweep(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("cell sizes must be positive")
    vals = sorted(vals, reverse=True)
    if len(set(vals)) != len(vals):
        raise argparse.ArgumentTypeError("cell sizes must be distinct")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polarmom", description="2-D TM scattering with polar and Cartesian FFT solvers.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, methods=True):
        sp.add_argument("--scenario", required=True,
                        help=f"TOML file or built-in name ({', '.join(builtin_names())})")
        if methods:
            sp.add_argument("--method", choices=("polar", "cartesian", "both"), default="both")
        sp.add_argument("--tol", type=float, default=None, help="relative residual target (default 1e-4)")
        sp.add_argument("--max-iter", type=int, default=None, help="iteration cap (default 500)")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")
        sp.add_argument("--include-precompute", action="store_true",
                        help="count table/kernel construction in wall times")
        sp.add_argument("--cell-size", type=float, default=None, help="cell size in mm (default: automatic)")

    common(sub.add_parser("solve", help="solve one scenario and write the scattered field"))
    common(sub.add_parser("compare", help="score both methods against a reference"))
    b = sub.add_parser("benchmark", help="cell-size sweep")
    common(b, methods=False)
    b.add_argument("--sweep", type=_sweep, required=True, help="cell sizes in mm, e.g. 6,4,3,2")
    b.add_argument("--repeat", type=int, default=1, help="solves per point; the fastest is timed")
    v = sub.add_parser("validate", help="run the oracle checks")
    v.add_argument("--out", type=Path, default=None)
    return p


# ---------------------------------------------------------------------------
# output helpers


def _header(lines) -> str:
    return "".join(f"# {ln}\n" for ln in lines)


def write_field(path: Path, angles, field, meta) -> None:
    deg = np.degrees(angles)
    data = np.column_stack([deg, field.real, field.imag, np.abs(field)])
    with open(path, "w") as fh:
        fh.write(_header(meta))
        fh.write("angle_deg,re,im,abs\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.10g")


def write_table(path: Path, header, rows, meta) -> None:
    with open(path, "w") as fh:
        fh.write(_header(meta))
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def run_report(run: MethodRun) -> dict:
    r = run.report
    return {
        "method": run.method,
        "grid": list(run.shape),
        "unit_cells": run.cells,
        "converged": r.converged,
        "iterations": r.iterations,
        "restarts": r.restarts,
        "tol": r.tol,
        "max_iter": r.max_iter,
        "true_residual": r.true_residual,
        "residual_history": r.residuals,
        "model_mults_per_mvp": r.model_mults,
        "empirical_mults_total": r.empirical_mults,
        "empirical_mults_per_mvp": r.empirical_per_mvp,
        "mvps": r.mvps,
        "wall_time_s": run.wall_time,
        "solve_time_s": r.wall_time,
        "precompute_time_s": run.precompute_time,
    }


def _methods(arg: str):
    return ("polar", "cartesian") if arg == "both" else (arg,)


def _cell(args):
    return None if args.cell_size is None else args.cell_size * 1e-3


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    sc = resolve_scenario(args.scenario)
    disc = sc.discretize(_cell(args))
    circle = sc.observation(disc)
    args.out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    report = {"scenario": sc.name, "frequency_hz": sc.frequency, "cell_size_m": disc.delta,
              "cell_bound_m": disc.delta_bound, "violates_cell_bound": disc.violates_bound,
              "observation_radius_m": circle.radius, "runs": []}
    for m in _methods(args.method):
        run = run_method(sc, m, disc, circle, args.tol, args.max_iter, args.include_precompute)
        meta = [f"scenario: {sc.name}", f"method: {m}", f"frequency_hz: {sc.frequency:g}",
                f"observation_radius_m: {circle.radius:.6g}", f"grid: {run.shape[0]}x{run.shape[1]}",
                f"iterations: {run.report.iterations}", f"converged: {run.report.converged}"]
        write_field(args.out / f"{sc.name}_{m}_field.csv", circle.angles, run.scattered, meta)
        report["runs"].append(run_report(run))
        print(f"{m}: {run.report.iterations} iterations, residual {run.report.true_residual:.2e}, "
              f"{'converged' if run.report.converged else 'NOT converged'}, {run.wall_time:.3f} s")
        if not run.report.converged:
            status = EXIT_NOCONV
    (args.out / f"{sc.name}_report.json").write_text(json.dumps(report, indent=2))
    return status


def _compare_row(res):
    cart, polar = res.runs
    return [res.scenario, res.reference, res.delta * 1e3, cart.method, polar.method,
            res.errors[0], res.errors[1], res.time_ratio, res.efficiency_gain,
            cart.report.iterations, polar.report.iterations, cart.cells, polar.cells,
            res.violates_bound]


COMPARE_HEADER = ["scenario", "reference", "delta_mm", "method_a", "method_b", "e_a", "e_b",
                  "time_ratio_a_over_b", "g_eff", "iters_a", "iters_b", "cells_a", "cells_b",
                  "violates_cell_bound"]


def cmd_compare(args) -> int:
    sc = resolve_scenario(args.scenario)
    methods = ("cartesian", "polar") if args.method == "both" else (args.method, args.method)
    res = compare(sc, methods, _cell(args), args.tol, args.max_iter, args.include_precompute)
    args.out.mkdir(parents=True, exist_ok=True)
    meta = [f"scenario: {sc.name}", "a is the first method, b the second",
            "e: relative L2 error of the scattered field on the observation circle",
            "g_eff: iteration-weighted FFT work ratio, Cartesian over polar"]
    write_table(args.out / f"{sc.name}_compare.csv", COMPARE_HEADER, [_compare_row(res)], meta)
    report = {"scenario": sc.name, "reference": res.reference, "cell_size_m": res.delta,
              "errors": list(res.errors), "time_ratio": _jsonable(res.time_ratio),
              "efficiency_gain": _jsonable(res.efficiency_gain),
              "runs": [run_report(r) for r in res.runs]}
    (args.out / f"{sc.name}_compare.json").write_text(json.dumps(report, indent=2))
    for run, e in zip(res.runs, res.errors):
        print(f"{run.method}: e = {e:.4f} ({res.reference}), {run.report.iterations} iterations, "
              f"{run.wall_time:.3f} s")
    print(f"T_a/T_b = {res.time_ratio:.3f}, G_eff = {res.efficiency_gain:.3f}")
    return EXIT_OK if all(r.report.converged for r in res.runs) else EXIT_NOCONV


BENCH_HEADER = ["delta_mm", "cells_cartesian", "cells_polar", "nx", "ny", "n_rings", "n_phi",
                "e_cartesian", "e_polar", "t_cartesian_s", "t_polar_s", "time_ratio",
                "iters_cartesian", "iters_polar", "g_eff", "violates_cell_bound"]


def cmd_benchmark(args) -> int:
    sc = resolve_scenario(args.scenario)
    sizes = [s * 1e-3 for s in args.sweep]
    label, rows = benchmark(sc, sizes, args.tol, args.max_iter, args.include_precompute, args.repeat)
    args.out.mkdir(parents=True, exist_ok=True)
    table = []
    for row in rows:
        c, p, res = row.cartesian, row.polar, row.result
        table.append([row.delta * 1e3, c.cells, p.cells, c.shape[0], c.shape[1], p.shape[0], p.shape[1],
                      res.errors[0], res.errors[1], c.wall_time, p.wall_time, res.time_ratio,
                      c.report.iterations, p.report.iterations, res.efficiency_gain, res.violates_bound])
        flag = "  (cell size above bound)" if res.violates_bound else ""
        print(f"delta {row.delta * 1e3:g} mm: e_cart {res.errors[0]:.4f}  e_polar {res.errors[1]:.4f}  "
              f"T2D/T1D {res.time_ratio:.2f}  G_eff {res.efficiency_gain:.2f}{flag}")
    meta = [f"scenario: {sc.name}", f"reference: {label}",
            "times exclude precomputation" if not args.include_precompute else "times include precomputation"]
    write_table(args.out / f"{sc.name}_benchmark.csv", BENCH_HEADER, table, meta)
    series = [[m, t[1] if m == "cartesian" else t[2], t[7] if m == "cartesian" else t[8]]
              for t in table for m in ("cartesian", "polar")]
    write_table(args.out / f"{sc.name}_error_vs_cells.csv", ["method", "cells", "error"], series, meta)
    conv = all(r.cartesian.report.converged and r.polar.report.converged for r in rows)
    return EXIT_OK if conv else EXIT_NOCONV


def cmd_validate(args) -> int:
    from .validation import run_checks
    results = run_checks()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_table(args.out / "validate.csv", ["check", "passed", "detail"],
                    [[n, ok, d] for n, ok, d in results], ["oracle checks"])
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERIC


COMMANDS = {"solve": cmd_solve, "compare": cmd_compare, "benchmark": cmd_benchmark, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("tol",):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            print("polarmom: error: --tol must be positive", file=sys.stderr)
            return EXIT_CONFIG
    if getattr(args, "max_iter", None) is not None and args.max_iter < 0:
        print("polarmom: error: --max-iter must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (NumericalError, KernelCheckError, SpecfunRangeError, ArithmeticError) as exc:
        print(f"polarmom: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        print(f"polarmom: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
