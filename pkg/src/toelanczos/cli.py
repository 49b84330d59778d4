"""Command-line driver wiring problems through the full pipeline.

Three subcommands:

``run``          one (problem, M, n) pipeline pass; writes the solution CSV
                 and a JSON report with the error measures and run status.
``convergence``  a sweep over M values; writes one report row per M plus the
                 fitted log-log slope.
``ttranks``      TT decompositions of the discretized tensor over (M, tol)
                 pairs; writes the rank/compression table.

Outputs are deterministic: identical configuration and seed give
byte-identical files.  Exit codes: 0 success, 2 shape/config error, 3 lucky
breakdown, 4 serious breakdown, 5 singular resolvent, 6 I/O error, 7 guarded
workload without --allow-large.

Workloads with M^3 * N^2 * n above 1e10 (roughly a minute of dense products)
require ``--allow-large``.  The environment variable TOELANCZOS_THREADS caps
how many sweep entries run concurrently (default 1; results are written in
sweep order either way).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import diagnostics as diag
from . import problems as prob
from .discretize import build_mesh, discretize_problem
from .lanczos import tensor_lanczos
from .resolvent import ResolventSingularError, approx_solution, solution_to_csv
from .tensor_core import ShapeError
from .tt import RANK_CSV_COLUMNS, compression_factor, parameter_count, rank_report_row, tt_svd

EXIT_OK = 0
EXIT_SHAPE = 2
EXIT_LUCKY = 3
EXIT_SERIOUS = 4
EXIT_RESOLVENT = 5
EXIT_IO = 6
EXIT_GUARD = 7

WORK_BUDGET = 1e10

_STATUS_EXIT = {"completed": EXIT_OK,
                "lucky_breakdown": EXIT_LUCKY,
                "serious_breakdown": EXIT_SERIOUS}


class GuardError(RuntimeError):
    pass


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TOELANCZOS_THREADS", "1")))
    except ValueError:
        return 1


def _load_problem(args) -> prob.Problem:
    if args.problem_file:
        with open(args.problem_file) as fh:
            return prob.problem_from_json(fh.read())
    if args.problem:
        if args.problem.startswith("nmr") and args.seed is not None:
            return prob.nmr_generate(int(args.problem[3:]), seed=args.seed)
        return prob.builtin(args.problem)
    raise ValueError("one of --problem or --problem-file is required")


def _check_budget(m: int, n_outer: int, iters: int, allow_large: bool) -> None:
    work = float(m) ** 3 * n_outer**2 * iters
    if work > WORK_BUDGET and not allow_large:
        raise GuardError(
            f"workload M^3*N^2*n = {work:.2e} exceeds the budget {WORK_BUDGET:.0e}; "
            "pass --allow-large to run it anyway")


def _reference_values(problem, mesh, kind, rtol, atol):
    if kind == "none":
        return None
    if kind == "analytic":
        if problem.id == "const3":
            return prob.analytic_const3(mesh).values
        if problem.id.startswith("nmr") and problem.meta.get("kind") == 1:
            return prob.analytic_nmr1(mesh, problem.meta["coefficients"]).values
        if problem.id == "zero1":
            return np.full(mesh.m, np.vdot(problem.w, problem.v))
        raise ValueError(f"no analytic reference for problem {problem.id!r}")
    return prob.rk45_reference(problem, mesh, rtol=rtol, atol=atol).values


def _pipeline_once(problem, m, n, args):
    """One discretize -> Lanczos -> resolvent -> diagnostics pass."""
    mesh = build_mesh(problem.a, problem.b, m)
    a4 = discretize_problem(problem, mesh)
    result = tensor_lanczos(a4, problem.v, problem.w, n,
                            eps_lucky=args.eps_lucky, eps_serious=args.eps_serious)
    status = result.status
    solution = None
    report_err_sol = None
    # breakdown prefixes still define a (shorter) resolvent; evaluate it, but
    # only a completed run turns resolvent failure into a hard error
    try:
        solution = approx_solution(result.tri, mesh, result.normalization)
    except ResolventSingularError:
        if status.completed:
            raise
    if solution is not None:
        ref = _reference_values(problem, mesh, args.reference, args.rtol, args.atol)
        if ref is not None:
            report_err_sol = diag.err_solution(ref, solution.values)
    err_m = diag.err_moments(result, a4, problem.v, problem.w)
    err_v, err_w = diag.err_recurrences(result, a4)
    err_o = diag.err_biorth(result)
    report = diag.ErrorReport(err_o, err_v, err_w, err_m, report_err_sol,
                              meta={"problem": problem.id, "M": m, "n": n,
                                    "status": status.kind,
                                    "breakdown_k": status.k,
                                    "breakdown_side": status.side,
                                    "breakdown_cond": status.cond,
                                    "reference": args.reference})
    return report, solution


def cmd_run(args) -> int:
    problem = _load_problem(args)
    _check_budget(args.M[0], problem.n, args.n, args.allow_large)
    report, solution = _pipeline_once(problem, args.M[0], args.n, args)
    base = args.output
    with open(base + "_report.json", "w") as fh:
        fh.write(diag.report_to_json(report) + "\n")
    if solution is not None and args.format == "csv":
        with open(base + "_solution.csv", "w") as fh:
            fh.write(solution_to_csv(solution))
    elif solution is not None:
        doc = {"tau": list(solution.mesh.tau),
               "re_s": list(solution.values.real),
               "im_s": list(solution.values.imag)}
        with open(base + "_solution.json", "w") as fh:
            fh.write(json.dumps(doc, indent=2) + "\n")
    return _STATUS_EXIT[report.meta["status"]]


def cmd_convergence(args) -> int:
    problem = _load_problem(args)
    for m in args.M:
        _check_budget(m, problem.n, args.n, args.allow_large)
    workers = min(_threads(), len(args.M))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda m: _pipeline_once(problem, m, args.n, args), args.M))
    else:
        results = [_pipeline_once(problem, m, args.n, args) for m in args.M]
    rows = [",".join(diag.REPORT_CSV_COLUMNS)]
    points = []
    worst_exit = EXIT_OK
    for m, (report, _) in zip(args.M, results):
        rows.append(diag.report_csv_row(report))
        worst_exit = max(worst_exit, _STATUS_EXIT[report.meta["status"]])
        if report.err_sol is not None:
            points.append((m, report.err_sol))
    slope = diag.convergence_slope(points) if len(points) >= 2 else None
    with open(args.output + "_convergence.csv", "w") as fh:
        fh.write("\n".join(rows) + "\n")
    with open(args.output + "_slope.json", "w") as fh:
        fh.write(json.dumps({"slope": slope, "points": points}, indent=2) + "\n")
    if slope is not None:
        print(f"convergence slope: {slope:.4f}")
    return worst_exit


def cmd_ttranks(args) -> int:
    problem = _load_problem(args)
    rows = [",".join(RANK_CSV_COLUMNS)]
    for m in args.M:
        _check_budget(m, problem.n, 1, args.allow_large)
        mesh = build_mesh(problem.a, problem.b, m)
        a4 = discretize_problem(problem, mesh)
        for tol in args.tol_tt:
            t = tt_svd(a4, tol)
            rows.append(rank_report_row(t, a4, m))
    with open(args.output + "_ttranks.csv", "w") as fh:
        fh.write("\n".join(rows) + "\n")
    return EXIT_OK


def _comma_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _comma_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toelanczos",
        description="Approximate bilinear forms of time-ordered exponentials.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_n=True):
        p.add_argument("--problem", help="builtin problem id (const3, timedep5, zero1, nmr1/2/3)")
        p.add_argument("--problem-file", help="path to a problem JSON file")
        p.add_argument("--M", type=_comma_ints, required=True,
                       help="mesh size, or comma list for sweeps")
        if need_n:
            p.add_argument("--n", type=int, required=True, help="Lanczos iterations")
            p.add_argument("--reference", choices=["analytic", "rk45", "none"],
                           default="none")
            p.add_argument("--rtol", type=float, default=1e-10)
            p.add_argument("--atol", type=float, default=1e-12)
            p.add_argument("--eps-lucky", type=float, default=1e-13, dest="eps_lucky")
            p.add_argument("--eps-serious", type=float, default=1e13, dest="eps_serious")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for generated problems (nmr1/2/3)")
        p.add_argument("--output", required=True, help="output path prefix")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--allow-large", action="store_true", dest="allow_large")

    p_run = sub.add_parser("run", help="single pipeline pass")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_conv = sub.add_parser("convergence", help="error sweep over M")
    common(p_conv)
    p_conv.set_defaults(func=cmd_convergence)

    p_tt = sub.add_parser("ttranks", help="TT rank/compression table")
    common(p_tt, need_n=False)
    p_tt.add_argument("--tol-tt", type=_comma_floats, default=[1e-5, 1e-10],
                      dest="tol_tt", help="comma list of TT tolerances")
    p_tt.set_defaults(func=cmd_ttranks)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ShapeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except ResolventSingularError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOLVENT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
