"""Command-line front end.

Subcommands: solve, check, residual, convergence, operators.  Exit codes are
a stable contract: 0 success, 1 config/usage error, 2 no convergence,
3 condition failed, 4 residual failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (ConfigError, GridError, MismatchError, NoConvergence,
                     PsifracError)
from .fracops import SampledFunction, frac_integral
from .problemfile import LoadedProblem, file_digest, load_problem
from .psi import PsiFunction
from .solver import (check_conditions, convergence_study, residual_report,
                     solve_impulsive, solve_nonlocal)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_CONDITION_FAILED = 3
EXIT_RESIDUAL_FAILED = 4

SCHEMA_VERSION = 1


def _write_solution_csv(path: Path, sol) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["segment", "t", "psi_t", "u", "w"])
        for k, seg in enumerate(sol.segments):
            for t, s, u, w in zip(seg.nodes, seg.s_nodes, seg.u, seg.w):
                writer.writerow([k, repr(float(t)), repr(float(s)),
                                 repr(float(u)), repr(float(w))])


def _report_skeleton(problem_path: Path, command: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "problem_file": str(problem_path),
        "problem_sha256": file_digest(problem_path),
    }


def _solver_settings(loaded: LoadedProblem, args) -> tuple[int, float, int]:
    nodes = args.nodes if args.nodes is not None else loaded.params.nodes_per_segment
    tol = args.tol if args.tol is not None else loaded.params.tol
    max_iter = (args.max_iter if getattr(args, "max_iter", None) is not None
                else loaded.params.max_iter)
    return nodes, tol, max_iter


def cmd_solve(args) -> int:
    loaded = load_problem(args.problem)
    nodes, tol, max_iter = _solver_settings(loaded, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _report_skeleton(Path(args.problem), "solve")
    report.update({"nodes_per_segment": nodes, "tol": tol, "max_iter": max_iter})
    solver = solve_nonlocal if loaded.spec.nonlocal_spec else solve_impulsive
    t0 = time.perf_counter()
    try:
        sol = solver(loaded.spec, nodes_per_segment=nodes, tol=tol,
                     max_iter=max_iter)
    except NoConvergence as exc:
        report.update({
            "converged": False,
            "iterations": exc.iterations,
            "update_norms": exc.update_norms,
            "contraction_ratios": exc.ratios,
            "wall_time_s": time.perf_counter() - t0,
            "error": str(exc),
        })
        (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    wall = time.perf_counter() - t0
    _write_solution_csv(out_dir / "solution.csv", sol)
    report.update({
        "converged": True,
        "iterations": sol.iteration_count,
        "final_update_norm": sol.final_update_norm,
        "update_norms": sol.update_norms,
        "contraction_ratios": sol.contraction_ratios,
        "wall_time_s": wall,
    })
    (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"converged in {sol.iteration_count} iterations; "
          f"wrote {out_dir / 'solution.csv'}")
    return EXIT_OK


def cmd_check(args) -> int:
    loaded = load_problem(args.problem)
    report = check_conditions(loaded.spec)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.all_ok() else EXIT_CONDITION_FAILED


def cmd_residual(args) -> int:
    loaded = load_problem(args.problem)
    csv_path = Path(args.solution)
    report_path = (Path(args.report) if args.report
                   else csv_path.parent / "report.json")
    if not report_path.exists():
        raise MismatchError(f"no run report found at {report_path}")
    run_report = json.loads(report_path.read_text())
    if run_report.get("problem_sha256") != loaded.sha256:
        raise MismatchError(
            "solution was produced for a different problem file "
            f"(hash {run_report.get('problem_sha256')!r} != {loaded.sha256!r})")
    sol = _solution_from_csv(csv_path, loaded)
    thresholds = _parse_thresholds(args.thresholds)
    res = residual_report(loaded.spec, sol)
    payload = res.to_dict()
    payload["thresholds"] = {
        "integral": thresholds[0],
        "differential": thresholds[1],
        "jump": thresholds[2],
    }
    ok = (res.integral_defect <= thresholds[0]
          and res.differential_defect <= thresholds[1]
          and res.max_jump_defect() <= thresholds[2])
    payload["ok"] = ok
    print(json.dumps(payload, indent=2))
    return EXIT_OK if ok else EXIT_RESIDUAL_FAILED


def _parse_thresholds(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("thresholds",
                          "expected integral,differential,jump values")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError("thresholds", f"not numeric: {text!r}") from exc
    return vals  # type: ignore[return-value]


def _solution_from_csv(path: Path, loaded: LoadedProblem):
    from .solver import GridSolution, SolutionSegment
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
    except OSError as exc:
        raise MismatchError(f"cannot read solution csv: {exc}") from exc
    if not rows:
        raise MismatchError("solution csv is empty")
    segments = []
    try:
        nseg = int(rows[-1]["segment"]) + 1
        for k in range(nseg):
            seg_rows = [r for r in rows if int(r["segment"]) == k]
            if not seg_rows:
                raise MismatchError(f"solution csv is missing segment {k}")
            segments.append(SolutionSegment(
                nodes=np.array([float(r["t"]) for r in seg_rows]),
                s_nodes=np.array([float(r["psi_t"]) for r in seg_rows]),
                u=np.array([float(r["u"]) for r in seg_rows]),
                w=np.array([float(r["w"]) for r in seg_rows]),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise MismatchError(f"solution csv is malformed: {exc}") from exc
    expected_segments = len(loaded.spec.impulses) + 1
    if nseg != expected_segments:
        raise MismatchError(
            f"csv has {nseg} segments, problem defines {expected_segments}")
    sizes = {len(s.nodes) for s in segments}
    if len(sizes) != 1:
        raise MismatchError("segments have unequal node counts")
    return GridSolution(segments, loaded.spec.rho, 0, 0.0, [], [])


def cmd_convergence(args) -> int:
    loaded = load_problem(args.problem)
    if args.selftest == "semigroup":
        return _semigroup_selftest(loaded, args)
    nodes, tol, max_iter = _solver_settings(loaded, args)
    rows = convergence_study(loaded.spec, exact=loaded.exact,
                             levels=args.levels, base_nodes=nodes,
                             tol=tol, max_iter=max_iter)
    print(f"{'N':>8} {'error':>14} {'order':>8}")
    for row in rows:
        if row.order is not None:
            order = f"{row.order:.3f}"
        else:
            order = "exact" if row.error <= 1e-14 else "-"
        print(f"{row.nodes_per_segment:>8} {row.error:>14.6e} {order:>8}")
    if loaded.exact is not None:
        final = rows[-1].order
        if final is not None and final < 1.0:
            print("final empirical order below 1.0", file=sys.stderr)
            return EXIT_CONDITION_FAILED
    return EXIT_OK


def _semigroup_selftest(loaded: LoadedProblem, args) -> int:
    """Composition-of-integrals consistency on smooth data, with order check."""
    psi = loaded.spec.psi
    mu1, mu2 = 0.3, 0.4
    diffs = []
    sizes = [args.nodes or 256]
    while len(sizes) < max(args.levels, 2):
        sizes.append(sizes[-1] * 2)
    for n in sizes:
        h = SampledFunction.from_callable(
            lambda t: np.sin(psi.eval(t)), psi, n + 1)
        from .fracops import frac_integral_at_nodes
        inner = frac_integral_at_nodes(h, mu2, psi)
        staged = frac_integral_at_nodes(
            SampledFunction(h.nodes, inner, psi), mu1, psi)
        direct = frac_integral_at_nodes(h, mu1 + mu2, psi)
        diffs.append(float(np.max(np.abs(staged - direct))))
    print(f"{'N':>8} {'max diff':>14} {'order':>8}")
    orders = []
    for i, (n, d) in enumerate(zip(sizes, diffs)):
        order = ""
        if i + 1 < len(diffs) and diffs[i + 1] > 0:
            orders.append(np.log2(diffs[i] / diffs[i + 1]))
            order = f"{orders[-1]:.3f}"
        print(f"{n:>8} {d:>14.6e} {order:>8}")
    if orders and orders[-1] < 1.5:
        print("semigroup self-test order below 1.5", file=sys.stderr)
        return EXIT_CONDITION_FAILED
    return EXIT_OK


def cmd_operators(args) -> int:
    rows = []
    try:
        with open(args.data, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    {"t", "h"} - set(reader.fieldnames):
                raise ConfigError("operators.data", "csv needs columns t,h")
            for r in reader:
                rows.append((float(r["t"]), float(r["h"])))
    except OSError as exc:
        raise ConfigError("operators.data", f"cannot read csv: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError("operators.data", "need at least two samples")
    t_nodes = np.array([r[0] for r in rows])
    values = np.array([r[1] for r in rows])
    a = args.a if args.a is not None else float(t_nodes[0])
    T = args.T if args.T is not None else float(t_nodes[-1])
    try:
        if args.psi == "identity":
            psi = PsiFunction.identity(a, T)
        elif args.psi == "power":
            if args.rho is None:
                raise ConfigError("operators.psi", "power kind needs --rho")
            psi = PsiFunction.power(args.rho, a, T)
        elif args.psi == "log":
            psi = PsiFunction.log(a, T)
        else:
            raise ConfigError("operators.psi", f"unknown weight kind {args.psi!r}")
        h = SampledFunction(t_nodes, values, psi)
    except ConfigError:
        raise
    except PsifracError as exc:
        raise ConfigError("operators", str(exc)) from exc
    points = []
    if args.at:
        for part in args.at.split(","):
            part = part.strip()
            if part:
                points.append(float(part))
    for t in points:
        value = frac_integral(h, args.mu, psi, t)
        print(f"{t!r},{value!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psifrac",
        description="Impulsive fractional differential equations in weighted "
                    "form: solve, check conditions, verify residuals.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("problem")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--nodes", type=int, default=None,
                   help="nodes per segment (overrides the problem file)")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("check", help="print the condition report")
    p.add_argument("problem")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("residual", help="verify a solved csv against its problem")
    p.add_argument("problem")
    p.add_argument("solution", help="solution.csv produced by solve")
    p.add_argument("--report", default=None,
                   help="report.json path (default: next to the csv)")
    p.add_argument("--thresholds", default="1e-6,1e-2,1e-8",
                   help="integral,differential,jump thresholds")
    p.set_defaults(fn=cmd_residual)

    p = sub.add_parser("convergence", help="grid-refinement study")
    p.add_argument("problem")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--nodes", type=int, default=None,
                   help="nodes per segment at the coarsest level")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None, dest="max_iter")
    p.add_argument("--selftest", choices=["semigroup"], default=None)
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("operators",
                       help="apply the fractional integral to tabulated data")
    p.add_argument("data", help="csv with columns t,h sorted by t")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--psi", default="identity",
                   choices=["identity", "power", "log"])
    p.add_argument("--rho", type=float, default=None,
                   help="exponent for the power weight")
    p.add_argument("--a", type=float, default=None,
                   help="base point (default: first data node)")
    p.add_argument("--T", type=float, default=None,
                   help="right endpoint (default: last data node)")
    p.add_argument("--at", default="", help="comma-separated evaluation points")
    p.set_defaults(fn=cmd_operators)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MismatchError as exc:
        print(f"mismatch: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GridError as exc:
        print(f"grid error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PsifracError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
