"""Command-line harness: single solves, convergence studies, invariant checks."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cases import get_example
from .studies import (
    DEFAULT_FINE_GRID,
    run_single,
    study_space,
    study_time,
)
from .verify import DEFAULT_SEED, DEFAULT_TRIALS, run_verification


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _write_report(report, out: str) -> None:
    path = Path(out)
    path.write_text(report.to_csv())
    path.with_suffix(".dat").write_text(report.to_plot_data())
    print(f"wrote {path} and {path.with_suffix('.dat')}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdpg",
        description=(
            "Petrov-Galerkin time stepping with 1D finite elements for "
            "time-fractional subdiffusion on graded time meshes"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve_p = sub.add_parser("solve", help="solve one configuration and print the error")
    study_t = sub.add_parser("study-time", help="temporal refinement study (CSV output)")
    study_s = sub.add_parser("study-space", help="spatial refinement study (CSV output)")

    for p in (solve_p, study_t, study_s):
        p.add_argument("--example", type=int, required=True, choices=(1, 2))
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--gamma", type=float, required=True)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--q", type=int, default=DEFAULT_FINE_GRID)

    solve_p.add_argument("--r", type=int, required=True)
    solve_p.add_argument("--N", type=int, required=True)
    solve_p.add_argument("--Nx", type=int, required=True)
    solve_p.add_argument("--out", type=str, default=None)

    study_t.add_argument("--N", type=_int_list, required=True, metavar="N1,N2,...")
    study_t.add_argument("--r", type=int, required=True)
    study_t.add_argument("--Nx", type=int, required=True)
    study_t.add_argument("--out", type=str, required=True)

    study_s.add_argument("--Nx", type=_int_list, required=True, metavar="NX1,NX2,...")
    study_s.add_argument("--r", type=int, required=True)
    study_s.add_argument("--N", type=int, required=True)
    study_s.add_argument("--out", type=str, required=True)

    verify_p = sub.add_parser("verify", help="run the invariant suite")
    verify_p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    verify_p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "solve":
        case = get_example(args.example, args.alpha)
        err = run_single(case, args.gamma, args.m, args.N, args.r, args.Nx, args.q)
        line = (
            f"example={args.example} alpha={args.alpha:g} gamma={args.gamma:g} "
            f"m={args.m} N={args.N} r={args.r} Nx={args.Nx} q={args.q} "
            f"error={err:.6e}"
        )
        print(line)
        if args.out:
            Path(args.out).write_text(line + "\n")
        return 0

    if args.command == "study-time":
        case = get_example(args.example, args.alpha)
        report = study_time(case, args.gamma, args.m, args.N, args.r, args.Nx, args.q)
        _write_report(report, args.out)
        return 0

    if args.command == "study-space":
        case = get_example(args.example, args.alpha)
        report = study_space(case, args.r, args.Nx, args.m, args.gamma, args.N, args.q)
        _write_report(report, args.out)
        return 0

    if args.command == "verify":
        results = run_verification(args.seed, args.trials)
        failed = 0
        for res in results:
            tag = "PASS" if res.passed else "FAIL"
            print(f"[{tag}] {res.name}: {res.detail}")
            failed += 0 if res.passed else 1
        print(f"{len(results) - failed}/{len(results)} checks passed")
        return 0 if failed == 0 else 1

    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
