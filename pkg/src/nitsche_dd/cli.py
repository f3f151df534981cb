"""Command line entry point: ``nitsche-dd study`` and ``nitsche-dd solve``."""
from __future__ import annotations

import argparse
from fractions import Fraction
import logging
from pathlib import Path
import sys

from .fitted import FittedProblem, assemble_fitted, constrain_fitted
from .linalg import DEFAULT_TOL
from .manufactured import ManufacturedCase
from .norms import error_norms
from .study import StudyConfig, emit_csv, make_problem, run_study, solve_problem
from .unfitted import DEFAULT_GAMMA_G, assemble_unfitted, constrain_unfitted

log = logging.getLogger("nitsche_dd")


def _floats(text):
    return tuple(float(s) for s in text.split(",") if s.strip())


def _fractions(text):
    try:
        return tuple(Fraction(s.strip()) for s in text.split(",") if s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _common(p):
    p.add_argument("--regime", choices=("fitted", "unfitted"), default="fitted")
    p.add_argument("--k", type=int, choices=(1, 2), default=1)
    p.add_argument("--mu1", type=float, default=1.0)
    p.add_argument("--gamma-g", type=float, default=DEFAULT_GAMMA_G)
    p.add_argument("--flux-jump", type=_on_off, default=True, metavar="on|off")
    p.add_argument("--pattern", choices=("right", "alternating"), default="right")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nitsche-dd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("study", help="run a convergence study and write a CSV report")
    _common(st)
    st.add_argument("--mu2", type=_floats, default=(1.0, 10.0, 100.0, 1000.0))
    st.add_argument("--ratio", type=_fractions, default=StudyConfig.ratios, help="h1/h2 ratios (fitted)")
    st.add_argument("--offset", type=_floats, default=(0.0,), help="interface offsets from x=0.5 (unfitted)")
    st.add_argument("--levels", type=int, default=5)
    st.add_argument("--out", type=Path, default=Path("report.csv"))
    st.add_argument("--workers", type=int, default=None, help="overrides NITSCHE_DD_THREADS")

    so = sub.add_parser("solve", help="solve one configuration and print its errors")
    _common(so)
    so.add_argument("--mu2", type=float, default=10.0)
    so.add_argument("--ratio", type=Fraction, default=Fraction(1), help="h1/h2 (fitted)")
    so.add_argument("--offset", type=float, default=0.0, help="interface offset from x=0.5 (unfitted)")
    so.add_argument("--level", type=int, default=0)
    so.add_argument("--dump-mesh", type=Path, default=None,
                    help="write the mesh(es); fitted runs add a 1/2 suffix to the file stem")
    so.add_argument("--dump-matrix", type=Path, default=None, help="write the constrained matrix as 'row col value'")
    return parser


def _config(args, **kw) -> StudyConfig:
    return StudyConfig(regime=args.regime, k=args.k, mu1=args.mu1, gamma_g=args.gamma_g,
                       flux_jump=args.flux_jump, pattern=args.pattern, tol=args.tol, **kw)


def _study(args) -> int:
    config = _config(args, mu2s=args.mu2, ratios=args.ratio, offsets=args.offset, levels=args.levels)
    report = run_study(config, workers=args.workers)
    emit_csv(report, args.out)
    print(report.summary())
    failed = [r for r in report.rows if r.failed]
    for r in failed:
        print(f"FAILED mu2={r.mu2:g} param={r.param} level={r.level}: {r.message}", file=sys.stderr)
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return 0 if report.ok else 1


def _dump(args, problem) -> None:
    fitted = isinstance(problem, FittedProblem)
    if args.dump_mesh is not None:
        if fitted:
            p = args.dump_mesh
            for i, space in enumerate((problem.space1, problem.space2), start=1):
                space.mesh.write(p.with_name(f"{p.stem}{i}{p.suffix}"))
        else:
            problem.mesh.write(args.dump_mesh)
    if args.dump_matrix is not None:
        if fitted:
            system = constrain_fitted(assemble_fitted(problem), problem)
        else:
            system = constrain_unfitted(assemble_unfitted(problem), problem)
        system.write_coo(args.dump_matrix)


def _solve(args) -> int:
    config = _config(args, mu2s=(args.mu2,), ratios=(args.ratio,), offsets=(args.offset,))
    param = args.ratio if args.regime == "fitted" else args.offset
    problem = make_problem(config, args.mu2, param, args.level)
    _dump(args, problem)
    sol = solve_problem(problem, config.tol)
    err = error_norms(sol, ManufacturedCase(args.mu1, args.mu2))
    print(f"h={problem.h:.6e} dofs={sol.dofs} residual={sol.residual:.3e}")
    print(f"err_l2={err.l2:.6e} err_h1={err.h1:.6e} err_jump={err.jump:.6e} err_triple={err.triple:.6e}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _study(args) if args.command == "study" else _solve(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
