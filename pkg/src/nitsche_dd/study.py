"""Manufactured-solution convergence studies and CSV output."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import csv
import logging
import math
import os
from pathlib import Path
import time

import numpy as np

from .fitted import FittedProblem, split_square_problem, solve_fitted
from .geometry import LevelSet
from .linalg import DEFAULT_TOL
from .manufactured import ManufacturedCase
from .mesh import build_structured
from .norms import error_norms
from .unfitted import DEFAULT_GAMMA_G, UnfittedProblem, solve_unfitted

log = logging.getLogger(__name__)

CSV_HEADER = ["regime", "k", "mu1", "mu2", "ratio_or_offset", "level", "h", "dofs",
              "err_l2", "err_h1", "err_jump", "err_triple", "rate_l2", "rate_h1", "rate_triple"]
ERROR_COLUMNS = ("l2", "h1", "jump", "triple")
RATE_COLUMNS = ("l2", "h1", "triple")
THREADS_ENV = "NITSCHE_DD_THREADS"


@dataclass(frozen=True)
class StudyConfig:
    """One convergence study; every (mu2, ratio-or-offset) pair is a sweep over levels.

    Fitted level ``l`` meshes the coarser subdomain with ``8 * 2**l`` cells per
    unit length and the other one ``1/ratio`` (or ``ratio``) times finer, so
    ``h1/h2`` equals ``ratio`` up to rounding. Unfitted level ``l`` uses an
    ``n x n`` background mesh with ``n = 8 * 2**l + 1`` and the interface
    ``x = 0.5 + offset``.
    """

    regime: str = "fitted"
    k: int = 1
    mu1: float = 1.0
    mu2s: tuple = (1.0, 10.0, 100.0, 1000.0)
    ratios: tuple = (Fraction(1), Fraction(3, 5), Fraction(3, 10), Fraction(1, 5))
    levels: int = 5
    base_n: int = 8
    gamma_g: float = DEFAULT_GAMMA_G
    offsets: tuple = (0.0,)
    flux_jump: bool = True
    pattern: str = "right"
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.regime not in ("fitted", "unfitted"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.k not in (1, 2):
            raise ValueError("k must be 1 or 2")
        if self.levels < 2:
            raise ValueError("at least two levels are needed to measure rates")
        if any(Fraction(r) <= 0 for r in self.ratios):
            raise ValueError("mesh ratios must be positive")
        if any(m <= 0 for m in self.mu2s) or self.mu1 <= 0:
            raise ValueError("diffusivities must be positive")

    @property
    def params(self) -> tuple:
        return tuple(Fraction(r) for r in self.ratios) if self.regime == "fitted" else tuple(self.offsets)

    def sweeps(self):
        return [(mu2, p) for mu2 in self.mu2s for p in self.params]

    def fitted_counts(self, ratio, level) -> tuple[int, int]:
        """Cells per unit length ``(n1, n2)`` with ``n2/n1 ≈ h1/h2 = ratio``."""
        n = self.base_n * 2**level
        ratio = Fraction(ratio)
        if ratio <= 1:
            return round(n / ratio), n
        return n, round(n * ratio)

    def unfitted_n(self, level) -> int:
        return self.base_n * 2**level + 1


@dataclass
class Row:
    regime: str
    k: int
    mu1: float
    mu2: float
    param: float
    level: int
    h: float = math.nan
    dofs: int = 0
    errors: tuple = (math.nan,) * 4
    residual: float = math.nan
    assumption_holds: bool = True
    failed: bool = False
    message: str = ""
    seconds: float = 0.0
    rates: dict = field(default_factory=dict)

    @property
    def key(self):
        return (self.mu2, self.param)

    def error(self, name) -> float:
        return self.errors[ERROR_COLUMNS.index(name)]


def pairwise_rate(e0, e1, h0, h1) -> float:
    return math.log(e0 / e1) / math.log(h0 / h1)


def lsq_rate(hs, errors) -> float:
    """Slope of the least-squares line through ``(log h, log e)``."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    ok = np.isfinite(errors) & (errors > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(hs[ok]), np.log(errors[ok]), 1)[0])


@dataclass
class ConvergenceReport:
    config: StudyConfig
    rows: list

    @property
    def ok(self) -> bool:
        return bool(self.rows) and not any(r.failed for r in self.rows)

    def sweep(self, mu2, param) -> list:
        return [r for r in self.rows if r.key == (mu2, param)]

    def sweeps(self):
        keys = []
        for r in self.rows:
            if r.key not in keys:
                keys.append(r.key)
        return [(k, self.sweep(*k)) for k in keys]

    def lsq_rates(self, mu2, param) -> dict:
        rows = self.sweep(mu2, param)
        hs = [r.h for r in rows]
        return {name: lsq_rate(hs, [r.error(name) for r in rows]) for name in ERROR_COLUMNS}

    def summary(self) -> str:
        label = "ratio" if self.config.regime == "fitted" else "offset"
        lines = [f"{'mu2':>8} {label:>8} {'L2':>7} {'H1':>7} {'jump':>7} {'triple':>7}  (least-squares rates)"]
        for (mu2, p), _ in self.sweeps():
            r = self.lsq_rates(mu2, p)
            lines.append(f"{mu2:8g} {str(p):>8} " + " ".join(f"{r[n]:7.3f}" for n in ERROR_COLUMNS))
        return "\n".join(lines)


def make_problem(config: StudyConfig, mu2: float, param, level: int):
    case = ManufacturedCase(config.mu1, mu2)
    fields = dict(f1=case.f1, f2=case.f2)
    if config.flux_jump:
        fields.update(flux_jump=case.flux_jump, has_flux_jump=case.has_flux_jump)
    if config.regime == "fitted":
        n1, n2 = config.fitted_counts(param, level)
        return split_square_problem(n1, n2, config.k, config.mu1, mu2, pattern=config.pattern, **fields)
    n = config.unfitted_n(level)
    mesh = build_structured(n, n, pattern=config.pattern)
    ls = LevelSet.vertical(0.5 + float(param))
    return UnfittedProblem(config.mu1, mu2, mesh, ls, k=config.k, gamma_g=config.gamma_g, **fields)


def solve_problem(problem, tol=DEFAULT_TOL):
    if isinstance(problem, FittedProblem):
        return solve_fitted(problem, tol=tol)
    return solve_unfitted(problem, tol=tol)


def run_case(config: StudyConfig, mu2: float, param, level: int) -> Row:
    row = Row(config.regime, config.k, config.mu1, mu2, param, level)
    start = time.perf_counter()
    try:
        problem = make_problem(config, mu2, param, level)
        row.h = problem.h
        if isinstance(problem, FittedProblem):
            row.assumption_holds = problem.assumption_holds
        sol = solve_problem(problem, config.tol)
        row.dofs = sol.dofs
        row.residual = sol.residual
        row.errors = tuple(float(e) for e in error_norms(sol, ManufacturedCase(config.mu1, mu2)))
    except Exception as exc:  # keep the remaining rows going
        log.error("row failed (mu2=%g, param=%s, level=%d): %s", mu2, param, level, exc)
        row.failed = True
        row.message = f"{type(exc).__name__}: {exc}"
    row.seconds = time.perf_counter() - start
    return row


def _fill_rates(rows):
    for prev, cur in zip(rows, rows[1:]):
        for name in RATE_COLUMNS:
            e0, e1 = prev.error(name), cur.error(name)
            ok = not (prev.failed or cur.failed) and e0 > 0 and e1 > 0
            cur.rates[name] = pairwise_rate(e0, e1, prev.h, cur.h) if ok else math.nan


def _workers() -> int:
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def run_study(config: StudyConfig, workers: int | None = None) -> ConvergenceReport:
    jobs = [(mu2, p, level) for mu2, p in config.sweeps() for level in range(config.levels)]
    workers = _workers() if workers is None else workers
    if workers > 1:
        # biggest jobs first; results are re-ordered below
        order = sorted(range(len(jobs)), key=lambda i: -jobs[i][2])
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {i: pool.submit(run_case, config, *jobs[i]) for i in order}
            rows = [futures[i].result() for i in range(len(jobs))]
    else:
        rows = [run_case(config, *job) for job in jobs]
    report = ConvergenceReport(config, rows)
    for _, sweep in report.sweeps():
        _fill_rates(sweep)
    return report


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.16e}"


def csv_rows(report: ConvergenceReport):
    for r in report.rows:
        yield [r.regime, str(r.k), _fmt(float(r.mu1)), _fmt(float(r.mu2)), _fmt(float(r.param)),
               str(r.level), _fmt(r.h), str(r.dofs),
               *(("nan" if r.failed else _fmt(e)) for e in r.errors),
               *(_fmt(r.rates.get(name)) for name in RATE_COLUMNS)]


def emit_csv(report: ConvergenceReport, path) -> Path:
    if not report.rows:
        raise ValueError("cannot write an empty convergence report")
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(csv_rows(report))
    return path
