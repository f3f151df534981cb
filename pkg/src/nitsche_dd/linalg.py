"""Sparse system container and solvers for nonsymmetric systems."""
from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (relative residual {residual:.3e})")
        self.residual = residual


def compress(rows, cols, vals, n: int, m: int | None = None) -> sp.csr_matrix:
    """Sum duplicate triplets into a CSR matrix with sorted column indices."""
    m = n if m is None else m
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    vals = np.asarray(vals, dtype=float).ravel()
    if not (len(rows) == len(cols) == len(vals)):
        raise ValueError("triplet arrays differ in length")
    if len(rows) and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= m):
        raise IndexError(f"triplet index out of range for a {n}x{m} matrix")
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, m)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


@dataclass(eq=False)
class SparseSystem:
    """Triplet accumulator plus right-hand side; ``matrix`` is the compressed form."""

    n: int
    rhs: np.ndarray = None
    _rows: list = field(default_factory=list, repr=False)
    _cols: list = field(default_factory=list, repr=False)
    _vals: list = field(default_factory=list, repr=False)
    _csr: sp.csr_matrix | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.rhs is None:
            self.rhs = np.zeros(self.n)

    @classmethod
    def from_matrix(cls, A, rhs) -> "SparseSystem":
        A = sp.csr_matrix(A)
        s = cls(A.shape[0], np.asarray(rhs, dtype=float).copy())
        s._csr = A
        return s

    def add(self, rows, cols, vals) -> None:
        self._rows.append(np.asarray(rows, dtype=np.int64).ravel())
        self._cols.append(np.asarray(cols, dtype=np.int64).ravel())
        self._vals.append(np.asarray(vals, dtype=float).ravel())

    def add_local(self, dofs_r, dofs_c, local) -> None:
        """Scatter dense local blocks ``local[m, i, j]`` at ``(dofs_r[m, i], dofs_c[m, j])``."""
        r = np.broadcast_to(dofs_r[:, :, None], local.shape)
        c = np.broadcast_to(dofs_c[:, None, :], local.shape)
        self.add(r, c, local)

    def add_rhs(self, dofs, vals) -> None:
        np.add.at(self.rhs, np.asarray(dofs).ravel(), np.asarray(vals, dtype=float).ravel())

    @property
    def matrix(self) -> sp.csr_matrix:
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
            self._rows, self._cols, self._vals = [], [], []
            if self._csr is not None:
                # fold the previously compressed entries back in
                old = self._csr.tocoo()
                rows = np.concatenate([old.row, rows])
                cols = np.concatenate([old.col, cols])
                vals = np.concatenate([old.data, vals])
            self._csr = compress(rows, cols, vals, self.n)
        elif self._csr is None:
            self._csr = compress([], [], [], self.n)
        return self._csr

    def matvec(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=float)

    def copy(self) -> "SparseSystem":
        return SparseSystem.from_matrix(self.matrix.copy(), self.rhs.copy())

    def write_coo(self, path) -> None:
        """``row col value`` per line, 0-based, row-major order."""
        A = self.matrix.tocoo()
        with Path(path).open("w") as fh:
            for i, j, v in zip(A.row.tolist(), A.col.tolist(), A.data.tolist()):
                fh.write(f"{i} {j} {v!r}\n")


def constrain(system: SparseSystem, dofs, values) -> SparseSystem:
    """Impose ``x[dofs] = values`` through identity rows.

    The constrained columns are eliminated as well (their contribution moves
    to the right-hand side), so those unknowns decouple and come out of the
    solver exactly.
    """
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.broadcast_to(np.asarray(values, dtype=float), dofs.shape)
    A = system.matrix
    keep = np.ones(system.n)
    keep[dofs] = 0.0
    fixed = np.zeros(system.n)
    fixed[dofs] = values
    rhs = keep * (system.rhs - A @ fixed) + fixed
    K = sp.diags(keep)
    A = (K @ A @ K + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    A.sort_indices()
    return SparseSystem.from_matrix(A, rhs)


def residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def solve(system: SparseSystem, tol: float = DEFAULT_TOL, method: str = "lu",
          restart: int = 50, maxiter: int = 2000) -> np.ndarray:
    """Solve ``A x = b`` and enforce ``|Ax - b| <= tol |b|``.

    ``method="lu"`` factorises with SuperLU and applies iterative refinement if
    needed; ``"gmres"`` runs restarted GMRES right-preconditioned by ILU.
    """
    A = system.matrix
    b = system.rhs
    if system.n == 0:
        return np.zeros(0)
    if method == "lu":
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SolverError(f"singular matrix: {exc}") from exc
        x = lu.solve(b)
        res = residual(A, x, b)
        for _ in range(3):
            if res <= tol or not np.isfinite(res):
                break
            x = x + lu.solve(b - A @ x)
            res = residual(A, x, b)
    elif method == "gmres":
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        x, info = spla.gmres(A, b, M=M, rtol=0.1 * tol, atol=0.0, restart=restart, maxiter=maxiter)
        res = residual(A, x, b)
        if info < 0:
            raise SolverError("GMRES breakdown", res)
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.isfinite(res):
        raise SolverError("solution is not finite (singular matrix?)", res)
    if res > tol:
        raise SolverError("residual contract not met", res)
    log.debug("solved n=%d, residual %.2e", system.n, res)
    return x
