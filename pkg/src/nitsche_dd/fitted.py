"""Penalty-free Nitsche coupling of two independently meshed subdomains."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import logging

import numpy as np

from .fem import (FeSpace, InterfaceQuadrature, VolumeQuadrature, apply_dirichlet, element_quadrature,
                  lagrange_space, segment_quadrature)
from .forms import (TwoFieldSolution, WeightSet, assemble_diffusion, assemble_load,
                    assemble_nitsche_coupling, compute_weights_fitted, interface_source)
from .geometry import MergedTrace, merge_traces
from .linalg import SparseSystem, residual, solve
from .mesh import build_structured

__all__ = [
    "FittedProblem",
    "WeightSet",
    "assemble_fitted",
    "compute_weights_fitted",
    "fitted_interface_source",
    "solve_fitted",
    "split_square_problem",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FittedProblem:
    """Two-subdomain Poisson interface problem on nonmatching fitted meshes.

    Field callables take points ``x[..., 2]``; ``flux_jump(x, n)`` is the
    datum ``[mu du/dn]`` on the interface. ``dirichlet1/2`` give boundary
    values (homogeneous when ``None``).
    """

    mu1: float
    mu2: float
    space1: FeSpace
    space2: FeSpace
    trace: MergedTrace
    f1: object = None
    f2: object = None
    flux_jump: object = None
    has_flux_jump: bool = False
    dirichlet1: object = None
    dirichlet2: object = None

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("diffusivities must be positive")
        if self.space1.k != self.space2.k:
            raise ValueError("both subdomains must use the same polynomial order")
        if not self.assumption_holds:
            log.debug("mesh/diffusivity assumption mu2*h1 >= mu1*h2 fails (mu1=%g, mu2=%g, h1=%g, h2=%g)",
                        self.mu1, self.mu2, self.h1, self.h2)

    @property
    def k(self) -> int:
        return self.space1.k

    @property
    def h1(self) -> float:
        return self.space1.mesh.h

    @property
    def h2(self) -> float:
        return self.space2.mesh.h

    @property
    def h(self) -> float:
        return max(self.h1, self.h2)

    @property
    def assumption_holds(self) -> bool:
        return self.mu2 * self.h1 >= self.mu1 * self.h2

    @cached_property
    def weights(self) -> WeightSet:
        return compute_weights_fitted(self.mu1, self.mu2, self.h1, self.h2)

    @cached_property
    def normal(self) -> np.ndarray:
        """Unit normal of the interface pointing out of subdomain 1."""
        g0, g1 = self.trace.gamma
        t = (g1 - g0) / np.linalg.norm(g1 - g0)
        n = np.array([t[1], -t[0]])
        mesh = self.space1.mesh
        e = mesh.facet_elements[self.trace.facets1[0], 0]
        if n @ (mesh.vertices[mesh.triangles[e]].mean(axis=0) - g0) > 0:
            n = -n
        return n

    def volume_quadrature(self, side: int, degree: int | None = None) -> VolumeQuadrature:
        space = self.space1 if side == 1 else self.space2
        degree = 2 * self.k + 2 if degree is None else degree
        return element_quadrature(space.mesh, space.active_elements, degree)

    def interface_quadrature(self, degree: int | None = None) -> InterfaceQuadrature:
        """Quadrature on the merged trace, each point located via the owning facets."""
        degree = 2 * self.k + 3 if degree is None else degree
        tr = self.trace
        m1, m2 = self.space1.mesh, self.space2.mesh
        e1 = m1.facet_elements[tr.facets1[tr.owner1], 0]
        e2 = m2.facet_elements[tr.facets2[tr.owner2], 0]
        normals = np.broadcast_to(self.normal, (tr.n_segments, 2))
        return segment_quadrature(m1, e1, m2, e2, tr.segments, normals, degree)


def fitted_interface_source(system: SparseSystem, problem: FittedProblem, g=None,
                            iq: InterfaceQuadrature | None = None) -> None:
    """Add ``<g_N, <v>>`` over the merged trace to the right-hand side."""
    g = problem.flux_jump if g is None else g
    if g is None:
        return
    iq = problem.interface_quadrature() if iq is None else iq
    interface_source(system, problem.space1, problem.space2, iq, problem.weights, g, problem.space1.dim)


def assemble_fitted(problem: FittedProblem, include_load: bool = True) -> SparseSystem:
    """Nitsche system over ``[V1 | V2]`` before boundary conditions."""
    if problem.has_flux_jump and problem.flux_jump is None:
        raise ValueError("problem declares a flux jump but no flux_jump datum was given")
    s1, s2 = problem.space1, problem.space2
    off = s1.dim
    system = SparseSystem(s1.dim + s2.dim)
    stiff_degree = max(1, 2 * problem.k - 2)
    for side, space, mu, f in ((1, s1, problem.mu1, problem.f1), (2, s2, problem.mu2, problem.f2)):
        offset = 0 if side == 1 else off
        assemble_diffusion(system, space, problem.volume_quadrature(side, stiff_degree), mu, offset)
        if include_load and f is not None:
            assemble_load(system, space, problem.volume_quadrature(side), f, offset)
    iq = problem.interface_quadrature()
    _check_trace(problem, iq)
    assemble_nitsche_coupling(system, s1, s2, iq, problem.weights, problem.mu1, problem.mu2, off)
    if include_load:
        fitted_interface_source(system, problem, iq=iq)
    return system


def _check_trace(problem, iq, tol=1e-10):
    # every interface point must sit inside (the closure of) its owning elements
    for ref in (iq.ref1, iq.ref2):
        if len(ref) == 0:
            continue
        lo = np.min(np.stack([ref[..., 0], ref[..., 1], 1 - ref[..., 0] - ref[..., 1]]))
        if lo < -tol:
            raise ValueError("merged trace is inconsistent with the mesh edges")


def constrain_fitted(system: SparseSystem, problem: FittedProblem) -> SparseSystem:
    system = apply_dirichlet(system, problem.space1, problem.dirichlet1)
    return apply_dirichlet(system, problem.space2, problem.dirichlet2, offset=problem.space1.dim)


def solve_fitted(problem: FittedProblem, tol: float = 1e-10, method: str = "lu") -> TwoFieldSolution:
    system = constrain_fitted(assemble_fitted(problem), problem)
    x = solve(system, tol=tol, method=method)
    n1 = problem.space1.dim
    return TwoFieldSolution(
        spaces=(problem.space1, problem.space2),
        coeffs=(x[:n1], x[n1:]),
        volume=(problem.volume_quadrature(1), problem.volume_quadrature(2)),
        interface=problem.interface_quadrature(),
        mu=(problem.mu1, problem.mu2),
        weights=problem.weights,
        residual=residual(system.matrix, x, system.rhs),
    )


def split_square_meshes(n1: int, n2: int, x_split: float = 0.5, pattern: str = "right"):
    """Meshes of ``[0, x_split] x [0, 1]`` and ``[x_split, 1] x [0, 1]``.

    ``n_i`` counts cells per unit length vertically; the horizontal count is
    scaled to the subdomain width (at least one cell).
    """
    nx1 = max(1, round(n1 * x_split))
    nx2 = max(1, round(n2 * (1 - x_split)))
    mesh1 = build_structured(nx1, n1, (0.0, x_split, 0.0, 1.0), pattern)
    mesh2 = build_structured(nx2, n2, (x_split, 1.0, 0.0, 1.0), pattern)
    return mesh1, mesh2


def split_square_problem(n1: int, n2: int, k: int, mu1: float, mu2: float, *, x_split: float = 0.5,
                         pattern: str = "right", **fields) -> FittedProblem:
    """Unit square split vertically at ``x_split`` into two nonmatching meshes."""
    mesh1, mesh2 = split_square_meshes(n1, n2, x_split, pattern)
    domain = (0.0, 1.0, 0.0, 1.0)
    s1 = lagrange_space(mesh1, k, domain=domain)
    s2 = lagrange_space(mesh2, k, domain=domain)
    gamma = np.array([[x_split, 0.0], [x_split, 1.0]])
    trace = merge_traces(mesh1, mesh2, gamma)
    return FittedProblem(mu1, mu2, s1, s2, trace, **fields)
