"""Penalty-free Nitsche coupling on a single background mesh cut by a level set.

Each subdomain gets its own P_k space on the elements it touches; the two
spaces overlap on the cut elements. Ghost-penalty terms on the facets around
the cut elements control the parts of the extended spaces lying outside the
physical subdomains.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fem import (FeSpace, InterfaceQuadrature, VolumeQuadrature, apply_dirichlet, element_quadrature,
                  lagrange_space, segment_quadrature, subtriangle_quadrature)
from .forms import (TwoFieldSolution, WeightSet, assemble_diffusion, assemble_load,
                    assemble_nitsche_coupling, compute_weights_unfitted, interface_source)
from .geometry import INSIDE1, INSIDE2, CutDecomposition, LevelSet, classify_and_cut
from .linalg import SparseSystem, residual, solve
from .mesh import Mesh
from .quadrature import segment_rule

__all__ = [
    "UnfittedProblem",
    "assemble_ghost_penalty",
    "assemble_unfitted",
    "compute_weights_unfitted",
    "ghost_penalty_matrix",
    "solve_unfitted",
]

DEFAULT_GAMMA_G = 1e-3


@dataclass(frozen=True, eq=False)
class UnfittedProblem:
    """Interface problem on ``mesh`` with the interface given by ``levelset``.

    Subdomain 1 (``phi < 0``) must carry the smaller diffusivity.
    """

    mu1: float
    mu2: float
    mesh: Mesh
    levelset: LevelSet
    k: int = 1
    gamma_g: float = DEFAULT_GAMMA_G
    f1: object = None
    f2: object = None
    flux_jump: object = None
    has_flux_jump: bool = False
    dirichlet1: object = None
    dirichlet2: object = None

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise ValueError("diffusivities must be positive")
        if self.mu1 > self.mu2:
            raise ValueError("subdomain 1 must have the smaller diffusivity (mu1 <= mu2); "
                             "flip the level set sign to relabel")
        if not self.gamma_g > 0:
            raise ValueError("gamma_g must be positive")

    @property
    def h(self) -> float:
        return self.mesh.h

    @cached_property
    def decomposition(self) -> CutDecomposition:
        return classify_and_cut(self.mesh, self.levelset)

    @cached_property
    def space1(self) -> FeSpace:
        return lagrange_space(self.mesh, self.k, self.decomposition.active(1))

    @cached_property
    def space2(self) -> FeSpace:
        return lagrange_space(self.mesh, self.k, self.decomposition.active(2))

    @cached_property
    def weights(self) -> WeightSet:
        return compute_weights_unfitted(self.mu1, self.mu2, self.h)

    def space(self, side: int) -> FeSpace:
        return self.space1 if side == 1 else self.space2

    def volume_quadrature(self, side: int, degree: int | None = None) -> VolumeQuadrature:
        """Quadrature over the physical part ``K ∩ Omega_side`` of every active element."""
        degree = 2 * self.k + 2 if degree is None else degree
        dec = self.decomposition
        whole = np.flatnonzero(dec.classes == (INSIDE1 if side == 1 else INSIDE2))
        q_whole = element_quadrature(self.mesh, whole, degree)
        cut = dec.cut_elements
        if len(cut) == 0:
            return q_whole
        parents = []
        tris = []
        for e in cut:
            c = dec.cut[int(e)]
            st = c.sub_tris_1 if side == 1 else c.sub_tris_2
            parents.append(np.full(len(st), e))
            tris.append(st)
        q_cut = subtriangle_quadrature(self.mesh, np.concatenate(parents), np.concatenate(tris), degree)
        return VolumeQuadrature(
            np.concatenate([q_whole.elements, q_cut.elements]),
            np.concatenate([q_whole.ref, q_cut.ref]),
            np.concatenate([q_whole.points, q_cut.points]),
            np.concatenate([q_whole.weights, q_cut.weights]),
        )

    def interface_quadrature(self, degree: int | None = None) -> InterfaceQuadrature:
        degree = 2 * self.k + 3 if degree is None else degree
        e1, e2, seg, nrm = self.decomposition.interface_segments()
        return segment_quadrature(self.mesh, e1, self.mesh, e2, seg, nrm, degree)


def assemble_ghost_penalty(space: FeSpace, facets, mu: float, gamma_g: float, h: float | None = None,
                           system: SparseSystem | None = None, offset: int = 0) -> SparseSystem:
    """Add ``gamma_g sum_F sum_l mu h^(2l-1) <[D^l_n u], [D^l_n v]>_F`` for ``l = 1..k``."""
    mesh = space.mesh
    h = mesh.h if h is None else h
    system = SparseSystem(space.dim) if system is None else system
    facets = np.asarray(facets, dtype=np.int64)
    if len(facets) == 0:
        return system
    eL, eR = mesh.facet_elements[facets].T
    if (eR < 0).any():
        raise ValueError(f"facet {int(facets[eR < 0][0])} is a boundary facet")
    if not (space.active[eL].all() and space.active[eR].all()):
        bad = facets[~(space.active[eL] & space.active[eR])][0]
        raise ValueError(f"facet {int(bad)} does not have two active neighbours")

    p = mesh.vertices[mesh.facets[facets]]
    tangent = p[:, 1] - p[:, 0]
    length = np.linalg.norm(tangent, axis=1)
    n = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / length[:, None]

    dofs = np.hstack([space.cell_dofs[eL], space.cell_dofs[eR]]) + offset

    rule = segment_rule(max(1, 2 * space.k - 2))
    pts = p[:, None, 0] + rule.points[None, :, None] * tangent[:, None, :]
    w = length[:, None] * rule.weights[None, :]
    _, gL = space.tabulate(eL, mesh.to_reference(eL, pts))
    _, gR = space.tabulate(eR, mesh.to_reference(eR, pts))
    nq = n[:, None, None, :]
    jump = np.concatenate([np.sum(gL * nq, axis=-1), -np.sum(gR * nq, axis=-1)], axis=-1)
    local = gamma_g * mu * h * np.einsum("mq,mqi,mqj->mij", w, jump, jump)

    if space.k >= 2:
        HL = np.einsum("mide,md,me->mi", space.hessians(eL), n, n)
        HR = np.einsum("mide,md,me->mi", space.hessians(eR), n, n)
        jump2 = np.concatenate([HL, -HR], axis=-1)
        local += gamma_g * mu * h**3 * length[:, None, None] * jump2[:, :, None] * jump2[:, None, :]

    system.add_local(dofs, dofs, local)
    return system


def ghost_penalty_matrix(problem: UnfittedProblem, system: SparseSystem | None = None) -> SparseSystem:
    """Both ghost-penalty blocks in the ``[V1 | V2]`` numbering."""
    s1, s2 = problem.space1, problem.space2
    system = SparseSystem(s1.dim + s2.dim) if system is None else system
    dec = problem.decomposition
    assemble_ghost_penalty(s1, dec.ghost_facets(1), problem.mu1, problem.gamma_g, problem.h, system, 0)
    assemble_ghost_penalty(s2, dec.ghost_facets(2), problem.mu2, problem.gamma_g, problem.h, system, s1.dim)
    return system


def assemble_unfitted(problem: UnfittedProblem, ghost: bool = True, include_load: bool = True) -> SparseSystem:
    """``A_h + J_h`` (or ``A_h`` alone with ``ghost=False``) and the load vector."""
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
    if len(iq):
        assemble_nitsche_coupling(system, s1, s2, iq, problem.weights, problem.mu1, problem.mu2, off)
        if include_load and problem.flux_jump is not None:
            interface_source(system, s1, s2, iq, problem.weights, problem.flux_jump, off)
    if ghost:
        ghost_penalty_matrix(problem, system)
    return system


def constrain_unfitted(system: SparseSystem, problem: UnfittedProblem) -> SparseSystem:
    system = apply_dirichlet(system, problem.space1, problem.dirichlet1)
    return apply_dirichlet(system, problem.space2, problem.dirichlet2, offset=problem.space1.dim)


def solve_unfitted(problem: UnfittedProblem, tol: float = 1e-10, method: str = "lu") -> TwoFieldSolution:
    system = constrain_unfitted(assemble_unfitted(problem), problem)
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
