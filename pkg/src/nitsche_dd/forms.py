"""Element, facet and interface kernels shared by the fitted and unfitted assemblies.

Two-field systems use the block layout ``[dofs of V1 | dofs of V2]``; the
second block starts at ``offset2 = space1.dim``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import FeSpace, InterfaceQuadrature, VolumeQuadrature, chunked
from .linalg import SparseSystem


@dataclass(frozen=True)
class WeightSet:
    """Flux-averaging weights and the interface scaling used in norms."""

    omega1: float
    omega2: float
    gamma: float

    def __post_init__(self):
        if not (self.omega1 > 0 and self.omega2 > 0 and self.gamma > 0):
            raise ValueError(f"weights must be strictly positive: {self}")
        if abs(self.omega1 + self.omega2 - 1.0) > 1e-14:
            raise ValueError(f"omega1 + omega2 must equal 1: {self}")


def _positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def compute_weights_fitted(mu1, mu2, h1, h2) -> WeightSet:
    _positive(mu1=mu1, mu2=mu2, h1=h1, h2=h2)
    denom = h1 * mu2 + h2 * mu1
    return WeightSet(h1 * mu2 / denom, h2 * mu1 / denom, mu1 * mu2 / denom)


def compute_weights_unfitted(mu1, mu2, h) -> WeightSet:
    _positive(mu1=mu1, mu2=mu2, h=h)
    s = mu1 + mu2
    return WeightSet(mu2 / s, mu1 / s, mu1 * mu2 / (h * s))


def assemble_diffusion(system: SparseSystem, space: FeSpace, quad: VolumeQuadrature, mu: float,
                       offset: int = 0) -> None:
    """Add ``(mu grad u, grad v)`` integrated over the pieces in ``quad``."""
    for sl in chunked(len(quad)):
        q = quad.take(sl)
        _, grads = space.tabulate(q.elements, q.ref)
        gw = (mu * q.weights)[:, :, None, None] * grads
        m, nq, nloc, _ = grads.shape
        local = np.matmul(gw.transpose(0, 2, 1, 3).reshape(m, nloc, 2 * nq),
                          grads.transpose(0, 2, 1, 3).reshape(m, nloc, 2 * nq).transpose(0, 2, 1))
        dofs = space.cell_dofs[q.elements] + offset
        system.add_local(dofs, dofs, local)


def assemble_load(system: SparseSystem, space: FeSpace, quad: VolumeQuadrature, f,
                  offset: int = 0) -> None:
    for sl in chunked(len(quad)):
        q = quad.take(sl)
        vals, _ = space.tabulate(q.elements, q.ref)
        fw = np.broadcast_to(f(q.points), q.weights.shape) * q.weights
        system.add_rhs(space.cell_dofs[q.elements] + offset, np.matmul(fw[:, None, :], vals)[:, 0])


def _side_data(space1, space2, iq, weights, mu1, mu2):
    v1, g1 = space1.tabulate(iq.elements1, iq.ref1)
    v2, g2 = space2.tabulate(iq.elements2, iq.ref2)
    n = iq.normals[:, None, None, :]
    flux1 = weights.omega1 * mu1 * np.sum(g1 * n, axis=-1)
    flux2 = weights.omega2 * mu2 * np.sum(g2 * n, axis=-1)
    return (v1, flux1), (v2, flux2)


def assemble_nitsche_coupling(system: SparseSystem, space1: FeSpace, space2: FeSpace,
                              iq: InterfaceQuadrature, weights: WeightSet, mu1: float, mu2: float,
                              offset2: int) -> None:
    """Add ``-<{mu du/dn}, [v]> + <{mu dv/dn}, [u]>``; no penalty term.

    Row/test side ``a`` and column/trial side ``b`` give the block
    ``sum_q w (-s_a phi_a F_b + s_b F_a phi_b)`` with jump signs ``s = (+1, -1)``
    and averaged fluxes ``F``; the result is skew-symmetric.
    """
    sign = {1: 1.0, 2: -1.0}
    for sl in chunked(len(iq)):
        q = iq.take(sl)
        side = dict(zip((1, 2), _side_data(space1, space2, q, weights, mu1, mu2)))
        dofs = {1: space1.cell_dofs[q.elements1], 2: space2.cell_dofs[q.elements2] + offset2}
        w = q.weights
        for a in (1, 2):
            phi_a, F_a = side[a]
            for b in (1, 2):
                phi_b, F_b = side[b]
                local = (-sign[a] * np.einsum("mq,mqi,mqj->mij", w, phi_a, F_b)
                         + sign[b] * np.einsum("mq,mqi,mqj->mij", w, F_a, phi_b))
                system.add_local(dofs[a], dofs[b], local)


def interface_source(system: SparseSystem, space1: FeSpace, space2: FeSpace, iq: InterfaceQuadrature,
                     weights: WeightSet, g, offset2: int) -> None:
    """Add ``<g, <v>>`` with ``<v> = omega2 v1 + omega1 v2``.

    ``g(x, n)`` is the prescribed flux jump ``[mu du/dn]`` at points ``x`` with
    interface normal ``n`` (pointing from subdomain 1 into 2).
    """
    if len(iq) == 0:
        return
    v1, _ = space1.tabulate(iq.elements1, iq.ref1)
    v2, _ = space2.tabulate(iq.elements2, iq.ref2)
    n = np.broadcast_to(iq.normals[:, None, :], iq.points.shape)
    gw = np.broadcast_to(g(iq.points, n), iq.weights.shape) * iq.weights
    system.add_rhs(space1.cell_dofs[iq.elements1], weights.omega2 * np.einsum("mqi,mq->mi", v1, gw))
    system.add_rhs(space2.cell_dofs[iq.elements2] + offset2, weights.omega1 * np.einsum("mqi,mq->mi", v2, gw))


@dataclass(frozen=True, eq=False)
class TwoFieldSolution:
    """Discrete solution together with the quadrature needed to measure it.

    ``volume[i]`` integrates over the physical subdomain ``i`` only.
    """

    spaces: tuple
    coeffs: tuple
    volume: tuple
    interface: InterfaceQuadrature
    mu: tuple
    weights: WeightSet
    residual: float = float("nan")

    @property
    def dofs(self) -> int:
        return self.spaces[0].dim + self.spaces[1].dim
