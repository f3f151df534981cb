"""Continuous P1/P2 Lagrange spaces, basis tabulation and quadrature batches."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SparseSystem, constrain
from .mesh import Mesh
from .quadrature import segment_rule, triangle_rule

# gradients of the barycentric coordinates on the reference triangle
_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
_P2_EDGES = ((0, 1), (1, 2), (2, 0))


def n_local(k: int) -> int:
    return {1: 3, 2: 6}[k]


def reference_basis(k: int, ref):
    """Values ``(..., nloc)`` and reference gradients ``(..., nloc, 2)`` at ``ref[..., 2]``."""
    ref = np.asarray(ref, dtype=float)
    xi, eta = ref[..., 0], ref[..., 1]
    lam = np.stack([1.0 - xi - eta, xi, eta], axis=-1)
    if k == 1:
        grads = np.broadcast_to(_DLAMBDA, lam.shape + (2,))
        return lam, grads
    if k != 2:
        raise ValueError(f"unsupported polynomial order {k}")
    vals = np.empty(lam.shape[:-1] + (6,))
    grads = np.empty(lam.shape[:-1] + (6, 2))
    for i in range(3):
        vals[..., i] = lam[..., i] * (2.0 * lam[..., i] - 1.0)
        grads[..., i, :] = (4.0 * lam[..., i] - 1.0)[..., None] * _DLAMBDA[i]
    for m, (a, b) in enumerate(_P2_EDGES):
        vals[..., 3 + m] = 4.0 * lam[..., a] * lam[..., b]
        grads[..., 3 + m, :] = 4.0 * (lam[..., b, None] * _DLAMBDA[a] + lam[..., a, None] * _DLAMBDA[b])
    return vals, grads


def reference_hessians(k: int) -> np.ndarray:
    """Constant reference Hessians ``(nloc, 2, 2)``; zero for P1."""
    if k == 1:
        return np.zeros((3, 2, 2))
    H = np.empty((6, 2, 2))
    for i in range(3):
        H[i] = 4.0 * np.outer(_DLAMBDA[i], _DLAMBDA[i])
    for m, (a, b) in enumerate(_P2_EDGES):
        H[3 + m] = 4.0 * (np.outer(_DLAMBDA[a], _DLAMBDA[b]) + np.outer(_DLAMBDA[b], _DLAMBDA[a]))
    return H


@dataclass(frozen=True, eq=False)
class FeSpace:
    """P_k Lagrange space on the active elements of a mesh.

    ``cell_dofs[t]`` holds the global dofs of element ``t`` (``-1`` rows for
    inactive elements). Local ordering: the three vertices, then the
    midpoints of edges (0,1), (1,2), (2,0).
    """

    mesh: Mesh
    k: int
    active: np.ndarray
    cell_dofs: np.ndarray
    dof_coords: np.ndarray
    dirichlet_dofs: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.dof_coords)

    @property
    def n_local(self) -> int:
        return n_local(self.k)

    @property
    def active_elements(self) -> np.ndarray:
        return np.flatnonzero(self.active)

    def _check_active(self, elements):
        elements = np.asarray(elements)
        if elements.size and not self.active[elements].all():
            bad = elements[~self.active[elements]]
            raise ValueError(f"element {int(bad.ravel()[0])} is not active in this space")

    def tabulate(self, elements, ref):
        """Basis values ``(m, nq, nloc)`` and physical gradients ``(m, nq, nloc, 2)``.

        ``ref`` has shape ``(m, nq, 2)`` or ``(nq, 2)`` (shared by all elements).
        """
        elements = np.asarray(elements, dtype=np.int64)
        self._check_active(elements)
        ref = np.asarray(ref, dtype=float)
        if ref.ndim == 2:
            ref = np.broadcast_to(ref, (len(elements),) + ref.shape)
        vals, gref = reference_basis(self.k, ref)
        inv = self.mesh.inv_jacobians[elements]
        grads = np.matmul(gref, inv[:, None, :, :])
        return vals, grads

    def hessians(self, elements) -> np.ndarray:
        """Physical Hessians ``(m, nloc, 2, 2)``; constant on each (affine) element."""
        elements = np.asarray(elements, dtype=np.int64)
        self._check_active(elements)
        inv = self.mesh.inv_jacobians[elements]
        H = reference_hessians(self.k)
        return np.einsum("mad,iab,mbe->mide", inv, H, inv)

    def evaluate(self, coeffs, elements, ref):
        """Field values ``(m, nq)`` and gradients ``(m, nq, 2)``."""
        vals, grads = self.tabulate(elements, ref)
        c = np.asarray(coeffs)[self.cell_dofs[np.asarray(elements)]]
        u = np.matmul(vals, c[:, :, None])[..., 0]
        g = np.matmul(np.swapaxes(grads, -1, -2), c[:, None, :, None])[..., 0]
        return u, g


def lagrange_space(mesh: Mesh, k: int, active=None, domain=None) -> FeSpace:
    """Continuous P_k space on ``active`` elements (all by default).

    Dofs on the boundary of the rectangle ``domain`` (default: the mesh
    rectangle) are marked Dirichlet.
    """
    if k not in (1, 2):
        raise ValueError(f"only k = 1, 2 are supported, got {k}")
    nt = mesh.n_triangles
    active = np.ones(nt, dtype=bool) if active is None else np.asarray(active, dtype=bool).copy()
    if active.shape != (nt,):
        raise ValueError("active mask must have one entry per triangle")
    nv = mesh.n_vertices
    if k == 1:
        global_dofs = mesh.triangles
        coords = mesh.vertices
    else:
        global_dofs = np.hstack([mesh.triangles, nv + mesh.element_facets])
        mids = mesh.vertices[mesh.facets].mean(axis=1)
        coords = np.vstack([mesh.vertices, mids])
    used = np.unique(global_dofs[active])
    renum = np.full(len(coords), -1, dtype=np.int64)
    renum[used] = np.arange(len(used))
    cell_dofs = np.where(active[:, None], renum[global_dofs], -1)
    dof_coords = coords[used]

    x0, x1, y0, y1 = mesh.rect if domain is None else domain
    scale = max(x1 - x0, y1 - y0)
    tol = 1e-12 * scale
    x, y = dof_coords[:, 0], dof_coords[:, 1]
    on_bdry = (np.abs(x - x0) < tol) | (np.abs(x - x1) < tol) | (np.abs(y - y0) < tol) | (np.abs(y - y1) < tol)
    for a in (cell_dofs, dof_coords):
        a.setflags(write=False)
    return FeSpace(mesh, k, active, cell_dofs, dof_coords, np.flatnonzero(on_bdry))


def eval_basis(space: FeSpace, element: int, ref_point):
    """Local basis values ``(nloc,)`` and physical gradients ``(nloc, 2)`` at one point."""
    if not space.active[element]:
        raise ValueError(f"element {element} is not active in this space")
    vals, grads = space.tabulate([element], np.asarray(ref_point, dtype=float).reshape(1, 1, 2))
    return vals[0, 0], grads[0, 0]


def interpolate(space: FeSpace, f) -> np.ndarray:
    """Nodal interpolant coefficients; ``f`` maps points ``(..., 2)`` to values."""
    return np.asarray(np.broadcast_to(f(space.dof_coords), (space.dim,)), dtype=float).copy()


def apply_dirichlet(system: SparseSystem, space: FeSpace, g=None, offset: int = 0) -> SparseSystem:
    """Strongly impose ``u = g`` (zero by default) on the space's boundary dofs.

    ``offset`` locates the space's block inside a larger system.
    """
    dofs = space.dirichlet_dofs
    if g is None:
        values = np.zeros(len(dofs))
    elif callable(g):
        values = np.asarray(np.broadcast_to(g(space.dof_coords[dofs]), dofs.shape), dtype=float)
    else:
        values = np.asarray(g, dtype=float)
    return constrain(system, dofs + offset, values)


# -- quadrature batches -----------------------------------------------------


@dataclass(frozen=True)
class VolumeQuadrature:
    """Quadrature on pieces of elements: each piece is a (sub)triangle of ``elements[m]``."""

    elements: np.ndarray
    ref: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.elements)

    def take(self, sel) -> "VolumeQuadrature":
        return VolumeQuadrature(self.elements[sel], self.ref[sel], self.points[sel], self.weights[sel])


@dataclass(frozen=True)
class InterfaceQuadrature:
    """Quadrature on interface segments seen from both sides."""

    elements1: np.ndarray
    ref1: np.ndarray
    elements2: np.ndarray
    ref2: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray

    def __len__(self):
        return len(self.elements1)

    def take(self, sel) -> "InterfaceQuadrature":
        return InterfaceQuadrature(self.elements1[sel], self.ref1[sel], self.elements2[sel],
                                   self.ref2[sel], self.points[sel], self.weights[sel], self.normals[sel])


def element_quadrature(mesh: Mesh, elements, degree: int) -> VolumeQuadrature:
    elements = np.asarray(elements, dtype=np.int64)
    rule = triangle_rule(degree)
    ref = np.broadcast_to(rule.ref_points, (len(elements),) + rule.ref_points.shape)
    pts = mesh.to_physical(elements, ref)
    w = np.abs(mesh.det[elements])[:, None] * rule.weights[None, :]
    return VolumeQuadrature(elements, ref, pts, w)


def subtriangle_quadrature(mesh: Mesh, parents, tris, degree: int) -> VolumeQuadrature:
    """Quadrature on physical sub-triangles ``tris (m, 3, 2)`` of ``parents``."""
    parents = np.asarray(parents, dtype=np.int64)
    tris = np.asarray(tris, dtype=float).reshape(-1, 3, 2)
    rule = triangle_rule(degree)
    pts = np.einsum("qa,mad->mqd", rule.points, tris)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    w = det[:, None] * rule.weights[None, :]
    ref = mesh.to_reference(parents, pts) if len(parents) else np.zeros(pts.shape)
    return VolumeQuadrature(parents, ref, pts, w)


def segment_quadrature(mesh1: Mesh, elements1, mesh2: Mesh, elements2, endpoints, normals,
                       degree: int) -> InterfaceQuadrature:
    """Gauss points on segments ``endpoints (m, 2, 2)`` mapped into both owning elements."""
    endpoints = np.asarray(endpoints, dtype=float).reshape(-1, 2, 2)
    rule = segment_rule(degree)
    t = rule.points
    p0, p1 = endpoints[:, 0], endpoints[:, 1]
    pts = p0[:, None, :] + t[None, :, None] * (p1 - p0)[:, None, :]
    w = np.linalg.norm(p1 - p0, axis=1)[:, None] * rule.weights[None, :]
    e1 = np.asarray(elements1, dtype=np.int64)
    e2 = np.asarray(elements2, dtype=np.int64)
    if len(e1):
        ref1 = mesh1.to_reference(e1, pts)
        ref2 = mesh2.to_reference(e2, pts)
    else:
        ref1 = ref2 = np.zeros(pts.shape)
    return InterfaceQuadrature(e1, ref1, e2, ref2, pts, w, np.asarray(normals, dtype=float).reshape(-1, 2))


def chunked(n: int, size: int = 20000):
    for start in range(0, n, size):
        yield slice(start, min(n, start + size))
