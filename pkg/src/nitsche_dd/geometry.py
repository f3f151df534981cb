"""Interface geometry: level sets, cut-element decomposition, merged traces.

Sign convention: ``phi < 0`` is subdomain 1, ``phi > 0`` is subdomain 2, and
the interface normal points from 1 into 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .mesh import LOCAL_EDGES, Mesh

INSIDE1, INSIDE2, CUT = 1, 2, 0
SNAP_TOL = 1e-12
MERGE_TOL = 1e-12


class GeometryError(ValueError):
    """Interface violates the intersection assumptions for an element."""

    def __init__(self, message, element=None):
        super().__init__(message if element is None else f"element {element}: {message}")
        self.element = element


@dataclass(frozen=True)
class LevelSet:
    kind: str
    normal: tuple[float, float] = (1.0, 0.0)
    offset: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "affine":
            if abs(math.hypot(*self.normal) - 1.0) > 1e-14:
                raise ValueError(f"affine level set normal must be unit length, got {self.normal}")
        elif self.kind == "circle":
            if self.radius <= 0:
                raise ValueError("circle radius must be positive")
        else:
            raise ValueError(f"unknown level set kind {self.kind!r}")

    @classmethod
    def affine(cls, normal, offset) -> "LevelSet":
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        return cls("affine", normal=(float(n[0]), float(n[1])), offset=float(offset))

    @classmethod
    def vertical(cls, x) -> "LevelSet":
        """Line ``x = const``; subdomain 1 on the left."""
        return cls("affine", normal=(1.0, 0.0), offset=float(x))

    @classmethod
    def circle(cls, center, radius) -> "LevelSet":
        return cls("circle", center=(float(center[0]), float(center[1])), radius=float(radius))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "affine":
            return x[..., 0] * self.normal[0] + x[..., 1] * self.normal[1] - self.offset
        return np.hypot(x[..., 0] - self.center[0], x[..., 1] - self.center[1]) - self.radius

    def edge_roots(self, p, q) -> list[float]:
        """Parameters ``t`` in the open interval (0, 1) where ``phi(p + t (q - p)) = 0``."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.kind == "affine":
            fp, fq = float(self(p)), float(self(q))
            if fp == fq:
                return []
            t = fp / (fp - fq)
            return [t] if 0.0 < t < 1.0 else []
        d = q - p
        m = p - np.asarray(self.center)
        a = d @ d
        b = 2.0 * (m @ d)
        c = m @ m - self.radius**2
        disc = b * b - 4 * a * c
        if disc <= 0:
            return []
        s = math.sqrt(disc)
        # numerically stable pair of roots
        qq = -0.5 * (b + math.copysign(s, b))
        roots = sorted({qq / a, c / qq} if qq != 0 else {0.0})
        return [t for t in roots if 0.0 < t < 1.0]


@dataclass(frozen=True)
class CutElement:
    element: int
    sub_tris_1: np.ndarray  # (m, 3, 2)
    sub_tris_2: np.ndarray
    chord: np.ndarray  # (2, 2)
    normal: np.ndarray  # unit, from 1 into 2


@dataclass(frozen=True, eq=False)
class CutDecomposition:
    mesh: Mesh
    levelset: LevelSet
    classes: np.ndarray
    cut: dict = field(repr=False)
    vertex_phi: np.ndarray = field(repr=False)
    aligned_facets: np.ndarray = field(repr=False)

    @property
    def cut_elements(self) -> np.ndarray:
        """G_h: elements crossed by the interface."""
        return np.flatnonzero(self.classes == CUT)

    def active(self, side: int) -> np.ndarray:
        """Boolean mask of the extended element set for subdomain ``side``."""
        own = INSIDE1 if side == 1 else INSIDE2
        return (self.classes == own) | (self.classes == CUT)

    def ghost_facets(self, side: int) -> np.ndarray:
        """Interior facets touching a cut element with both neighbours active on ``side``."""
        mesh = self.mesh
        fe = mesh.facet_elements
        interior = fe[:, 1] >= 0
        left = np.where(interior, fe[:, 0], 0)
        right = np.where(interior, fe[:, 1], 0)
        is_cut = self.classes == CUT
        act = self.active(side)
        sel = interior & (is_cut[left] | is_cut[right]) & act[left] & act[right]
        return np.flatnonzero(sel)

    def sub_triangles(self, side: int):
        """Parent indices and vertex arrays of all pieces of ``K ∩ Omega_side``."""
        own = INSIDE1 if side == 1 else INSIDE2
        whole = np.flatnonzero(self.classes == own)
        parents = [whole]
        tris = [self.mesh.vertices[self.mesh.triangles[whole]]]
        for e in self.cut_elements:
            c = self.cut[int(e)]
            st = c.sub_tris_1 if side == 1 else c.sub_tris_2
            parents.append(np.full(len(st), e))
            tris.append(st)
        return np.concatenate(parents).astype(np.int64), np.concatenate(tris).reshape(-1, 3, 2)

    def interface_segments(self):
        """Interface pieces as ``(elem1, elem2, endpoints (m, 2, 2), normals (m, 2))``.

        Chords of cut elements carry the same element on both sides; facets on
        which a snapped interface runs carry the two neighbours.
        """
        e1, e2, seg, nrm = [], [], [], []
        for e in self.cut_elements:
            c = self.cut[int(e)]
            e1.append(e)
            e2.append(e)
            seg.append(c.chord)
            nrm.append(c.normal)
        mesh = self.mesh
        for f in self.aligned_facets:
            a, b = mesh.facet_elements[f]
            if self.classes[a] == INSIDE2:
                a, b = b, a
            p = mesh.vertices[mesh.facets[f]]
            t = p[1] - p[0]
            n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
            # orient along increasing phi: away from the side-1 neighbour
            third = mesh.vertices[mesh.triangles[a]].mean(axis=0)
            if n @ (third - p[0]) > 0:
                n = -n
            e1.append(a)
            e2.append(b)
            seg.append(p)
            nrm.append(n)
        if not e1:
            return (np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                    np.zeros((0, 2, 2)), np.zeros((0, 2)))
        return (np.asarray(e1, dtype=np.int64), np.asarray(e2, dtype=np.int64),
                np.asarray(seg, dtype=float), np.asarray(nrm, dtype=float))

    @property
    def interface_length(self) -> float:
        _, _, seg, _ = self.interface_segments()
        return float(np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1).sum()) if len(seg) else 0.0


def _area(tri) -> float:
    (x0, y0), (x1, y1), (x2, y2) = tri
    return 0.5 * ((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0))


def _fan(poly, corner_rank):
    """Fan-triangulate a convex polygon from its lowest-ranked corner."""
    start = int(np.argmin(corner_rank))
    poly = poly[start:] + poly[:start]
    return [np.array([poly[0], poly[i], poly[i + 1]]) for i in range(1, len(poly) - 1)]


def cut_triangle(verts, phi_vertex, levelset: LevelSet | None = None, element=None):
    """Split one triangle by the interface.

    ``phi_vertex`` must already be snapped. Returns ``None`` when the triangle
    is not cut, else ``(sub_tris_1, sub_tris_2, chord)``. Edge crossings are
    located with ``levelset`` when given (exact for circles), otherwise by
    linear interpolation of the vertex values.
    """
    verts = np.asarray(verts, dtype=float)
    s = np.sign(phi_vertex)
    if not ((s < 0).any() and (s > 0).any()):
        return None
    polys = {-1: [], 1: []}
    ranks = {-1: [], 1: []}
    crossings = []
    for k in range(3):
        a, b = LOCAL_EDGES[k]
        if s[a] == 0:
            for side in (-1, 1):
                polys[side].append(verts[a])
                ranks[side].append(a)
            crossings.append(verts[a])
        else:
            polys[int(s[a])].append(verts[a])
            ranks[int(s[a])].append(a)
        if s[a] * s[b] < 0:
            # canonical orientation keeps shared edges consistent between neighbours
            lo, hi = (a, b) if s[a] < 0 else (b, a)
            if levelset is None:
                t = phi_vertex[lo] / (phi_vertex[lo] - phi_vertex[hi])
            else:
                roots = levelset.edge_roots(verts[lo], verts[hi])
                if len(roots) != 1:
                    raise GeometryError("interface crosses an edge more than once", element)
                t = roots[0]
            x = verts[lo] + t * (verts[hi] - verts[lo])
            for side in (-1, 1):
                polys[side].append(x)
                ranks[side].append(3)
            crossings.append(x)
    if len(crossings) != 2:
        raise GeometryError(f"interface meets the element boundary {len(crossings)} times", element)
    sub1 = _fan(polys[-1], ranks[-1])
    sub2 = _fan(polys[1], ranks[1])
    return np.array(sub1), np.array(sub2), np.array(crossings)


def _chord_normal(chord, inside2_point):
    t = chord[1] - chord[0]
    n = np.array([t[1], -t[0]]) / np.linalg.norm(t)
    if n @ (inside2_point - chord[0]) < 0:
        n = -n
    return n


def classify_and_cut(mesh: Mesh, ls: LevelSet) -> CutDecomposition:
    """Classify every element against ``ls`` and decompose the cut ones."""
    h = mesh.h
    phi = ls(mesh.vertices)
    phi = np.where(np.abs(phi) < SNAP_TOL * h, 0.0, phi)
    tri_phi = phi[mesh.triangles]
    neg = (tri_phi < 0).any(axis=1)
    pos = (tri_phi > 0).any(axis=1)
    if ((tri_phi == 0).all(axis=1)).any():
        bad = int(np.flatnonzero((tri_phi == 0).all(axis=1))[0])
        raise GeometryError("all vertices lie on the interface", bad)
    classes = np.where(neg & pos, CUT, np.where(neg, INSIDE1, INSIDE2))

    if ls.kind == "circle":
        # an edge whose endpoints share a strict sign may still be crossed twice
        fp = phi[mesh.facets]
        same = fp[:, 0] * fp[:, 1] > 0
        for f in np.flatnonzero(same):
            p, q = mesh.vertices[mesh.facets[f]]
            if ls.edge_roots(p, q):
                raise GeometryError("interface crosses an edge twice", int(mesh.facet_elements[f, 0]))

    cut = {}
    edge_ls = ls if ls.kind == "circle" else None
    for e in np.flatnonzero(classes == CUT):
        verts = mesh.vertices[mesh.triangles[e]]
        sub1, sub2, chord = cut_triangle(verts, tri_phi[e], edge_ls, element=int(e))
        if np.linalg.norm(chord[1] - chord[0]) == 0.0:
            raise GeometryError("interface is tangent to the element", int(e))
        inside2 = verts[int(np.argmax(tri_phi[e]))]
        cut[int(e)] = CutElement(int(e), sub1, sub2, chord, _chord_normal(chord, inside2))

    # facets on which the snapped interface runs between a side-1 and a side-2 element
    fphi = phi[mesh.facets]
    fe = mesh.facet_elements
    on = (fphi == 0).all(axis=1) & (fe[:, 1] >= 0)
    cls_l = classes[fe[:, 0]]
    cls_r = classes[np.maximum(fe[:, 1], 0)]
    aligned = np.flatnonzero(on & (((cls_l == INSIDE1) & (cls_r == INSIDE2)) | ((cls_l == INSIDE2) & (cls_r == INSIDE1))))

    return CutDecomposition(mesh, ls, classes, cut, phi, aligned)


@dataclass(frozen=True)
class MergedTrace:
    """Common refinement of two interface traces along a straight segment.

    ``breakpoints`` are parameters in [0, 1] along ``gamma``; segment ``s``
    spans ``breakpoints[s:s+2]`` and lies in facet ``facets1[owner1[s]]`` of
    mesh 1 and ``facets2[owner2[s]]`` of mesh 2.
    """

    gamma: np.ndarray
    breakpoints: np.ndarray
    owner1: np.ndarray
    owner2: np.ndarray
    facets1: np.ndarray
    facets2: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.gamma[1] - self.gamma[0]))

    @property
    def n_segments(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def segments(self) -> np.ndarray:
        """Physical endpoints, shape ``(n_segments, 2, 2)``."""
        p0, p1 = self.gamma
        x = p0 + self.breakpoints[:, None] * (p1 - p0)
        return np.stack([x[:-1], x[1:]], axis=1)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints) * self.length


def _check_tiling(bp, which):
    if len(bp) < 2 or bp[0] != 0.0 or bp[-1] != 1.0 or np.any(np.diff(bp) <= 0):
        raise GeometryError(f"trace {which} does not tile the interface")


def merge_breakpoints(t1, t2, tol: float = MERGE_TOL):
    """Merge two sorted partitions of [0, 1].

    Returns ``(breakpoints, owner1, owner2)`` where ``owner*`` index the
    interval of each input partition containing every merged segment.
    Breakpoints closer than ``tol`` collapse onto the first-trace value.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    _check_tiling(t1, 1)
    _check_tiling(t2, 2)
    merged = list(t1)
    for t in t2:
        j = np.searchsorted(t1, t)
        near = [t1[i] for i in (j - 1, j) if 0 <= i < len(t1) and abs(t1[i] - t) <= tol]
        if not near:
            merged.append(t)
    bp = np.array(sorted(merged))
    mids = 0.5 * (bp[:-1] + bp[1:])
    owner1 = np.clip(np.searchsorted(t1, mids) - 1, 0, len(t1) - 2)
    owner2 = np.clip(np.searchsorted(t2, mids) - 1, 0, len(t2) - 2)
    return bp, owner1, owner2


def trace_facets(mesh: Mesh, gamma, tol: float = 1e-12):
    """Boundary facets of ``mesh`` lying on segment ``gamma``, sorted along it.

    Returns ``(facets, breakpoints)`` with breakpoints parametrised on [0, 1].
    """
    gamma = np.asarray(gamma, dtype=float)
    p0, p1 = gamma
    d = p1 - p0
    L = float(np.linalg.norm(d))
    u = d / L
    nrm = np.array([-u[1], u[0]])
    bf = mesh.boundary_facets
    pts = mesh.vertices[mesh.facets[bf]]  # (m, 2, 2)
    off = np.abs((pts - p0) @ nrm)
    s = ((pts - p0) @ u) / L
    on = (off <= tol * max(L, 1.0)).all(axis=1) & (s >= -tol).all(axis=1) & (s <= 1 + tol).all(axis=1)
    fac = bf[on]
    s = np.sort(s[on], axis=1)
    order = np.argsort(s[:, 0])
    fac, s = fac[order], s[order]
    if len(fac) == 0:
        raise GeometryError("mesh has no boundary facets on the interface")
    if abs(s[0, 0]) > tol or abs(s[-1, 1] - 1.0) > tol or np.any(np.abs(s[1:, 0] - s[:-1, 1]) > tol):
        raise GeometryError("mesh boundary facets do not tile the interface")
    bp = np.concatenate([[0.0], s[:-1, 1], [1.0]])
    return fac, bp


def merge_traces(mesh1: Mesh, mesh2: Mesh, gamma) -> MergedTrace:
    """Common refinement of the interface traces of two independently meshed subdomains."""
    gamma = np.asarray(gamma, dtype=float)
    f1, t1 = trace_facets(mesh1, gamma)
    f2, t2 = trace_facets(mesh2, gamma)
    tol = MERGE_TOL / float(np.linalg.norm(gamma[1] - gamma[0]))
    bp, o1, o2 = merge_breakpoints(t1, t2, tol)
    return MergedTrace(gamma, bp, o1, o2, f1, f2)
