"""Structured triangulations of axis-aligned rectangles."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

PATTERNS = ("right", "alternating")

# local edge k joins local vertices _LOCAL_EDGES[k]
LOCAL_EDGES = np.array([[0, 1], [1, 2], [2, 0]])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation.

    ``facets`` holds sorted vertex pairs; ``facet_elements`` the one or two
    adjacent triangles (``-1`` marks the missing neighbour of a boundary
    facet). ``element_facets[t, k]`` is the facet behind local edge ``k``.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    facets: np.ndarray
    facet_elements: np.ndarray
    element_facets: np.ndarray
    rect: tuple[float, float, float, float]
    pattern: str
    shape: tuple[int, int] = field(default=(0, 0))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @cached_property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_elements[:, 1] < 0)

    @cached_property
    def interior_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_elements[:, 1] >= 0)

    @cached_property
    def jacobians(self) -> np.ndarray:
        """Affine map Jacobians ``J[t] = [x1 - x0, x2 - x0]`` as columns."""
        p = self.vertices[self.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)

    @cached_property
    def det(self) -> np.ndarray:
        return np.linalg.det(self.jacobians)

    @cached_property
    def inv_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.jacobians)

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * self.det

    @cached_property
    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        edges = p[:, [1, 2, 0]] - p
        return np.linalg.norm(edges, axis=-1).max(axis=1)

    @cached_property
    def inradii(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        perimeter = np.linalg.norm(p[:, [1, 2, 0]] - p, axis=-1).sum(axis=1)
        return 2.0 * self.areas / perimeter

    @property
    def h(self) -> float:
        return float(self.diameters.max())

    @cached_property
    def facet_lengths(self) -> np.ndarray:
        p = self.vertices[self.facets]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    def to_reference(self, elements, points) -> np.ndarray:
        """Pull physical ``points[..., 2]`` back to the reference triangle of ``elements``."""
        elements = np.asarray(elements)
        x0 = self.vertices[self.triangles[elements, 0]]
        inv = self.inv_jacobians[elements]
        d = np.asarray(points) - x0[:, None, :]
        return np.matmul(d, np.swapaxes(inv, -1, -2))

    def to_physical(self, elements, ref) -> np.ndarray:
        elements = np.asarray(elements)
        x0 = self.vertices[self.triangles[elements, 0]]
        return x0[:, None, :] + np.matmul(ref, np.swapaxes(self.jacobians[elements], -1, -2))

    def write(self, path) -> None:
        """Plain-text dump: header, one ``x y`` line per vertex, one ``i j k`` per triangle."""
        lines = [f"vertices {self.n_vertices} triangles {self.n_triangles}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles.tolist()]
        Path(path).write_text("\n".join(lines) + "\n")


def read_mesh_dump(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :meth:`Mesh.write` (vertices, triangles)."""
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    nv, nt = int(head[1]), int(head[3])
    vertices = np.array([[float(s) for s in ln.split()] for ln in lines[1 : 1 + nv]])
    triangles = np.array([[int(s) for s in ln.split()] for ln in lines[1 + nv : 1 + nv + nt]])
    return vertices, triangles


def build_facets(triangles: np.ndarray):
    """Unique facets and triangle adjacency for a conforming triangulation."""
    nt = len(triangles)
    local = triangles[:, LOCAL_EDGES].reshape(-1, 2)
    key = np.sort(local, axis=1)
    nv = int(triangles.max()) + 1
    code, inverse = np.unique(key[:, 0] * nv + key[:, 1], return_inverse=True)
    facets = np.column_stack([code // nv, code % nv])
    inverse = inverse.ravel()
    element_facets = inverse.reshape(nt, 3)
    owner = np.repeat(np.arange(nt), 3)
    facet_elements = np.full((len(facets), 2), -1, dtype=np.int64)
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=len(facets))
    if counts.max() > 2:
        raise ValueError("non-manifold triangulation: facet shared by more than two triangles")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    facet_elements[:, 0] = owner[order[starts]]
    two = counts == 2
    facet_elements[two, 1] = owner[order[starts[two] + 1]]
    return facets, facet_elements, element_facets


def build_structured(nx: int, ny: int, rect=(0.0, 1.0, 0.0, 1.0), pattern: str = "right") -> Mesh:
    """Triangulate ``rect = (x0, x1, y0, y1)`` with ``nx * ny`` cells split in two.

    ``pattern="right"`` puts every diagonal from lower-left to upper-right;
    ``"alternating"`` flips the diagonal in a checkerboard fashion.
    """
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"nx, ny must be positive integers, got {nx}, {ny}")
    nx, ny = int(nx), int(ny)
    x0, x1, y0, y1 = map(float, rect)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate rectangle {rect}")
    if pattern not in PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}; expected one of {PATTERNS}")

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    a = j * (nx + 1) + i
    b = a + 1
    d = a + nx + 1
    c = d + 1
    if pattern == "right":
        flip = np.zeros(len(a), dtype=bool)
    else:
        flip = (i + j) % 2 == 1
    t1 = np.where(flip[:, None], np.column_stack([a, b, d]), np.column_stack([a, b, c]))
    t2 = np.where(flip[:, None], np.column_stack([b, c, d]), np.column_stack([a, c, d]))
    triangles = np.empty((2 * len(a), 3), dtype=np.int64)
    triangles[0::2] = t1
    triangles[1::2] = t2

    facets, facet_elements, element_facets = build_facets(triangles)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        facets=facets,
        facet_elements=facet_elements,
        element_facets=element_facets,
        rect=(x0, x1, y0, y1),
        pattern=pattern,
        shape=(nx, ny),
    )
