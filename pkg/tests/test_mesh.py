import math

import numpy as np
import pytest

from nitsche_dd.mesh import LOCAL_EDGES, build_structured, read_mesh_dump


def test_single_cell():
    m = build_structured(1, 1)
    assert (m.n_triangles, m.n_vertices, m.n_facets) == (2, 4, 5)
    assert m.h == pytest.approx(math.sqrt(2))
    assert len(m.boundary_facets) == 4


def test_two_by_two_euler():
    m = build_structured(2, 2)
    assert (m.n_triangles, m.n_vertices, m.n_facets) == (8, 9, 16)
    assert m.n_vertices - m.n_facets + m.n_triangles == 1


@pytest.mark.parametrize("pattern", ["right", "alternating"])
@pytest.mark.parametrize("nx,ny", [(1, 3), (4, 4), (7, 2), (10, 10)])
def test_topology_invariants(nx, ny, pattern):
    m = build_structured(nx, ny, (0.0, 2.0, -1.0, 0.5), pattern)
    assert m.n_triangles == 2 * nx * ny
    assert m.n_vertices - m.n_facets + m.n_triangles == 1
    assert (m.det > 0).all()
    assert m.areas.sum() == pytest.approx(3.0)
    # each interior facet is visited twice when walking the element edges
    visits = np.bincount(m.element_facets.ravel(), minlength=m.n_facets)
    interior = m.facet_elements[:, 1] >= 0
    assert (visits[interior] == 2).all()
    assert (visits[~interior] == 1).all()
    # adjacency agrees with the vertex pairs
    for t in range(m.n_triangles):
        for k, (a, b) in enumerate(LOCAL_EDGES):
            f = m.element_facets[t, k]
            assert sorted(m.facets[f]) == sorted(m.triangles[t, [a, b]])
            assert t in m.facet_elements[f]
    # boundary facets lie on the rectangle boundary
    mid = m.vertices[m.facets[m.boundary_facets]].mean(axis=1)
    on = np.isclose(mid[:, 0], 0) | np.isclose(mid[:, 0], 2) | np.isclose(mid[:, 1], -1) | np.isclose(mid[:, 1], 0.5)
    assert on.all()


@pytest.mark.parametrize("pattern", ["right", "alternating"])
def test_shape_regularity(pattern):
    m = build_structured(10, 10, pattern=pattern)
    ratio = m.diameters / m.inradii
    # right isosceles triangle: hypotenuse over inradius is 2 + 2 sqrt(2)
    np.testing.assert_allclose(ratio, 2 + 2 * math.sqrt(2), rtol=1e-12)
    assert ratio.max() <= 5
    assert m.h == pytest.approx(math.sqrt(2) / 10)


@pytest.mark.parametrize("args", [(0, 1), (1, 0), (1.5, 2)])
def test_rejects_bad_counts(args):
    with pytest.raises(ValueError):
        build_structured(*args)


@pytest.mark.parametrize("rect", [(0, 0, 0, 1), (0, 1, 1, 1), (1, 0, 0, 1)])
def test_rejects_degenerate_rectangle(rect):
    with pytest.raises(ValueError):
        build_structured(2, 2, rect)


def test_rejects_unknown_pattern():
    with pytest.raises(ValueError):
        build_structured(2, 2, pattern="diamond")


def test_reference_map_roundtrip():
    m = build_structured(3, 2, pattern="alternating")
    rng = np.random.default_rng(0)
    ref = rng.random((m.n_triangles, 5, 2)) * 0.5
    x = m.to_physical(np.arange(m.n_triangles), ref)
    np.testing.assert_allclose(m.to_reference(np.arange(m.n_triangles), x), ref, atol=1e-14)


def test_dump_roundtrip(tmp_path):
    m = build_structured(3, 2, (0.0, 0.5, 0.0, 1.0))
    path = tmp_path / "mesh.txt"
    m.write(path)
    assert path.read_text().splitlines()[0] == f"vertices {m.n_vertices} triangles {m.n_triangles}"
    v, t = read_mesh_dump(path)
    np.testing.assert_array_equal(v, m.vertices)
    np.testing.assert_array_equal(t, m.triangles)
