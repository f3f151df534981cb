import math

import numpy as np
import pytest
import sympy

from nitsche_dd.manufactured import AffineField, exact_grad, exact_laplacian, exact_u, manufactured_fields

X, Y = sympy.symbols("x y")
U = sympy.exp(X * Y) * sympy.sin(sympy.pi * X) * sympy.sin(sympy.pi * Y)


def _pts(n=50, seed=0):
    return np.random.default_rng(seed).random((n, 2))


def test_centre_value():
    assert exact_u(np.array([0.5, 0.5])) == pytest.approx(math.exp(0.25), rel=1e-15)
    assert exact_u(np.array([0.5, 0.5])) == pytest.approx(1.284025, abs=1e-6)


def test_source_at_centre():
    case = manufactured_fields(1.0, 1.0)
    expected = -2 * math.exp(0.25) * (0.25 - math.pi**2)
    assert case.f1(np.array([0.5, 0.5])) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(24.703633, abs=1e-6)


def test_laplacian_against_central_differences():
    x = np.array([0.5, 0.5])
    eps = 1e-5
    fd = sum(exact_u(x + eps * d) - 2 * exact_u(x) + exact_u(x - eps * d) for d in np.eye(2)) / eps**2
    assert -exact_laplacian(x) == pytest.approx(-fd, rel=1e-5)


def test_closed_forms_against_symbolic_derivatives():
    grad = [sympy.lambdify((X, Y), sympy.diff(U, v)) for v in (X, Y)]
    lap = sympy.lambdify((X, Y), sympy.diff(U, X, 2) + sympy.diff(U, Y, 2))
    p = _pts()
    np.testing.assert_allclose(exact_grad(p)[:, 0], grad[0](*p.T), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(exact_grad(p)[:, 1], grad[1](*p.T), rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(exact_laplacian(p), lap(*p.T), rtol=1e-12, atol=1e-12)


def test_boundary_zeros():
    rng = np.random.default_rng(3)
    t = rng.random(100)
    side = rng.integers(0, 4, 100)
    p = np.where(side[:, None] == 0, np.column_stack([t, 0 * t]),
        np.where(side[:, None] == 1, np.column_stack([t, 0 * t + 1]),
        np.where(side[:, None] == 2, np.column_stack([0 * t, t]), np.column_stack([0 * t + 1, t]))))
    assert np.abs(exact_u(p)).max() <= 1e-15


def test_flux_jump_value():
    case = manufactured_fields(1.0, 10.0)
    assert case.has_flux_jump
    g = case.flux_jump(np.array([0.5, 0.5]), np.array([1.0, 0.0]))
    assert g == pytest.approx(-9 * math.exp(0.25) * 0.5, rel=1e-14)
    assert g == pytest.approx(-5.77812, abs=1e-5)
    y = np.linspace(0, 1, 11)
    x = np.column_stack([0.5 + 0 * y, y])
    np.testing.assert_allclose(case.flux_jump(x, np.array([1.0, 0.0])), -9 * np.exp(y / 2) * y * np.sin(np.pi * y),
                               atol=1e-14)


def test_equal_diffusivities_have_no_flux_jump():
    case = manufactured_fields(3.0, 3.0)
    assert not case.has_flux_jump
    assert case.flux_jump(_pts(), np.array([0.0, 1.0])).max() == 0.0


def test_sources_scale_with_diffusivity():
    case = manufactured_fields(2.0, 7.0)
    p = _pts()
    np.testing.assert_allclose(case.f2(p), 3.5 * case.f1(p), rtol=1e-15)


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        manufactured_fields(0.0, 1.0)


def test_affine_field():
    f = AffineField(1.0, 2.0, -3.0)
    p = _pts(5)
    np.testing.assert_allclose(f.u(p), 1 + 2 * p[:, 0] - 3 * p[:, 1])
    np.testing.assert_array_equal(f.grad(p), np.tile([2.0, -3.0], (5, 1)))
