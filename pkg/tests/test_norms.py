import math

import numpy as np
import pytest

from nitsche_dd.fem import interpolate
from nitsche_dd.fitted import split_square_problem, solve_fitted
from nitsche_dd.forms import TwoFieldSolution
from nitsche_dd.geometry import LevelSet
from nitsche_dd.manufactured import AffineField
from nitsche_dd.mesh import build_structured
from nitsche_dd.norms import error_norms, interface_jump2
from nitsche_dd.unfitted import UnfittedProblem


def _field(problem, c1, c2):
    return TwoFieldSolution((problem.space1, problem.space2), (c1, c2),
                            (problem.volume_quadrature(1), problem.volume_quadrature(2)),
                            problem.interface_quadrature(), (problem.mu1, problem.mu2), problem.weights)


@pytest.mark.parametrize("n", [4, 10])
def test_piecewise_field_triple_norm(n):
    problem = split_square_problem(n, n, 1, 1.0, 1.0)
    w = _field(problem, interpolate(problem.space1, lambda x: x[..., 0]), np.zeros(problem.space2.dim))
    h = problem.h
    norms = error_norms(w)
    assert norms.triple**2 == pytest.approx(0.5 + 0.125 / h, rel=1e-13)
    assert norms.jump**2 == pytest.approx(0.125 / h, rel=1e-13)
    assert norms.h1**2 == pytest.approx(0.5, rel=1e-13)
    assert norms.l2**2 == pytest.approx(1 / 24, rel=1e-13)


def test_unit_constant_fitted():
    problem = split_square_problem(6, 10, 2, 1.0, 4.0)
    one = _field(problem, np.ones(problem.space1.dim), np.ones(problem.space2.dim))
    norms = error_norms(one)
    assert norms.l2 == pytest.approx(1.0, rel=1e-14)
    assert norms.h1 <= 1e-13 and norms.jump <= 1e-13


def test_unit_constant_on_cut_mesh():
    problem = UnfittedProblem(1.0, 2.0, build_structured(9, 9), LevelSet.circle((0.5, 0.5), 0.3))
    one = _field(problem, np.ones(problem.space1.dim), np.ones(problem.space2.dim))
    assert error_norms(one).l2 == pytest.approx(1.0, rel=1e-13)
    assert interface_jump2(one) <= 1e-28


def test_exact_discrete_field_has_zero_error():
    u = AffineField(0.5, -1.0, 2.0)
    problem = split_square_problem(5, 3, 1, 1.0, 1.0, dirichlet1=u.u, dirichlet2=u.u)
    norms = error_norms(solve_fitted(problem), u)
    assert max(norms) <= 1e-10


def test_triple_norm_weights_diffusivity():
    problem = split_square_problem(4, 4, 1, 9.0, 9.0)
    w = _field(problem, interpolate(problem.space1, lambda x: x[..., 0]), interpolate(problem.space2, lambda x: x[..., 0]))
    norms = error_norms(w)
    assert norms.triple == pytest.approx(3.0 * norms.h1, rel=1e-13)
    assert math.isclose(norms.jump, 0.0, abs_tol=1e-13)
