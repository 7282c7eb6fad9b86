import sys

import numpy as np
import pytest
import setpath  # noqa:F401, must come before 'import gripsim'
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gripsim import simplex
from gripsim.utils import InvalidParameters, SolverNonConvergence


@pytest.mark.parametrize("v, expected", [
    pytest.param([0.5, 0.5, 2.0], [0.0, 0.0, 1.0], id='clip'),
    pytest.param([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], id='inside'),
    pytest.param([1.0, 1.0], [0.5, 0.5], id='shift'),
    pytest.param([-1.0, 3.0, -2.0], [0.0, 1.0, 0.0], id='negative'),
])
def test_project_simplex(v, expected):
    assert simplex.project_simplex(v) == pytest.approx(expected)


@given(arrays(float, st.integers(1, 8),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_projection_lands_on_simplex(v):
    x = simplex.project_simplex(v)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(1.0)
    assert simplex.project_simplex(x) == pytest.approx(x, abs=1e-12)


def test_project_simplex_total():
    assert simplex.project_simplex([3.0, 1.0], total=2.0) == \
        pytest.approx([2.0, 0.0])
    with pytest.raises(InvalidParameters):
        simplex.project_simplex([1.0], total=0)


def test_starting_points():
    assert len(simplex.vertices(3)) == 3
    assert simplex.vertices(2)[1] == pytest.approx([0.0, 1.0])
    assert simplex.centroid(4) == pytest.approx([0.25] * 4)


def quadratic(target):
    target = np.asarray(target, dtype=float)

    def fun(points):
        return np.sum((points - target) ** 2, axis=1)
    return fun


def test_minimize_interior_point():
    result = simplex.minimize(quadratic([0.2, 0.3, 0.5]), [1.0, 0.0, 0.0])
    assert result.success
    assert result.x == pytest.approx([0.2, 0.3, 0.5], abs=1e-4)
    assert result.nfev > result.nit


def test_minimize_boundary_point():
    # the closest simplex point to (1, 1, -1) is (0.5, 0.5, 0)
    result = simplex.minimize(quadratic([1.0, 1.0, -1.0]), [0.0, 0.0, 1.0])
    assert result.x == pytest.approx([0.5, 0.5, 0.0], abs=1e-4)
    assert result.x[2] == 0.0


def test_minimize_reports_iteration_limit():
    result = simplex.minimize(quadratic([0.2, 0.3, 0.5]), [1.0, 0.0, 0.0],
                              max_iter=1, step=1e-6, polish_stalled=False)
    assert not result.success
    assert result.message == 'iteration limit reached'


def test_minimize_polishes_a_stalled_descent():
    result = simplex.minimize(quadratic([0.2, 0.3, 0.5]), [1.0, 0.0, 0.0],
                              max_iter=1, step=1e-6)
    assert result.success
    assert result.message == 'polished by SLSQP'
    assert result.x == pytest.approx([0.2, 0.3, 0.5], abs=1e-4)
    assert result.x.sum() == pytest.approx(1.0)


def test_polish_keeps_only_improvements():
    fun = quadratic([0.2, 0.3, 0.5])
    x = np.array([0.2, 0.3, 0.5])
    assert simplex.polish(fun, x, -1.0) is None


def test_multistart_breaks_ties_by_index():
    def flat(points):
        return np.zeros(len(points))
    result = simplex.minimize_multistart(flat, simplex.vertices(3))
    assert result.start == 0
    assert result.runs == 3


def test_multistart_keeps_the_best():
    # two wells; only the last start lies in the deeper one
    def wells(points):
        return np.minimum(np.sum((points - [1, 0]) ** 2, axis=1),
                          np.sum((points - [0, 1]) ** 2, axis=1) - 1)
    result = simplex.minimize_multistart(
        wells, [np.array([0.9, 0.1]), np.array([0.1, 0.9])])
    assert result.start == 1
    assert result.x == pytest.approx([0.0, 1.0], abs=1e-6)


def test_multistart_raises_on_non_convergence():
    with pytest.raises(SolverNonConvergence) as info:
        simplex.minimize_multistart(quadratic([0.2, 0.3, 0.5]),
                                    [np.array([1.0, 0.0, 0.0])],
                                    max_iter=1, step=1e-6,
                                    polish_stalled=False)
    assert info.value.best is not None
    with pytest.raises(InvalidParameters):
        simplex.minimize_multistart(quadratic([0.5, 0.5]), [])


def test_result_attributes():
    result = simplex.OptimizeResult(x=1, fun=2)
    assert result.x == 1
    result.nit = 3
    assert result['nit'] == 3
    with pytest.raises(AttributeError):
        result.missing
    assert 'fun' in repr(result)
    assert repr(simplex.OptimizeResult()) == 'OptimizeResult()'


if __name__ == '__main__':
    pytest.main(sys.argv)
