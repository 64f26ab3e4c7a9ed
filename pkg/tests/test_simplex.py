import numpy as np
import pytest

from banditfolio.simplex import (
    LPInfeasible,
    LPIterationLimit,
    LPUnbounded,
    simplex,
)


def test_textbook_problem():
    # max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  x=2, y=6, value 36
    A = np.array([[1, 0, 1, 0, 0], [0, 2, 0, 1, 0], [3, 2, 0, 0, 1]], float)
    res = simplex([-3, -5, 0, 0, 0], A, [4, 12, 18])
    assert res.objective == pytest.approx(-36)
    np.testing.assert_allclose(res.x[:2], [2, 6])


def test_needs_phase_one():
    # x + y = 1, x - y = 0.5 has the single solution (0.75, 0.25)
    res = simplex([1, 1], [[1, 1], [1, -1]], [1, 0.5])
    np.testing.assert_allclose(res.x, [0.75, 0.25])


def test_negative_right_hand_side():
    res = simplex([1, 2], [[-1, -1]], [-3])
    np.testing.assert_allclose(res.x, [3, 0])


def test_redundant_rows_are_dropped():
    res = simplex([1, 2, 0], [[1, 1, 1], [2, 2, 2]], [1, 2])
    assert res.objective == pytest.approx(0.0)
    assert res.x.sum() == pytest.approx(1.0)


def test_infeasible():
    with pytest.raises(LPInfeasible):
        simplex([1, 1], [[1, 1], [1, 1]], [1, 2])


def test_unbounded():
    with pytest.raises(LPUnbounded):
        simplex([-1, 0], [[1, -1]], [1])


def test_cycling_example_terminates():
    # Beale's example cycles under Dantzig's rule without an anti-cycling fallback
    c = [0, 0, 0, -0.75, 150, -0.02, 6]
    A = [[1, 0, 0, 0.25, -60, -0.04, 9],
         [0, 1, 0, 0.5, -90, -0.02, 3],
         [0, 0, 1, 0, 0, 1, 0]]
    res = simplex(c, A, [0, 0, 1])
    assert res.objective == pytest.approx(-0.05)
    assert res.used_bland


def test_iteration_cap_reports_incumbent():
    rng = np.random.default_rng(0)
    A = np.hstack([rng.random((6, 10)), np.eye(6)])
    with pytest.raises(LPIterationLimit) as exc:
        simplex(-np.r_[rng.random(10), np.zeros(6)], A, np.ones(6), max_iter=1)
    assert exc.value.incumbent is not None


def test_shape_mismatch():
    with pytest.raises(ValueError):
        simplex([1, 2, 3], [[1, 1]], [1])


def test_random_problems_match_reference_solver():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(1)
    for _ in range(50):
        m, n = int(rng.integers(1, 6)), int(rng.integers(2, 9))
        A = rng.normal(size=(m, n))
        b = A @ rng.random(n)  # feasible by construction
        c = rng.random(n)  # non-negative costs keep it bounded
        ref = linprog(c, A_eq=A, b_eq=b, bounds=[(0, None)] * n, method="highs")
        res = simplex(c, A, b)
        assert res.objective == pytest.approx(ref.fun, abs=1e-8)
        np.testing.assert_allclose(A @ res.x, b, atol=1e-8)
