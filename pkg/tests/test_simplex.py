import numpy as np
import pytest
from scipy.optimize import linprog

from polyprune.simplex import InfeasibleLP, UnboundedLP, solve_standard_form


def _random_lp(rng):
    m, n = int(rng.integers(2, 8)), int(rng.integers(8, 30))
    A = rng.normal(size=(m, n))
    x0 = rng.random(n) * (rng.random(n) < 0.5)
    b = A @ x0
    c = rng.normal(size=n) + A.T @ rng.normal(size=m)
    return c, A, b


def test_matches_highs_on_random_instances():
    rng = np.random.default_rng(1)
    for i in range(150):
        c, A, b = _random_lp(rng)
        if i % 3 == 0:
            c = np.abs(c)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        if ref.status == 3:
            with pytest.raises(UnboundedLP):
                solve_standard_form(c, A, b)
            continue
        res = solve_standard_form(c, A, b)
        assert res.fun == pytest.approx(ref.fun, abs=1e-7)
        assert np.abs(A @ res.x - b).max() < 1e-8
        assert res.x.min() >= 0
        # strong duality and dual feasibility
        assert b @ res.duals == pytest.approx(res.fun, abs=1e-7)
        assert np.min(c - A.T @ res.duals) > -1e-8


def test_infeasible():
    A = np.array([[1.0, 1.0]])
    with pytest.raises(InfeasibleLP):
        solve_standard_form([1.0, 1.0], A, [-1.0])


def test_degenerate_instance_terminates():
    # many parallel constraints through one vertex: classic cycling bait
    rng = np.random.default_rng(7)
    m, n = 6, 40
    A = np.hstack([rng.integers(-2, 3, size=(m, n - m)).astype(float), np.eye(m)])
    b = np.zeros(m)
    b[0] = 1.0
    A[0] = np.abs(A[0]) + 1.0
    c = rng.integers(-3, 3, size=n).astype(float)
    ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    for limit in (0, 5, 20):
        if ref.status == 3:
            with pytest.raises(UnboundedLP):
                solve_standard_form(c, A, b, degenerate_limit=limit)
        else:
            assert solve_standard_form(c, A, b, degenerate_limit=limit).fun == pytest.approx(ref.fun, abs=1e-8)


def test_warm_basis_used():
    A = np.array([[1.0, 1.0, 1.0, 0.0], [1.0, -1.0, 0.0, 1.0]])
    b = np.array([4.0, 1.0])
    c = np.array([-1.0, -2.0, 0.0, 0.0])
    cold = solve_standard_form(c, A, b)
    warm = solve_standard_form(c, A, b, basis=[2, 3])
    assert cold.fun == warm.fun == -8.0
