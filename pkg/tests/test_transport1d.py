import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyprune import transport1d as t1
from polyprune.polyfunc import Box, MaxAffine, l2_grid_distance
from polyprune.transport1d import DiscreteMeasure1D, Density1D

UNIFORM = Density1D.uniform()


def measure(rng, n):
    m = rng.random(n) + 0.05
    return DiscreteMeasure1D(rng.normal(size=n), m / m.sum())


def test_measure_validation_and_merging():
    mu = DiscreteMeasure1D([1.0, 0.0, 1.0], [0.25, 0.5, 0.25])
    assert mu.locations.tolist() == [0.0, 1.0] and mu.masses.tolist() == [0.5, 0.5]
    with pytest.raises(ValueError):
        DiscreteMeasure1D([0.0], [0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure1D([0.0, 1.0], [1.5, -0.5])


def test_ma_measure_examples():
    half = t1.ma_measure_1d(MaxAffine([[0.0], [1.0]], [0.0, 0.5]), UNIFORM)
    assert half.locations.tolist() == [0.0, 1.0] and np.allclose(half.masses, [0.5, 0.5], atol=1e-15)
    single = t1.ma_measure_1d(MaxAffine([[2.0]], [1.0]), UNIFORM)
    assert single.locations.tolist() == [2.0] and single.masses.tolist() == [1.0]
    tie = t1.ma_measure_1d(MaxAffine([[0.0], [1.0], [2.0]], [0.0, 0.75, 1.5]), UNIFORM)
    assert tie.locations.tolist() == [0.0, 2.0]
    assert np.allclose(tie.masses, [0.75, 0.25], atol=1e-15)


def test_push_forward_masses_are_cell_lengths():
    rng = np.random.default_rng(0)
    rho = Density1D([0.0, 0.4, 1.0], [3.0, 1.0])
    for _ in range(30):
        u = MaxAffine(rng.normal(size=(12, 1)), rng.normal(size=12))
        mu = t1.ma_measure_1d(u, rho)
        assert abs(mu.masses.sum() - 1.0) <= 1e-12
        slopes, knots = t1.active_cells(u, rho.a, rho.b)
        assert np.allclose(mu.masses, np.diff(rho.cdf(knots)), atol=1e-14)


def test_wasserstein_closed_forms():
    d0, d1, dh = DiscreteMeasure1D.dirac(0.0), DiscreteMeasure1D.dirac(1.0), DiscreteMeasure1D.dirac(0.5)
    two = DiscreteMeasure1D([0.0, 1.0], [0.5, 0.5])
    for p in (1, 2):
        assert t1.wasserstein_1d(two, two, p) == 0.0
        assert abs(t1.wasserstein_1d(d0, d1, p) - 1.0) <= 1e-12
        assert abs(t1.wasserstein_1d(two, dh, p) - 0.5) <= 1e-12


def test_wasserstein_metric_properties():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b, c = (measure(rng, int(rng.integers(1, 8))) for _ in range(3))
        for p in (1, 2):
            assert t1.wasserstein_1d(a, b, p) <= t1.wasserstein_1d(a, c, p) + t1.wasserstein_1d(c, b, p) + 1e-12
        assert t1.wasserstein_1d(a, b, 1) <= t1.wasserstein_1d(a, b, 2) + 1e-12


def test_wasserstein_matches_scipy_for_p1():
    from scipy.stats import wasserstein_distance

    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = measure(rng, 6), measure(rng, 9)
        ref = wasserstein_distance(a.locations, b.locations, a.masses, b.masses)
        assert t1.wasserstein_1d(a, b, 1) == pytest.approx(ref, abs=1e-12)


def test_quantize_examples():
    two = DiscreteMeasure1D([0.0, 1.0], [0.5, 0.5])
    nu, err = t1.quantize_1d(two, 1, 2)
    assert nu.locations.tolist() == [0.5] and err == 0.5
    same, zero = t1.quantize_1d(two, 2, 2)
    assert same is two and zero == 0.0
    assert t1.quantize_1d(two, 5, 1)[1] == 0.0


def test_quantize_error_is_the_wasserstein_distance():
    rng = np.random.default_rng(3)
    for _ in range(30):
        mu = measure(rng, 10)
        for p in (1, 2):
            nu, err = t1.quantize_1d(mu, 3, p)
            assert len(nu) <= 3
            assert err == pytest.approx(t1.wasserstein_1d(mu, nu, p), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5), st.sampled_from([1, 2]))
def test_quantize_matches_exhaustive_partitions(seed, n, p):
    mu = measure(np.random.default_rng(seed), 8)
    assert t1.quantize_1d(mu, n, p)[1] == t1.brute_force_quantize_1d(mu, n, p)


def test_contiguous_clusters_are_optimal_on_small_instances():
    # all (not only contiguous) assignments of 6 atoms to 2 points
    rng = np.random.default_rng(4)
    for _ in range(10):
        mu = measure(rng, 6)
        x, m = mu.locations, mu.masses
        best = np.inf
        for labels in itertools.product([0, 1], repeat=6):
            lab = np.array(labels)
            cost = 0.0
            for g in (0, 1):
                if np.any(lab == g):
                    xs, ms = x[lab == g], m[lab == g]
                    cost += ms @ (xs - ms @ xs / ms.sum()) ** 2
            best = min(best, cost)
        assert t1.quantize_1d(mu, 2, 2)[1] == pytest.approx(best**0.5, abs=1e-12)


def test_solve_ma_examples():
    u = t1.solve_ma_1d([0.0, 1.0], [0.5, 0.5], UNIFORM)
    assert u.intercepts.tolist() == [0.0, 0.5]
    single = t1.solve_ma_1d([3.0], [1.0], UNIFORM)
    assert single.n_terms == 1
    with pytest.raises(ValueError):
        t1.solve_ma_1d([1.0, 0.0], [0.5, 0.5], UNIFORM)
    with pytest.raises(ValueError):
        t1.solve_ma_1d([0.0, 1.0], [1.0, 0.0], UNIFORM)


def test_solve_ma_round_trip():
    rng = np.random.default_rng(5)
    rho = Density1D([0.0, 0.3, 0.5, 1.0], [2.0, 0.5, 1.0])
    for _ in range(50):
        n = int(rng.integers(1, 10))
        q = np.sort(rng.normal(size=n))
        nu = rng.random(n) + 0.01
        nu /= nu.sum()
        back = t1.ma_measure_1d(t1.solve_ma_1d(q, nu, rho), rho)
        assert np.abs(back.locations - q).max() <= 1e-10
        assert np.abs(back.masses - nu).max() <= 1e-10


def test_mean_zero_normalize():
    rng = np.random.default_rng(6)
    u = MaxAffine(rng.normal(size=(5, 1)), rng.normal(size=5))
    assert t1.mean_zero_normalize(u, u, UNIFORM) == u
    shifted = MaxAffine(u.slopes, u.intercepts - 1.0)
    assert np.allclose(t1.mean_zero_normalize(u, shifted, UNIFORM).intercepts, u.intercepts, atol=1e-13)
    for _ in range(20):
        v = MaxAffine(rng.normal(size=(4, 1)), rng.normal(size=4))
        w = t1.mean_zero_normalize(u, v, UNIFORM)
        exact = UNIFORM.integrate_poly(
            lambda x: u(np.atleast_1d(x)[:, None]) - w(np.atleast_1d(x)[:, None]),
            np.unique(np.r_[t1.active_cells(u, 0, 1)[1], t1.active_cells(w, 0, 1)[1]]),
        )
        assert abs(exact) <= 1e-10


def test_l2_exact():
    relu = MaxAffine([[0.0], [1.0]], [0.0, 0.0])
    zero = MaxAffine([[0.0]], [0.0])
    sym = Density1D.uniform(-1.0, 1.0)
    assert t1.l2_exact_1d(relu, relu, sym) == 0.0
    assert t1.l2_exact_1d(relu, zero, sym) == pytest.approx((1 / 6) ** 0.5, abs=1e-15)
    grid = l2_grid_distance(relu, zero, Box([-1.0], [1.0]), resolution=100_001)
    assert abs(grid - t1.l2_exact_1d(relu, zero, sym)) < 1e-9


def test_pipeline_examples():
    u = t1.tangent_lines(np.linspace(0.0, 1.0, 10))
    un, diag = t1.duality_pipeline_1d(u, 10, UNIFORM)
    assert diag.l2_error <= 1e-10 and diag.w2 == 0.0
    _, d2 = t1.duality_pipeline_1d(u, 2, UNIFORM)
    _, d3 = t1.duality_pipeline_1d(u, 3, UNIFORM)
    assert 0 < d3.l2_error < d2.l2_error
    for n in range(1, 11):
        _, d = t1.duality_pipeline_1d(u, n, UNIFORM)
        assert abs(d.mean_gap) <= 1e-10


def test_quantization_error_monotone_in_budget():
    u = t1.tangent_lines(np.linspace(0.0, 1.0, 10))
    for p in (1, 2):
        errs = [t1.duality_pipeline_1d(u, n, UNIFORM, p)[1] for n in range(1, 11)]
        w = [d.w1 if p == 1 else d.w2 for d in errs]
        assert all(b <= a + 1e-12 for a, b in zip(w, w[1:]))


def test_pipeline_errors_rank_correlated():
    from scipy.stats import spearmanr

    u = t1.tangent_lines(np.linspace(0.0, 1.0, 10))
    diags = [t1.duality_pipeline_1d(u, n, UNIFORM)[1] for n in range(1, 11)]
    rho, _ = spearmanr([d.w2 for d in diags], [d.l2_error for d in diags])
    assert rho > 0.8


def test_diagnostics_csv_header():
    u = t1.tangent_lines([0.0, 0.5, 1.0])
    rows = [t1.duality_pipeline_1d(u, n, UNIFORM)[1] for n in (1, 2, 3)]
    text = t1.diagnostics_csv(rows)
    assert text.splitlines()[0] == "n,W1,W2,L2err" and len(text.splitlines()) == 4
