"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they are
produced; they are also repeated in the terminal summary. The quantum
benchmark and the pricing sweep take several minutes each.
"""
import json
import time

import numpy as np
import pytest

from polyprune import pricing as pr
from polyprune import quantum as qm
from polyprune import transport1d as t1
from polyprune.cli import main
from polyprune.kcenter import brute_force_kcenter, greedy_kcenter, kcenter_error_bound
from polyprune.polyfunc import Box, MaxAffine
from polyprune.redundancy import prune_redundant

from conftest import SIX_TERMS, random_max_affine

pytestmark = pytest.mark.acceptance


def random_unitaries(rng, n):
    Z = rng.normal(size=(n, 4, 4)) + 1j * rng.normal(size=(n, 4, 4))
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[:, None, :]


def test_kcenter_two_approximation(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst, n_inst = 0.0, 150
    ok = True
    for _ in range(n_inst):
        N, d = int(rng.integers(1, 11)), int(rng.integers(1, 4))
        n = int(rng.integers(1, min(N, 4) + 1))
        P = rng.normal(size=(N, d))
        g = greedy_kcenter(P, n).radius
        b = brute_force_kcenter(P, n).radius
        ok &= g <= 2 * b
        if b > 0:
            worst = max(worst, g / b)
    secs = time.perf_counter() - t0
    passed = bool(ok) and secs < 10
    acceptance("criterion 1 (k-center 2-approximation)", passed, f"{n_inst} instances, worst ratio {worst:.3f}, {secs:.1f}s")
    assert passed


def test_clustering_error_bound(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    cases = [(MaxAffine.from_terms(SIX_TERMS), Box([-3.0, -3.0], [3.0, 3.0]), n) for n in range(1, 6)]
    for _ in range(50):
        d, N = int(rng.integers(1, 4)), int(rng.integers(2, 31))
        cases.append((random_max_affine(rng, N, d), Box.cube(d, -2.0, 2.0), int(rng.integers(1, N))))
    violations = 0
    for u, box, n in cases:
        res = greedy_kcenter(u.lifted_points(), n)
        X = box.sample(10_000, rng)
        # both envelopes from one matrix of affine values, so u_S <= u_N holds bit for bit
        vals = u.affine_values(X)
        gap = vals.max(axis=1) - vals[:, list(res.selected)].max(axis=1)
        bound = res.radius * np.sqrt(np.einsum("ij,ij->i", X, X) + 1.0)
        assert np.allclose(bound[:3], [kcenter_error_bound(res.radius, x) for x in X[:3]])
        violations += int(np.sum(gap < 0) + np.sum(gap > bound))
    secs = time.perf_counter() - t0
    passed = violations == 0 and secs < 30
    acceptance("criterion 2 (clustering error bound)", passed, f"{len(cases)} instances x 1e4 points, {violations} violations, {secs:.1f}s")
    assert passed


def test_redundancy_soundness(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(30):
        d, N = int(rng.integers(1, 4)), int(rng.integers(2, 31))
        u = random_max_affine(rng, N, d)
        box = Box.cube(d, -1.0, 1.0)
        A = prune_redundant(u, box)
        X = box.sample(10_000, rng)
        worst = max(worst, float(np.abs(u(X) - u.restrict(A)(X)).max()))
    six_terms = MaxAffine.from_terms(SIX_TERMS)
    X = Box([-3.0, -3.0], [3.0, 3.0]).sample(10_000, rng)
    A = prune_redundant(six_terms, Box([-3.0, -3.0], [3.0, 3.0]))
    worst = max(worst, float(np.abs(six_terms(X) - six_terms.restrict(A)(X)).max()))
    middle = prune_redundant(MaxAffine([[1.0], [2.0], [0.0]], [0.0, 10.0, 0.0]), Box([0.0], [1.0])).tolist()
    secs = time.perf_counter() - t0
    passed = worst <= 1e-9 and middle == [0, 2] and secs < 10
    acceptance("criterion 3 (redundancy soundness)", passed, f"max sampled gap {worst:.2e}, middle case keeps {middle}, {secs:.1f}s")
    assert passed


def test_transport_oracles(acceptance):
    t0 = time.perf_counter()
    mismatches = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(8, 13))
        m = rng.random(k) + 0.05
        mu = t1.DiscreteMeasure1D(rng.normal(size=k), m / m.sum())
        for n in range(1, 6):
            for p in (1, 2):
                mismatches += t1.quantize_1d(mu, n, p)[1] != t1.brute_force_quantize_1d(mu, n, p)
    two = t1.DiscreteMeasure1D([0.0, 1.0], [0.5, 0.5])
    closed = [
        (t1.wasserstein_1d(two, two, 2), 0.0),
        (t1.wasserstein_1d(t1.DiscreteMeasure1D.dirac(0.0), t1.DiscreteMeasure1D.dirac(1.0), 2), 1.0),
        (t1.wasserstein_1d(two, t1.DiscreteMeasure1D.dirac(0.5), 2), 0.5),
    ]
    w_err = max(abs(a - b) for a, b in closed)
    rho = t1.Density1D([0.0, 0.3, 1.0], [2.0, 4.0 / 7.0])
    rng = np.random.default_rng(99)
    trip = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 12))
        q = np.sort(rng.normal(size=n))
        nu = rng.random(n) + 0.01
        nu /= nu.sum()
        back = t1.ma_measure_1d(t1.solve_ma_1d(q, nu, rho), rho)
        trip = max(trip, float(np.abs(back.locations - q).max()), float(np.abs(back.masses - nu).max()))
    secs = time.perf_counter() - t0
    passed = mismatches == 0 and w_err <= 1e-12 and trip <= 1e-10 and secs < 20
    acceptance(
        "criterion 4 (1D transport oracles)",
        passed,
        f"{mismatches} quantizer mismatches, closed-form error {w_err:.1e}, round-trip error {trip:.1e}, {secs:.1f}s",
    )
    assert passed


def test_tangent_budget_trend(acceptance):
    t0 = time.perf_counter()
    u = t1.tangent_lines(np.linspace(0.0, 1.0, 10))
    rho = t1.Density1D.uniform()
    diags = [t1.duality_pipeline_1d(u, n, rho)[1] for n in range(1, 11)]
    l2 = [d.l2_error for d in diags]
    w2 = [d.w2 for d in diags]
    secs = time.perf_counter() - t0

    def monotone(v):
        return all(b <= a + 1e-9 for a, b in zip(v, v[1:]))

    passed = monotone(l2) and monotone(w2) and l2[-1] <= 1e-9 and w2[-1] <= 1e-9 and secs < 5
    bumps = [n + 2 for n, (a, b) in enumerate(zip(l2, l2[1:])) if b > a + 1e-9]
    acceptance(
        "criterion 5 (budget trend for 10 tangents)",
        passed,
        f"W2 monotone={monotone(w2)}, L2 monotone={monotone(l2)} (increases at n={bumps}), "
        f"final L2={l2[-1]:.1e} W2={w2[-1]:.1e}, {secs:.2f}s",
    )
    assert passed


def test_quantum_value_iteration_exact(acceptance):
    t0 = time.perf_counter()
    eps, tau, r = 0.05, 0.1, 3.0
    e = qm.init_ensemble(eps, tau, r)
    for _ in range(3):
        e = qm.propagate_step(e)
    worst = 0.0
    for U in random_unitaries(np.random.default_rng(5), 100):
        worst = max(worst, abs(qm.eval_value(e, U) - qm.brute_force_value(U, 3, eps, tau, r)))
    secs = time.perf_counter() - t0
    passed = len(e) == 1331 and worst <= 1e-8 and secs < 60
    acceptance("criterion 6 (exact dynamic programming)", passed, f"{len(e)} entries, max error {worst:.1e} at 100 unitaries, {secs:.1f}s")
    assert passed


@pytest.mark.slow
def test_quantum_benchmarks(acceptance):
    plane = qm.run_value_iteration(qm.QuantumConfig(**qm.PLANE_CONFIG), "kcenter-lp", 100)
    ax, V = qm.grid_eval(plane.ensemble)
    along_xx, along_yy = qm.strip_means(ax, V)
    margin = 1.0 - along_xx / along_yy

    t0 = time.perf_counter()
    rows, _ = qm.benchmark_run(qm.QuantumConfig(**qm.SCALED_CONFIG), workers=1)
    secs = time.perf_counter() - t0
    mean = {(r["method"], r["budget"]): r["mean_value"] for r in rows}
    order_ok = all(mean[("kcenter-lp", b)] <= mean[("pgd-sdp", b)] + 1e-6 for b in (20, 50))
    passed = along_xx < along_yy and margin >= 0.10 and order_ok and secs < 600
    per_budget = ", ".join(f"n={b}: kcenter-lp {mean[('kcenter-lp', b)]:.3f} vs pgd-sdp {mean[('pgd-sdp', b)]:.3f}" for b in (20, 50))
    acceptance(
        "criterion 7 (quantum benchmarks)",
        passed,
        f"strip means {along_xx:.2f} < {along_yy:.2f} (margin {margin:.1%}); scaled {per_budget}; scaled runtime {secs:.0f}s",
    )
    assert passed


def test_pricing_oracles(acceptance):
    t0 = time.perf_counter()
    one = pr.ClientPopulation([[1.0, 1.0]], [1.0])
    _, rep1 = pr.solve_rochet_chone(one, (0.0, 3.0), [0.0, 0.0], report=True)
    two = pr.ClientPopulation([[1.0], [2.0]], [0.5, 0.5])
    _, rep2 = pr.solve_rochet_chone(two, (0.0, 10.0), [0.0], report=True)
    obj_err = max(abs(rep1.objective - 1.0), abs(rep2.objective - 1.0))
    viol = max(rep1.violation, rep2.violation)
    ratio_err = 0.0
    for d in (2, 3, 6):
        pop = pr.generate_clients(d, 100, seed=d)
        r = np.full(d, 0.1)
        full, rep = pr.solve_rochet_chone(pop, r=r, report=True)
        viol = max(viol, rep.violation, pr.constraint_violation(full, pop, r=r))
        reference = pr.evaluate_revenue(full.with_outside(r), pop)[0]
        for method in pr.PRICING_METHODS:
            ratio = pr.evaluate_revenue(pr.prune_menu(full, len(pop), method, pop, r), pop, reference)[1]
            ratio_err = max(ratio_err, abs(ratio - 1.0))
    secs = time.perf_counter() - t0
    passed = obj_err <= 1e-4 and viol <= 1e-6 and ratio_err <= 1e-6 and secs < 30
    acceptance(
        "criterion 8 (pricing oracles)",
        passed,
        f"objective error {obj_err:.1e}, max violation {viol:.1e}, full-budget ratio error {ratio_err:.1e}, {secs:.1f}s",
    )
    assert passed


@pytest.mark.slow
def test_pricing_batch_sweep(acceptance):
    t0 = time.perf_counter()
    cfg = pr.PricingConfig()
    rows = pr.batch_experiment(cfg, workers=1)
    secs = time.perf_counter() - t0
    ratios = np.array([r["ratio"] for r in rows])
    in_range = bool(np.all((ratios >= 0) & (ratios <= 1 + 1e-6)))
    ir_ok = all(r["ir_gap"] <= 1e-9 for r in rows)
    bad = []
    for d in cfg.dims:
        for m in cfg.methods:
            means = [np.mean([r["ratio"] for r in rows if (r["dim"], r["method"], r["budget"]) == (d, m, n)]) for n in cfg.budgets]
            if any(b < a for a, b in zip(means, means[1:])):
                bad.append(f"{m}@d={d}")
    passed = len(rows) == 3 * 10 * 4 * 3 and in_range and ir_ok and not bad and secs < 900
    acceptance(
        "criterion 9 (pricing batch sweep)",
        passed,
        f"{len(rows)} runs, ratios in [{ratios.min():.3f}, {ratios.max():.6f}], IR ok={ir_ok}, "
        f"non-monotone means: {bad or 'none'}, {secs:.0f}s",
    )
    assert passed


def _strip_timing(text: str) -> str:
    lines = text.splitlines()
    header = lines[0].split(",")
    if "seconds" not in header:
        return text
    j = header.index("seconds")
    return "\n".join(",".join(c for i, c in enumerate(line.split(",")) if i != j) for line in lines)


def test_cli_determinism(acceptance, tmp_path):
    six_terms = tmp_path / "six_terms.json"
    six_terms.write_text(json.dumps({"dim": 2, "terms": SIX_TERMS}))
    configs = {
        "prune": dict(input=str(six_terms), method="kcenter-lp", budget=3, lo=[-3, -3], hi=[3, 3], seed=3),
        "duality1d": dict(),
        "quantum": dict(tau=0.2, steps=3, r=1.3, budgets=[20, 60], methods=["kcenter", "kcenter-lp"], grid_resolution=21),
        "pricing": dict(dims=[2, 3], n_clients=60, batch_size=20, budgets=[5, 10], seed=4),
    }
    differing = []
    for sub, fields in configs.items():
        cfg = tmp_path / f"{sub}.json"
        cfg.write_text(json.dumps({"version": 1, **fields}))
        outputs = []
        for run, workers in enumerate((1, 1, 2)):
            out = tmp_path / f"{sub}-{run}"
            assert main([sub, "--config", str(cfg), "--out-dir", str(out), "--workers", str(workers)]) == 0
            outputs.append({p.name: _strip_timing(p.read_text()) for p in sorted(out.glob("*.csv"))})
        if not outputs[0] or any(o != outputs[0] for o in outputs[1:]):
            differing.append(sub)
    passed = not differing
    acceptance("criterion 10 (CLI determinism)", passed, f"4 subcommands x 3 runs (workers 1, 1, 2); differing: {differing or 'none'}")
    assert passed
