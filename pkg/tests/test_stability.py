import math

import numpy as np
import pytest
from scipy.stats import wasserstein_distance

from brancho.errors import MassMismatch
from brancho.flow import EulerFlow
from brancho.measure import AtomicMeasure
from brancho.stability import (
    ExperimentConfig,
    discretize,
    flat_distance_estimate,
    run_experiment,
    wasserstein1,
)


def pos(points, weights):
    return AtomicMeasure(points, weights, positive=True)


def test_discretize_examples():
    grid = pos([[0.25, 0.5], [0.75, -1.0]], [0.2, 0.8])
    assert discretize(grid, 2).allclose(grid, tol=0)
    d = discretize(pos([[1 / 3, 0.0]], [1.0]), 2)
    assert d.allclose(pos([[0.25, 0.0]], [1.0]), tol=0)


def test_discretize_merges_and_preserves_mass(rng):
    mu = pos(rng.uniform(-1, 1, size=(30, 2)), rng.uniform(0.1, 1.0, size=30))
    for n in (1, 2, 4):
        d = discretize(mu, n)
        assert len(d) <= len(mu)
        assert math.fsum(d.weights) == pytest.approx(math.fsum(mu.weights), abs=1e-14)


def test_discretize_converges_in_w1(rng):
    mu = pos(rng.uniform(-1, 1, size=(4, 2)), rng.uniform(0.1, 1.0, size=4))
    prev = math.inf
    for n in (4, 8, 12):
        w = wasserstein1(discretize(mu, n), mu)
        assert w <= math.sqrt(2) * 2.0 ** (-n) * mu.total() + 1e-15
        assert w <= prev
        prev = w


def test_wasserstein_matches_one_dimensional_oracle(rng):
    for _ in range(10):
        xa, xb = rng.uniform(-1, 1, 4), rng.uniform(-1, 1, 3)
        wa, wb = rng.uniform(0.1, 1, 4), rng.uniform(0.1, 1, 3)
        wb *= wa.sum() / wb.sum()
        wb[-1] = wa.sum() - wb[:-1].sum()
        mu = pos(np.stack([xa, np.zeros(4)], 1), wa)
        nu = pos(np.stack([xb, np.zeros(3)], 1), wb)
        expect = wasserstein_distance(xa, xb, wa, wb) * wa.sum()
        assert wasserstein1(mu, nu) == pytest.approx(expect, abs=1e-9)


def test_wasserstein_needs_equal_mass():
    with pytest.raises(MassMismatch):
        wasserstein1(pos([[0, 0]], [1.0]), pos([[0, 0]], [2.0]))


def unit_edge(y=0.0, w=1.0):
    return EulerFlow.from_segments([[0, y]], [[1, y]], [w])


def test_flat_distance_examples():
    T = unit_edge()
    assert flat_distance_estimate(T, T) == 0.0
    assert flat_distance_estimate(T, EulerFlow.empty()) <= 1.0 + 1e-12
    h = 0.1
    # the rectangle filling costs its area h plus both short sides 2h
    assert flat_distance_estimate(T, unit_edge(h)) <= 3 * h + 1e-9


def test_flat_distance_between_lower_and_upper_bounds(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        T1 = EulerFlow.from_segments(rng.uniform(-1, 1, (n, 2)), rng.uniform(-1, 1, (n, 2)), rng.uniform(0.1, 1, n))
        T2 = EulerFlow.from_segments(rng.uniform(-1, 1, (n, 2)), rng.uniform(-1, 1, (n, 2)), rng.uniform(0.1, 1, n))
        est = flat_distance_estimate(T1, T2)
        D = T1 - T2
        a, b = D.segments()
        # constant unit 1-forms are closed with norm 1, so they bound the flat norm from below
        net_vector = np.linalg.norm((D.weights[:, None] * (b - a)).sum(axis=0))
        assert net_vector - 1e-9 <= est <= D.mass() + 1e-12


def test_flat_distance_in_three_dimensions():
    T1 = EulerFlow.from_segments([[0, 0, 0]], [[1, 0, 0]], [1.0])
    T2 = EulerFlow.from_segments([[0, 0, 0.1]], [[1, 0, 0.1]], [1.0])
    assert flat_distance_estimate(T1, T2) <= 2.0


def test_single_pair_transport_converges():
    x, y = [0.3, -0.2], [-0.45, 0.61]
    cfg = ExperimentConfig(pos([x], [1.0]), pos([y], [1.0]), [4, 6, 8, 10, 12], alpha=0.5)
    rep = run_experiment(cfg)
    exact = math.dist(x, y)
    assert rep.limit_energy == pytest.approx(exact)
    for r in rep.records:
        assert abs(r.energy - exact) <= 2 * math.sqrt(2) * 2.0 ** (-r.level) + 1e-12
        assert r.theta_bar_total == 0.0
    assert rep.energy_converged and rep.all_cancellation_free and rep.lsc_holds


def test_identical_marginals_cost_nothing():
    mu = pos([[0.1, 0.2], [0.7, -0.3]], [0.5, 0.5])
    rep = run_experiment(ExperimentConfig(mu, mu, [2, 4], alpha=0.5))
    assert rep.limit_energy == 0.0
    assert all(r.energy == 0.0 for r in rep.records)


def test_report_fields_and_uniform_bound():
    mm = pos([[-0.6, -0.45], [0.55, -0.5]], [0.5, 0.5])
    mp = pos([[0.05, 0.7]], [1.0])
    cfg = ExperimentConfig(
        mm, mp, [3, 5, 7], alpha=0.7, energy_bound=10.0, monitored_pairs=[((-0.6, -0.45), (0.05, 0.7))]
    )
    rep = run_experiment(cfg)
    assert [r.level for r in rep.records] == [3, 5, 7]
    for r in rep.records:
        assert r.flat_distance >= 0 and r.w1_minus >= 0 and r.w1_plus >= 0
        assert r.quasi_cycle_masses == [0.0]
    assert rep.uniform_bound_holds
    assert rep.limit_cancellation_free
    js = rep.to_json()
    assert len(js["levels"]) == 3 and len(rep.csv_rows()) == 3


def test_config_rejects_mass_mismatch():
    with pytest.raises(MassMismatch):
        ExperimentConfig(pos([[0, 0]], [1.0]), pos([[1, 1]], [0.5]), [2])
