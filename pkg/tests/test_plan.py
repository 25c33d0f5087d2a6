import math

import numpy as np
import pytest

from brancho.errors import BranchoError
from brancho.fixtures import head_on, random_plan, y_plan
from brancho.plan import TrafficPlan, alpha_energy, marginals, truncate_outside_ball
from brancho.regions import Ball, Union

from .oracles import edge_multiplicities, energy_by_walking


def test_marginals_examples():
    mm, mp = marginals(TrafficPlan.from_lists([(1.0, [[0, 0], [1, 0]])]))
    assert mm.weight_at([0, 0]) == 1.0 and mp.weight_at([1, 0]) == 1.0
    mm, _ = marginals(TrafficPlan.from_lists([(0.3, [[0, 0], [1, 0]]), (0.7, [[0, 0], [0, 1]])]))
    assert len(mm) == 1 and mm.total() == pytest.approx(1.0)
    mm, mp = marginals(TrafficPlan())
    assert len(mm) == len(mp) == 0


def test_identical_curves_share_one_edge():
    net = TrafficPlan.from_lists([(0.5, [[0, 0], [1, 0]]), (0.5, [[0, 0], [1, 0]])]).network
    assert net.n_edges == 1
    assert (net.theta[0], net.Theta[0], net.theta_vec[0], net.theta_bar[0]) == (1.0, 1.0, 1.0, 0.0)


def test_head_on_network():
    m = 0.5
    net = head_on(m).network
    assert net.n_edges == 1
    assert net.theta[0] == 2 * m and net.Theta[0] == 2 * m and net.theta_vec[0] == 0.0
    assert net.theta_plus[0] == net.theta_minus[0] == net.theta_bar[0] == m


def test_self_crossing_curve():
    # (0,0) -> (2,2) -> (2,0) -> (0,2): crosses itself at (1,1); the
    # middle leg (2,2)->(2,0) is untouched, so the overlay has 5 edges
    P = TrafficPlan.from_lists([(1.0, [[0, 0], [2, 2], [2, 0], [0, 2]])])
    net = P.network
    assert len(net.vertices) == 5
    assert net.n_edges == 5
    centre = int(np.argmin(np.linalg.norm(net.vertices - [1, 1], axis=1)))
    assert np.sum(net.vertex_walks[0] == centre) == 2
    assert np.all(net.Theta == 1.0)


def test_energy_examples():
    assert alpha_energy(TrafficPlan.from_lists([(1.0, [[0, 0], [1, 0]])]), 0.5) == pytest.approx(1.0)
    parallel = TrafficPlan.from_lists([(0.5, [[0, 0], [1, 0]]), (0.5, [[0, 1], [1, 1]])])
    assert alpha_energy(parallel, 0.5) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert alpha_energy(head_on(0.5), 0.5) == pytest.approx(1.0)


def test_energy_rejects_bad_alpha():
    with pytest.raises(BranchoError):
        alpha_energy(head_on(), 0.0)
    with pytest.raises(BranchoError):
        alpha_energy(head_on(), 1.5)


def test_truncate_outside_ball():
    c = TrafficPlan.from_lists([(1.0, [[-2, 0], [2, 0]])]).atoms[0].curve
    np.testing.assert_allclose(truncate_outside_ball(c, [0, 0], 1.0, "head").vertices, [[-2, 0], [-1, 0]])
    np.testing.assert_allclose(truncate_outside_ball(c, [0, 0], 1.0, "tail").vertices, [[1, 0], [2, 0]])
    head = truncate_outside_ball(c, [0, 5], 1.0, "head")
    assert head.is_constant and np.allclose(head.start, [-2, 0])


@pytest.mark.parametrize("lattice", [False, True])
def test_network_matches_walking_oracle(rng, lattice):
    for _ in range(25):
        P = random_plan(rng, lattice=lattice)
        net = P.network
        for e in range(net.n_edges):
            th, Th, vec = edge_multiplicities(P, *net.edge_points(e))
            assert net.theta[e] == pytest.approx(th, abs=1e-12)
            assert net.Theta[e] == pytest.approx(Th, abs=1e-12)
            assert net.theta_vec[e] == pytest.approx(vec, abs=1e-12)
        assert np.all(np.abs(net.theta_vec) <= net.Theta + 1e-12)
        assert np.all(net.theta <= net.Theta + 1e-12)
        alpha = float(rng.uniform(0.1, 1.0))
        assert alpha_energy(P, alpha) == pytest.approx(energy_by_walking(P, alpha), rel=1e-12)


def test_overlay_exactness(rng):
    for lattice in (False, True):
        for _ in range(20):
            P = random_plan(rng, lattice=lattice)
            net = P.network
            lhs = math.fsum(net.lengths * net.Theta)
            rhs = math.fsum(a.mass * a.curve.length for a in P.atoms)
            assert lhs == pytest.approx(rhs, abs=1e-9)


def test_marginals_balance(rng):
    for _ in range(20):
        P = random_plan(rng, lattice=True)
        mm, mp = marginals(P)
        assert mm.total() == pytest.approx(P.total_mass, abs=1e-12)
        assert mp.total() == pytest.approx(P.total_mass, abs=1e-12)


def test_localized_energy_additivity(rng):
    for _ in range(20):
        P = random_plan(rng, lattice=bool(rng.integers(2)))
        alpha = float(rng.uniform(0.2, 1.0))
        c1, c2 = rng.uniform(-1, 1, size=(2, 2))
        r1, r2 = rng.uniform(0.1, 1.0, size=2)
        A, B = Ball(c1, r1), Ball(c2, r2)
        joint = alpha_energy(P, alpha, Union((A, B)))
        assert joint <= alpha_energy(P, alpha, A) + alpha_energy(P, alpha, B) + 1e-12
        if np.linalg.norm(c1 - c2) > r1 + r2:
            assert joint == pytest.approx(alpha_energy(P, alpha, A) + alpha_energy(P, alpha, B), abs=1e-12)
        assert alpha_energy(P, alpha, A) <= alpha_energy(P, alpha) + 1e-12


def test_energy_monotone_in_alpha(rng):
    # theta^(alpha-1) grows with alpha when theta >= 1 and shrinks when theta <= 1
    alphas = np.linspace(0.1, 1.0, 10)
    for _ in range(10):
        P = random_plan(rng)
        heavy = TrafficPlan([(a.curve, a.mass + 1.0) for a in P.atoms])
        light = TrafficPlan([(a.curve, a.mass / (2 * P.total_mass)) for a in P.atoms])
        e_heavy = [alpha_energy(heavy, a) for a in alphas]
        e_light = [alpha_energy(light, a) for a in alphas]
        assert all(x <= y + 1e-12 for x, y in zip(e_heavy, e_heavy[1:]))
        assert all(x >= y - 1e-12 for x, y in zip(e_light, e_light[1:]))


def test_plan_json_round_trip():
    P = y_plan(0.3, 0.7)
    Q = TrafficPlan.from_json(P.to_json())
    assert len(Q) == 2
    for a, b in zip(P.atoms, Q.atoms):
        assert a.mass == b.mass and np.array_equal(a.curve.vertices, b.curve.vertices)


def test_radius_check():
    with pytest.raises(BranchoError):
        y_plan().check_radius(1.0)
    y_plan().check_radius(3.0)
