import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brancho import geometry
from brancho.errors import BadInterval, BranchoError, DegenerateCurve, VertexParameter
from brancho.geometry import Cone, PolyCurve, ball_first_last, cone_contains, proper_crossing, restrict

from .oracles import oracle_proper

coord = st.floats(-5, 5, allow_nan=False)
polylines = st.lists(st.tuples(coord, coord), min_size=2, max_size=7)


def test_cone_examples():
    c = Cone([0, 0], 1.0, [1, 0], 0.5)
    assert cone_contains(c, [0.5, 0])
    assert not cone_contains(c, [0, 0.5])
    assert not cone_contains(Cone([0, 0], 1.0, [1, 0], 0.5, side="plus"), [-0.5, 0])
    assert cone_contains(c, [-0.5, 0])


def test_cone_rejects_bad_parameters():
    with pytest.raises(BranchoError):
        Cone([0, 0], 1.0, [0, 0], 0.5)
    with pytest.raises(BranchoError):
        Cone([0, 0], 1.0, [1, 0], 1.5)


def test_cone_monotone_in_aperture_and_radius(rng):
    pts = rng.uniform(-2, 2, size=(500, 2))
    for side in ("two", "plus", "minus"):
        small = Cone([0.1, -0.2], 1.0, [1, 1], 0.3, side)
        wide = Cone([0.1, -0.2], 1.0, [1, 1], 0.6, side)
        far = Cone([0.1, -0.2], 1.5, [1, 1], 0.3, side)
        for p in pts:
            if cone_contains(small, p):
                assert cone_contains(wide, p)
                assert cone_contains(far, p)


def test_polycurve_basics():
    c = PolyCurve([[0, 0], [3, 4], [3, 4], [3, 5]])
    assert c.n_segments == 2
    assert c.length == pytest.approx(6.0)
    np.testing.assert_allclose(c.point_at(2.5), [1.5, 2.0])
    np.testing.assert_allclose(c.point_at(100.0), [3, 5])
    assert PolyCurve([[1, 1]]).is_constant


def test_restrict_examples():
    c = PolyCurve([[0, 0], [2, 0]])
    np.testing.assert_allclose(restrict(c, 0.5, 1.5).vertices, [[0.5, 0], [1.5, 0]])
    assert restrict(c, 1.0, 1.0).is_constant
    assert restrict(c, 0.5, 7.0).length == pytest.approx(1.5)
    with pytest.raises(BadInterval):
        restrict(c, 1.5, 0.5)


@given(polylines, st.floats(0, 1), st.floats(0, 1))
def test_restrict_additive(verts, u, w):
    c = PolyCurve(verts)
    L = c.length
    a, b = sorted((u * L, w * L))
    total = restrict(c, 0, a).length + restrict(c, a, b).length + restrict(c, b, L).length
    assert total == pytest.approx(L, abs=1e-9)


def test_straight_segment_crosses_properly():
    c = PolyCurve([[-1, 0], [1, 0]])
    res = proper_crossing(c, 1.0, 0.5, 0.5)
    assert res.proper
    np.testing.assert_allclose(c.point_at(res.t_in), [-0.5, 0], atol=1e-12)
    np.testing.assert_allclose(c.point_at(res.t_out), [0.5, 0], atol=1e-12)


def test_proper_crossing_errors():
    with pytest.raises(DegenerateCurve):
        proper_crossing(PolyCurve([[0, 0]]), 0.0, 0.1, 0.5)
    L = PolyCurve([[0, 0], [1, 0], [1, 1]])
    with pytest.raises(VertexParameter):
        proper_crossing(L, 1.0, 0.1, 0.5)
    with pytest.raises(BadInterval):
        proper_crossing(L, 0.0, 0.1, 0.5)


def test_l_shape_radius_scan():
    c = PolyCurve([[0, 0], [1, 0], [1, 1]])
    res = proper_crossing(c, 0.5, 0.3, 0.5)
    assert res.proper and res.t_in == pytest.approx(0.2) and res.t_out == pytest.approx(0.8)
    r_max = proper_crossing(c, 0.5, 0.1, 0.5).max_radius
    radii = np.arange(1e-4, 1.5, 1e-4)
    scan = [r for r in radii if oracle_proper(c, 0.5, r, 0.5)]
    assert abs(max(scan) - r_max) <= 1e-3
    for r in radii[::50]:
        assert proper_crossing(c, 0.5, r, 0.5).proper == (r <= r_max)


def test_proper_crossing_agrees_with_oracle(rng):
    checked = 0
    for _ in range(60):
        c = PolyCurve(rng.uniform(-1, 1, size=(int(rng.integers(2, 6)), 2)))
        t0 = float(rng.uniform(0.05, 0.95)) * c.length
        if np.min(np.abs(c.cum - t0)) < 1e-6:
            continue
        s = float(rng.uniform(0.1, 0.9))
        rmax = proper_crossing(c, t0, 0.01, s).max_radius
        for r in rng.uniform(0, 1.5, size=8):
            if abs(r - rmax) < 1e-7:
                continue
            assert proper_crossing(c, t0, float(r), s).proper == oracle_proper(c, t0, float(r), s)
            checked += 1
    assert checked > 300


def test_ball_first_last():
    c = PolyCurve([[-2, 0], [2, 0]])
    first, last = ball_first_last(c, [0, 0], 1.0)
    assert first == pytest.approx(1.0) and last == pytest.approx(3.0)
    assert ball_first_last(c, [0, 5], 1.0) is None


def test_eps_geom_setting_round_trip():
    old = geometry.eps_geom()
    try:
        geometry.set_eps_geom(1e-6)
        assert PolyCurve([[0, 0], [5e-7, 0]]).is_constant
    finally:
        geometry.set_eps_geom(old)
    assert not PolyCurve([[0, 0], [5e-7, 0]]).is_constant
