"""Named test instances and seeded random plan generators."""

from __future__ import annotations

import numpy as np

from .flow import simple_atoms
from .measure import AtomicMeasure
from .plan import TrafficPlan

SQUARE_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def head_on(m: float = 0.5, x=(0.0, 0.0), y=(1.0, 0.0)) -> TrafficPlan:
    """``x -> y`` and ``y -> x`` with equal masses: full cancellation."""
    return TrafficPlan.from_lists([(m, [x, y]), (m, [y, x])])


def extended_head_on(m: float = 0.5) -> TrafficPlan:
    """Head-on pair overlapping on ``[0, 1] x {0}`` but with four distinct endpoints."""
    return TrafficPlan.from_lists([(m, [[-1.0, 0.0], [2.0, 0.0]]), (m, [[3.0, 0.0], [-2.0, 0.0]])])


def two_loops(m1: float = 0.5, m2: float = 0.25) -> TrafficPlan:
    """Two disjoint head-on pairs of different strength."""
    return head_on(m1) + head_on(m2, x=(0.0, 2.0), y=(1.0, 2.0))


def y_plan(m1: float = 1.0, m2: float = 1.0, h: float = 1.0, tail: float = 1.0) -> TrafficPlan:
    """Sources ``(±1, 0)`` merging at ``(0, h)`` and continuing to ``(0, h + tail)``."""
    b, t = [0.0, h], [0.0, h + tail]
    return TrafficPlan.from_lists([(m1, [[-1.0, 0.0], b, t]), (m2, [[1.0, 0.0], b, t])])


def y_marginals(h: float = 3.0) -> tuple[AtomicMeasure, AtomicMeasure]:
    return (
        AtomicMeasure([[-1.0, 0.0], [1.0, 0.0]], [0.5, 0.5], positive=True),
        AtomicMeasure([[0.0, h]], [1.0], positive=True),
    )


def p_shaped(m: float = 1.0) -> TrafficPlan:
    """Single curve running up a stem, around a loop and back down the stem."""
    return TrafficPlan.from_lists(
        [(m, [[0.0, 0.0], [0.0, 2.0], [1.0, 2.0], [1.0, 3.0], [0.0, 3.0], [0.0, 2.0], [0.0, 1.0], [-1.0, 1.0]])]
    )


def figure_eight(m: float = 1.0) -> TrafficPlan:
    return TrafficPlan.from_lists([(m, [[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]])])


def square_cycle(m: float = 0.25) -> TrafficPlan:
    """Four atoms circulating around the unit square with 2+2 disjoint marginals.

    Two atoms go most of the way around, so corners ``c0`` and ``c2`` are
    visited in both orders.
    """
    c0, c1, c2, c3 = SQUARE_CORNERS.tolist()
    sa, sb = [-0.5, -0.5], [1.5, 1.5]
    ta, tb = [1.5, -0.5], [-0.5, 1.5]
    return TrafficPlan.from_lists(
        [
            (m, [sa, c0, c1, c2, c3, tb]),
            (m, [sb, c2, c3, c0, c1, ta]),
            (m, [sa, c0, c1, ta]),
            (m, [sb, c2, c3, tb]),
        ]
    )


# ---------------------------------------------------------------------------
# random generators


def random_polyline(rng: np.random.Generator, n_vertices: int, scale: float = 1.0) -> np.ndarray:
    pts = rng.uniform(-scale, scale, size=(n_vertices, 2))
    return pts


def random_plan(
    rng: np.random.Generator,
    n_atoms: int | None = None,
    lattice: bool = False,
    simple_only: bool = False,
    max_tries: int = 200,
) -> TrafficPlan:
    """Random plan in ``[-1, 1]^2``; ``lattice=True`` snaps vertices to a coarse grid so curves overlap."""
    for _ in range(max_tries):
        k = n_atoms if n_atoms is not None else int(rng.integers(1, 6))
        items = []
        for _ in range(k):
            nv = int(rng.integers(2, 5))
            if lattice:
                pts = rng.integers(-2, 3, size=(nv, 2)) / 2.0
                # axis-aligned moves keep overlaps collinear
                path = [pts[0]]
                for p in pts[1:]:
                    path.append(np.array([p[0], path[-1][1]]))
                    path.append(p)
                pts = np.array(path)
                keep = [0] + [i for i in range(1, len(pts)) if np.any(pts[i] != pts[i - 1])]
                pts = pts[keep]
                if len(pts) < 2:
                    continue
            else:
                pts = random_polyline(rng, nv)
            items.append((float(rng.uniform(0.1, 1.0)), pts))
        if not items:
            continue
        P = TrafficPlan.from_lists(items)
        if simple_only and simple_atoms(P):
            continue
        return P
    raise RuntimeError("could not draw a plan satisfying the constraints")


def random_quasi_cycle_plan(rng: np.random.Generator, max_tries: int = 500):
    """Simple-curve plan with mass running near ``x -> y`` and ``y -> x``.

    Returns ``(plan, x, y, eps0)`` with ``eps0 <= |y - x| / 8``.
    """
    for _ in range(max_tries):
        x = rng.uniform(-0.6, 0.6, size=2)
        y = rng.uniform(-0.6, 0.6, size=2)
        dist = float(np.linalg.norm(y - x))
        if dist < 0.5:
            continue
        eps0 = dist / 8.0 * float(rng.uniform(0.3, 1.0))
        jit = 0.5 * eps0

        def near(c):
            r = jit * np.sqrt(rng.uniform())
            th = rng.uniform(0, 2 * np.pi)
            return c + r * np.array([np.cos(th), np.sin(th)])

        def far():
            return rng.uniform(-1.0, 1.0, size=2)

        items = []
        for _ in range(int(rng.integers(1, 4))):
            items.append((float(rng.uniform(0.1, 1.0)), [far(), near(x), near(y), far()]))
        for _ in range(int(rng.integers(1, 4))):
            items.append((float(rng.uniform(0.1, 1.0)), [far(), near(y), near(x), far()]))
        for _ in range(int(rng.integers(0, 2))):
            a, b = (x, y) if rng.uniform() < 0.5 else (y, x)
            items.append((float(rng.uniform(0.1, 1.0)), [far(), near(a), near(b), near(a), far()]))
        for _ in range(int(rng.integers(0, 3))):
            items.append((float(rng.uniform(0.1, 1.0)), random_polyline(rng, int(rng.integers(2, 4)))))
        P = TrafficPlan.from_lists(items)
        if simple_atoms(P):
            continue
        return P, x, y, eps0
    raise RuntimeError("could not draw a quasi-cycle plan")
