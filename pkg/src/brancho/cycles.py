"""Cancellations, Lagrangian cycles and the quasi-cycle shortcut with its energy certificate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import BranchoError, EpsTooLarge, NegativeResidual, NoQuasiCycle, NonSimpleAtom, check_alpha
from .flow import EulerFlow, cone_over, flow_sum, induce_flow, simple_atoms
from .geometry import PolyCurve, ball_first_last, restrict, sphere_hits
from .measure import AtomicMeasure
from .plan import TrafficPlan, WeightedCurve, alpha_energy, marginals
from .regions import Ball, SliceFunction, annulus
from .slicing import level_profile

# ---------------------------------------------------------------------------
# cancellations


@dataclass
class CancellationReport:
    edges: np.ndarray
    cancelled_length: float
    max_theta_bar: float
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    theta_bar: np.ndarray
    identity_holds: bool

    @property
    def has_cancellations(self) -> bool:
        return len(self.edges) > 0

    def to_json(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "cancelled_length": self.cancelled_length,
            "max_theta_bar": self.max_theta_bar,
            "per_edge": [
                {"edge": int(e), "theta_plus": float(self.theta_plus[e]),
                 "theta_minus": float(self.theta_minus[e]), "theta_bar": float(self.theta_bar[e])}
                for e in self.edges
            ],
            "identity_holds": self.identity_holds,
        }


def directional_multiplicities(P: TrafficPlan) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    net = P.network
    return net.theta_plus, net.theta_minus, net.theta_bar


def cancellation_report(P: TrafficPlan) -> CancellationReport:
    net = P.network
    tb = net.theta_bar
    idx = np.flatnonzero(tb > 0)
    clean = tb == 0
    scale = max(1.0, P.total_mass)
    identity = bool(np.all(np.abs(np.abs(net.theta_vec[clean]) - net.Theta[clean]) <= 1e-12 * scale))
    return CancellationReport(
        edges=idx,
        cancelled_length=float(math.fsum(net.lengths[idx])),
        max_theta_bar=float(tb.max()) if len(tb) else 0.0,
        theta_plus=net.theta_plus,
        theta_minus=net.theta_minus,
        theta_bar=tb,
        identity_holds=identity,
    )


def cancellation_set(P: TrafficPlan) -> np.ndarray:
    """Indices of network edges carrying flow in both directions."""
    return np.flatnonzero(P.network.theta_bar > 0)


# ---------------------------------------------------------------------------
# Γ sets


def gamma_members(P: TrafficPlan, x, y, eps: float) -> np.ndarray:
    """Atoms meeting ``B̄_eps(x)`` at some ``s`` and ``B̄_eps(y)`` at some ``t >= s``."""
    x = geometry.as_point(x)
    y = geometry.as_point(y)
    out = np.zeros(len(P), dtype=bool)
    for i, a in enumerate(P.atoms):
        fx = ball_first_last(a.curve, x, eps)
        if fx is None:
            continue
        fy = ball_first_last(a.curve, y, eps)
        if fy is None:
            continue
        out[i] = fx[0] <= fy[1] + geometry.EPS_GEOM
    return out


def gamma_mass(P: TrafficPlan, x, y, eps: float = 0.0) -> float:
    if eps < 0:
        raise BranchoError("eps must be nonnegative")
    mask = gamma_members(P, x, y, eps)
    return float(math.fsum(P.masses[mask])) if len(P) else 0.0


@dataclass(frozen=True)
class LagrangianCycle:
    x: tuple
    y: tuple
    forward_mass: float
    backward_mass: float

    @property
    def strength(self) -> float:
        return min(self.forward_mass, self.backward_mass)

    def to_json(self) -> dict:
        return {
            "x": list(self.x),
            "y": list(self.y),
            "forward_mass": self.forward_mass,
            "backward_mass": self.backward_mass,
            "strength": self.strength,
        }


def _visit_positions(P: TrafficPlan):
    """Candidate points plus first/last walk positions of every atom at each of them."""
    net = P.network
    nv = len(net.vertices)
    hot = np.flatnonzero(net.theta_bar > 0)
    mids = 0.5 * (net.vertices[net.edges[hot, 0]] + net.vertices[net.edges[hot, 1]])
    cands = np.vstack([net.vertices, mids]) if len(hot) else net.vertices.copy()
    edge_cand = {int(e): nv + j for j, e in enumerate(hot)}
    na, nc = len(P), len(cands)
    first = np.full((na, nc), np.inf)
    last = np.full((na, nc), -np.inf)
    for i in range(na):
        walk = net.vertex_walks[i]
        for pos, v in enumerate(walk.tolist()):
            if first[i, v] == np.inf:
                first[i, v] = pos
            last[i, v] = pos
        for pos, (e, _) in enumerate(net.walks[i]):
            c = edge_cand.get(e)
            if c is not None:
                if first[i, c] == np.inf:
                    first[i, c] = pos + 0.5
                last[i, c] = pos + 0.5
    return cands, first, last


def find_lagrangian_cycles(P: TrafficPlan, min_strength: float = 0.0) -> list[LagrangianCycle]:
    """Point pairs visited in both orders by positive mass, strongest first."""
    if len(P) == 0:
        return []
    cands, first, last = _visit_positions(P)
    w = P.masses
    nc = len(cands)
    # G[u, v] = mass of atoms visiting u no later than their last visit to v
    G = np.zeros((nc, nc))
    for i in range(len(P)):
        G += w[i] * (first[i][:, None] <= last[i][None, :])
    S = np.minimum(G, G.T)
    np.fill_diagonal(S, 0.0)
    thresh = max(min_strength, 0.0)
    us, vs = np.nonzero(np.triu((S > 0) & (S >= thresh), 1))
    out = []
    for u, v in zip(us.tolist(), vs.tolist()):
        pu, pv = tuple(cands[u].tolist()), tuple(cands[v].tolist())
        if np.linalg.norm(cands[u] - cands[v]) <= geometry.EPS_GEOM:
            continue
        if pv < pu:
            pu, pv, u, v = pv, pu, v, u
        out.append(LagrangianCycle(pu, pv, float(G[u, v]), float(G[v, u])))
    out.sort(key=lambda c: (-c.strength, c.x, c.y))
    return out


# ---------------------------------------------------------------------------
# shortcut construction


@dataclass
class ShortcutResult:
    flow: EulerFlow
    chosen_eps: float
    m: float
    bound_rhs: float
    achieved: float
    certificate: bool
    boundary_exact: bool
    residual_plan: TrafficPlan
    defect_x: AtomicMeasure
    defect_y: AtomicMeasure
    lambda_masses: dict = field(default_factory=dict)
    rebalance: tuple = (0.0, 0.0)
    slice_term: float = 0.0
    averaged_bound: float = 0.0
    removed_length: tuple = (0.0, 0.0)
    removed_length_bounds: tuple = (0.0, 0.0)
    energy_before: float = 0.0

    def to_json(self) -> dict:
        return {
            "chosen_eps": self.chosen_eps,
            "m": self.m,
            "bound_rhs": self.bound_rhs,
            "achieved": self.achieved,
            "certificate": self.certificate,
            "boundary_exact": self.boundary_exact,
            "energy_before": self.energy_before,
            "lambda_masses": dict(self.lambda_masses),
            "m_x": self.rebalance[0],
            "m_y": self.rebalance[1],
            "slice_term": self.slice_term,
            "averaged_slice_bound": self.averaged_bound,
            "removed_length": list(self.removed_length),
            "removed_length_bounds": list(self.removed_length_bounds),
        }


def choose_eps(P: TrafficPlan, x, y, eps0: float, alpha: float) -> tuple[float, float]:
    """Radius in ``[eps0, 2 eps0]`` minimizing the two sphere-slice α-masses.

    The sum is piecewise constant in the radius; among minimizing pieces the
    leftmost is used and the radius is taken near its left end, keeping
    ``eps * F(eps)`` small.  Returns ``(eps, F(eps))``.
    """
    fx, fy = SliceFunction.distance(x), SliceFunction.distance(y)
    bx, vx = level_profile(P, fx, eps0, 2 * eps0, alpha)
    by, vy = level_profile(P, fy, eps0, 2 * eps0, alpha)
    breaks = np.unique(np.concatenate([bx, by]))
    best = None
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid = 0.5 * (lo + hi)
        jx = min(max(int(np.searchsorted(bx, mid)) - 1, 0), len(vx) - 1)
        jy = min(max(int(np.searchsorted(by, mid)) - 1, 0), len(vy) - 1)
        F = vx[jx] + vy[jy]
        if best is None or F < best[0] - 1e-15 * max(1.0, abs(best[0])):
            best = (F, lo, hi)
    F, lo, hi = best
    eps = lo + (hi - lo) / 8.0 if hi - lo > 64 * geometry.EPS_GEOM else 0.5 * (lo + hi)
    return float(eps), float(F)


def _hits(curve: PolyCurve, u: np.ndarray, eps: float) -> tuple[float, float]:
    h = sphere_hits(curve, u, eps)
    if len(h) == 0:
        return 0.0, 0.0
    return float(h[0]), float(h[-1])


def remove_quasi_cycle(P: TrafficPlan, x, y, eps0: float, alpha: float) -> ShortcutResult:
    """Cut the quasi-cycle between ``x`` and ``y`` and patch the boundary with cones."""
    alpha = check_alpha(alpha)
    x = geometry.as_point(x)
    y = geometry.as_point(y)
    dist = float(np.linalg.norm(y - x))
    if not eps0 > 0:
        raise BranchoError("eps0 must be positive")
    if eps0 > dist / 8.0 * (1 + 1e-12):
        raise EpsTooLarge(f"eps0={eps0} exceeds |y-x|/8={dist / 8.0}")
    bad = simple_atoms(P)
    if bad:
        raise NonSimpleAtom(f"atoms {bad} are constant or not simple")
    m = min(gamma_mass(P, x, y, eps0), gamma_mass(P, y, x, eps0))
    if m <= 0:
        raise NoQuasiCycle("no mass runs both from x to y and from y to x")

    # radius with small sphere slices
    eps, F = choose_eps(P, x, y, eps0, alpha)
    ann = alpha_energy(P, alpha, annulus(x, eps0, 2 * eps0)) + alpha_energy(
        P, alpha, annulus(y, eps0, 2 * eps0)
    )
    averaged = ann / eps0

    # classify atoms and assemble the residual plan
    xy = gamma_members(P, x, y, eps)
    yx = gamma_members(P, y, x, eps)
    w = P.masses
    hits = [(_hits(a.curve, x, eps), _hits(a.curve, y, eps)) for a in P.atoms]
    lam_xy = xy & ~yx
    lam_yx = yx & ~xy
    both = xy & yx
    first_x = np.array([h[0][0] for h in hits]) if len(P) else np.zeros(0)
    first_y = np.array([h[1][0] for h in hits]) if len(P) else np.zeros(0)
    lam_xyx = both & (first_x <= first_y)
    lam_yxy = both & ~lam_xyx
    p_xy = math.fsum(w[lam_xy])
    p_yx = math.fsum(w[lam_yx])
    low = min(p_xy, p_yx)
    m_x = low / p_xy if p_xy > 0 else 0.0
    m_y = low / p_yx if p_yx > 0 else 0.0

    residual: list[tuple[PolyCurve, float]] = []
    sx_pts, sx_w, sy_pts, sy_w = [], [], [], []
    q1 = q2 = 0.0

    def keep(curve: PolyCurve, mass: float):
        if mass < -1e-15:
            raise NegativeResidual(f"residual mass {mass} < 0")
        if mass > 0:
            residual.append((curve, mass))

    for i, a in enumerate(P.atoms):
        c, wi = a.curve, float(w[i])
        L = c.length
        (tx_m, tx_p), (ty_m, ty_p) = hits[i]
        if lam_xy[i]:
            head, tail = restrict(c, 0.0, tx_m), restrict(c, ty_p, L)
            keep(c, (1.0 - m_x) * wi)
            keep(head, m_x * wi)
            keep(tail, m_x * wi)
            sx_pts.append(c.point_at(tx_m)); sx_w.append(-m_x * wi)
            sy_pts.append(c.point_at(ty_p)); sy_w.append(m_x * wi)
            q1 += m_x * wi * (L - head.length - tail.length)
        elif lam_yx[i]:
            head, tail = restrict(c, 0.0, ty_m), restrict(c, tx_p, L)
            keep(c, (1.0 - m_y) * wi)
            keep(head, m_y * wi)
            keep(tail, m_y * wi)
            sy_pts.append(c.point_at(ty_m)); sy_w.append(-m_y * wi)
            sx_pts.append(c.point_at(tx_p)); sx_w.append(m_y * wi)
            q1 += m_y * wi * (L - head.length - tail.length)
        elif lam_xyx[i]:
            head, tail = restrict(c, 0.0, tx_m), restrict(c, tx_p, L)
            keep(head, wi)
            keep(tail, wi)
            sx_pts.append(c.point_at(tx_p)); sx_w.append(wi)
            sx_pts.append(c.point_at(tx_m)); sx_w.append(-wi)
            q2 += wi * (L - head.length - tail.length)
        elif lam_yxy[i]:
            head, tail = restrict(c, 0.0, ty_m), restrict(c, ty_p, L)
            keep(head, wi)
            keep(tail, wi)
            sy_pts.append(c.point_at(ty_p)); sy_w.append(wi)
            sy_pts.append(c.point_at(ty_m)); sy_w.append(-wi)
            q2 += wi * (L - head.length - tail.length)
        else:
            keep(c, wi)

    P_res = TrafficPlan([WeightedCurve(c, mass) for c, mass in residual], dim=P.dim)
    S_x = AtomicMeasure(np.array(sx_pts).reshape(-1, P.dim), sx_w, dim=P.dim)
    S_y = AtomicMeasure(np.array(sy_pts).reshape(-1, P.dim), sy_w, dim=P.dim)

    bound1 = dist * low
    bound2 = dist * math.fsum(w[both])
    slack = 1e-9 * max(1.0, P.total_time)
    if q1 < bound1 - slack or q2 < bound2 - slack:
        raise RuntimeError(
            f"removed length below its guaranteed minimum ({q1} vs {bound1}, {q2} vs {bound2})"
        )

    T_res = induce_flow(P_res)
    T_bar = flow_sum([T_res, cone_over(x, S_x), cone_over(y, S_y)])

    mu_minus, mu_plus = marginals(P)
    target = mu_plus - mu_minus
    scale = max(1.0, P.total_mass)
    diff = T_bar.boundary() - target
    boundary_exact = bool(np.all(np.abs(diff.weights) <= 1e-9 * scale))

    # certificate
    E = alpha_energy(P, alpha)
    balls = alpha_energy(P, alpha, Ball(x, 2 * eps0)) + alpha_energy(P, alpha, Ball(y, 2 * eps0))
    rhs = E - alpha * P.total_mass ** (alpha - 1.0) * m * dist + balls
    achieved = T_bar.alpha_mass(alpha)
    certificate = achieved <= rhs + 1e-9 * max(1.0, E)

    return ShortcutResult(
        flow=T_bar,
        chosen_eps=eps,
        m=m,
        bound_rhs=rhs,
        achieved=achieved,
        certificate=bool(certificate),
        boundary_exact=boundary_exact,
        residual_plan=P_res,
        defect_x=S_x,
        defect_y=S_y,
        lambda_masses={
            "xy": p_xy,
            "yx": p_yx,
            "xyx": math.fsum(w[lam_xyx]),
            "yxy": math.fsum(w[lam_yxy]),
        },
        rebalance=(m_x, m_y),
        slice_term=F,
        averaged_bound=averaged,
        removed_length=(q1, q2),
        removed_length_bounds=(bound1, bound2),
        energy_before=E,
    )


__all__ = [
    "CancellationReport",
    "cancellation_report",
    "cancellation_set",
    "directional_multiplicities",
    "gamma_members",
    "gamma_mass",
    "LagrangianCycle",
    "find_lagrangian_cycles",
    "ShortcutResult",
    "choose_eps",
    "remove_quasi_cycle",
]
