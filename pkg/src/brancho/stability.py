"""Discretize marginals, solve, and watch energies and flows converge to the limit instance."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog


from .cycles import gamma_mass
from .errors import BranchoError, MassMismatch, check_alpha
from .flow import EulerFlow, induce_flow
from .measure import AtomicMeasure
from .optimize import brute_force_search, max_threads
from .overlay import overlay
from .plan import TrafficPlan


def discretize(mu: AtomicMeasure, n: int, R: float = 1.0) -> AtomicMeasure:
    """Round atom locations to the grid ``2^-n R Z^d`` and merge coincident atoms."""
    if np.any(mu.weights < 0):
        raise BranchoError("discretize expects a positive measure")
    if len(mu) == 0:
        return mu
    h = R * 2.0 ** (-n)
    pts = np.round(mu.points / h) * h
    return AtomicMeasure(pts, mu.weights, dim=mu.dim, positive=True)


def wasserstein1(mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    """Earth mover's distance between atomic measures of equal mass (transport LP)."""
    if abs(mu.total() - nu.total()) > 1e-12 * max(1.0, mu.total()):
        raise MassMismatch("W1 needs equal total masses")
    if len(mu) == 0 or len(nu) == 0:
        return 0.0
    n, k = len(mu), len(nu)
    C = np.linalg.norm(mu.points[:, None, :] - nu.points[None, :, :], axis=2)
    A = np.zeros((n + k, n * k))
    for i in range(n):
        A[i, i * k:(i + 1) * k] = 1.0
    for j in range(k):
        A[n + j, j::k] = 1.0
    b = np.concatenate([mu.weights, nu.weights])
    b[-1] = math.fsum(mu.weights) - math.fsum(nu.weights[:-1])
    res = linprog(C.ravel(), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if not res.success:
        raise BranchoError(f"transport LP failed: {res.message}")
    return max(float(res.fun), 0.0)


# ---------------------------------------------------------------------------
# flat distance upper bound


def _cone_bound(D: EulerFlow) -> float:
    """``M(c ⨯ ∂D) + M(c ⨯ D)`` for ``c`` the vertex centroid: a valid filling."""
    c = D.vertices.mean(axis=0)
    bd = D.boundary()
    term1 = math.fsum(abs(w) * float(np.linalg.norm(p - c)) for p, w in bd)
    a, b = D.segments()
    u, v = a - c, b - c
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    uv = np.einsum("ij,ij->i", u, v)
    area = 0.5 * np.sqrt(np.maximum(uu * vv - uv * uv, 0.0))
    return term1 + math.fsum(np.abs(D.weights) * area)


def _faces(vertices: np.ndarray, edges: np.ndarray):
    """Bounded faces of a connected planar straight-line graph as half-edge cycles."""
    nv = len(vertices)
    out: list[list[int]] = [[] for _ in range(nv)]
    for a, b in edges.tolist():
        out[a].append(b)
        out[b].append(a)
    ang = {}
    for v in range(nv):
        d = vertices[out[v]] - vertices[v]
        order = np.argsort(np.arctan2(d[:, 1], d[:, 0])) if len(out[v]) else []
        out[v] = [out[v][i] for i in order]
        for k, u in enumerate(out[v]):
            ang[(v, u)] = k
    seen = set()
    faces = []
    for a, b in edges.tolist():
        for start in ((a, b), (b, a)):
            if start in seen:
                continue
            cyc = []
            he = start
            while he not in seen:
                seen.add(he)
                cyc.append(he)
                u, v = he
                # next half-edge: turn to the neighbour preceding u around v
                k = ang[(v, u)]
                w = out[v][(k - 1) % len(out[v])]
                he = (v, w)
            P = vertices[[h[0] for h in cyc]]
            area = 0.5 * float(np.sum(P[:, 0] * np.roll(P[:, 1], -1) - np.roll(P[:, 0], -1) * P[:, 1]))
            if area > 1e-15:
                faces.append((cyc, area))
    return faces


def _planar_lp(D: EulerFlow) -> float | None:
    from scipy.spatial import Delaunay, QhullError

    V = D.vertices
    if len(V) < 3:
        return None
    try:
        tri = Delaunay(V)
    except QhullError:
        return None
    tedges = set()
    for s in tri.simplices:
        for i in range(3):
            a, b = int(s[i]), int(s[(i + 1) % 3])
            tedges.add((min(a, b), max(a, b)))
    tedges = sorted(tedges)
    a, b = D.segments()
    starts = np.vstack([a, V[[e[0] for e in tedges]]])
    ends = np.vstack([b, V[[e[1] for e in tedges]]])
    arr = overlay(starts, ends)
    ne = len(arr.edges)
    Dw = np.zeros(ne)
    for k in range(len(D)):
        for e, s in arr.pieces[k]:
            Dw[e] += s * D.weights[k]
    faces = _faces(arr.vertices, arr.edges)
    nf = len(faces)
    if nf == 0:
        return None
    edge_id = {(int(p), int(q)): i for i, (p, q) in enumerate(arr.edges.tolist())}
    B = np.zeros((ne, nf))
    for j, (cyc, _) in enumerate(faces):
        for u, v in cyc:
            if (u, v) in edge_id:
                B[edge_id[(u, v)], j] += 1.0
            else:
                B[edge_id[(v, u)], j] -= 1.0
    areas = np.array([ar for _, ar in faces])
    L = arr.lengths
    # variables: s (nf, free), t (ne) with t >= |D - B s|, u (nf) with u >= |s|
    c = np.concatenate([np.zeros(nf), L, areas])
    I_e, I_f = np.eye(ne), np.eye(nf)
    Z_ef, Z_fe = np.zeros((ne, nf)), np.zeros((nf, ne))
    A_ub = np.block([
        [-B, -I_e, Z_ef],
        [B, -I_e, Z_ef],
        [I_f, Z_fe, -I_f],
        [-I_f, Z_fe, -I_f],
    ])
    b_ub = np.concatenate([-Dw, Dw, np.zeros(nf), np.zeros(nf)])
    bounds = [(None, None)] * nf + [(0, None)] * (ne + nf)
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        return None
    return max(float(res.fun), 0.0)


def flat_distance_estimate(T1: EulerFlow, T2: EulerFlow) -> float:
    """Upper bound on the flat distance ``inf_S M(T1 - T2 - ∂S) + M(S)``.

    In the plane ``S`` ranges over 2-chains on the faces of the overlay of
    ``T1 - T2`` with the Delaunay triangulation of its vertices (an LP); in
    other dimensions the bound is the smaller of ``M(T1 - T2)`` and a cone
    filling.
    """
    D = T1 - T2
    if D.is_empty:
        return 0.0
    best = min(D.mass(), _cone_bound(D))
    if D.dim == 2:
        lp = _planar_lp(D)
        if lp is not None:
            best = min(best, lp)
    return best


# ---------------------------------------------------------------------------
# experiment harness


@dataclass
class ExperimentConfig:
    mu_minus: AtomicMeasure
    mu_plus: AtomicMeasure
    levels: list
    alpha: float = 0.5
    seed: int = 0
    R: float = 1.0
    energy_bound: float = math.inf
    monitored_pairs: list = field(default_factory=list)
    monitor_eps: float = 0.05
    tolerance: float = 1e-3

    def __post_init__(self):
        check_alpha(self.alpha)
        if abs(self.mu_minus.total() - self.mu_plus.total()) > 1e-12:
            raise MassMismatch("marginals must have equal masses")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        return cls(
            mu_minus=AtomicMeasure.from_json(data["mu_minus"], positive=True),
            mu_plus=AtomicMeasure.from_json(data["mu_plus"], positive=True),
            levels=[int(v) for v in data["levels"]],
            alpha=float(data.get("alpha", 0.5)),
            seed=int(data.get("seed", 0)),
            R=float(data.get("R", 1.0)),
            energy_bound=float(data.get("energy_bound", math.inf)),
            monitored_pairs=[(tuple(p[0]), tuple(p[1])) for p in data.get("monitored_pairs", [])],
            monitor_eps=float(data.get("monitor_eps", 0.05)),
            tolerance=float(data.get("tolerance", 1e-3)),
        )


@dataclass
class LevelRecord:
    level: int
    energy: float
    energy_gap: float
    flat_distance: float
    w1_minus: float
    w1_plus: float
    theta_bar_total: float
    quasi_cycle_masses: list
    uniform_quantity: float
    shift_slack: float = 0.0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvergenceReport:
    limit_energy: float
    records: list
    measured_C: float
    final_gap: float
    energy_converged: bool
    flat_decreasing: bool
    limit_cancellation_free: bool
    all_cancellation_free: bool
    lsc_holds: bool
    uniform_bound_holds: bool

    def to_json(self) -> dict:
        return {
            "limit_energy": self.limit_energy,
            "levels": [r.to_json() for r in self.records],
            "measured_C": self.measured_C,
            "final_gap": self.final_gap,
            "energy_converged": self.energy_converged,
            "flat_decreasing": self.flat_decreasing,
            "limit_cancellation_free": self.limit_cancellation_free,
            "all_cancellation_free": self.all_cancellation_free,
            "lsc_holds": self.lsc_holds,
            "uniform_bound_holds": self.uniform_bound_holds,
        }

    def csv_rows(self) -> list[tuple]:
        return [(r.level, r.energy, r.flat_distance, r.w1_minus, r.w1_plus) for r in self.records]


def shift_slack(mu: AtomicMeasure, n: int, R: float, alpha: float) -> float:
    """``Σ w^α |p - round(p)|``: joining each atom to its grid point costs at most this."""
    if len(mu) == 0:
        return 0.0
    h = R * 2.0 ** (-n)
    moved = np.linalg.norm(mu.points - np.round(mu.points / h) * h, axis=1)
    return math.fsum(mu.weights ** alpha * moved)


def theta_bar_total(P: TrafficPlan) -> float:
    if len(P) == 0:
        return 0.0
    net = P.network
    return float(math.fsum(net.lengths * net.theta_bar))


def run_experiment(cfg: ExperimentConfig) -> ConvergenceReport:
    limit = brute_force_search(cfg.mu_minus, cfg.mu_plus, cfg.alpha, seed=cfg.seed)
    T_lim = induce_flow(limit.plan)

    def one(n: int) -> LevelRecord:
        mm = discretize(cfg.mu_minus, n, cfg.R)
        mp = discretize(cfg.mu_plus, n, cfg.R)
        sol = brute_force_search(mm, mp, cfg.alpha, seed=cfg.seed + n)
        Pn = sol.plan
        qc = [
            min(gamma_mass(Pn, x, y, cfg.monitor_eps), gamma_mass(Pn, y, x, cfg.monitor_eps))
            for x, y in cfg.monitored_pairs
        ]
        return LevelRecord(
            level=n,
            energy=sol.energy,
            energy_gap=abs(sol.energy - limit.energy),
            flat_distance=flat_distance_estimate(induce_flow(Pn), T_lim),
            w1_minus=wasserstein1(mm, cfg.mu_minus),
            w1_plus=wasserstein1(mp, cfg.mu_plus),
            theta_bar_total=theta_bar_total(Pn),
            quasi_cycle_masses=qc,
            uniform_quantity=sol.energy + Pn.total_time,
            shift_slack=shift_slack(cfg.mu_minus, n, cfg.R, cfg.alpha) + shift_slack(cfg.mu_plus, n, cfg.R, cfg.alpha),
        )

    levels = sorted(cfg.levels)
    threads = min(max_threads(), len(levels))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, levels))
    else:
        records = [one(n) for n in levels]

    gaps = np.array([r.energy_gap for r in records])
    scale = np.array([2.0 ** r.level for r in records])
    measured_C = float(np.max(gaps * scale)) if len(records) else 0.0
    final_gap = float(gaps[-1]) if len(records) else 0.0
    flats = [r.flat_distance for r in records]
    flat_dec = all(b <= a + 1e-9 for a, b in zip(flats[:-1], flats[1:]))
    # the limit plan can be beaten by any P_n extended along the rounding moves
    lsc_gap = min((r.energy + r.shift_slack for r in records), default=math.inf)
    return ConvergenceReport(
        limit_energy=limit.energy,
        records=records,
        measured_C=measured_C,
        final_gap=final_gap,
        energy_converged=final_gap <= cfg.tolerance,
        flat_decreasing=flat_dec,
        limit_cancellation_free=theta_bar_total(limit.plan) == 0.0,
        all_cancellation_free=all(r.theta_bar_total == 0.0 for r in records),
        lsc_holds=limit.energy <= lsc_gap + cfg.tolerance,
        uniform_bound_holds=all(r.uniform_quantity <= cfg.energy_bound for r in records),
    )


__all__ = [
    "discretize",
    "wasserstein1",
    "flat_distance_estimate",
    "ExperimentConfig",
    "LevelRecord",
    "ConvergenceReport",
    "run_experiment",
    "theta_bar_total",
    "shift_slack",
]
