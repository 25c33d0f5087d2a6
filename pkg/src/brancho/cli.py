"""Command-line entry point: JSON in, JSON/CSV out."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import geometry
from .cycles import cancellation_report, find_lagrangian_cycles, remove_quasi_cycle
from .errors import BranchoError, check_alpha
from .flow import check_good_decomposition, induce_flow
from .measure import AtomicMeasure
from .optimize import brute_force_search
from .plan import TrafficPlan, alpha_energy
from .regions import Ball, SliceFunction
from .slicing import level_profile, slice_plan
from .stability import ExperimentConfig, run_experiment


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    alpha: float = 0.5
    R: float | None = None
    eps_geom: float | None = None
    seed: int = 0
    out: Path | None = None

    def __post_init__(self):
        check_alpha(self.alpha)
        if self.R is not None and not self.R > 0:
            raise UsageError("--R must be positive")
        if self.eps_geom is not None and not self.eps_geom > 0:
            raise UsageError("--eps-geom must be positive")


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isfinite(v):
            s = format(v, ".17g")
            return s if any(c in s for c in ".en") else s + ".0"
        return "Infinity" if v > 0 else ("-Infinity" if v < 0 else "NaN")
    if hasattr(v, "item") and not hasattr(v, "__len__"):
        return _fmt(v.item())
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(x)}" for k, x in v.items()) + "}"
    if hasattr(v, "tolist"):
        return _fmt(v.tolist())
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _fmt(obj)


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _load_plan(path: str, cfg: RunConfig) -> TrafficPlan:
    try:
        P = TrafficPlan.from_json(_read_json(path))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed plan JSON: {exc}") from exc
    if cfg.R is not None:
        P.check_radius(cfg.R)
    return P


def _emit(cfg: RunConfig, name: str, payload, csv_rows=None, csv_header=None, csv_path=None) -> None:
    text = dumps(payload) + "\n"
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"{name}.json").write_text(text)
    else:
        sys.stdout.write(text)
    if csv_rows is None:
        return
    target = Path(csv_path) if csv_path else (cfg.out / f"{name}.csv" if cfg.out is not None else None)
    if target is None:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header)
    for row in csv_rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(buf.getvalue())


def _point(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_energy(args, cfg):
    P = _load_plan(args.plan, cfg)
    region = None
    if args.ball is not None:
        *c, r = args.ball
        region = Ball(c, r)
    _emit(cfg, "energy", {"alpha": cfg.alpha, "energy": alpha_energy(P, cfg.alpha, region)})


def cmd_induce(args, cfg):
    _emit(cfg, "flow", induce_flow(_load_plan(args.plan, cfg)).to_json())


def cmd_check_good(args, cfg):
    _emit(cfg, "check_good", check_good_decomposition(_load_plan(args.plan, cfg)).to_json())


def _slice_function(args) -> SliceFunction:
    if (args.center is None) == (args.normal is None):
        raise UsageError("give exactly one of --center or --normal")
    if args.center is not None:
        return SliceFunction.distance(args.center)
    return SliceFunction.affine(args.normal, args.offset)


def cmd_slice(args, cfg):
    P = _load_plan(args.plan, cfg)
    f = _slice_function(args)
    if (args.level is None) == (args.range is None):
        raise UsageError("give exactly one of --level or --range")
    if args.level is not None:
        res = slice_plan(P, f, args.level)
        rows = [(args.level, res.intensity.alpha_mass(cfg.alpha))]
        _emit(cfg, "slice", res.to_json(), rows, ["level", "alpha_mass"], args.csv)
        return
    a, b = args.range
    breaks, vals = level_profile(P, f, a, b, cfg.alpha)
    payload = {
        "function": f.to_json(),
        "alpha": cfg.alpha,
        "breaks": breaks.tolist(),
        "values": vals.tolist(),
        "integral": math.fsum(v * (hi - lo) for v, lo, hi in zip(vals, breaks[:-1], breaks[1:])),
    }
    # one row per piece, at its midpoint
    rows = [(0.5 * (lo + hi), float(v)) for lo, hi, v in zip(breaks[:-1], breaks[1:], vals)]
    _emit(cfg, "slice", payload, rows, ["level", "alpha_mass"], args.csv)


def cmd_find_cycles(args, cfg):
    P = _load_plan(args.plan, cfg)
    cycles = find_lagrangian_cycles(P, args.min_strength)
    _emit(
        cfg,
        "cycles",
        {"cycles": [c.to_json() for c in cycles], "cancellation": cancellation_report(P).to_json()},
    )


def cmd_remove_cycle(args, cfg):
    P = _load_plan(args.plan, cfg)
    res = remove_quasi_cycle(P, args.x, args.y, args.eps0, cfg.alpha)
    if cfg.out is not None:
        _emit(cfg, "flow", res.flow.to_json())
        _emit(cfg, "certificate", res.to_json())
    else:
        _emit(cfg, "remove_cycle", {"flow": res.flow.to_json(), "report": res.to_json()})


def cmd_optimize(args, cfg):
    data = _read_json(args.marginals)
    try:
        mm = AtomicMeasure.from_json(data["mu_minus"], positive=True)
        mp = AtomicMeasure.from_json(data["mu_plus"], positive=True)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed marginals JSON: {exc}") from exc
    rep = brute_force_search(mm, mp, cfg.alpha, seed=cfg.seed)
    if cfg.R is not None:
        rep.plan.check_radius(cfg.R)
    payload = {
        "alpha": cfg.alpha,
        "energy": rep.energy,
        "tree_cost": rep.tree_cost,
        "n_topologies": rep.n_topologies,
        "plan": rep.plan.to_json(),
    }
    _emit(cfg, "optimize", payload)


def cmd_stability(args, cfg):
    data = _read_json(args.config)
    data.setdefault("alpha", cfg.alpha)
    data.setdefault("seed", cfg.seed)
    if cfg.R is not None:
        data.setdefault("R", cfg.R)
    try:
        ecfg = ExperimentConfig.from_json(data)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed experiment config: {exc}") from exc
    rep = run_experiment(ecfg)
    _emit(
        cfg,
        "stability",
        rep.to_json(),
        rep.csv_rows(),
        ["level", "energy", "flat_dist", "W1_minus", "W1_plus"],
        args.csv,
    )


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.5)
    common.add_argument("--R", type=float, default=None, help="domain radius; curves must stay inside")
    common.add_argument("--eps-geom", type=float, default=None, help="geometric snapping tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None, help="directory for output files")

    parser = argparse.ArgumentParser(prog="brancho", description="Discrete branched transport toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("energy", parents=[common], help="alpha-energy of a plan")
    p.add_argument("plan")
    p.add_argument("--ball", type=float, nargs="+", default=None, metavar="C_R",
                   help="restrict to a closed ball: center coordinates then radius")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("induce", parents=[common], help="induced flow of a plan")
    p.add_argument("plan")
    p.set_defaults(func=cmd_induce)

    p = sub.add_parser("check-good", parents=[common], help="good-decomposition criteria A/B/C")
    p.add_argument("plan")
    p.set_defaults(func=cmd_check_good)

    p = sub.add_parser("slice", parents=[common], help="level-set slice or level profile")
    p.add_argument("plan")
    p.add_argument("--center", type=_point, default=None)
    p.add_argument("--normal", type=_point, default=None)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--level", type=float, default=None)
    p.add_argument("--range", type=float, nargs=2, default=None, metavar=("A", "B"))
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("find-cycles", parents=[common], help="detect Lagrangian cycles")
    p.add_argument("plan")
    p.add_argument("--min-strength", type=float, default=0.0)
    p.set_defaults(func=cmd_find_cycles)

    p = sub.add_parser("remove-cycle", parents=[common], help="shortcut one quasi-cycle")
    p.add_argument("plan")
    p.add_argument("--x", type=_point, required=True)
    p.add_argument("--y", type=_point, required=True)
    p.add_argument("--eps0", type=float, required=True)
    p.set_defaults(func=cmd_remove_cycle)

    p = sub.add_parser("optimize", parents=[common], help="optimal plan for small marginals")
    p.add_argument("marginals")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("stability", parents=[common], help="discretization convergence experiment")
    p.add_argument("config")
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    old_eps = geometry.eps_geom()
    try:
        cfg = RunConfig(args.alpha, args.R, args.eps_geom, args.seed, args.out)
        if cfg.eps_geom is not None:
            geometry.set_eps_geom(cfg.eps_geom)
        args.func(args, cfg)
        return 0
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"brancho: error: {exc}\n")
        return 2
    except BranchoError as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"brancho: error: {exc}\n")
        return 2
    finally:
        geometry.set_eps_geom(old_eps)


if __name__ == "__main__":
    sys.exit(main())
