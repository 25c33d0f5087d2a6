"""Discrete branched transport: traffic plans on polygonal curves and their flows."""

from ._kernels import BACKEND
from .cycles import (
    LagrangianCycle,
    ShortcutResult,
    cancellation_report,
    find_lagrangian_cycles,
    gamma_mass,
    remove_quasi_cycle,
)
from .errors import BranchoError
from .flow import EulerFlow, check_good_decomposition, cone_over, induce_flow
from .geometry import Cone, PolyCurve, proper_crossing, restrict, set_eps_geom
from .measure import AtomicMeasure
from .optimize import brute_force_optimal, brute_force_search, local_improve
from .plan import TrafficPlan, WeightedCurve, alpha_energy, build_network, marginals
from .regions import Ball, Slab, SliceFunction, Union, Whole
from .slicing import check_slice_bounds, level_profile, slice_plan
from .stability import ExperimentConfig, discretize, flat_distance_estimate, run_experiment, wasserstein1

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AtomicMeasure",
    "Ball",
    "BranchoError",
    "Cone",
    "EulerFlow",
    "ExperimentConfig",
    "LagrangianCycle",
    "PolyCurve",
    "ShortcutResult",
    "Slab",
    "SliceFunction",
    "TrafficPlan",
    "Union",
    "WeightedCurve",
    "Whole",
    "alpha_energy",
    "brute_force_optimal",
    "brute_force_search",
    "build_network",
    "cancellation_report",
    "check_good_decomposition",
    "check_slice_bounds",
    "cone_over",
    "discretize",
    "find_lagrangian_cycles",
    "flat_distance_estimate",
    "gamma_mass",
    "induce_flow",
    "level_profile",
    "local_improve",
    "marginals",
    "proper_crossing",
    "remove_quasi_cycle",
    "restrict",
    "run_experiment",
    "set_eps_geom",
    "slice_plan",
    "wasserstein1",
]
