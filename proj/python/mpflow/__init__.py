"""MP-system flows, scattering, Mañé action and gauge experiments."""

from ._core import (
    Gauge,
    MpflowError,
    System,
    action_table,
    apply_gauge,
    compose,
    convexity_margin,
    counterexample,
    gauges,
    inverse,
    make_gauge,
    make_scenario,
    mane_potential,
    reduce,
    run_config,
    run_config_file,
    run_criterion,
    scatter,
    scenarios,
    sphere_lift,
    system_difference,
    trajectory,
)

__all__ = [
    "Gauge",
    "MpflowError",
    "System",
    "action_table",
    "apply_gauge",
    "compose",
    "convexity_margin",
    "counterexample",
    "gauges",
    "inverse",
    "make_gauge",
    "make_scenario",
    "mane_potential",
    "reduce",
    "run_config",
    "run_config_file",
    "run_criterion",
    "scatter",
    "scenarios",
    "sphere_lift",
    "system_difference",
    "trajectory",
]
