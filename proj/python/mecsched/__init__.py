"""MEC task offloading: system model, exact and GA solvers, learned schedulers.

Instances, schedules and configurations are plain dicts with the same layout
as the JSON documents used by the ``mecsched`` command-line tool.
"""

from ._core import (
    ConfigError,
    DivergenceError,
    InfeasibleError,
    IoError,
    TooLargeError,
    check_constraints,
    clip_to_constraints,
    default_config,
    default_params,
    enumerate_optimal,
    evaluate,
    evaluate_dataset,
    ga_solve,
    generate,
    method_names,
    sample_instance,
    solve,
    solve_resources,
    train,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "InfeasibleError",
    "IoError",
    "TooLargeError",
    "check_constraints",
    "clip_to_constraints",
    "default_config",
    "default_params",
    "enumerate_optimal",
    "evaluate",
    "evaluate_dataset",
    "ga_solve",
    "generate",
    "method_names",
    "sample_instance",
    "solve",
    "solve_resources",
    "train",
]
