"""Adversarial network trace generation: optimizers, selection, scoring and a packet simulator."""

from ._core import (
    Bounds,
    Interval,
    Trace,
    ValidationResult,
    bench_pls,
    capacity_oracle,
    decode,
    encode,
    eq1_score,
    format_trace,
    gaussian_study,
    median,
    mre_select,
    parse_trace,
    replay,
    run_experiment,
    simulate,
    two_point_crossover,
    uniform_mutation,
    validate,
)

__all__ = [
    "Bounds",
    "Interval",
    "Trace",
    "ValidationResult",
    "bench_pls",
    "capacity_oracle",
    "decode",
    "encode",
    "eq1_score",
    "format_trace",
    "gaussian_study",
    "median",
    "mre_select",
    "parse_trace",
    "replay",
    "run_experiment",
    "simulate",
    "two_point_crossover",
    "uniform_mutation",
    "validate",
]
