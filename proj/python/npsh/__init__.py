"""Monge-Ampere equation for (n-1)-plurisubharmonic functions on flat complex tori."""

from ._core import (
    ConeError,
    ConfigError,
    ContinuationError,
    FieldIoError,
    LinearSolveError,
    NpshError,
    SingularMetricError,
    cone_margin,
    det_form_top_minus_one,
    hodge_star_11,
    hodge_star_n1,
    identity_suite,
    is_n_minus_one_psh,
    manufacture,
    p_operator,
    residual,
    root_n_minus_one,
    run,
    solve,
    trace_pair,
    wedge11_invariant,
    wedge_power,
)

__all__ = [
    "ConeError",
    "ConfigError",
    "ContinuationError",
    "FieldIoError",
    "LinearSolveError",
    "NpshError",
    "SingularMetricError",
    "cone_margin",
    "det_form_top_minus_one",
    "hodge_star_11",
    "hodge_star_n1",
    "identity_suite",
    "is_n_minus_one_psh",
    "manufacture",
    "p_operator",
    "residual",
    "root_n_minus_one",
    "run",
    "solve",
    "trace_pair",
    "wedge11_invariant",
    "wedge_power",
]
