"""Python bindings for the vrbound C++ core."""

from ._core import (
    BoundsError,
    Geometry,
    GeometryError,
    confidence_factor,
    configure_from_table,
    envelope,
    freedman_violation_rate,
    min_horizon,
    noisy_quadratic_constants,
    run_experiment,
    sgm_threshold,
    validate_config,
)

__all__ = [
    "BoundsError",
    "Geometry",
    "GeometryError",
    "confidence_factor",
    "configure_from_table",
    "envelope",
    "freedman_violation_rate",
    "min_horizon",
    "noisy_quadratic_constants",
    "run_experiment",
    "sgm_threshold",
    "validate_config",
]
