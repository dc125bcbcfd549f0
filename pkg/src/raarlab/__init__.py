"""Iterative phase retrieval with relaxed averaged alternating reflections."""

from .grid import forward_transform, inner_product, inverse_transform, norm, to_real
from .projections import (
    SmoothingConfig,
    project_magnitude,
    project_support,
    project_support_nonneg,
    reflect,
    smoothed_magnitude_step,
    smoothed_objective,
)
from .algorithms import (
    DifferenceMapParams,
    IterationState,
    RelaxationSchedule,
    beta_at,
    difference_map_step,
    dr_relaxed_step,
    hio_step,
    hio_support_step,
    hpr_pointwise_step,
    hpr_step,
    raar_pointwise_step,
    raar_step,
    run,
)

__version__ = "0.1.0"
