"""Means, medians and proximal splitting in Hadamard spaces."""

from .algorithms import (
    draw_indices,
    frechet_mean,
    geometric_median,
    lie_trotter_kato,
    lln_mean,
    ppa_cyclic,
    ppa_random,
    variance_gap,
)
from .core import (
    GeodesicBall,
    GuardError,
    InvalidInputError,
    Space,
    cat0_gap,
    distance,
    geodesic_point,
    project_ball,
    reshetnyak_gap,
)
from .prox import (
    AnchorConfiguration,
    Component,
    Indicator,
    IterationTrace,
    RunConfig,
    ScaledDistance,
    ScaledSetDistance,
    ScaledSquaredDistance,
    StepSchedule,
    objective_value,
    prox_indicator,
    prox_scaled_distance,
    prox_scaled_set_distance,
    prox_scaled_squared_distance,
)
from .spaces import SPD, Euclidean, EuclideanPoint, SpdPoint, Spider, SpiderPoint, parse_space
from .treespace import BHV, BhvPoint, TaxonSet, emit_newick, parse_newick

__version__ = "0.1.0"
