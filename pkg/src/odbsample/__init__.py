"""Optimal-design-based subsampling of large datasets.

Solve a D- or A-optimal continuous design, round it to n units, and pick the
dataset rows nearest each support point.  Baselines (IBOSS, SRS, leverage
PPS, exchange) and a Monte Carlo harness for comparing them are included.
"""

from .design import (
    CandidateSet,
    DesignError,
    ExactAllocation,
    OptimalDesign,
    SolverSettings,
    directional_derivative,
    ideal_info_matrix,
    round_design,
    solve_continuous_design,
)
from .estimators import FitError, FitResult, SeparationError, fit, logistic_fit, ols_fit
from .model import (
    BoxTransform,
    Criterion,
    Dataset,
    DesignMeasure,
    EfficiencyError,
    Family,
    FeatureBasis,
    ModelSpec,
    criterion_value,
    efficiency,
    expand_features,
    fit_box_transform,
    glm_weight,
    info_matrix_of_design,
    info_matrix_of_rows,
)
from .samplers import (
    PpsWeights,
    SampleSelection,
    SamplingError,
    exchange_select,
    iboss_select,
    odb_select,
    pps_select,
    pps_weights,
    srs_select,
)

__all__ = [name for name in dir() if not name.startswith("_")]
