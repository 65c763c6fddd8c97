"""Posterior predictive conditional densities for one-parameter Bayesian models."""

from condpred.errors import (
    ConfigError,
    DegeneratePosteriorError,
    DomainError,
    ExperimentError,
    FormulaInconsistencyError,
    QuadratureError,
    SupportMismatchError,
)
from condpred.models import (
    JointDraw,
    ModelSpec,
    PairedSample,
    Support,
    make_model,
    sample_joint,
    true_conditional,
    true_conditional_density,
)
from condpred.engine import (
    ConditionalDensityEstimate,
    EngineSettings,
    PosteriorGrid,
    ThetaGrid,
    build_grid,
    l1_distance,
    mixture_conditional,
    posterior_grid,
    predictive_conditional,
    tv_distance,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionalDensityEstimate",
    "ConfigError",
    "DegeneratePosteriorError",
    "DomainError",
    "EngineSettings",
    "ExperimentError",
    "FormulaInconsistencyError",
    "JointDraw",
    "ModelSpec",
    "PairedSample",
    "PosteriorGrid",
    "QuadratureError",
    "Support",
    "SupportMismatchError",
    "ThetaGrid",
    "build_grid",
    "l1_distance",
    "make_model",
    "mixture_conditional",
    "posterior_grid",
    "predictive_conditional",
    "sample_joint",
    "true_conditional",
    "true_conditional_density",
    "tv_distance",
]
