"""Berry-Esseen laboratory for sample quantiles of locally dependent sequences."""

from .dep_models import DependencyModel, ModelConfig, build_model, generate
from .dist_core import MarginalSpec, marginal_from_tag
from .errors import ConfigError, DomainError, QcltError
from .mc_engine import (ExperimentPlan, fit_rate, iid_median_cdf_exact, limit_constant,
                        run_joint_experiment, run_median_experiment, scaled_ks_exact)
from .quantile_core import QuantileGrid, SimResult, sample_quantile

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DependencyModel", "DomainError", "ExperimentPlan", "MarginalSpec",
    "ModelConfig", "QcltError", "QuantileGrid", "SimResult", "build_model", "fit_rate",
    "generate", "iid_median_cdf_exact", "limit_constant", "marginal_from_tag",
    "run_joint_experiment", "run_median_experiment", "sample_quantile", "scaled_ks_exact",
]
