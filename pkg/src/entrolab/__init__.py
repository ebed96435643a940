from .config import ExperimentConfig, load_config
from .estimators import (
    bowen_entropy_estimate,
    d_entropy_estimate,
    ks_entropy_estimate,
    topological_entropy_estimate,
    variational_audit,
)
from .run import ExperimentRunner
from .systems import orbit, parse_system

__all__ = [
    "ExperimentConfig",
    "ExperimentRunner",
    "load_config",
    "parse_system",
    "orbit",
    "d_entropy_estimate",
    "bowen_entropy_estimate",
    "topological_entropy_estimate",
    "ks_entropy_estimate",
    "variational_audit",
]
