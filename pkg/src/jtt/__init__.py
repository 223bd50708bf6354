"""Graph-guided clustering of group-wise linear regression models.

Per graph edge, a generalized C_p comparison decides whether two groups
share one coefficient vector; connected components of the kept edges form
clusters, which are then estimated by cluster-wise OLS or anchored ridge.
"""

from .dataset import (
    GraphSpec,
    GroupData,
    GroupDataset,
    complete_graph,
    load_dataset,
    load_graph,
    validate_dataset,
)
from .errors import (
    DatasetError,
    DegenerateVarianceError,
    JTTError,
    RankDeficientError,
)
from .estimate import FitResult, fit_jtt
from .estimator import JTTRegressor
from .gcp import PenaltyParams, SelectionResult, alpha_check, alpha_hat, select_edges
from .partition import ClusterAssignment, connected_components, derive_cluster_edges
from .simulate import SimulationConfig, SimulationReport, run_monte_carlo

__version__ = "0.1.0"

__all__ = [
    "GraphSpec",
    "GroupData",
    "GroupDataset",
    "complete_graph",
    "load_dataset",
    "load_graph",
    "validate_dataset",
    "JTTError",
    "DatasetError",
    "DegenerateVarianceError",
    "RankDeficientError",
    "FitResult",
    "fit_jtt",
    "JTTRegressor",
    "PenaltyParams",
    "SelectionResult",
    "alpha_hat",
    "alpha_check",
    "select_edges",
    "ClusterAssignment",
    "connected_components",
    "derive_cluster_edges",
    "SimulationConfig",
    "SimulationReport",
    "run_monte_carlo",
]
