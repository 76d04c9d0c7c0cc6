"""Graph structure learning regularized by von Neumann entropy and quantum
Jensen-Shannon divergence, with heat-wavelet structural role encodings."""

__version__ = "0.1.0"

from .estimator import PRIGSLClassifier, RoleEncoder
from .exceptions import PriGslError
from .graph import DensityMatrix, Graph, density_matrix, laplacian, perturb_edges, sbm_generate
from .measures import PriConfig, centrality, pri_loss, qjs_divergence, vne
from .roles import RoleConfig, role_encode
from .trainer import TrainConfig, denoise_experiment, train, train_gcn_baseline

__all__ = [
    "DensityMatrix", "Graph", "PRIGSLClassifier", "PriConfig", "PriGslError", "RoleConfig",
    "RoleEncoder", "TrainConfig", "centrality", "denoise_experiment", "density_matrix",
    "laplacian", "perturb_edges", "pri_loss", "qjs_divergence", "role_encode", "sbm_generate",
    "train", "train_gcn_baseline", "vne",
]
