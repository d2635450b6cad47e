"""Structural-coefficient identification for linear SEMs with correlated
errors: half-trek flow search over edge subsets, recursive component
decomposition, and executable estimation certificates."""

from .decomp import DecompResult, decomp_ht_id, estimate, materialize_context
from .graph import CyclicGraphError, DirectedEdge, EdgeSet, GraphFormatError, MixedGraph
from .htc import Certificate, IdStatus, allowed_nodes, certificate_system, identify_edges
from .linalg import CovarianceMatrix, ModelInstance, implied_covariance
from .oracle import EnsembleConfig, c_tree_exists, compare_criteria, nonident_witness, random_model, verify_round_trip

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "CovarianceMatrix",
    "CyclicGraphError",
    "DecompResult",
    "DirectedEdge",
    "EdgeSet",
    "EnsembleConfig",
    "GraphFormatError",
    "IdStatus",
    "MixedGraph",
    "ModelInstance",
    "allowed_nodes",
    "c_tree_exists",
    "certificate_system",
    "compare_criteria",
    "decomp_ht_id",
    "estimate",
    "identify_edges",
    "implied_covariance",
    "materialize_context",
    "nonident_witness",
    "random_model",
    "verify_round_trip",
    "__version__",
]
