"""Sparse word-axis and time-axis precision estimates for replicate tensors
under a Kronecker-product covariance model."""
from .covariance import (
    PenaltySpec,
    SymMatrix,
    kronecker_reconstruct,
    load_matrix,
    sample_cov,
    theoretical_penalties,
    time_sample_cov,
    to_correlation,
    word_sample_cov,
    write_matrix_csv,
    write_matrix_json,
)
from .data import (
    ReplicateTensor,
    ResidualTensor,
    WordMetadata,
    WordRecord,
    load_metadata,
    load_tensor,
    load_wide_tensor,
    residualize,
    subset_words,
    trial_mean,
    write_tensor,
)
from .glasso import PrecisionEstimate, SolverConfig, glasso, glasso_path, kkt_certificate
from .graphs import (
    Edge,
    GraphMetrics,
    LabeledGraph,
    PairTable,
    cluster_cut_weights,
    edge_fraction_by_attribute,
    graph_from_precision,
    graph_metrics,
    graph_set_ops,
    mean_abs_pearson_among_edges,
    read_edge_csv,
    supernode_graph,
    to_dot,
    top_k_edges,
    write_dot,
    write_edge_csv,
)
from .nodewise import NodewiseFit, lasso_node, mb_edges, nodewise, reconstruct_theta, threshold_precision
from .simulate import FactorSpec, make_factor, precision_support, sample_matrix_normal, support_f1

__version__ = "0.1.0"
