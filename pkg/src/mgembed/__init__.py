"""Joint embedding of vertex-aligned graph collections.

Factors a set of adjacency matrices into shared rank-one symmetric
components and per-graph loadings, provides the matching generative model
with samplers and diagnostics, and ships downstream inference utilities
plus a CLI for the simulation experiments.
"""

from .graphs import (
    Graph,
    GraphSet,
    GraphFormatError,
    parse_graph,
    serialize_graph,
    read_graph,
    write_graph,
    load_graph_set,
    write_graph_set,
)
from .numerics import (
    ArmijoParams,
    EigRequest,
    ConvergenceError,
    LineSearchFailure,
    sign_fix,
    top_eigs,
    armijo_search,
    nnls,
    finite_diff_grad,
)
from .models import (
    LoadingDistribution,
    MregModel,
    SbmParams,
    RdpgParams,
    InvalidParametersError,
    edge_prob_matrix,
    sample_mreg,
    sample_sbm,
    sample_rdpg,
    enumerate_loop_graphs,
    graph_index,
    universal_mreg,
    bias_bound,
)
from .embedding import (
    EmbedConfig,
    EmbedResult,
    NearCollinearWarning,
    objective,
    update_lambda_col,
    grad_h,
    embed_dimension,
    joint_embed,
    joint_embed_shared,
    joint_embed_classwise,
    joint_embed_nonneg,
    project_graph,
    latent_positions,
    scree,
    sample_approx_error,
)
from .inference import (
    FeatureMatrix,
    DistanceMatrix,
    knn_loo_accuracy,
    ase_procrustes_distances,
    laplacian_variant,
    gss_features,
    pca_features,
    gs_features,
    kmeans,
    ari,
    purity,
    ols_fit,
)
from .bruteforce import (
    GridSpec,
    sphere_grid_min,
    exhaustive_distribution_check,
)

__version__ = "0.1.0"
