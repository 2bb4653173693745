from .network import (
    ClusterTree,
    CoContributionMatrix,
    cocontribution,
    cocontribution_from_sets,
    cut_linkage,
    dissimilarity,
    ward_cluster,
    ward_linkage,
)
from .regression import (
    AuthorRecord,
    FocusRecord,
    RankDeficientError,
    RegressionResult,
    author_order_model,
    collinear_columns,
    ols_fit,
    rank_term,
    section_order_model,
    t_two_sided_p,
)
from .validation import PearsonResult, ValidationMetrics, pearson, precision_recall
