"""Active learning from positive and unlabeled data.

Query rules driven by kernel density estimates of ``p(x|+)`` and ``p(x)``,
an SVDD base classifier, and a seeded experiment harness.
"""

from .data import (
    Dataset,
    Label,
    PoolState,
    Sample,
    SplitSpec,
    ValidationReport,
    apply_oracle_answer,
    pool_from_labels,
    protocol_split,
    validate_dataset,
)
from .density import (
    KdeModel,
    fit_kde,
    fit_kde_cv,
    kde_evaluate,
    likelihood_ratio,
    loo_log_likelihood,
    negative_density_estimate,
    select_bandwidth_loo,
)
from .experiment import (
    ExperimentConfig,
    SyntheticSpec,
    bench_config,
    generate_synthetic,
    load_csv,
    load_dataset,
    load_svmlight,
    run_experiment,
    tune_hyperparameters,
    write_csv,
)
from .loop import (
    GroundTruthOracle,
    InteractiveOracle,
    LoopConfig,
    LoopTrace,
    ModelParams,
    OracleAbort,
    RoundRecord,
    run_loop,
)
from .metrics import AggregateRecord, MetricsRecord, aggregate_runs, compute_metrics, gain, sign_test
from .strategies import (
    KnnGraph,
    MarginVariant,
    QueryContext,
    StrategyKind,
    StrategyParams,
    build_knn_graph,
    exact_expected_margin,
    expected_entropy_score,
    expected_margin_score,
    select_query,
)
from .svdd import (
    KernelSpec,
    SvddModel,
    kernel_distance_to_center,
    svdd_predict,
    svdd_score,
    train_svdd,
)

__version__ = "0.1.0"
