"""Semi-supervised self-organizing map with adaptive local thresholds.

Map nodes learn their own receptive fields as bias-corrected moving
averages of the observed per-dimension distances, relaxed by learned
dimension relevances; a node rejects patterns outside that region, which
drives node creation during training.  The package bundles the model,
dataset handling, evaluation metrics, a cross-validation/sweep harness
and a command-line interface.
"""

__version__ = "0.1.0"

from .core import (
    Node,
    Params,
    Phase,
    SomModel,
    acceptance,
    activation,
    find_next_winner,
    find_winner,
    relaxed_variance,
    relevance_dissimilarity,
    update_connections,
    update_node,
    update_relevances,
    weighted_distance,
)
from .datasets import (
    Dataset,
    FoldPlan,
    ParseError,
    load_dataset,
    load_table,
    make_folds,
    mask_labels,
    parse_arff,
    parse_csv,
    rescale_minmax,
    save_dataset,
    subset,
)
from .harness import (
    AggregateRow,
    ParamRange,
    SweepResult,
    SweepSummary,
    aggregate,
    default_ranges,
    derive_seed,
    export_results,
    lhs_sample,
    midpoint_params,
    params_from_setting,
    run_cv_experiment,
    run_sweep,
    write_manifest,
)
from .learning import (
    StepKind,
    TrainStepOutcome,
    assign_cluster,
    fit,
    predict_class,
    removal_reset,
    supervised_step,
    unsupervised_step,
)
from .metrics import (
    ContingencyTable,
    accuracy,
    clustering_error,
    contingency_table,
    optimal_assignment,
)
from .serialization import load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "__version__",
    "Node", "Params", "Phase", "SomModel",
    "acceptance", "activation", "find_next_winner", "find_winner",
    "relaxed_variance", "relevance_dissimilarity", "update_connections",
    "update_node", "update_relevances", "weighted_distance",
    "Dataset", "FoldPlan", "ParseError",
    "load_dataset", "load_table", "make_folds", "mask_labels",
    "parse_arff", "parse_csv", "rescale_minmax", "save_dataset", "subset",
    "AggregateRow", "ParamRange", "SweepResult", "SweepSummary",
    "aggregate", "default_ranges", "derive_seed", "export_results",
    "lhs_sample", "midpoint_params", "params_from_setting",
    "run_cv_experiment", "run_sweep", "write_manifest",
    "StepKind", "TrainStepOutcome",
    "assign_cluster", "fit", "predict_class", "removal_reset",
    "supervised_step", "unsupervised_step",
    "ContingencyTable", "accuracy", "clustering_error", "contingency_table",
    "optimal_assignment",
    "load_model", "model_from_dict", "model_to_dict", "save_model",
]
