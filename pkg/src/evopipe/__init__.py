"""evopipe: tree-based GP over ML pipelines with pluggable parent selection."""

from .data import Dataset, SyntheticTaskSpec, generate_synthetic, load_csv, train_holdout_split
from .engine import RunConfig, RunResult, run_single
from .errors import (
    AnalysisError,
    ConfigurationError,
    EvaluationError,
    EvoPipeError,
    GenerationError,
    IngestionError,
    OperatorError,
)
from .evaluation import (
    FitnessVector,
    FoldPlan,
    balanced_accuracy,
    evaluate_pipeline,
    fit_pipeline,
    stratified_k_fold,
)
from .operators import default_registry
from .pipeline import (
    DATA,
    HyperparamSpec,
    Individual,
    OperatorSpec,
    PipelineNode,
    Registry,
    count_operators,
    load_registry,
    operator_sequence,
    parse_tree,
    random_pipeline,
    save_registry,
    serialize_tree,
    trees_equal,
)
from .selection import (
    ObjectiveSpec,
    crowding_distance,
    dominates,
    lexicase_select,
    mad,
    non_dominated_sort,
    nsga2_select,
)
from .trie import ExplorationTrie
from .variation import (
    VariationConfig,
    choose_eligible_individuals,
    generate_offspring,
    mut_insert,
    mut_node_replacement,
    mut_shrink,
    one_point_crossover,
)

__version__ = "0.1.0"
