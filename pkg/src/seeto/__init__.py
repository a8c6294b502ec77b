"""Sequential evolutionary transfer optimization for expensive calibration.

Surrogate-assisted multi-objective search that reuses an archive of
previously solved tasks two ways at once: elite solutions from similar
tasks seed the initial population, and their surrogate models join a
similarity-weighted ensemble whose local share grows with the evaluation
budget spent on the new task.
"""

from .archive import SourceArchive, TaskRecord, load_archive, make_task_record, save_archive
from .config import ExperimentConfig, FamilyConfig, config_from_dict, load_config
from .embedding import LinearStateEmbedder, TaskState, embed, fit_embedder, task_similarity
from .ensemble import EnsembleSurrogate, beta, build_ensemble, choose_c, ensemble_predict, ensemble_predict_batch
from .errors import (
    ArchiveCorruptionError,
    ArchiveVersionError,
    ConfigError,
    DegenerateStateError,
    EvaluationError,
    InsufficientDataError,
    SeetoError,
    SurrogateTrainingError,
    UsageError,
)
from .gp import GpModel, Prediction, predict, predict_batch, train_gp
from .metrics import AdditionalFe, additional_fe_percent, delta_hv_percent, hypervolume, hypervolume_2d
from .moea import environmental_selection, evolve_generation, polynomial_mutation, sbx_crossover
from .optimizer import (
    MODE_BASELINE,
    MODE_MODEL_ONLY,
    MODE_SEETO,
    MODE_SOLUTION_ONLY,
    MODES,
    OptimizerConfig,
    RunTrajectory,
    TrajectoryPoint,
    run_baseline,
    run_seeto,
    select_acquisition_batch,
)
from .problems import (
    SyntheticTask,
    TaskFamily,
    analytic_hypervolume,
    default_parameter_bounds,
    evaluate,
    make_task_family,
    pareto_front,
)
from .transfer import (
    InjectionPlan,
    SimilarityReport,
    build_initial_population,
    crowding_distance,
    extract_elites,
    nondominated_sort,
    select_and_weight,
)
from .types import Bounds, EvaluatedSolution, denormalize_decision, dominates, normalize_decision

__version__ = "0.1.0"

__all__ = [
    "AdditionalFe",
    "ArchiveCorruptionError",
    "ArchiveVersionError",
    "Bounds",
    "ConfigError",
    "DegenerateStateError",
    "EnsembleSurrogate",
    "EvaluatedSolution",
    "EvaluationError",
    "ExperimentConfig",
    "FamilyConfig",
    "GpModel",
    "InjectionPlan",
    "InsufficientDataError",
    "LinearStateEmbedder",
    "MODES",
    "MODE_BASELINE",
    "MODE_MODEL_ONLY",
    "MODE_SEETO",
    "MODE_SOLUTION_ONLY",
    "OptimizerConfig",
    "Prediction",
    "RunTrajectory",
    "SeetoError",
    "SimilarityReport",
    "SourceArchive",
    "SurrogateTrainingError",
    "SyntheticTask",
    "TaskFamily",
    "TaskRecord",
    "TaskState",
    "TrajectoryPoint",
    "UsageError",
    "additional_fe_percent",
    "analytic_hypervolume",
    "beta",
    "build_ensemble",
    "build_initial_population",
    "choose_c",
    "config_from_dict",
    "crowding_distance",
    "default_parameter_bounds",
    "denormalize_decision",
    "dominates",
    "embed",
    "ensemble_predict",
    "ensemble_predict_batch",
    "environmental_selection",
    "evaluate",
    "evolve_generation",
    "extract_elites",
    "fit_embedder",
    "hypervolume",
    "hypervolume_2d",
    "load_archive",
    "load_config",
    "make_task_family",
    "make_task_record",
    "nondominated_sort",
    "normalize_decision",
    "pareto_front",
    "polynomial_mutation",
    "predict",
    "predict_batch",
    "run_baseline",
    "run_seeto",
    "save_archive",
    "sbx_crossover",
    "select_acquisition_batch",
    "select_and_weight",
    "task_similarity",
    "train_gp",
    "delta_hv_percent",
]
