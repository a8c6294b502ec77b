"""Sequential transfer optimization of one target task, plus the baseline.

The run loop follows one pattern: score the population with the current
surrogate, evolve it for a fixed number of inner generations, pick a small
batch by acquisition, truly evaluate the batch, and fold the results back
into both the dataset and the population. Transfer enters twice: elite
solutions from similar archived tasks seed the initial population, and
frozen source surrogates join the ensemble until the local model has seen
enough true evaluations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .embedding import TaskState, task_similarity
from .ensemble import EnsembleSurrogate, build_ensemble, choose_c, ensemble_predict_batch
from .errors import EvaluationError, UsageError
from .gp import GpModel, train_gp
from .metrics import hypervolume_2d
from .moea import Population, environmental_selection, evolve_generation
from .problems import evaluate as problem_evaluate
from .transfer import (
    DUPLICATE_DISTANCE,
    InjectionPlan,
    SimilarityReport,
    _truncation_order,
    build_initial_population,
    latin_hypercube,
    nondominated_sort,
    select_and_weight,
)
from .types import Bounds, EvaluatedSolution, denormalize_decision

MODE_SEETO = "seeto"
MODE_BASELINE = "baseline"
MODE_SOLUTION_ONLY = "seeto-ablation-solution-only"
MODE_MODEL_ONLY = "seeto-ablation-model-only"
MODES = (MODE_SEETO, MODE_BASELINE, MODE_SOLUTION_ONLY, MODE_MODEL_ONLY)


@dataclass(frozen=True)
class OptimizerConfig:
    """Run hyperparameters; field names follow the algorithm's vocabulary."""

    n_p: int = 100
    fe_max: int = 60
    gamma: int = 5
    temperature: float = 0.065
    rho: float = 0.2
    tau: float = 0.7
    c_high: float = 0.038
    c_low: float = 0.017
    batch_size: int = 5
    inner_generations: int = 20
    seed: int = 0
    init_design: int = 20
    kappa: float = 1.0
    c_override: Optional[float] = None
    c_rule_on_raw_similarity: bool = False
    crossover_prob: float = 0.9
    crossover_eta: float = 20.0
    mutation_prob: Optional[float] = None
    mutation_eta: float = 20.0
    noise_floor: float = 1e-8
    eval_workers: int = 1

    def validate(self) -> None:
        if min(self.n_p, self.fe_max, self.gamma, self.batch_size) < 1:
            raise UsageError("n_p, fe_max, gamma and batch_size must be positive")
        if self.inner_generations < 1:
            raise UsageError("inner_generations must be positive")
        if not (0.0 <= self.rho <= 1.0):
            raise UsageError("rho must lie in [0, 1]")
        if not (0.0 < self.tau <= 1.0):
            raise UsageError("tau must lie in (0, 1]")
        if self.temperature <= 0.0:
            raise UsageError("temperature must be positive")
        if self.c_high < 0 or self.c_low < 0:
            raise UsageError("c rates must be non-negative")
        if self.init_design < 0 or self.init_design > self.fe_max:
            raise UsageError("init_design must lie in [0, fe_max]")
        if self.kappa < 0.0:
            raise UsageError("kappa must be non-negative")
        if self.eval_workers < 1:
            raise UsageError("eval_workers must be positive")

    def with_seed(self, seed: int) -> "OptimizerConfig":
        return replace(self, seed=int(seed))


@dataclass(frozen=True)
class TrajectoryPoint:
    """One true evaluation: budget index, raw decision, objectives, incumbent HV."""

    fe_index: int
    decision: np.ndarray
    objectives: np.ndarray
    incumbent_hv: float
    fallback: bool = False


@dataclass
class RunTrajectory:
    """Everything one run produced, in evaluation order."""

    task_id: str
    mode: str
    seed: int
    hv_reference: np.ndarray
    records: List[TrajectoryPoint] = field(default_factory=list)
    final_front: List[EvaluatedSolution] = field(default_factory=list)
    similarity: Optional[SimilarityReport] = None
    injection: Optional[InjectionPlan] = None
    chosen_c: Optional[float] = None
    notes: List[str] = field(default_factory=list)

    @property
    def fe(self) -> int:
        return len(self.records)

    def hv_at(self, fe: int) -> float:
        """Incumbent hypervolume after ``fe`` evaluations."""
        if not (1 <= fe <= len(self.records)):
            raise UsageError(f"fe must lie in [1, {len(self.records)}]")
        return self.records[fe - 1].incumbent_hv

    def evaluated_solutions(self) -> List[EvaluatedSolution]:
        return [
            EvaluatedSolution(
                decision=r.decision,
                objectives=r.objectives,
                eval_index=r.fe_index,
                task_id=self.task_id,
            )
            for r in self.records
        ]


def _distinct_rows(X: np.ndarray) -> int:
    if X.shape[0] == 0:
        return 0
    return np.unique(X, axis=0).shape[0]


def _min_dist(x: np.ndarray, pool: np.ndarray) -> float:
    if pool.shape[0] == 0:
        return np.inf
    return float(np.sqrt(np.min(np.sum((pool - x[None, :]) ** 2, axis=1))))


def select_acquisition_batch(
    offspring: Population,
    surrogate: EnsembleSurrogate,
    evaluated: np.ndarray,
    q: int,
    rng: np.random.Generator,
    kappa: float = 1.0,
) -> Tuple[np.ndarray, bool]:
    """Pick ``q`` batch points by lower-confidence-bound dominance.

    Candidates are ranked by non-dominated sorting of their per-objective
    LCB scores (mean - kappa * std) and, within fronts, by descending
    crowding distance. Points within 1e-9 (normalized distance) of an
    already evaluated or already chosen point are skipped. If the offspring
    pool cannot fill the batch, the remainder comes from a fresh seeded
    Latin hypercube draw; the second return value flags that fallback.
    """
    if q < 1:
        raise UsageError("q must be at least 1")
    d = offspring.decisions.shape[1] if offspring.size else evaluated.shape[1]
    pred = ensemble_predict_batch(surrogate, offspring.decisions)
    lcb = pred.mean - float(kappa) * pred.std
    fronts = nondominated_sort(lcb)
    chosen: List[np.ndarray] = []
    for front in fronts:
        if len(chosen) >= q:
            break
        order = _truncation_order(lcb[front])
        for i in order:
            if len(chosen) >= q:
                break
            x = offspring.decisions[front[i]]
            if _min_dist(x, evaluated) < DUPLICATE_DISTANCE:
                continue
            if chosen and _min_dist(x, np.vstack(chosen)) < DUPLICATE_DISTANCE:
                continue
            chosen.append(x)
    fallback = False
    attempts = 0
    while len(chosen) < q and attempts < 50:
        fallback = True
        seed = int(rng.integers(0, 2**31 - 1))
        for x in latin_hypercube(q, d, seed):
            if len(chosen) >= q:
                break
            if _min_dist(x, evaluated) < DUPLICATE_DISTANCE:
                continue
            if chosen and _min_dist(x, np.vstack(chosen)) < DUPLICATE_DISTANCE:
                continue
            chosen.append(x)
        attempts += 1
    if len(chosen) < q:
        raise UsageError("could not assemble a duplicate-free batch")
    return np.vstack(chosen), fallback


def _evaluate_batch(task, X_norm: np.ndarray, eval_workers: int) -> np.ndarray:
    thetas = [denormalize_decision(x, task.bounds) for x in X_norm]
    if eval_workers <= 1 or len(thetas) <= 1:
        return np.vstack([problem_evaluate(task, th) for th in thetas])
    with ThreadPoolExecutor(max_workers=eval_workers) as pool:
        results = list(pool.map(lambda th: problem_evaluate(task, th), thetas))
    return np.vstack(results)


class _RunState:
    """Bookkeeping for one optimization run."""

    def __init__(self, task, mode, cfg, hv_ref):
        self.task = task
        self.cfg = cfg
        self.bounds: Bounds = task.bounds
        self.X: np.ndarray = np.zeros((0, self.bounds.dimension))
        self.F: np.ndarray = np.zeros((0, 2))
        self.traj = RunTrajectory(
            task_id=task.task_id, mode=mode, seed=cfg.seed, hv_reference=hv_ref
        )

    @property
    def fe(self) -> int:
        return self.X.shape[0]

    def dataset(self) -> List[EvaluatedSolution]:
        return self.traj.evaluated_solutions()

    def absorb(self, X_new: np.ndarray, F_new: np.ndarray, fallback: bool) -> None:
        for x, f in zip(X_new, F_new):
            self.X = np.vstack([self.X, x[None, :]])
            self.F = np.vstack([self.F, f[None, :]])
            hv = hypervolume_2d(self.F, self.traj.hv_reference)
            self.traj.records.append(
                TrajectoryPoint(
                    fe_index=self.X.shape[0],
                    decision=denormalize_decision(x, self.bounds),
                    objectives=f,
                    incumbent_hv=hv,
                    fallback=fallback,
                )
            )

    def evaluate_into(self, X_new: np.ndarray, fallback: bool) -> np.ndarray:
        try:
            F_new = _evaluate_batch(self.task, X_new, self.cfg.eval_workers)
        except Exception as exc:  # noqa: BLE001 - problem code can raise anything
            raise EvaluationError(
                f"true evaluation failed at fe={self.fe}: {exc}",
                partial_trajectory=self.traj,
            ) from exc
        self.absorb(X_new, F_new, fallback)
        return F_new

    def finish(self) -> RunTrajectory:
        if self.F.shape[0]:
            front_idx = nondominated_sort(self.F)[0]
            sols = self.dataset()
            self.traj.final_front = [sols[i] for i in sorted(front_idx)]
        return self.traj


def _cold_batch(state: _RunState, pop_decisions: np.ndarray, injected: int,
                q: int, rng: np.random.Generator) -> Tuple[np.ndarray, bool]:
    """First batch before any surrogate exists.

    With injected elites present, the leading distinct population members
    (the elites) are evaluated first; otherwise a fresh space-filling draw.
    """
    chosen: List[np.ndarray] = []
    if injected > 0:
        for x in pop_decisions:
            if len(chosen) >= q:
                break
            if chosen and _min_dist(x, np.vstack(chosen)) < DUPLICATE_DISTANCE:
                continue
            if _min_dist(x, state.X) < DUPLICATE_DISTANCE:
                continue
            chosen.append(x)
        if len(chosen) == q:
            return np.vstack(chosen), False
    while len(chosen) < q:
        seed = int(rng.integers(0, 2**31 - 1))
        for x in latin_hypercube(q, state.bounds.dimension, seed):
            if len(chosen) >= q:
                break
            if chosen and _min_dist(x, np.vstack(chosen)) < DUPLICATE_DISTANCE:
                continue
            if _min_dist(x, state.X) < DUPLICATE_DISTANCE:
                continue
            chosen.append(x)
    return np.vstack(chosen), True


def _refresh_scores(pop: Population, surrogate: EnsembleSurrogate) -> Population:
    """Re-score surrogate-fidelity members with the current ensemble."""
    objectives = pop.objectives.copy()
    stale = ~pop.true_eval
    if stale.any():
        pred = ensemble_predict_batch(surrogate, pop.decisions[stale])
        objectives[stale] = pred.mean
    return Population(pop.decisions, objectives, pop.true_eval)


def _optimization_loop(
    state: _RunState,
    pop_decisions: np.ndarray,
    injected: int,
    sources: Sequence[Tuple[GpModel, float]],
    c: float,
    rng: np.random.Generator,
    on_batch: Optional[Callable] = None,
    pending_true: Optional[Population] = None,
) -> None:
    cfg = state.cfg
    pop = Population(
        decisions=pop_decisions,
        objectives=np.full((pop_decisions.shape[0], 2), np.nan),
        true_eval=np.zeros(pop_decisions.shape[0], dtype=bool),
    )
    while state.fe < cfg.fe_max:
        q = min(cfg.batch_size, cfg.fe_max - state.fe)
        local = None
        if _distinct_rows(state.X) >= 2:
            local = train_gp(state.dataset(), state.bounds, cfg.noise_floor)
        if local is None and not sources:
            X_new, fallback = _cold_batch(state, pop.decisions, injected, q, rng)
            state.evaluate_into(X_new, fallback)
            new_pop = Population(X_new, state.F[-X_new.shape[0]:], np.ones(X_new.shape[0], bool))
            pop = environmental_selection(
                Population.concat(_strip_unscored(pop), new_pop), cfg.n_p
            ) if _has_scores(pop) else _merge_unscored(pop, new_pop, cfg.n_p)
        else:
            surrogate = build_ensemble(list(sources), local, c, state.fe)
            pop = _refresh_scores(pop, surrogate)
            if pending_true is not None:
                pop = environmental_selection(
                    Population.concat(pop, pending_true), cfg.n_p
                )
                pending_true = None
            evolved = pop
            for _ in range(cfg.inner_generations):
                off = evolve_generation(
                    evolved,
                    surrogate,
                    rng,
                    crossover_prob=cfg.crossover_prob,
                    crossover_eta=cfg.crossover_eta,
                    mutation_prob=cfg.mutation_prob,
                    mutation_eta=cfg.mutation_eta,
                )
                evolved = environmental_selection(
                    Population.concat(evolved, off), cfg.n_p
                )
            X_new, fallback = select_acquisition_batch(
                Population.concat(evolved, pop), surrogate, state.X, q, rng, cfg.kappa
            )
            state.evaluate_into(X_new, fallback)
            new_pop = Population(
                X_new, state.F[-X_new.shape[0]:], np.ones(X_new.shape[0], bool)
            )
            pop = environmental_selection(
                Population.concat(pop, evolved, new_pop), cfg.n_p
            )
        if fallback:
            state.traj.notes.append(f"fallback batch at fe={state.fe}")
        if on_batch is not None:
            on_batch(state.traj)


def _has_scores(pop: Population) -> bool:
    return bool(np.all(np.isfinite(pop.objectives)))


def _strip_unscored(pop: Population) -> Population:
    ok = np.all(np.isfinite(pop.objectives), axis=1)
    return Population(pop.decisions[ok], pop.objectives[ok], pop.true_eval[ok])


def _merge_unscored(pop: Population, new_true: Population, n_p: int) -> Population:
    """Splice freshly evaluated members into a not-yet-scored population."""
    keep = min(n_p - new_true.size, pop.size)
    return Population(
        decisions=np.vstack([new_true.decisions, pop.decisions[:keep]]),
        objectives=np.vstack(
            [new_true.objectives, pop.objectives[:keep]]
        ),
        true_eval=np.concatenate(
            [new_true.true_eval, pop.true_eval[:keep]]
        ),
    )


def run_seeto(
    target,
    target_state: TaskState,
    archive,
    cfg: OptimizerConfig,
    mode: str = MODE_SEETO,
    hv_reference: Optional[np.ndarray] = None,
    on_batch: Optional[Callable] = None,
) -> RunTrajectory:
    """Solve one target task with transfer, appending its record to the archive.

    ``mode`` also selects the ablations: the solution-only mode keeps elite
    injection but drops source models from the ensemble; the model-only
    mode keeps source models but initializes the population space-filling.
    An empty archive degenerates to baseline behavior.
    """
    cfg.validate()
    if mode not in (MODE_SEETO, MODE_SOLUTION_ONLY, MODE_MODEL_ONLY):
        raise UsageError(f"mode must be one of {MODE_SEETO!r} or its ablations")
    solution_transfer = mode in (MODE_SEETO, MODE_SOLUTION_ONLY)
    model_transfer = mode in (MODE_SEETO, MODE_MODEL_ONLY)
    rng = np.random.default_rng(cfg.seed)
    hv_ref = np.asarray(
        target.hv_reference() if hv_reference is None else hv_reference, float
    )
    state = _RunState(target, mode, cfg, hv_ref)

    report = None
    chosen_c = None
    if len(archive.records) > 0:
        sims = [
            task_similarity(archive.embedder, target_state, rec.state)
            for rec in archive.records
        ]
        report = select_and_weight(sims, cfg.gamma, cfg.temperature)
        if cfg.c_override is not None:
            chosen_c = float(cfg.c_override)
        else:
            chosen_c = choose_c(
                report, cfg.tau, cfg.c_high, cfg.c_low, cfg.c_rule_on_raw_similarity
            )
    state.traj.similarity = report
    state.traj.chosen_c = chosen_c

    pop_seed = int(rng.integers(0, 2**31 - 1))
    if solution_transfer and report is not None:
        decisions, plan = build_initial_population(
            report, archive, cfg.n_p, cfg.rho, pop_seed, target.bounds
        )
    else:
        decisions = latin_hypercube(cfg.n_p, target.bounds.dimension, pop_seed)
        plan = None
    state.traj.injection = plan
    injected = plan.n_injected if plan is not None else 0

    sources: List[Tuple[GpModel, float]] = []
    if model_transfer and report is not None:
        for idx, w in zip(report.selected, report.weights):
            rec = archive.records[idx]
            if rec.bounds != target.bounds:
                raise UsageError(
                    "source and target decision spaces differ; model transfer "
                    "requires a shared space"
                )
            sources.append((rec.surrogate, float(w)))

    c_eff = chosen_c if chosen_c is not None else cfg.c_high
    _optimization_loop(state, decisions, injected, sources, c_eff, rng, on_batch)
    traj = state.finish()

    from .archive import make_task_record

    final_gp = train_gp(state.dataset(), target.bounds, cfg.noise_floor)
    record = make_task_record(
        task_id=target.task_id,
        state=target_state,
        bounds=target.bounds,
        dataset=state.dataset(),
        surrogate=final_gp,
        embedder=archive.embedder,
        metadata={"mode": mode, "seed": cfg.seed, "fe_max": cfg.fe_max},
    )
    archive.append(record)
    return traj


def run_baseline(
    target,
    cfg: OptimizerConfig,
    init_design: Optional[int] = None,
    hv_reference: Optional[np.ndarray] = None,
    on_batch: Optional[Callable] = None,
) -> RunTrajectory:
    """No-transfer reference: seeded design, local surrogate only.

    The first ``init_design`` trajectory records are the space-filling
    design; the loop afterwards is identical to the transfer runs with
    sources removed.
    """
    cfg.validate()
    n_init = cfg.init_design if init_design is None else int(init_design)
    if n_init > cfg.fe_max:
        raise UsageError("init_design cannot exceed fe_max")
    rng = np.random.default_rng(cfg.seed)
    hv_ref = np.asarray(
        target.hv_reference() if hv_reference is None else hv_reference, float
    )
    state = _RunState(target, MODE_BASELINE, cfg, hv_ref)

    design_seed = int(rng.integers(0, 2**31 - 1))
    pop_seed = int(rng.integers(0, 2**31 - 1))
    pending_true = None
    if n_init > 0:
        design = latin_hypercube(n_init, target.bounds.dimension, design_seed)
        state.evaluate_into(design, False)
        pending_true = Population(
            design, state.F[:n_init], np.ones(n_init, dtype=bool)
        )
        if on_batch is not None:
            on_batch(state.traj)
    decisions = latin_hypercube(cfg.n_p, target.bounds.dimension, pop_seed)
    _optimization_loop(
        state, decisions, 0, [], cfg.c_high, rng, on_batch, pending_true
    )
    return state.finish()
