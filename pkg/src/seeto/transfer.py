"""Knowledge transfer: source selection, softmax weighting, elite injection.

Also home to the Pareto primitives (non-dominated sorting, crowding
distance) shared by elite extraction and the evolutionary loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from .errors import UsageError
from .types import Bounds, EvaluatedSolution, normalize_decision

DUPLICATE_DISTANCE = 1e-9


def _objective_matrix(population) -> np.ndarray:
    """Accept an (n, m) array or a sequence of EvaluatedSolution."""
    if isinstance(population, np.ndarray):
        F = np.asarray(population, dtype=float)
    else:
        pop = list(population)
        if pop and isinstance(pop[0], EvaluatedSolution):
            F = np.vstack([s.objectives for s in pop])
        else:
            F = np.asarray(pop, dtype=float)
    if F.ndim != 2 or F.shape[0] == 0:
        raise UsageError("population must be a non-empty (n, m) collection")
    if not np.all(np.isfinite(F)):
        raise UsageError("objective values must be finite")
    return F


def nondominated_sort(population) -> List[np.ndarray]:
    """Partition into Pareto fronts (index arrays, best front first).

    Works on an (n, m) objective array or a sequence of EvaluatedSolution.
    Every index appears in exactly one front; equal vectors never dominate
    each other and end up in the same front.
    """
    F = _objective_matrix(population)
    n = F.shape[0]
    # dom[i, j]: i dominates j
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt
    n_dominators = dom.sum(axis=0)
    fronts: List[np.ndarray] = []
    remaining = np.ones(n, dtype=bool)
    while remaining.any():
        current = remaining & (n_dominators == 0)
        if not current.any():
            raise AssertionError("dominance relation produced a cycle")
        idx = np.flatnonzero(current)
        fronts.append(idx)
        remaining[idx] = False
        n_dominators = n_dominators - dom[idx].sum(axis=0)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """NSGA-II crowding distance within one front.

    Fronts of size <= 2 get infinite distance everywhere. Per objective the
    two boundary members get infinity and interior members the normalized
    gap between their neighbors; objectives with zero range contribute 0.
    """
    F = _objective_matrix(front)
    n, m = F.shape
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for j in range(m):
        order = np.argsort(F[:, j], kind="stable")
        fj = F[order, j]
        span = fj[-1] - fj[0]
        if span <= 0.0:
            continue
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        interior = order[1:-1]
        dist[interior] += (fj[2:] - fj[:-2]) / span
    return dist


@dataclass(frozen=True)
class SimilarityReport:
    """Similarities to every archived task plus the selected, weighted few.

    ``selected`` holds archive indices in descending similarity (stable on
    ties); ``weights`` aligns with it and sums to 1.
    """

    similarities: Tuple[float, ...]
    selected: Tuple[int, ...]
    weights: Tuple[float, ...]
    gamma: int
    temperature: float

    @property
    def max_weight(self) -> float:
        return max(self.weights) if self.weights else 0.0

    @property
    def max_similarity(self) -> float:
        return max(self.similarities) if self.similarities else 0.0


def select_and_weight(
    similarities: Sequence[float], gamma: int, temperature: float
) -> SimilarityReport:
    """Keep the top-``gamma`` most similar sources and softmax-weight them.

    The softmax (with the max subtracted for stability) is taken over the
    selected subset only; unselected sources carry weight 0. Similarity ties
    at the selection boundary favor the earlier archive index.
    """
    sims = np.asarray(list(similarities), dtype=float)
    if sims.ndim != 1:
        raise UsageError("similarities must be a 1-d sequence")
    if np.any(~np.isfinite(sims)) or np.any(np.abs(sims) > 1.0 + 1e-9):
        raise UsageError("similarities must be finite values in [-1, 1]")
    if int(gamma) < 1:
        raise UsageError("gamma must be at least 1")
    if not (float(temperature) > 0.0):
        raise UsageError("temperature must be positive")
    if sims.size == 0:
        return SimilarityReport((), (), (), int(gamma), float(temperature))
    k = min(int(gamma), sims.size)
    order = np.argsort(-sims, kind="stable")[:k]
    top = sims[order]
    z = (top - top.max()) / float(temperature)
    e = np.exp(z)
    w = e / e.sum()
    return SimilarityReport(
        similarities=tuple(float(s) for s in sims),
        selected=tuple(int(i) for i in order),
        weights=tuple(float(x) for x in w),
        gamma=int(gamma),
        temperature=float(temperature),
    )


def _truncation_order(F: np.ndarray, preferred: Optional[np.ndarray] = None) -> np.ndarray:
    """Deterministic truncation order for one front: crowding descending.

    Ties break toward preferred members (true evaluations), then smaller
    first objective, then input order. Among equal objective vectors, one
    representative is ranked ahead of all duplicate copies so truncation
    keeps coverage of distinct points first.
    """
    n = F.shape[0]
    cd = crowding_distance(F)
    pref = np.zeros(n, dtype=bool) if preferred is None else np.asarray(preferred, bool)
    base = sorted(range(n), key=lambda i: (-cd[i], not pref[i], F[i, 0], i))
    seen = set()
    firsts, dups = [], []
    for i in base:
        key = F[i].tobytes()
        if key in seen:
            dups.append(i)
        else:
            seen.add(key)
            firsts.append(i)
    return np.array(firsts + dups, dtype=int)


def extract_elites(data: Sequence[EvaluatedSolution], count: int) -> List[EvaluatedSolution]:
    """Pick ``count`` elite solutions from an archived dataset.

    Walks Pareto fronts best-first; a front that does not fit entirely is
    truncated by descending crowding distance (ties: smaller first
    objective, then input order). Asking for more than the dataset holds
    returns the whole dataset.
    """
    data = list(data)
    if count < 0:
        raise UsageError("count must be non-negative")
    if count == 0:
        return []
    if count >= len(data):
        return data
    F = np.vstack([s.objectives for s in data])
    fronts = nondominated_sort(F)
    chosen: List[int] = []
    for front in fronts:
        room = count - len(chosen)
        if room <= 0:
            break
        if front.size <= room:
            chosen.extend(int(i) for i in front)
        else:
            order = _truncation_order(F[front])
            chosen.extend(int(front[i]) for i in order[:room])
    return [data[i] for i in chosen]


@dataclass(frozen=True)
class InjectionPlan:
    """How an initial population was assembled from archive elites.

    ``per_source`` aligns with the report's selected archive indices:
    (archive_index, requested, injected). ``n_random`` fills the remainder.
    """

    per_source: Tuple[Tuple[int, int, int], ...]
    n_optimal: int
    n_random: int
    population_size: int

    @property
    def n_injected(self) -> int:
        return sum(inj for _, _, inj in self.per_source)


def latin_hypercube(n: int, dim: int, seed: int) -> np.ndarray:
    """Seeded Latin hypercube sample in [0, 1]^dim, shape (n, dim)."""
    if n < 0 or dim < 1:
        raise UsageError("need n >= 0 and dim >= 1")
    if n == 0:
        return np.zeros((0, dim))
    sampler = qmc.LatinHypercube(d=dim, seed=int(seed))
    return sampler.random(n)


def build_initial_population(
    report: Optional[SimilarityReport],
    archive,
    n_p: int,
    rho: float,
    rng_seed: int,
    bounds: Bounds,
) -> Tuple[np.ndarray, InjectionPlan]:
    """Warm-started initial population (normalized decisions, injection plan).

    ``floor(rho * n_p)`` slots are reserved for elites, split across the
    selected sources as ``floor(w_i * n_opt)`` each; elites are re-normalized
    to the target bounds (clipped when source bounds differ) and placed
    first, in selection order. All remaining slots are a seeded Latin
    hypercube fill. With no report (or no archive records) the population is
    pure space-filling.
    """
    if n_p < 1:
        raise UsageError("population size must be positive")
    if not (0.0 <= float(rho) <= 1.0):
        raise UsageError("rho must lie in [0, 1]")
    d = bounds.dimension
    per_source: List[Tuple[int, int, int]] = []
    rows: List[np.ndarray] = []
    n_opt = int(np.floor(float(rho) * n_p))
    if report is not None and len(report.selected) > 0 and n_opt > 0:
        records = archive.records
        for idx, w in zip(report.selected, report.weights):
            requested = int(np.floor(w * n_opt))
            injected = 0
            if requested > 0:
                record = records[idx]
                for elite in extract_elites(list(record.dataset), requested):
                    u = (elite.decision - bounds.lower) / bounds.span
                    rows.append(np.clip(u, 0.0, 1.0))
                    injected += 1
            per_source.append((int(idx), requested, injected))
    else:
        if report is not None:
            per_source = [(int(i), 0, 0) for i in report.selected]
    n_injected = len(rows)
    n_random = n_p - n_injected
    fill = latin_hypercube(n_random, d, rng_seed)
    decisions = np.vstack(rows + [fill]) if rows else fill
    plan = InjectionPlan(
        per_source=tuple(per_source),
        n_optimal=n_opt,
        n_random=n_random,
        population_size=int(n_p),
    )
    assert decisions.shape == (n_p, d)
    return decisions, plan
