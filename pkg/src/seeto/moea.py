"""Evolutionary machinery on normalized decisions: variation and selection.

Populations carry a fidelity flag per member (true evaluation vs surrogate
score). All decision vectors live in [0, 1]^d.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ensemble import EnsembleSurrogate, ensemble_predict_batch
from .errors import UsageError
from .transfer import _truncation_order, crowding_distance, nondominated_sort

_GENE_EPS = 1e-14


@dataclass
class Population:
    """Decisions (n, d) in [0,1], objectives (n, m), and a fidelity flag."""

    decisions: np.ndarray
    objectives: np.ndarray
    true_eval: np.ndarray

    def __post_init__(self):
        self.decisions = np.atleast_2d(np.asarray(self.decisions, dtype=float))
        self.objectives = np.atleast_2d(np.asarray(self.objectives, dtype=float))
        self.true_eval = np.asarray(self.true_eval, dtype=bool).reshape(-1)
        n = self.decisions.shape[0]
        if self.objectives.shape[0] != n or self.true_eval.shape[0] != n:
            raise UsageError("population arrays disagree on member count")

    @property
    def size(self) -> int:
        return self.decisions.shape[0]

    @staticmethod
    def concat(*pops: "Population") -> "Population":
        return Population(
            decisions=np.vstack([p.decisions for p in pops]),
            objectives=np.vstack([p.objectives for p in pops]),
            true_eval=np.concatenate([p.true_eval for p in pops]),
        )


def rank_and_crowding(F: np.ndarray):
    """Front rank (0 = best) and crowding distance for each member."""
    fronts = nondominated_sort(F)
    rank = np.empty(F.shape[0], dtype=int)
    crowd = np.empty(F.shape[0], dtype=float)
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance(F[front])
    return rank, crowd


def binary_tournament(rank, crowd, rng: np.random.Generator, n_winners: int) -> np.ndarray:
    """Pick winners of random pairwise duels: lower rank, then larger crowding.

    Remaining ties go to the first contestant drawn.
    """
    n = rank.shape[0]
    cand = rng.integers(0, n, size=(n_winners, 2))
    a, b = cand[:, 0], cand[:, 1]
    b_wins = (rank[b] < rank[a]) | ((rank[b] == rank[a]) & (crowd[b] > crowd[a]))
    return np.where(b_wins, b, a)


def _sbx_pairs(P1, P2, eta_c, p_c, rng: np.random.Generator):
    # draw order: pair gates, gene gates, spread variates
    k, d = P1.shape
    pair_on = rng.random(k) < p_c
    gene_on = rng.random((k, d)) < 0.5
    u = rng.random((k, d))
    act = pair_on[:, None] & gene_on & (np.abs(P1 - P2) > _GENE_EPS)
    exponent = 1.0 / (eta_c + 1.0)
    beta = np.where(u <= 0.5, (2.0 * u) ** exponent, (1.0 / (2.0 * (1.0 - u))) ** exponent)
    c1 = 0.5 * ((1.0 + beta) * P1 + (1.0 - beta) * P2)
    c2 = 0.5 * ((1.0 - beta) * P1 + (1.0 + beta) * P2)
    c1 = np.where(act, c1, P1)
    c2 = np.where(act, c2, P2)
    return np.clip(c1, 0.0, 1.0), np.clip(c2, 0.0, 1.0)


def sbx_crossover(p1, p2, eta_c: float, p_c: float, rng: np.random.Generator):
    """Simulated binary crossover of two normalized parents -> two children.

    The whole pair recombines with probability ``p_c``; active genes (chosen
    with probability 0.5, and only where the parents differ) get the usual
    polynomial spread; children are clipped to [0, 1].
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape or p1.ndim != 1:
        raise UsageError("parents must be 1-d vectors of equal length")
    c1, c2 = _sbx_pairs(p1[None, :], p2[None, :], eta_c, p_c, rng)
    return c1[0], c2[0]


def _mutate_batch(X, eta_m, p_m, rng: np.random.Generator):
    k, d = X.shape
    gate = rng.random((k, d)) < p_m
    u = rng.random((k, d))
    exponent = 1.0 / (eta_m + 1.0)
    delta = np.where(
        u < 0.5, (2.0 * u) ** exponent - 1.0, 1.0 - (2.0 * (1.0 - u)) ** exponent
    )
    return np.clip(np.where(gate, X + delta, X), 0.0, 1.0)


def polynomial_mutation(x, eta_m: float, p_m: float, rng: np.random.Generator):
    """Per-gene polynomial mutation of a normalized vector, clipped to [0, 1]."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError("x must be a 1-d vector")
    if not (0.0 <= p_m <= 1.0):
        raise UsageError("p_m must lie in [0, 1]")
    return _mutate_batch(x[None, :], eta_m, p_m, rng)[0]


def evolve_generation(
    pop: Population,
    surrogate: EnsembleSurrogate,
    rng: np.random.Generator,
    crossover_prob: float = 0.9,
    crossover_eta: float = 20.0,
    mutation_prob: Optional[float] = None,
    mutation_eta: float = 20.0,
) -> Population:
    """One generation of offspring, scored by the surrogate.

    Parents come from binary tournaments on the current ranks; offspring
    are produced pairwise by SBX then mutated. Output size equals the input
    population size and all offspring carry surrogate fidelity.
    """
    n, d = pop.decisions.shape
    if not np.all(np.isfinite(pop.objectives)):
        raise UsageError("population must be scored before evolving")
    p_m = (1.0 / d) if mutation_prob is None else float(mutation_prob)
    rank, crowd = rank_and_crowding(pop.objectives)
    n_parents = n + (n % 2)
    parents = binary_tournament(rank, crowd, rng, n_parents)
    P1 = pop.decisions[parents[0::2]]
    P2 = pop.decisions[parents[1::2]]
    c1, c2 = _sbx_pairs(P1, P2, crossover_eta, crossover_prob, rng)
    children = np.empty((2 * c1.shape[0], d))
    children[0::2] = c1
    children[1::2] = c2
    children = children[:n]
    children = _mutate_batch(children, mutation_eta, p_m, rng)
    pred = ensemble_predict_batch(surrogate, children)
    return Population(
        decisions=children,
        objectives=pred.mean,
        true_eval=np.zeros(n, dtype=bool),
    )


def environmental_selection(union: Population, n_p: int) -> Population:
    """Reduce a merged population to ``n_p`` members, NSGA-II style.

    Whole fronts are admitted best-first; the boundary front is truncated by
    descending crowding distance with deterministic tie-breaking (true
    evaluations ahead of surrogate scores on equal objective vectors, then
    smaller first objective, then input order). Truncation keeps one
    representative of every distinct objective vector before admitting
    duplicate copies, so a duplicated front survives as one full copy.
    """
    if n_p < 1:
        raise UsageError("selection size must be positive")
    if union.size <= n_p:
        return union
    F = union.objectives
    fronts = nondominated_sort(F)
    keep: list[int] = []
    for front in fronts:
        room = n_p - len(keep)
        if room <= 0:
            break
        if front.size <= room:
            keep.extend(int(i) for i in front)
        else:
            order = _truncation_order(F[front], preferred=union.true_eval[front])
            keep.extend(int(front[i]) for i in order[:room])
    idx = np.array(keep, dtype=int)
    return Population(
        decisions=union.decisions[idx],
        objectives=union.objectives[idx],
        true_eval=union.true_eval[idx],
    )
