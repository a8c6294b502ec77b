"""Shared value types: decision-space bounds, evaluated solutions, dominance.

Decision vectors are plain 1-d float arrays. Raw vectors live in the
problem's physical units; the optimizer works on normalized coordinates in
[0, 1]^d and crosses back through :func:`denormalize_decision` only at the
evaluation boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from .errors import UsageError

_BOUND_SLACK = 1e-12


def _frozen_vector(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise UsageError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Bounds:
    """Box bounds of a decision space, lower strictly below upper per axis."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen_vector(self.lower, "lower")
        hi = _frozen_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise UsageError("bound vectors must share a length")
        if not np.all(lo < hi):
            raise UsageError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        slack = _BOUND_SLACK * np.maximum(1.0, np.abs(self.span))
        return bool(
            x.shape == self.lower.shape
            and np.all(x >= self.lower - slack)
            and np.all(x <= self.upper + slack)
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Bounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))


def normalize_decision(x: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map a raw decision vector into [0, 1]^d.

    Raises UsageError when ``x`` falls outside ``bounds`` (beyond a tiny
    floating-point slack) or has the wrong length.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (bounds.dimension,):
        raise UsageError(
            f"decision has length {x.size}, bounds expect {bounds.dimension}"
        )
    if not bounds.contains(x):
        raise UsageError("decision lies outside its declared bounds")
    u = (x - bounds.lower) / bounds.span
    return np.clip(u, 0.0, 1.0)


def denormalize_decision(u: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Inverse of :func:`normalize_decision`; ``u`` must lie in [0, 1]^d."""
    u = np.asarray(u, dtype=float)
    if u.shape != (bounds.dimension,):
        raise UsageError(
            f"normalized decision has length {u.size}, bounds expect {bounds.dimension}"
        )
    if np.any(u < -_BOUND_SLACK) or np.any(u > 1.0 + _BOUND_SLACK):
        raise UsageError("normalized decision must lie in [0, 1]")
    return bounds.lower + np.clip(u, 0.0, 1.0) * bounds.span


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Strict Pareto dominance for minimization.

    True iff ``a`` is no worse than ``b`` in every objective and strictly
    better in at least one. Equal vectors never dominate each other.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError("objective vectors must be 1-d and of equal length")
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(frozen=True)
class EvaluatedSolution:
    """A raw decision vector paired with its true objective vector.

    ``eval_index`` is the 1-based position in the run's evaluation order;
    ``task_id`` names the task that produced the objectives.
    """

    decision: np.ndarray
    objectives: np.ndarray
    eval_index: int
    task_id: str
    metadata: Optional[Dict[str, Any]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "decision", _frozen_vector(self.decision, "decision"))
        obj = _frozen_vector(self.objectives, "objectives")
        object.__setattr__(self, "objectives", obj)
        if int(self.eval_index) < 1:
            raise UsageError("eval_index is 1-based and must be >= 1")
        object.__setattr__(self, "eval_index", int(self.eval_index))
        if not self.task_id:
            raise UsageError("task_id must be non-empty")


def solutions_to_arrays(solutions) -> tuple[np.ndarray, np.ndarray]:
    """Stack a collection of EvaluatedSolution into (X, F) float arrays."""
    sols = list(solutions)
    if not sols:
        raise UsageError("empty solution collection")
    X = np.vstack([s.decision for s in sols])
    F = np.vstack([s.objectives for s in sols])
    return X, F
