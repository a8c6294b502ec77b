"""Synthetic expensive-calibration benchmark family.

Each task is a bi-objective landscape over a small physical parameter box.
The two objectives are distances to a pair of anchors separated by a fixed
offset along the first normalized coordinate, so every task has the same
analytic Pareto front shape, translated by its own anchor. The anchor is a
linear read-out of the task's observed state, which couples state
similarity to landscape similarity: tasks with nearby states have nearby
optima, and the outlier state cluster has systematically shifted optima.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .embedding import LinearStateEmbedder, TaskState, fit_embedder, task_similarity
from .errors import UsageError
from .types import Bounds, normalize_decision

PARAMETER_TABLE: Tuple[Tuple[str, float, float], ...] = (
    ("cssca", 5e-6, 2e-5),
    ("porsl", 0.5, 2.0),
    ("pfac", 1.0, 3.0),
    ("ice_stokes_fac", 8000.0, 30000.0),
    ("dimax", 3e-4, 8e-4),
)

PARAMETER_NAMES: Tuple[str, ...] = tuple(name for name, _, _ in PARAMETER_TABLE)

DEFAULT_CONFLICT_OFFSET = 0.3
HV_REFERENCE_MARGIN = 0.1
_ANCHOR_LOW = 0.1
_ANCHOR_HIGH = 0.9


def default_parameter_bounds() -> Bounds:
    """The five calibration parameter ranges used throughout the benchmark."""
    return Bounds(
        lower=np.array([lo for _, lo, _ in PARAMETER_TABLE]),
        upper=np.array([hi for _, _, hi in PARAMETER_TABLE]),
    )


class EvalCounter:
    """Thread-safe evaluation counter (atomic increment)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> int:
        with self._lock:
            self._count += 1
            return self._count

    @property
    def count(self) -> int:
        return self._count

    def __getstate__(self):
        return {"count": self._count}

    def __setstate__(self, state):
        self._lock = threading.Lock()
        self._count = state["count"]


@dataclass(frozen=True)
class SyntheticTask:
    """One benchmark task: anchor location, conflict offset, bounds, state."""

    task_id: str
    state: TaskState
    anchor: np.ndarray
    conflict_offset: float
    bounds: Bounds
    eval_delay_s: float = 0.0
    counter: EvalCounter = field(default_factory=EvalCounter, compare=False, repr=False)

    def __post_init__(self):
        a = np.array(self.anchor, dtype=float)
        if a.ndim != 1 or a.size != self.bounds.dimension:
            raise UsageError("anchor must match the bounds dimension")
        if a.size < 2:
            raise UsageError("tasks need at least 2 decision dimensions")
        if np.any(a < _ANCHOR_LOW - 1e-12) or np.any(a > _ANCHOR_HIGH + 1e-12):
            raise UsageError(f"anchor must lie in [{_ANCHOR_LOW}, {_ANCHOR_HIGH}]^d")
        delta = float(self.conflict_offset)
        if not (0.0 < delta < 1.0):
            raise UsageError("conflict_offset must lie in (0, 1)")
        # the analytic front spans the segment between the two anchors;
        # both endpoints must stay inside the unit box
        if a[0] + delta > 1.0 + 1e-12:
            raise UsageError("anchor[0] + conflict_offset must not exceed 1")
        a.setflags(write=False)
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "conflict_offset", delta)

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    @property
    def evaluations(self) -> int:
        return self.counter.count

    def hv_reference(self) -> np.ndarray:
        """Fixed hypervolume reference point for this family."""
        r = self.conflict_offset + HV_REFERENCE_MARGIN
        return np.array([r, r])


def evaluate(task: SyntheticTask, theta: np.ndarray) -> np.ndarray:
    """True objectives at a raw decision vector (counted, deterministic).

    Both objectives are root-mean-square style distances in normalized
    coordinates: the first to the anchor, the second to the anchor shifted
    by the conflict offset along coordinate 0. Off-axis coordinates are
    averaged so their pull does not grow with dimension.
    """
    if task.eval_delay_s > 0.0:
        time.sleep(task.eval_delay_s)
    u = normalize_decision(np.asarray(theta, dtype=float), task.bounds)
    a = task.anchor
    d = u.size
    rest = float(np.sum((u[1:] - a[1:]) ** 2)) / (d - 1)
    f1 = np.sqrt((u[0] - a[0]) ** 2 + rest)
    f2 = np.sqrt((u[0] - a[0] - task.conflict_offset) ** 2 + rest)
    task.counter.increment()
    return np.array([f1, f2])


def pareto_front(task: SyntheticTask, n: int = 101) -> np.ndarray:
    """``n`` evenly spaced points of the analytic front {(t, delta - t)}."""
    if n < 2:
        raise UsageError("need at least 2 front points")
    t = np.linspace(0.0, task.conflict_offset, n)
    return np.column_stack([t, task.conflict_offset - t])


def analytic_hypervolume(task: SyntheticTask, reference: Optional[np.ndarray] = None) -> float:
    """Exact hypervolume of the analytic front.

    The dominated region inside the reference box is the box minus the
    right triangle under the front segment, so the area is
    ``r1 * r2 - delta^2 / 2``. Requires both reference coordinates at or
    above the conflict offset.
    """
    delta = task.conflict_offset
    ref = task.hv_reference() if reference is None else np.asarray(reference, float)
    if ref.shape != (2,) or np.any(ref < delta - 1e-12):
        raise UsageError("reference must be a pair at or above the conflict offset")
    return float(ref[0] * ref[1] - 0.5 * delta * delta)


@dataclass(frozen=True)
class TaskFamily:
    """A seeded benchmark family: sources, targets, pretraining states.

    The last ``outlier_ids`` targets sit in a second state cluster whose
    anchors are shifted; everything else co-locates. ``pretrain_states``
    is the corpus intended for embedder fitting and spans both clusters.
    """

    sources: Tuple[SyntheticTask, ...]
    targets: Tuple[SyntheticTask, ...]
    pretrain_states: Tuple[TaskState, ...]
    bounds: Bounds
    conflict_offset: float
    outlier_ids: Tuple[str, ...]
    seed: int

    def __iter__(self):
        return iter((list(self.sources), list(self.targets)))

    @property
    def all_tasks(self) -> List[SyntheticTask]:
        return list(self.sources) + list(self.targets)

    def task_by_id(self, task_id: str) -> SyntheticTask:
        for t in self.all_tasks:
            if t.task_id == task_id:
                return t
        raise UsageError(f"unknown task id: {task_id}")

    def is_outlier(self, task_id: str) -> bool:
        return task_id in self.outlier_ids


_STATE_NORM = 3.0
_CLUSTER_SEPARATION = 6.0
_PRETRAIN_IN = 24
_PRETRAIN_OUT = 8
_FRAME_NOISE_FACTOR = 0.25
_CROSS_GAIN = 0.5
# outlier anchors shift per-dimension by this much; far enough that stale
# source knowledge misleads, near enough that the decaying ensemble recovers
_OUTLIER_SHIFT_LOW = 0.05
_OUTLIER_SHIFT_HIGH = 0.10
# gain mapping within-cluster state noise onto anchor scatter; sized so
# same-cluster tasks are near but not identical (sources help early, their
# residual offset matters late)
_ANCHOR_NOISE_GAIN = 0.2


def _make_state(rng, center, spread, frame_noise, n_frames, frame_shape) -> TaskState:
    base = center + spread * rng.standard_normal(center.size)
    frames = base[None, :] + frame_noise * rng.standard_normal((n_frames, center.size))
    return TaskState(frames=frames.reshape((n_frames,) + frame_shape))


def make_task_family(
    n_source: int = 20,
    n_target: int = 10,
    cluster_spread: float = 0.05,
    outlier_targets: int = 3,
    seed: int = 0,
    dimension: int = 5,
    conflict_offset: float = DEFAULT_CONFLICT_OFFSET,
    frame_shape: Tuple[int, int, int] = (1, 4, 4),
    n_frames: int = 6,
    bounds: Optional[Bounds] = None,
    eval_delay_s: float = 0.0,
) -> TaskFamily:
    """Generate a seeded benchmark family with a controlled outlier split.

    Sources and most targets draw their states from one cluster; the last
    ``outlier_targets`` targets come from a well-separated second cluster.
    Anchors are a clipped linear read-out of each task's mean frame, built
    so in-cluster anchors co-locate tightly while outlier anchors shift by
    a substantial fraction of the box. Generation verifies that every
    in-cluster target is more state-similar to its best source than any
    outlier target is to its best one.
    """
    if n_source < 0 or n_target < 1:
        raise UsageError("need n_source >= 0 and n_target >= 1")
    if not (0 <= outlier_targets <= n_target):
        raise UsageError("outlier_targets must lie in [0, n_target]")
    if cluster_spread <= 0:
        raise UsageError("cluster_spread must be positive")
    if dimension < 2:
        raise UsageError("dimension must be at least 2")
    if bounds is None:
        if dimension == len(PARAMETER_TABLE):
            bounds = default_parameter_bounds()
        else:
            bounds = Bounds(np.zeros(dimension), np.ones(dimension))
    if bounds.dimension != dimension:
        raise UsageError("bounds dimension mismatch")

    rng = np.random.default_rng(seed)
    flat_dim = int(np.prod(frame_shape))
    frame_noise = _FRAME_NOISE_FACTOR * cluster_spread

    center_in = rng.standard_normal(flat_dim)
    center_in *= _STATE_NORM / np.linalg.norm(center_in)
    shift_dir = rng.standard_normal(flat_dim)
    shift_dir /= np.linalg.norm(shift_dir)
    center_out = center_in + _CLUSTER_SEPARATION * shift_dir

    anchor_in = rng.uniform(0.25, 0.45, dimension)
    anchor_in[0] = min(anchor_in[0], 1.0 - conflict_offset - 0.25)
    if anchor_in[0] < 0.11:
        raise UsageError("conflict_offset too large for the anchor layout")
    shift = rng.uniform(_OUTLIER_SHIFT_LOW, _OUTLIER_SHIFT_HIGH, dimension)
    if anchor_in[0] + shift[0] > 1.0 - conflict_offset - 0.05:
        shift[0] = -shift[0]
    anchor_out = anchor_in + shift

    gains = (anchor_out - anchor_in) / _CLUSTER_SEPARATION
    readout = np.empty((dimension, flat_dim))
    for i in range(dimension):
        p = rng.standard_normal(flat_dim)
        p -= (p @ shift_dir) * shift_dir
        p /= np.linalg.norm(p)
        q = rng.standard_normal(flat_dim)
        q -= (q @ shift_dir) * shift_dir
        q /= np.linalg.norm(q)
        readout[i] = (
            gains[i] * shift_dir
            + _CROSS_GAIN * abs(gains[i]) * p
            + _ANCHOR_NOISE_GAIN * q
        )
    offset = anchor_in - readout @ center_in

    pretrain: List[TaskState] = []
    for _ in range(_PRETRAIN_IN):
        pretrain.append(
            _make_state(rng, center_in, cluster_spread, frame_noise, n_frames, frame_shape)
        )
    for _ in range(_PRETRAIN_OUT):
        pretrain.append(
            _make_state(rng, center_out, cluster_spread, frame_noise, n_frames, frame_shape)
        )

    def build_task(task_id: str, center: np.ndarray) -> SyntheticTask:
        state = _make_state(rng, center, cluster_spread, frame_noise, n_frames, frame_shape)
        mean_frame = state.flattened().mean(axis=0)
        anchor = np.clip(readout @ mean_frame + offset, _ANCHOR_LOW, _ANCHOR_HIGH)
        anchor[0] = min(anchor[0], 1.0 - conflict_offset - 0.02)
        return SyntheticTask(
            task_id=task_id,
            state=state,
            anchor=anchor,
            conflict_offset=conflict_offset,
            bounds=bounds,
            eval_delay_s=eval_delay_s,
        )

    sources = tuple(
        build_task(f"source-{i:02d}", center_in) for i in range(n_source)
    )
    n_in_targets = n_target - outlier_targets
    targets = tuple(
        build_task(f"target-{i:02d}", center_in if i < n_in_targets else center_out)
        for i in range(n_target)
    )
    outlier_ids = tuple(t.task_id for t in targets[n_in_targets:])

    if n_source > 0 and n_in_targets > 0 and outlier_targets > 0:
        _verify_similarity_split(sources, targets, outlier_ids, pretrain)

    return TaskFamily(
        sources=sources,
        targets=targets,
        pretrain_states=tuple(pretrain),
        bounds=bounds,
        conflict_offset=conflict_offset,
        outlier_ids=outlier_ids,
        seed=int(seed),
    )


def _verify_similarity_split(sources, targets, outlier_ids, pretrain) -> None:
    embedder = fit_embedder(pretrain, latent_dim=min(8, pretrain[0].flat_dim))
    in_best, out_best = [], []
    for t in targets:
        best = max(task_similarity(embedder, t.state, s.state) for s in sources)
        (out_best if t.task_id in outlier_ids else in_best).append(best)
    if min(in_best) <= max(out_best):
        raise AssertionError(
            "family generation failed the similarity split check; "
            "use a different seed or smaller cluster_spread"
        )
