"""Quality indicators: hypervolume and budget-overhead summaries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .errors import UsageError


def _clean_front(front) -> np.ndarray:
    F = np.asarray(front, dtype=float)
    if F.size == 0:
        return F.reshape(0, 2)
    F = np.atleast_2d(F)
    if not np.all(np.isfinite(F)):
        raise UsageError("front must be finite")
    return F


def hypervolume_2d(front, reference) -> float:
    """Exact dominated area of a 2-objective front below a reference point.

    Points at or beyond the reference contribute nothing; dominated and
    duplicate points contribute once through the staircase sweep. An empty
    front has hypervolume 0.
    """
    ref = np.asarray(reference, dtype=float)
    if ref.shape != (2,) or not np.all(np.isfinite(ref)):
        raise UsageError("reference must be a finite pair")
    F = _clean_front(front)
    if F.shape[0] == 0:
        return 0.0
    if F.shape[1] != 2:
        raise UsageError("hypervolume_2d expects 2 objectives")
    inside = (F[:, 0] < ref[0]) & (F[:, 1] < ref[1])
    F = F[inside]
    if F.shape[0] == 0:
        return 0.0
    order = np.lexsort((F[:, 1], F[:, 0]))
    F = F[order]
    hv = 0.0
    best_f2 = ref[1]
    for f1, f2 in F:
        if f2 < best_f2:
            hv += (ref[0] - f1) * (best_f2 - f2)
            best_f2 = f2
    return float(hv)


def monte_carlo_hypervolume(
    front, reference, n_samples: int = 100_000, seed: int = 0
) -> float:
    """Uniform-sampling estimate of the dominated volume, any objective count.

    Samples the box between the front's componentwise minimum and the
    reference; a sample counts when some front point is componentwise <= it.
    Standard error scales as 1/sqrt(n_samples).
    """
    ref = np.asarray(reference, dtype=float)
    F = _clean_front(front)
    if F.shape[0] == 0:
        return 0.0
    if ref.shape != (F.shape[1],):
        raise UsageError("reference length must match the objective count")
    keep = np.all(F < ref[None, :], axis=1)
    F = F[keep]
    if F.shape[0] == 0:
        return 0.0
    lower = F.min(axis=0)
    volume = float(np.prod(ref - lower))
    rng = np.random.default_rng(seed)
    hit = 0
    chunk = 262_144
    remaining = int(n_samples)
    while remaining > 0:
        k = min(chunk, remaining)
        S = lower + (ref - lower) * rng.random((k, ref.size))
        dominated = np.zeros(k, dtype=bool)
        for p in F:
            dominated |= np.all(p[None, :] <= S, axis=1)
        hit += int(dominated.sum())
        remaining -= k
    return volume * hit / float(n_samples)


def hypervolume(
    front, reference, mc_samples: int = 100_000, seed: int = 0
) -> float:
    """Hypervolume indicator: exact for 2 objectives, Monte Carlo beyond."""
    F = _clean_front(front)
    if F.shape[0] == 0:
        return 0.0
    if F.shape[1] == 2:
        return hypervolume_2d(F, reference)
    return monte_carlo_hypervolume(F, reference, n_samples=mc_samples, seed=seed)


def delta_hv_percent(hv_algorithm: float, hv_reference_run: float) -> float:
    """Relative hypervolume difference in percent, against a reference run.

    ``100 * (hv_algorithm - hv_reference_run) / hv_reference_run``; the
    denominator must be positive.
    """
    if not (hv_reference_run > 0.0):
        raise UsageError("reference hypervolume must be positive")
    return 100.0 * (hv_algorithm - hv_reference_run) / hv_reference_run


@dataclass(frozen=True)
class AdditionalFe:
    """Extra true evaluations needed to match a target hypervolume.

    When the trajectory never reaches the target, ``reached`` is False and
    ``display`` carries the open-ended form ``">X%"`` computed from the
    trajectory's final budget.
    """

    base_fe: int
    fe_at_target: Optional[int]
    percent: Optional[float]
    reached: bool
    display: str


def _as_fe_hv_pairs(trajectory) -> Iterable[Tuple[int, float]]:
    records = getattr(trajectory, "records", trajectory)
    for item in records:
        if hasattr(item, "fe_index"):
            yield int(item.fe_index), float(item.incumbent_hv)
        else:
            fe, hv = item
            yield int(fe), float(hv)


def additional_fe_percent(trajectory, hv_target: float, base_fe: int) -> AdditionalFe:
    """Budget overhead (percent of ``base_fe``) to reach ``hv_target``.

    Scans the trajectory for the smallest evaluation count whose incumbent
    hypervolume is at or above the target (within 1e-12). A negative
    percentage means the target was hit before ``base_fe`` evaluations.
    """
    if base_fe < 1:
        raise UsageError("base_fe must be positive")
    pairs = sorted(_as_fe_hv_pairs(trajectory))
    if not pairs:
        raise UsageError("empty trajectory")
    fe_max = pairs[-1][0]
    for fe, hv in pairs:
        if hv >= hv_target - 1e-12:
            pct = 100.0 * (fe - base_fe) / base_fe
            return AdditionalFe(
                base_fe=int(base_fe),
                fe_at_target=int(fe),
                percent=pct,
                reached=True,
                display=f"{format(pct, '.6g')}%",
            )
    cap = 100.0 * (fe_max - base_fe) / base_fe
    return AdditionalFe(
        base_fe=int(base_fe),
        fe_at_target=None,
        percent=None,
        reached=False,
        display=f">{format(cap, '.6g')}%",
    )
