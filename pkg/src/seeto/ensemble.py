"""Similarity-weighted surrogate ensembles with an adaptive local share.

The ensemble mixes frozen source-task surrogates (weighted by task
similarity) with a local model trained on the target's own evaluations.
The local share grows with the evaluation budget already spent:
``local_weight = 1 - exp(-c * fe)``, so early iterations lean on
transferred knowledge and later ones on target data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import UsageError
from .gp import GpModel, Prediction, predict_batch

_WEIGHT_TOL = 1e-12


def beta(c: float, fe: int) -> float:
    """Local-model share after ``fe`` true evaluations: 1 - exp(-c * fe).

    ``beta(c, 0) == 0`` exactly; the value increases monotonically in both
    arguments and tends to 1.
    """
    c = float(c)
    if not np.isfinite(c) or c < 0.0:
        raise UsageError("c must be a finite non-negative rate")
    if fe < 0:
        raise UsageError("fe must be non-negative")
    if fe == 0:
        return 0.0
    return float(-np.expm1(-c * float(fe)))


def choose_c(
    report,
    tau: float,
    c_high: float,
    c_low: float,
    use_raw_similarity: bool = False,
) -> float:
    """Pick the transition rate from the similarity picture.

    A confident match (max softmax weight >= tau, or max raw similarity
    >= tau when ``use_raw_similarity``) selects ``c_high`` so the local
    model takes over quickly; otherwise ``c_low`` keeps transferred models
    in play longer. An empty report selects ``c_high``.
    """
    if not (0.0 < tau <= 1.0):
        raise UsageError("tau must lie in (0, 1]")
    if use_raw_similarity:
        values = report.similarities
    else:
        values = report.weights
    if len(values) == 0:
        return float(c_high)
    return float(c_high) if max(values) >= tau else float(c_low)


@dataclass(frozen=True)
class EnsembleSurrogate:
    """Weighted source surrogates plus an optional local model.

    ``local_weight`` is the share given to the local model; source weights
    are scaled by ``1 - local_weight``. With no local model the share is 0;
    with no sources it is 1. Effective weights always sum to 1.
    """

    sources: Tuple[Tuple[GpModel, float], ...]
    local: Optional[GpModel]
    local_weight: float

    def __post_init__(self):
        b = float(self.local_weight)
        if not (0.0 <= b <= 1.0):
            raise UsageError("local_weight must lie in [0, 1]")
        if self.local is None and self.sources and b != 0.0:
            raise UsageError("no local model: local_weight must be 0")
        if not self.sources:
            if self.local is None:
                raise UsageError("ensemble needs at least one model")
            if b != 1.0:
                raise UsageError("no sources: local_weight must be 1")
        if self.sources:
            w = np.array([wi for _, wi in self.sources], dtype=float)
            if np.any(w < 0.0):
                raise UsageError("source weights must be non-negative")
            if abs(float(w.sum()) - 1.0) > 1e-9:
                raise UsageError("source weights must sum to 1")
        n_obj = {m.n_objectives for m, _ in self.sources}
        if self.local is not None:
            n_obj.add(self.local.n_objectives)
        if len(n_obj) != 1:
            raise UsageError("all member models must share the objective count")
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "local_weight", b)

    @property
    def n_objectives(self) -> int:
        if self.local is not None:
            return self.local.n_objectives
        return self.sources[0][0].n_objectives

    @property
    def effective_weights(self) -> np.ndarray:
        """Source weights scaled by (1 - local_weight), then the local share."""
        ws = [(1.0 - self.local_weight) * wi for _, wi in self.sources]
        if self.local is not None:
            ws.append(self.local_weight)
        return np.array(ws, dtype=float)


def build_ensemble(
    source_models: Sequence[Tuple[GpModel, float]],
    local: Optional[GpModel],
    c: float,
    fe: int,
) -> EnsembleSurrogate:
    """Assemble the ensemble for the current iteration.

    The local share comes from :func:`beta`; it is forced to 0 when there is
    no local model yet and to 1 when there are no sources.
    """
    sources = tuple(source_models)
    if local is None:
        if not sources:
            raise UsageError("cannot build an ensemble with no models")
        b = 0.0
    elif not sources:
        b = 1.0
    else:
        b = beta(c, fe)
    return EnsembleSurrogate(sources=sources, local=local, local_weight=b)


def ensemble_predict_batch(ens: EnsembleSurrogate, X: np.ndarray) -> Prediction:
    """Mixture posterior for a (k, d) batch of normalized inputs.

    Means combine linearly; variances combine as the same weighted mixture
    of member variances. Degenerate mixtures (single member at full weight)
    return the member's prediction object unchanged, hence bitwise equal.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    b = ens.local_weight
    if not ens.sources:
        return predict_batch(ens.local, X)
    if b == 1.0:
        return predict_batch(ens.local, X)
    if (ens.local is None or b == 0.0) and len(ens.sources) == 1:
        model, w = ens.sources[0]
        if w == 1.0:
            return predict_batch(model, X)

    k = X.shape[0]
    m = ens.n_objectives
    mean = np.zeros((k, m))
    var = np.zeros((k, m))
    for model, w in ens.sources:
        p = predict_batch(model, X)
        mean += w * p.mean
        var += w * (p.std**2)
    mean *= 1.0 - b
    var *= 1.0 - b
    if ens.local is not None and b > 0.0:
        p = predict_batch(ens.local, X)
        mean += b * p.mean
        var += b * (p.std**2)
    return Prediction(mean=mean, std=np.sqrt(np.maximum(var, 0.0)))


def ensemble_predict(ens: EnsembleSurrogate, x: np.ndarray) -> Prediction:
    """Single-point variant of :func:`ensemble_predict_batch`."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError("ensemble_predict takes a single 1-d input")
    p = ensemble_predict_batch(ens, x[None, :])
    return Prediction(mean=p.mean[0], std=p.std[0])
