"""Per-objective Gaussian-process surrogates.

Each objective gets an independent GP with an isotropic squared-exponential
kernel on normalized inputs and standardized targets. Noise is fixed at a
small floor; length-scale and signal variance are fitted by maximizing the
log marginal likelihood with a deterministic 8-start bounded search.
Training data are sorted canonically before fitting so the model is
invariant to input ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .errors import InsufficientDataError, SurrogateTrainingError, UsageError
from .types import Bounds, EvaluatedSolution, normalize_decision

NOISE_FLOOR = 1e-8
LENGTH_SCALE_BOUNDS = (1e-2, 10.0)
SIGNAL_VARIANCE_BOUNDS = (1e-2, 10.0)
N_STARTS = 8
_START_SEED = 1729
_CHOLESKY_RETRIES = 3
_LBFGS_MAXITER = 60
_DUPLICATE_TOL = 0.0  # exact duplicate rows; distinctness checked bitwise


@dataclass(frozen=True)
class ObjectiveGp:
    """Fitted GP for a single objective (inputs normalized, canonical order)."""

    inputs: np.ndarray
    targets: np.ndarray
    length_scale: float
    signal_variance: float
    noise_variance: float
    target_mean: float
    target_scale: float
    chol_lower: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float

    @property
    def n_points(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True)
class GpModel:
    """A set of per-objective GPs sharing one canonical training design."""

    objectives: tuple
    noise_floor: float

    @property
    def n_objectives(self) -> int:
        return len(self.objectives)

    @property
    def inputs(self) -> np.ndarray:
        return self.objectives[0].inputs

    @property
    def n_points(self) -> int:
        return self.objectives[0].n_points


@dataclass(frozen=True)
class Prediction:
    """Posterior mean and standard deviation per objective."""

    mean: np.ndarray
    std: np.ndarray


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # explicit differences: row-independent, so batch == loop bitwise
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kernel(a: np.ndarray, b: np.ndarray, length_scale: float, signal_variance: float) -> np.ndarray:
    return signal_variance * np.exp(-0.5 * _sq_dists(a, b) / (length_scale**2))


def canonical_order(X: np.ndarray) -> np.ndarray:
    """Permutation sorting rows lexicographically (first column primary)."""
    return np.lexsort(tuple(X[:, j] for j in range(X.shape[1] - 1, -1, -1)))


def _neg_log_marginal_likelihood(log_params, X, y, noise, sq):
    ls = float(np.exp(log_params[0]))
    sv = float(np.exp(log_params[1]))
    n = X.shape[0]
    E = np.exp(-0.5 * sq / (ls**2))
    K = sv * E
    K[np.diag_indices_from(K)] += noise
    try:
        L = cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros(2)
    except Exception:
        return 1e25, np.zeros(2)
    alpha = cho_solve((L, True), y, check_finite=False)
    half_logdet = float(np.sum(np.log(np.diag(L))))
    lml = -0.5 * float(y @ alpha) - half_logdet - 0.5 * n * np.log(2.0 * np.pi)
    Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - Kinv
    dK_dlog_sv = sv * E
    dK_dlog_ls = sv * E * (sq / (ls**2))
    grad_lml = 0.5 * np.array(
        [np.sum(W * dK_dlog_ls), np.sum(W * dK_dlog_sv)]
    )
    return -lml, -grad_lml


def _factorize(X, y_std, ls, sv, noise_floor):
    """Cholesky with the documented retry ladder: x10 noise, up to 3 retries."""
    sq = _sq_dists(X, X)
    E = np.exp(-0.5 * sq / (ls**2))
    noise = noise_floor
    for attempt in range(_CHOLESKY_RETRIES + 1):
        K = sv * E
        K[np.diag_indices_from(K)] += noise
        try:
            L = cholesky(K, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            noise *= 10.0
            continue
        alpha = cho_solve((L, True), y_std, check_finite=False)
        return L, alpha, noise
    raise SurrogateTrainingError(
        f"Cholesky failed after {_CHOLESKY_RETRIES} noise escalations"
    )


def _fit_objective(X: np.ndarray, y: np.ndarray, noise_floor: float) -> ObjectiveGp:
    mean = float(np.mean(y))
    scale = float(np.std(y))
    if scale < 1e-12:
        scale = 1.0
    y_std = (y - mean) / scale

    sq = _sq_dists(X, X)
    lb = np.log([LENGTH_SCALE_BOUNDS[0], SIGNAL_VARIANCE_BOUNDS[0]])
    ub = np.log([LENGTH_SCALE_BOUNDS[1], SIGNAL_VARIANCE_BOUNDS[1]])
    rng = np.random.default_rng(_START_SEED)
    starts = [np.array([np.log(0.5), 0.0])]
    starts += [rng.uniform(lb, ub) for _ in range(N_STARTS - 1)]

    best = None
    for x0 in starts:
        f0, _ = _neg_log_marginal_likelihood(x0, X, y_std, noise_floor, sq)
        if best is None or f0 < best[0]:
            best = (f0, x0)
        res = minimize(
            _neg_log_marginal_likelihood,
            x0,
            args=(X, y_std, noise_floor, sq),
            method="L-BFGS-B",
            jac=True,
            bounds=list(zip(lb, ub)),
            options={"maxiter": _LBFGS_MAXITER},
        )
        if np.all(np.isfinite(res.x)) and res.fun < best[0]:
            best = (float(res.fun), res.x.copy())

    ls = float(np.exp(np.clip(best[1][0], lb[0], ub[0])))
    sv = float(np.exp(np.clip(best[1][1], lb[1], ub[1])))
    L, alpha, noise = _factorize(X, y_std, ls, sv, noise_floor)
    half_logdet = float(np.sum(np.log(np.diag(L))))
    lml = (
        -0.5 * float(y_std @ alpha)
        - half_logdet
        - 0.5 * X.shape[0] * np.log(2.0 * np.pi)
    )
    X = X.copy()
    X.setflags(write=False)
    y = np.asarray(y, dtype=float).copy()
    y.setflags(write=False)
    return ObjectiveGp(
        inputs=X,
        targets=y,
        length_scale=ls,
        signal_variance=sv,
        noise_variance=noise,
        target_mean=mean,
        target_scale=scale,
        chol_lower=L,
        alpha=alpha,
        log_marginal_likelihood=lml,
    )


def build_objective_gp(
    X: np.ndarray, y: np.ndarray, length_scale: float, signal_variance: float,
    noise_variance: float, target_mean: float, target_scale: float,
) -> ObjectiveGp:
    """Reconstruct a fitted objective GP from stored hyperparameters.

    Used when loading archives: refactorizes at the stored noise level, so
    predictions reproduce the original model exactly.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    y_std = (y - target_mean) / target_scale
    sq = _sq_dists(X, X)
    K = signal_variance * np.exp(-0.5 * sq / (length_scale**2))
    K[np.diag_indices_from(K)] += noise_variance
    try:
        L = cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SurrogateTrainingError("stored model failed to refactorize") from exc
    alpha = cho_solve((L, True), y_std, check_finite=False)
    half_logdet = float(np.sum(np.log(np.diag(L))))
    lml = (
        -0.5 * float(y_std @ alpha)
        - half_logdet
        - 0.5 * X.shape[0] * np.log(2.0 * np.pi)
    )
    Xf = X.copy()
    Xf.setflags(write=False)
    yf = y.copy()
    yf.setflags(write=False)
    return ObjectiveGp(
        inputs=Xf,
        targets=yf,
        length_scale=float(length_scale),
        signal_variance=float(signal_variance),
        noise_variance=float(noise_variance),
        target_mean=float(target_mean),
        target_scale=float(target_scale),
        chol_lower=L,
        alpha=alpha,
        log_marginal_likelihood=lml,
    )


def train_gp(
    data: Sequence[EvaluatedSolution],
    bounds: Bounds,
    noise_floor: float = NOISE_FLOOR,
) -> GpModel:
    """Fit one GP per objective on a collection of evaluated solutions.

    Decisions are normalized with ``bounds`` and sorted canonically, so the
    fitted model does not depend on input order. Requires at least two
    distinct decision vectors.
    """
    data = list(data)
    if len(data) < 2:
        raise InsufficientDataError("need at least 2 evaluated solutions")
    X = np.vstack([normalize_decision(s.decision, bounds) for s in data])
    F = np.vstack([s.objectives for s in data])
    if np.unique(X, axis=0).shape[0] < 2:
        raise InsufficientDataError("need at least 2 distinct decision vectors")
    order = canonical_order(X)
    X = np.ascontiguousarray(X[order])
    F = np.ascontiguousarray(F[order])
    models = tuple(
        _fit_objective(X, F[:, j], noise_floor) for j in range(F.shape[1])
    )
    return GpModel(objectives=models, noise_floor=noise_floor)


def predict_batch(model: GpModel, X: np.ndarray) -> Prediction:
    """Posterior mean/std for a (k, d) batch of normalized inputs.

    Rows are independent; a batch call matches a loop of single-point calls
    to within BLAS roundoff (the k-row and 1-row code paths may differ in
    the last bit).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    means = np.empty((X.shape[0], model.n_objectives))
    stds = np.empty_like(means)
    for j, g in enumerate(model.objectives):
        k_star = _kernel(X, g.inputs, g.length_scale, g.signal_variance)
        mean_std = k_star @ g.alpha
        v = solve_triangular(g.chol_lower, k_star.T, lower=True, check_finite=False)
        var = g.signal_variance + g.noise_variance - np.einsum("ij,ij->j", v, v)
        var = np.maximum(var, 0.0)
        means[:, j] = g.target_mean + g.target_scale * mean_std
        stds[:, j] = g.target_scale * np.sqrt(var)
    return Prediction(mean=means, std=stds)


def predict(model: GpModel, x: np.ndarray) -> Prediction:
    """Posterior mean/std at a single normalized input (1-d arrays out)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise UsageError("predict takes a single 1-d input; use predict_batch")
    p = predict_batch(model, x[None, :])
    return Prediction(mean=p.mean[0], std=p.std[0])
