"""Task-state embedding and latent similarity.

A task's calibration context is summarized by a short multichannel frame
series (`TaskState`). States are embedded frame-by-frame with a linear
principal-subspace projection fitted once on a pretraining corpus; task
similarity is the mean cosine between corresponding latent frames. The
projection is deterministic (sign-fixed eigenvectors) and serializable, so
archived similarities are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateStateError, UsageError

_DEGENERATE_VARIANCE = 1e-12


@dataclass(frozen=True)
class TaskState:
    """Observed context of one task: frames of shape (T, channels, H, W)."""

    frames: np.ndarray

    def __post_init__(self):
        arr = np.array(self.frames, dtype=float)
        if arr.ndim != 4 or arr.shape[0] < 1:
            raise UsageError("frames must have shape (T, channels, H, W) with T >= 1")
        if not np.all(np.isfinite(arr)):
            raise UsageError("frames must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_shape(self) -> tuple:
        return self.frames.shape[1:]

    @property
    def flat_dim(self) -> int:
        c, h, w = self.frame_shape
        return c * h * w

    def flattened(self) -> np.ndarray:
        """Frames as a (T, channels*H*W) matrix."""
        return self.frames.reshape(self.n_frames, -1)


@dataclass(frozen=True)
class LinearStateEmbedder:
    """Mean-centered linear projection of flattened frames onto q components.

    ``components`` has shape (q, D) with orthonormal, sign-fixed rows, so the
    fitted object is identical for identical corpora regardless of platform.
    """

    mean: np.ndarray
    components: np.ndarray
    frame_shape: tuple

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        comp = np.array(self.components, dtype=float)
        if mean.ndim != 1 or comp.ndim != 2 or comp.shape[1] != mean.size:
            raise UsageError("embedder mean/components have inconsistent shapes")
        mean.setflags(write=False)
        comp.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "frame_shape", tuple(int(v) for v in self.frame_shape))

    @property
    def latent_dim(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.mean.size

    def content_key(self) -> str:
        """Short stable fingerprint of the fitted parameters."""
        import hashlib

        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.mean).tobytes())
        h.update(np.ascontiguousarray(self.components).tobytes())
        h.update(repr(self.frame_shape).encode())
        return h.hexdigest()[:16]


def fit_embedder(states: Sequence[TaskState], latent_dim: int) -> LinearStateEmbedder:
    """Fit the projection on all frames of a pretraining corpus.

    Components are the leading right singular vectors of the centered frame
    matrix, each sign-fixed so its largest-magnitude coordinate is positive.

    Raises
    ------
    DegenerateStateError
        If the corpus frames are (numerically) constant.
    UsageError
        If the corpus is empty, shapes disagree, or latent_dim is invalid.
    """
    states = list(states)
    if not states:
        raise UsageError("cannot fit an embedder on an empty corpus")
    shape = states[0].frame_shape
    for s in states:
        if s.frame_shape != shape:
            raise UsageError("all states must share one frame shape")
    X = np.vstack([s.flattened() for s in states])
    d = X.shape[1]
    if not (1 <= int(latent_dim) <= d):
        raise UsageError(f"latent_dim must be in [1, {d}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if float(np.max(np.abs(Xc), initial=0.0)) ** 2 < _DEGENERATE_VARIANCE:
        raise DegenerateStateError("pretraining frames are constant")
    # economy SVD; rows of Vt are orthonormal even past the numerical rank
    _, _, vt = np.linalg.svd(Xc, full_matrices=False)
    if vt.shape[0] < latent_dim:
        raise UsageError("corpus has fewer frames than requested components")
    comp = vt[:latent_dim].copy()
    anchor = np.argmax(np.abs(comp), axis=1)
    signs = np.sign(comp[np.arange(comp.shape[0]), anchor])
    signs[signs == 0] = 1.0
    comp *= signs[:, None]
    return LinearStateEmbedder(mean=mean, components=comp, frame_shape=shape)


def embed(embedder: LinearStateEmbedder, state: TaskState) -> np.ndarray:
    """Project a state's frames to a latent series of shape (T, q)."""
    if state.flat_dim != embedder.input_dim:
        raise UsageError("state frame shape does not match the embedder")
    return (state.flattened() - embedder.mean) @ embedder.components.T


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    # zero-norm latents contribute 0 rather than NaN
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def task_similarity(
    embedder: LinearStateEmbedder, state_a: TaskState, state_b: TaskState
) -> float:
    """Mean cosine between corresponding latent frames of two states.

    The result lies in [-1, 1]. Frame counts must match.
    """
    if state_a.n_frames != state_b.n_frames:
        raise UsageError("states must have the same number of frames")
    za = embed(embedder, state_a)
    zb = embed(embedder, state_b)
    sims = [_cosine(za[t], zb[t]) for t in range(za.shape[0])]
    return float(np.clip(np.mean(sims), -1.0, 1.0))
