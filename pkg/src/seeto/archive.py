"""Source-task archive: an append-only record store with exact round-trips.

The on-disk format is structured text (valid JSON) written by a canonical
emitter: fixed key order, floats at 17 significant digits (enough to
reconstruct every double bit for bit), and a sha256 checksum per record.
Saving a loaded archive reproduces the original file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .embedding import LinearStateEmbedder, TaskState
from .errors import ArchiveCorruptionError, ArchiveVersionError, UsageError
from .gp import GpModel, build_objective_gp, canonical_order
from .types import Bounds, EvaluatedSolution, normalize_decision

FORMAT_NAME = "seeto-archive"
FORMAT_VERSION = 1


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if not np.isfinite(v):
            raise UsageError("cannot serialize non-finite numbers")
        if v == 0.0:
            v = 0.0  # collapse -0.0 so parse/re-emit cycles are stable
        return format(v, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    raise UsageError(f"unsupported scalar type: {type(value)!r}")


def _is_scalar(value) -> bool:
    return value is None or isinstance(
        value, (bool, int, float, str, np.integer, np.floating)
    )


def canonical_text(value, indent: int = 0) -> str:
    """Emit a value as canonical JSON text (deterministic, 17g floats)."""
    pad = "  " * indent
    if _is_scalar(value):
        return _fmt(value)
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (list, tuple)):
        items = list(value)
        if all(_is_scalar(v) for v in items):
            return "[" + ", ".join(_fmt(v) for v in items) + "]"
        inner = ",\n".join(
            pad + "  " + canonical_text(v, indent + 1) for v in items
        )
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        inner = ",\n".join(
            pad + "  " + json.dumps(str(k)) + ": " + canonical_text(v, indent + 1)
            for k, v in value.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise UsageError(f"unsupported value type: {type(value)!r}")


@dataclass(frozen=True)
class TaskRecord:
    """One archived task: its state, evaluated data, and final surrogate."""

    task_id: str
    state: TaskState
    bounds: Bounds
    dataset: Tuple[EvaluatedSolution, ...]
    surrogate: GpModel
    embedder_key: str
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.dataset:
            raise UsageError("a task record needs a non-empty dataset")
        object.__setattr__(self, "dataset", tuple(self.dataset))


def make_task_record(
    task_id: str,
    state: TaskState,
    bounds: Bounds,
    dataset: Sequence[EvaluatedSolution],
    surrogate: GpModel,
    embedder: Optional[LinearStateEmbedder],
    metadata: Optional[Dict[str, object]] = None,
) -> TaskRecord:
    return TaskRecord(
        task_id=task_id,
        state=state,
        bounds=bounds,
        dataset=tuple(dataset),
        surrogate=surrogate,
        embedder_key=embedder.content_key() if embedder is not None else "none",
        metadata=dict(metadata or {}),
    )


@dataclass
class SourceArchive:
    """Insertion-ordered task records sharing one fitted embedder."""

    embedder: Optional[LinearStateEmbedder]
    records: List[TaskRecord] = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def append(self, record: TaskRecord) -> None:
        if not isinstance(record, TaskRecord):
            raise UsageError("can only append TaskRecord instances")
        self.records.append(record)

    def copy(self) -> "SourceArchive":
        """Shallow copy: shares records' data, isolates the record list."""
        return SourceArchive(
            embedder=self.embedder,
            records=list(self.records),
            format_version=self.format_version,
        )

    def __len__(self) -> int:
        return len(self.records)


def _record_payload(record: TaskRecord) -> dict:
    gp = record.surrogate
    return {
        "task_id": record.task_id,
        "embedder_key": record.embedder_key,
        "bounds": {
            "lower": record.bounds.lower,
            "upper": record.bounds.upper,
        },
        "state": {
            "frame_shape": list(record.state.frame_shape),
            "frames": record.state.flattened(),
        },
        "dataset": [
            {
                "eval_index": s.eval_index,
                "decision": s.decision,
                "objectives": s.objectives,
            }
            for s in record.dataset
        ],
        "surrogate": {
            "noise_floor": gp.noise_floor,
            "objectives": [
                {
                    "length_scale": g.length_scale,
                    "signal_variance": g.signal_variance,
                    "noise_variance": g.noise_variance,
                    "target_mean": g.target_mean,
                    "target_scale": g.target_scale,
                }
                for g in gp.objectives
            ],
        },
        "metadata": {k: record.metadata[k] for k in sorted(record.metadata)},
    }


def _record_checksum(payload: dict) -> str:
    text = canonical_text(payload, indent=2)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _archive_payload(archive: SourceArchive) -> dict:
    emb = None
    if archive.embedder is not None:
        emb = {
            "frame_shape": list(archive.embedder.frame_shape),
            "mean": archive.embedder.mean,
            "components": archive.embedder.components,
            "key": archive.embedder.content_key(),
        }
    records = []
    for rec in archive.records:
        payload = _record_payload(rec)
        payload["checksum"] = _record_checksum(payload)
        records.append(payload)
    return {
        "format": FORMAT_NAME,
        "version": archive.format_version,
        "embedder": emb,
        "records": records,
    }


def save_archive(archive: SourceArchive, path) -> None:
    """Write the archive as canonical structured text (atomic rename)."""
    path = Path(path)
    text = canonical_text(_archive_payload(archive)) + "\n"
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _rebuild_record(payload: dict) -> TaskRecord:
    try:
        bounds = Bounds(
            lower=np.array(payload["bounds"]["lower"], dtype=float),
            upper=np.array(payload["bounds"]["upper"], dtype=float),
        )
        shape = tuple(int(v) for v in payload["state"]["frame_shape"])
        frames = np.array(payload["state"]["frames"], dtype=float)
        state = TaskState(frames=frames.reshape((frames.shape[0],) + shape))
        dataset = tuple(
            EvaluatedSolution(
                decision=np.array(d["decision"], dtype=float),
                objectives=np.array(d["objectives"], dtype=float),
                eval_index=int(d["eval_index"]),
                task_id=str(payload["task_id"]),
            )
            for d in payload["dataset"]
        )
        gp_info = payload["surrogate"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveCorruptionError(f"malformed record structure: {exc}") from exc

    X = np.vstack([normalize_decision(s.decision, bounds) for s in dataset])
    F = np.vstack([s.objectives for s in dataset])
    order = canonical_order(X)
    Xs = np.ascontiguousarray(X[order])
    Fs = np.ascontiguousarray(F[order])
    objectives = tuple(
        build_objective_gp(
            Xs,
            Fs[:, j],
            length_scale=float(g["length_scale"]),
            signal_variance=float(g["signal_variance"]),
            noise_variance=float(g["noise_variance"]),
            target_mean=float(g["target_mean"]),
            target_scale=float(g["target_scale"]),
        )
        for j, g in enumerate(gp_info["objectives"])
    )
    surrogate = GpModel(
        objectives=objectives, noise_floor=float(gp_info["noise_floor"])
    )
    return TaskRecord(
        task_id=str(payload["task_id"]),
        state=state,
        bounds=bounds,
        dataset=dataset,
        surrogate=surrogate,
        embedder_key=str(payload["embedder_key"]),
        metadata=dict(payload.get("metadata", {})),
    )


def load_archive(path) -> SourceArchive:
    """Load and validate an archive file (version, structure, checksums)."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ArchiveCorruptionError(f"archive is not parseable: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != FORMAT_NAME:
        raise ArchiveCorruptionError("not a recognized archive file")
    version = data.get("version")
    if version != FORMAT_VERSION:
        raise ArchiveVersionError(
            f"archive version {version!r} needs migration; this build reads "
            f"version {FORMAT_VERSION}"
        )
    embedder = None
    if data.get("embedder") is not None:
        e = data["embedder"]
        embedder = LinearStateEmbedder(
            mean=np.array(e["mean"], dtype=float),
            components=np.array(e["components"], dtype=float),
            frame_shape=tuple(int(v) for v in e["frame_shape"]),
        )
        if e.get("key") != embedder.content_key():
            raise ArchiveCorruptionError("embedder fingerprint mismatch")
    records = []
    for i, payload in enumerate(data.get("records", [])):
        stored = payload.pop("checksum", None)
        if stored is None or _record_checksum(payload) != stored:
            raise ArchiveCorruptionError(f"record {i} failed its checksum")
        records.append(_rebuild_record(payload))
    return SourceArchive(
        embedder=embedder, records=records, format_version=FORMAT_VERSION
    )


def inspect_archive(path) -> List[Dict[str, object]]:
    """Checksum-verified per-record summaries for the CLI."""
    archive = load_archive(path)
    out = []
    for rec in archive.records:
        F = np.vstack([s.objectives for s in rec.dataset])
        out.append(
            {
                "task_id": rec.task_id,
                "n_evaluations": len(rec.dataset),
                "n_objectives": F.shape[1],
                "best_f1": float(F[:, 0].min()),
                "best_f2": float(F[:, 1].min()),
                "metadata": dict(rec.metadata),
            }
        )
    return out
