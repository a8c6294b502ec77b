import json

import numpy as np
import pytest

from seeto.archive import (
    SourceArchive,
    canonical_text,
    inspect_archive,
    load_archive,
    make_task_record,
    save_archive,
)
from seeto.embedding import TaskState, fit_embedder
from seeto.errors import (
    ArchiveCorruptionError,
    ArchiveVersionError,
    UsageError,
)
from seeto.gp import predict_batch, train_gp
from seeto.types import Bounds, EvaluatedSolution


def _corpus(seed=0, n=6):
    rng = np.random.default_rng(seed)
    return [TaskState(frames=rng.standard_normal((3, 1, 2, 2))) for _ in range(n)]


def _record(seed, emb, task_id="source-000"):
    rng = np.random.default_rng(seed)
    bounds = Bounds(np.zeros(3), np.ones(3))
    X = rng.random((10, 3))
    F = np.column_stack([X[:, 0], 1 - X[:, 0] + 0.3 * X[:, 1]])
    data = [EvaluatedSolution(X[i], F[i], i + 1, task_id) for i in range(10)]
    gp = train_gp(data, bounds)
    state = _corpus(seed + 50, n=1)[0]
    return make_task_record(task_id, state, bounds, data, gp, emb, {"seed": seed})


def _archive(seed=0, n_records=2):
    emb = fit_embedder(_corpus(seed), 3)
    archive = SourceArchive(embedder=emb)
    for i in range(n_records):
        archive.append(_record(seed + i, emb, task_id=f"source-{i:03d}"))
    return archive


def test_canonical_text_is_deterministic_and_parseable():
    payload = {"b": 1.5, "a": [1, 2, {"c": 0.25}]}
    a = canonical_text(payload)
    b = canonical_text({"b": 1.5, "a": [1, 2, {"c": 0.25}]})
    assert a == b
    assert json.loads(a) == payload


def test_canonical_text_float_formatting_is_reversible():
    x = 0.1 + 0.2
    text = canonical_text({"v": x})
    assert json.loads(text)["v"] == x


def test_round_trip_preserves_predictions(tmp_path):
    archive = _archive(1)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    loaded = load_archive(path)
    assert len(loaded.records) == len(archive.records)
    Xq = np.random.default_rng(9).random((8, 3))
    for rec_a, rec_b in zip(archive.records, loaded.records):
        pa = predict_batch(rec_a.surrogate, Xq)
        pb = predict_batch(rec_b.surrogate, Xq)
        assert np.max(np.abs(pa.mean - pb.mean)) <= 1e-12
        assert np.max(np.abs(pa.std - pb.std)) <= 1e-12
        assert rec_a.embedder_key == rec_b.embedder_key


def test_round_trip_is_byte_stable(tmp_path):
    archive = _archive(2)
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_archive(archive, p1)
    save_archive(load_archive(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_embedder_fingerprint_survives_round_trip(tmp_path):
    archive = _archive(3)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    loaded = load_archive(path)
    assert loaded.embedder.content_key() == archive.embedder.content_key()


def test_version_mismatch_is_rejected(tmp_path):
    archive = _archive(4)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    data = json.loads(path.read_text())
    data["version"] = 999
    path.write_text(json.dumps(data))
    with pytest.raises(ArchiveVersionError):
        load_archive(path)


def test_unrecognized_payload_is_rejected(tmp_path):
    path = tmp_path / "archive.json"
    path.write_text(json.dumps({"hello": 1}))
    with pytest.raises(ArchiveCorruptionError):
        load_archive(path)
    path.write_text("{not json")
    with pytest.raises(ArchiveCorruptionError):
        load_archive(path)


def test_tampered_record_fails_checksum(tmp_path):
    archive = _archive(5)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    data = json.loads(path.read_text())
    data["records"][0]["task_id"] = "renamed"
    path.write_text(json.dumps(data))
    with pytest.raises(ArchiveCorruptionError):
        load_archive(path)


def test_tampered_embedder_fails_fingerprint(tmp_path):
    archive = _archive(6)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    data = json.loads(path.read_text())
    data["embedder"]["mean"][0] = data["embedder"]["mean"][0] + 1.0
    path.write_text(json.dumps(data))
    with pytest.raises(ArchiveCorruptionError):
        load_archive(path)


def test_archive_append_and_copy_semantics():
    archive = _archive(7, n_records=1)
    with pytest.raises(UsageError):
        archive.append("not a record")
    clone = archive.copy()
    clone.append(_record(99, archive.embedder, task_id="source-zzz"))
    assert len(clone) == 2
    assert len(archive) == 1


def test_record_requires_data():
    emb = fit_embedder(_corpus(8), 3)
    rec = _record(8, emb)
    with pytest.raises(UsageError):
        make_task_record(
            rec.task_id, rec.state, rec.bounds, [], rec.surrogate, emb
        )


def test_inspect_lists_summaries(tmp_path):
    archive = _archive(9, n_records=3)
    path = tmp_path / "archive.json"
    save_archive(archive, path)
    rows = inspect_archive(path)
    assert len(rows) == 3
    assert all("task_id" in r for r in rows)
