import numpy as np
import pytest

from seeto.errors import InsufficientDataError
from seeto.gp import GpModel, canonical_order, predict, predict_batch, train_gp
from seeto.types import Bounds, EvaluatedSolution


def _dataset(seed=0, n=12, d=3, m=2):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    F = np.column_stack(
        [np.sin(3 * X[:, 0]) + X[:, 1] ** 2, np.cos(2 * X[:, 1]) + X[:, 2]]
    )[:, :m]
    return [
        EvaluatedSolution(X[i], F[i], i + 1, "t") for i in range(n)
    ]


def _unit_bounds(d=3):
    return Bounds(np.zeros(d), np.ones(d))


def test_canonical_order_sorts_lexicographically():
    X = np.array([[0.5, 0.1], [0.1, 0.9], [0.1, 0.2], [0.5, 0.0]])
    order = canonical_order(X)
    sorted_rows = X[order]
    for a, b in zip(sorted_rows[:-1], sorted_rows[1:]):
        assert tuple(a) <= tuple(b)


def test_train_is_input_order_invariant():
    data = _dataset(1)
    model_a = train_gp(data, _unit_bounds())
    model_b = train_gp(list(reversed(data)), _unit_bounds())
    Xq = np.random.default_rng(2).random((7, 3))
    pa = predict_batch(model_a, Xq)
    pb = predict_batch(model_b, Xq)
    assert np.array_equal(pa.mean, pb.mean)
    assert np.array_equal(pa.std, pb.std)


def test_train_requires_two_distinct_points():
    data = _dataset(3)
    with pytest.raises(InsufficientDataError):
        train_gp(data[:1], _unit_bounds())
    twin = [
        EvaluatedSolution(data[0].decision, data[0].objectives, 1, "t"),
        EvaluatedSolution(data[0].decision, data[1].objectives, 2, "t"),
    ]
    with pytest.raises(InsufficientDataError):
        train_gp(twin, _unit_bounds())


def test_batch_prediction_matches_single_point_loop():
    model = train_gp(_dataset(4), _unit_bounds())
    Xq = np.random.default_rng(5).random((6, 3))
    batch = predict_batch(model, Xq)
    for i in range(6):
        single = predict(model, Xq[i])
        np.testing.assert_allclose(batch.mean[i], single.mean, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(batch.std[i], single.std, rtol=1e-12, atol=1e-14)


def test_posterior_std_shrinks_at_training_points():
    model = train_gp(_dataset(6), _unit_bounds())
    X_train = model.objectives[0].inputs
    at_data = predict_batch(model, X_train)
    far = predict_batch(model, np.full((1, 3), 0.987))
    assert np.all(at_data.std >= 0.0)
    assert np.median(at_data.std[:, 0]) < far.std[0, 0]


def test_interpolation_near_noise_floor():
    data = _dataset(7, n=20)
    model = train_gp(data, _unit_bounds())
    X = np.vstack([s.decision for s in data])
    F = np.vstack([s.objectives for s in data])
    pred = predict_batch(model, X)
    rel = np.abs(pred.mean - F) / np.maximum(np.abs(F), 1e-9)
    assert rel.max() < 1e-4


def test_model_metadata_shapes():
    model = train_gp(_dataset(8), _unit_bounds())
    assert isinstance(model, GpModel)
    assert model.n_objectives == 2
    assert model.n_points == 12
    assert model.inputs.shape == (12, 3)
    for g in model.objectives:
        assert g.length_scale > 0
        assert g.signal_variance > 0
        assert g.noise_variance > 0


def test_duplicate_rows_do_not_break_training():
    data = _dataset(9)
    data = data + [
        EvaluatedSolution(data[0].decision, data[0].objectives, 13, "t")
    ]
    model = train_gp(data, _unit_bounds())
    pred = predict_batch(model, np.atleast_2d(data[0].decision))
    assert np.all(np.isfinite(pred.mean))
    assert np.all(np.isfinite(pred.std))
