import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seeto.ensemble import (
    EnsembleSurrogate,
    beta,
    build_ensemble,
    choose_c,
    ensemble_predict,
    ensemble_predict_batch,
)
from seeto.errors import UsageError
from seeto.gp import predict_batch, train_gp
from seeto.transfer import select_and_weight
from seeto.types import Bounds, EvaluatedSolution


def _model(seed, n=10, d=2):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    F = np.column_stack([X[:, 0] + seed * 0.1, X[:, 1] ** 2])
    data = [EvaluatedSolution(X[i], F[i], i + 1, "t") for i in range(n)]
    return train_gp(data, Bounds(np.zeros(d), np.ones(d)))


def test_beta_zero_at_zero_budget():
    for c in (0.0, 0.017, 0.038, 5.0):
        assert beta(c, 0) == 0.0


@given(st.floats(1e-4, 1.0), st.integers(0, 200), st.integers(1, 200))
@settings(max_examples=60, deadline=None)
def test_beta_monotone_in_budget(c, fe, step):
    # non-strict: exp(-c*fe) underflows to 0 for large c*fe, saturating at 1
    assert beta(c, fe + step) >= beta(c, fe)
    assert 0.0 <= beta(c, fe) <= 1.0


def test_beta_rejects_bad_arguments():
    with pytest.raises(UsageError):
        beta(-0.1, 3)
    with pytest.raises(UsageError):
        beta(0.1, -1)


def test_choose_c_branches():
    confident = select_and_weight([0.99, 0.2], gamma=2, temperature=0.065)
    spread = select_and_weight([0.30, 0.29, 0.28], gamma=3, temperature=0.5)
    assert choose_c(confident, 0.7, 0.038, 0.017) == 0.038
    assert choose_c(spread, 0.7, 0.038, 0.017) == 0.017
    empty = select_and_weight([], gamma=3, temperature=0.5)
    assert choose_c(empty, 0.7, 0.038, 0.017) == 0.038


def test_choose_c_on_raw_similarity():
    report = select_and_weight([0.95, 0.94], gamma=2, temperature=10.0)
    assert choose_c(report, 0.7, 0.038, 0.017) == 0.017
    assert choose_c(report, 0.7, 0.038, 0.017, use_raw_similarity=True) == 0.038


def test_build_ensemble_degenerate_shares():
    local = _model(1)
    src = _model(2)
    no_sources = build_ensemble([], local, 0.02, 10)
    assert no_sources.local_weight == 1.0
    no_local = build_ensemble([(src, 1.0)], None, 0.02, 10)
    assert no_local.local_weight == 0.0
    with pytest.raises(UsageError):
        build_ensemble([], None, 0.02, 10)


def test_effective_weights_sum_to_one():
    ens = build_ensemble([(_model(3), 0.6), (_model(4), 0.4)], _model(5), 0.05, 30)
    w = ens.effective_weights
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert 0.0 < ens.local_weight < 1.0


def test_single_member_prediction_is_bitwise_passthrough():
    local = _model(6)
    X = np.random.default_rng(0).random((5, 2))
    ens = build_ensemble([], local, 0.02, 10)
    direct = predict_batch(local, X)
    mixed = ensemble_predict_batch(ens, X)
    assert np.array_equal(direct.mean, mixed.mean)
    assert np.array_equal(direct.std, mixed.std)
    src = _model(7)
    ens2 = build_ensemble([(src, 1.0)], None, 0.02, 10)
    direct2 = predict_batch(src, X)
    mixed2 = ensemble_predict_batch(ens2, X)
    assert np.array_equal(direct2.mean, mixed2.mean)
    assert np.array_equal(direct2.std, mixed2.std)


def test_mixture_matches_manual_formula():
    s1, s2, local = _model(8), _model(9), _model(10)
    c, fe = 0.05, 25
    ens = build_ensemble([(s1, 0.7), (s2, 0.3)], local, c, fe)
    X = np.random.default_rng(1).random((4, 2))
    got = ensemble_predict_batch(ens, X)
    b = beta(c, fe)
    p1, p2, pl = (predict_batch(m, X) for m in (s1, s2, local))
    mean = (1 - b) * (0.7 * p1.mean + 0.3 * p2.mean) + b * pl.mean
    var = (1 - b) * (0.7 * p1.std**2 + 0.3 * p2.std**2) + b * pl.std**2
    assert np.allclose(got.mean, mean, atol=1e-12)
    assert np.allclose(got.std, np.sqrt(var), atol=1e-12)


def test_single_point_wrapper_matches_batch():
    ens = build_ensemble([(_model(11), 1.0)], _model(12), 0.1, 5)
    x = np.array([0.3, 0.6])
    single = ensemble_predict(ens, x)
    batch = ensemble_predict_batch(ens, x[None, :])
    assert np.array_equal(single.mean, batch.mean[0])
    assert np.array_equal(single.std, batch.std[0])
    with pytest.raises(UsageError):
        ensemble_predict(ens, x[None, :])


def test_ensemble_surrogate_objective_count_consistency():
    ens = EnsembleSurrogate(sources=((_model(13), 1.0),), local=None, local_weight=0.0)
    assert ens.n_objectives == 2
