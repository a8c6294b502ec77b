import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seeto.errors import UsageError
from seeto.types import (
    Bounds,
    EvaluatedSolution,
    denormalize_decision,
    dominates,
    normalize_decision,
    solutions_to_arrays,
)


def test_bounds_basic_properties():
    b = Bounds(np.array([0.0, -1.0]), np.array([2.0, 3.0]))
    assert b.dimension == 2
    assert np.allclose(b.span, [2.0, 4.0])
    assert b.contains(np.array([1.0, 0.0]))
    assert not b.contains(np.array([3.0, 0.0]))


def test_bounds_rejects_bad_shapes_and_order():
    with pytest.raises(UsageError):
        Bounds(np.array([0.0, 0.0]), np.array([1.0]))
    with pytest.raises(UsageError):
        Bounds(np.array([1.0]), np.array([1.0]))
    with pytest.raises(UsageError):
        Bounds(np.array([2.0]), np.array([1.0]))


@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=6),
    st.integers(0, 2**31 - 1),
)
@settings(max_examples=40, deadline=None)
def test_normalize_round_trip(lower, seed):
    lo = np.asarray(lower)
    hi = lo + 1.0 + np.abs(np.sin(lo))
    b = Bounds(lo, hi)
    rng = np.random.default_rng(seed)
    x = b.lower + b.span * rng.random(b.dimension)
    u = normalize_decision(x, b)
    assert np.all(u >= 0.0) and np.all(u <= 1.0)
    assert np.allclose(denormalize_decision(u, b), x, atol=1e-12)


def test_dominates_truth_table():
    a = np.array([1.0, 1.0])
    assert dominates(a, np.array([2.0, 2.0]))
    assert dominates(a, np.array([1.0, 2.0]))
    assert not dominates(a, a)
    assert not dominates(a, np.array([0.5, 2.0]))
    assert not dominates(np.array([2.0, 2.0]), a)


def test_dominates_is_asymmetric_on_random_pairs():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = rng.random(2), rng.random(2)
        assert not (dominates(a, b) and dominates(b, a))


def test_evaluated_solution_validation():
    with pytest.raises(UsageError):
        EvaluatedSolution(np.array([0.1]), np.array([1.0, 2.0]), 0, "t")
    with pytest.raises(UsageError):
        EvaluatedSolution(np.array([0.1]), np.array([1.0, 2.0]), 1, "")
    s = EvaluatedSolution(np.array([0.1]), np.array([1.0, 2.0]), 1, "t")
    with pytest.raises(ValueError):
        s.decision[0] = 9.0


def test_solutions_to_arrays_shapes():
    sols = [
        EvaluatedSolution(np.array([0.1, 0.2]), np.array([1.0, 2.0]), i + 1, "t")
        for i in range(3)
    ]
    X, F = solutions_to_arrays(sols)
    assert X.shape == (3, 2)
    assert F.shape == (3, 2)
    assert np.allclose(X[0], [0.1, 0.2])
