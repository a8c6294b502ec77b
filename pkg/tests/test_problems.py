import numpy as np
import pytest

from seeto.errors import UsageError
from seeto.metrics import hypervolume_2d
from seeto.problems import (
    DEFAULT_CONFLICT_OFFSET,
    EvalCounter,
    SyntheticTask,
    analytic_hypervolume,
    default_parameter_bounds,
    evaluate,
    make_task_family,
    pareto_front,
)
from seeto.types import Bounds


def _family(**kw):
    args = dict(
        n_source=4, n_target=3, outlier_targets=1, seed=3, dimension=5
    )
    args.update(kw)
    return make_task_family(**args)


def test_eval_counter_increments():
    c = EvalCounter()
    assert c.count == 0
    assert c.increment() == 1
    assert c.increment() == 2
    assert c.count == 2


def test_default_parameter_bounds_are_ordered():
    b = default_parameter_bounds()
    assert np.all(b.upper > b.lower)


def test_evaluate_matches_hand_formula():
    fam = _family()
    task = fam.targets[0]
    d = task.dimension
    rng = np.random.default_rng(0)
    theta = task.bounds.lower + task.bounds.span * rng.random(d)
    f = evaluate(task, theta)
    u = (theta - task.bounds.lower) / task.bounds.span
    a = task.anchor
    f1 = np.sqrt((u[0] - a[0]) ** 2 + np.sum((u[1:] - a[1:]) ** 2) / (d - 1))
    shifted = a.copy()
    shifted[0] += task.conflict_offset
    f2 = np.sqrt((u[0] - shifted[0]) ** 2 + np.sum((u[1:] - shifted[1:]) ** 2) / (d - 1))
    assert f == pytest.approx([f1, f2], abs=1e-12)
    assert task.evaluations == 1


def test_evaluate_validates_input():
    task = _family().targets[0]
    with pytest.raises(UsageError):
        evaluate(task, np.zeros(task.dimension + 1))


def test_pareto_front_structure():
    task = _family().targets[1]
    front = pareto_front(task, n=41)
    assert front.shape == (41, 2)
    assert np.allclose(front.sum(axis=1), task.conflict_offset, atol=1e-12)
    assert front[0, 0] == pytest.approx(0.0)
    assert front[-1, 0] == pytest.approx(task.conflict_offset)


def test_analytic_hypervolume_closed_form_and_oracle():
    task = _family().targets[0]
    ref = task.hv_reference()
    expected = ref[0] * ref[1] - task.conflict_offset**2 / 2.0
    assert analytic_hypervolume(task) == pytest.approx(expected, abs=1e-12)
    dense = pareto_front(task, n=4001)
    sampled = hypervolume_2d(dense, ref)
    assert sampled == pytest.approx(analytic_hypervolume(task), abs=1e-4)
    assert sampled <= analytic_hypervolume(task) + 1e-12


def test_default_conflict_offset_reference_value():
    task = _family(conflict_offset=DEFAULT_CONFLICT_OFFSET).targets[0]
    assert analytic_hypervolume(task) == pytest.approx(0.115, abs=1e-12)


def test_family_counts_and_outlier_flags():
    fam = _family()
    assert len(fam.sources) == 4
    assert len(fam.targets) == 3
    assert len(fam.outlier_ids) == 1
    outliers = [t.task_id for t in fam.targets if fam.is_outlier(t.task_id)]
    assert outliers == list(fam.outlier_ids)
    assert fam.task_by_id(fam.sources[0].task_id) is fam.sources[0]
    with pytest.raises(UsageError):
        fam.task_by_id("nope")


def test_family_is_seed_deterministic():
    a = _family(seed=9)
    b = _family(seed=9)
    for ta, tb in zip(a.all_tasks, b.all_tasks):
        assert ta.task_id == tb.task_id
        assert np.array_equal(ta.anchor, tb.anchor)
        assert np.array_equal(ta.state.frames, tb.state.frames)
    c = _family(seed=10)
    assert not np.array_equal(a.targets[0].anchor, c.targets[0].anchor)


def test_outlier_anchors_shift_farther_than_cluster_scatter():
    fam = make_task_family(
        n_source=6, n_target=4, outlier_targets=2, seed=5, dimension=5
    )
    src_anchors = np.vstack([t.anchor for t in fam.sources])
    for t in fam.targets:
        gap = np.linalg.norm(src_anchors - t.anchor, axis=1).min()
        if fam.is_outlier(t.task_id):
            assert gap > 0.05
        else:
            assert gap < 0.05


def test_outlier_states_form_separate_cluster():
    fam = _family()
    src_means = np.vstack([t.state.flattened().mean(axis=0) for t in fam.sources])

    def nearest_source_distance(task):
        m = task.state.flattened().mean(axis=0)
        return np.linalg.norm(src_means - m, axis=1).min()

    in_gaps = [
        nearest_source_distance(t)
        for t in fam.targets
        if not fam.is_outlier(t.task_id)
    ]
    out_gaps = [
        nearest_source_distance(t) for t in fam.targets if fam.is_outlier(t.task_id)
    ]
    assert max(in_gaps) < min(out_gaps)


def test_family_argument_validation():
    with pytest.raises(UsageError):
        _family(n_target=0)
    with pytest.raises(UsageError):
        _family(outlier_targets=5)
    with pytest.raises(UsageError):
        _family(cluster_spread=0.0)
    with pytest.raises(UsageError):
        _family(dimension=1)
    with pytest.raises(UsageError):
        _family(conflict_offset=0.9)


def test_anchor_room_for_conflicting_objective():
    fam = _family()
    for t in fam.all_tasks:
        assert t.anchor[0] + t.conflict_offset <= 1.0
        assert np.all(t.anchor >= 0.0) and np.all(t.anchor <= 1.0)


def test_task_bounds_and_counter_are_per_task():
    fam = _family()
    t0, t1 = fam.targets[0], fam.targets[1]
    evaluate(t0, t0.bounds.lower + 0.5 * t0.bounds.span)
    assert t0.evaluations == 1
    assert t1.evaluations == 0


def test_custom_bounds_dimension_check():
    with pytest.raises(UsageError):
        make_task_family(
            n_source=2,
            n_target=1,
            outlier_targets=0,
            seed=1,
            dimension=4,
            bounds=Bounds(np.zeros(3), np.ones(3)),
        )


def test_task_is_dataclass_with_stable_identity():
    fam = _family()
    t = fam.targets[0]
    assert isinstance(t, SyntheticTask)
    assert t.task_id.startswith("target-")
    assert fam.sources[0].task_id.startswith("source-")
