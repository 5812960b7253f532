import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.spatial.transform import Rotation

from errors import InputError, UsageError
from metrics import (EpisodeRecord, ReturnCurve, aggregate_curves, build_return_curve, collision_rate,
                     curve_auc, final_return, mean_collision, mean_std, path_efficiency, smooth,
                     steps_to_threshold, success_rate, summarize_run)


def record(success=False, collisions=0, path=((0.0, 0.0), (1.0, 0.0))):
    return EpisodeRecord(end_effector_path=np.asarray(path, dtype=np.float64),
                         per_step_r_env=[0.0] * (len(path) - 1),
                         per_step_r_total=[0.0] * (len(path) - 1),
                         collision_steps=collisions, success=success)


# ---- Path efficiency -------------------------------------------------------------------------------------

def test_straight_path_is_fully_efficient():
    path = np.linspace([0.0, 0.0, 0.0], [1.0, 2.0, 3.0], 20)
    assert path_efficiency(path) == pytest.approx(1.0, abs=1e-12)


def test_semicircle_efficiency():
    theta = np.linspace(0.0, math.pi, 1001)
    path = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    assert path_efficiency(path) == pytest.approx(2.0 / math.pi, abs=1e-5)


def test_single_point_and_stationary_paths():
    assert path_efficiency([[0.3, 0.4]]) == 1.0
    assert path_efficiency([[0.3, 0.4], [0.3, 0.4]]) == 1.0


def test_closed_loop_is_clipped_above_zero():
    efficiency = path_efficiency([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    assert 0.0 < efficiency <= 1e-300


def test_invariant_under_rigid_motion():
    rng = np.random.default_rng(0)
    path = np.cumsum(rng.normal(size=(40, 3)), axis=0)
    moved = Rotation.from_euler("zyx", [0.7, -1.1, 2.3]).apply(path) + np.array([5.0, -2.0, 0.5])
    assert path_efficiency(moved) == pytest.approx(path_efficiency(path), abs=1e-9)


def test_non_finite_path_rejected():
    with pytest.raises(InputError):
        path_efficiency([[0.0, 0.0], [float("nan"), 1.0]])


# ---- Episode aggregates ----------------------------------------------------------------------------------

def test_all_successes():
    stats = success_rate([record(success=True)] * 10)
    assert (stats.mean, stats.std) == (1.0, 0.0)


def test_half_successes():
    stats = success_rate([record(success=True), record(success=False)])
    assert (stats.mean, stats.std) == (0.5, 0.5)


def test_collision_counts():
    stats = mean_collision([record(collisions=0), record(collisions=10)])
    assert (stats.mean, stats.std) == (5.0, 5.0)
    assert collision_rate([record(collisions=0), record(collisions=10)]) == 0.5


def test_heavy_tailed_collisions():
    records = [record(collisions=50)] + [record(collisions=0)] * 49
    stats = mean_collision(records)
    assert stats.mean == pytest.approx(1.0, abs=1e-12)
    counts = np.array([50.0] + [0.0] * 49)
    assert stats.std == pytest.approx(math.sqrt(np.mean((counts - counts.mean()) ** 2)), abs=1e-9)


def test_success_rate_of_bernoulli_draws():
    outcomes = np.random.default_rng(2).random(10_000) < 0.3
    stats = success_rate([record(success=bool(s)) for s in outcomes])
    p = outcomes.mean()
    assert stats.mean == pytest.approx(p, abs=1e-12)
    assert stats.std == pytest.approx(math.sqrt(p * (1 - p)), abs=1e-9)


def test_aggregates_ignore_order():
    values = np.random.default_rng(3).normal(size=101)
    assert mean_std(values) == mean_std(values[::-1])


def test_constant_values_have_zero_spread():
    stats = mean_std([0.1] * 7)
    assert stats.mean == 0.1 and stats.std == 0.0


def test_empty_inputs_rejected():
    with pytest.raises(UsageError):
        success_rate([])
    with pytest.raises(UsageError):
        mean_std([])


def test_run_summary():
    records = [record(success=True, collisions=1), record(success=False)]
    summary = summarize_run(records, build_return_curve([(0, [0.0]), (10, [1.0])]))
    assert summary.episodes == 2
    assert summary.success_rate.mean == 0.5
    assert summary.collision_rate == 0.5
    assert summary.path_efficiency.mean == 1.0


# ---- Return curves ---------------------------------------------------------------------------------------

def test_curve_means_and_auc():
    curve = build_return_curve([(0, [0.0, 0.0]), (10, [1.0, 1.0]), (20, [2.0, 4.0])])
    assert curve.values == (0.0, 1.0, 3.0)
    assert curve.auc == pytest.approx(25.0, abs=1e-12)


def test_single_checkpoint_has_zero_area():
    assert build_return_curve([(0, [1.0])]).auc == 0.0
    assert curve_auc([5], [3.0]) == 0.0


def test_checkpoints_must_increase():
    with pytest.raises(InputError):
        build_return_curve([(10, [0.0]), (10, [1.0])])
    with pytest.raises(InputError):
        build_return_curve([(0, [])])


def test_trailing_smoothing():
    assert_allclose(smooth([1.0, 2.0, 3.0, 4.0], 2), [1.0, 1.5, 2.5, 3.5])
    assert_allclose(smooth([1.0, 2.0], 1), [1.0, 2.0])


def test_steps_to_threshold():
    curve = ReturnCurve(steps=(0, 10, 20, 30), values=(0.0, 0.2, 1.0, 1.0), auc=0.0)
    assert steps_to_threshold(curve, 0.9, window=1) == 20
    assert steps_to_threshold(curve, 0.9, window=2) == 30
    assert steps_to_threshold(curve, 2.0, window=1) is None
    assert final_return(curve, window=2) == 1.0


def test_aggregate_curves():
    a = ReturnCurve(steps=(0, 10), values=(0.0, 2.0), auc=10.0)
    b = ReturnCurve(steps=(0, 10), values=(0.0, 4.0), auc=20.0)
    mean, std = aggregate_curves([a, b])
    assert mean.values == (0.0, 3.0)
    assert std == (0.0, 1.0)
    assert mean.auc == pytest.approx(15.0)


def test_aggregate_constant_curves_have_zero_std():
    curve = ReturnCurve(steps=(0, 10, 20), values=(0.1, 0.7, 0.3), auc=0.0)
    mean, std = aggregate_curves([curve] * 5)
    assert mean.values == curve.values
    assert std == (0.0, 0.0, 0.0)


def test_aggregate_curves_requires_shared_steps():
    with pytest.raises(InputError):
        aggregate_curves([ReturnCurve((0, 10), (0.0, 1.0), 0.0), ReturnCurve((0, 20), (0.0, 1.0), 0.0)])
    with pytest.raises(UsageError):
        aggregate_curves([])


def test_record_json_round_trip():
    original = record(success=True, collisions=2, path=((0.0, 0.1), (0.5, 0.25), (1.0, 0.0)))
    restored = EpisodeRecord.from_json(original.to_json())
    np.testing.assert_array_equal(restored.end_effector_path, original.end_effector_path)
    assert (restored.success, restored.collision_steps) == (True, 2)
