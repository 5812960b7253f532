import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import InputError
from feedback.channel import DisabledChannel, ObserverChannel, StreamChannel
from feedback.observer import ErrorCause, ErrorJudgment, ObserverModel, simulate_decoder
from feedback.shaping import FeedbackSample, centered_feedback, shape_reward
from feedback.stream import ProbabilityStream


def test_neutral_probability_is_reward_neutral():
    shaped = shape_reward(0.0, 0.5, 0.3)
    assert shaped.r_hf == 0.0
    assert shaped.r_total == 0.0


def test_confident_correct_adds_bonus():
    shaped = shape_reward(1.0, 0.0, 0.3)
    assert shaped.r_hf == 0.5
    assert shaped.r_total == pytest.approx(1.15, abs=1e-15)


def test_confident_error_costs():
    shaped = shape_reward(0.0, 0.9, 0.5)
    assert shaped.r_hf == pytest.approx(-0.4, abs=1e-15)
    assert shaped.r_total == pytest.approx(-0.2, abs=1e-15)


def test_grid_matches_direct_evaluation():
    rng = np.random.default_rng(0)
    r_env = rng.choice([0.0, 1.0, -0.1, 0.9], size=10_000)
    p = rng.uniform(0.0, 1.0, size=10_000)
    alpha = rng.uniform(0.0, 2.0, size=10_000)
    got = np.array([shape_reward(r, q, a).r_total for r, q, a in zip(r_env, p, alpha)])
    assert_allclose(got, r_env + alpha * (0.5 - p), rtol=0, atol=1e-15)


def test_zero_alpha_is_exactly_sparse():
    rng = np.random.default_rng(1)
    for r_env, p in zip(rng.normal(size=1000), rng.uniform(size=1000)):
        assert shape_reward(float(r_env), float(p), 0.0).r_total == r_env


def test_linear_in_alpha():
    rng = np.random.default_rng(2)
    for p, alpha in zip(rng.uniform(size=1000), rng.uniform(0, 1, size=1000)):
        single = shape_reward(0.0, float(p), float(alpha)).r_total
        double = shape_reward(0.0, float(p), float(2 * alpha)).r_total
        assert double == 2 * single
        with_env = shape_reward(-0.1, float(p), float(2 * alpha)).r_total + 0.1
        assert with_env == pytest.approx(2 * (shape_reward(-0.1, float(p), float(alpha)).r_total + 0.1),
                                         abs=1e-15)


def test_centered_range_and_sign():
    for p in np.linspace(0.0, 1.0, 101):
        r = centered_feedback(p)
        assert -0.5 <= r <= 0.5
        assert (r > 0) == (p < 0.5)
        assert (r < 0) == (p > 0.5)


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_invalid_probability(p):
    with pytest.raises(InputError):
        shape_reward(0.0, p, 0.3)


def test_negative_alpha_rejected():
    with pytest.raises(InputError):
        shape_reward(0.0, 0.5, -0.1)


def test_disabled_channel_is_neutral():
    sample = DisabledChannel().sample(ErrorJudgment.correct())
    assert sample == FeedbackSample(p=0.5, r_hf=0.0)


def test_stream_channel_replays_in_order():
    channel = StreamChannel(ProbabilityStream([0.1, 0.9]))
    judgment = ErrorJudgment.correct()
    assert channel.sample(judgment).p == 0.1
    assert channel.sample(judgment).p == 0.9


def test_observer_channel_matches_decoder_draws():
    model = ObserverModel("S", tpr=0.8, tnr=0.8)
    channel = ObserverChannel(model, np.random.default_rng(0))
    reference = np.random.default_rng(0)
    for judgment in (ErrorJudgment.correct(), ErrorJudgment(True, ErrorCause.COLLISION)) * 5:
        assert channel.sample(judgment) == simulate_decoder(judgment, model, reference)
