import numpy as np
import pytest

from errors import InputError, UsageError
from rl.replay import ReplayBuffer, Transition, TransitionBatch


def transition(reward, obs_dim=2, act_dim=1):
    return Transition(np.full(obs_dim, reward), np.full(act_dim, reward), float(reward),
                      np.full(obs_dim, reward + 1), False)


def test_oldest_transition_evicted_first():
    buffer = ReplayBuffer(2, obs_dim=2, act_dim=1)
    for reward in (1.0, 2.0, 3.0):
        buffer.push(transition(reward))
    assert len(buffer) == 2
    assert [t.r_total for t in buffer.transitions()] == [2.0, 3.0]


def test_single_entry_is_always_sampled():
    buffer = ReplayBuffer(4, obs_dim=2, act_dim=1)
    buffer.push(transition(7.0))
    batch = buffer.sample(5, np.random.default_rng(0))
    assert len(batch) == 5
    assert np.all(batch.rewards == 7.0)
    assert np.all(batch.next_observations == 8.0)


def test_sampling_is_uniform():
    buffer = ReplayBuffer(10, obs_dim=2, act_dim=1)
    for reward in range(10):
        buffer.push(transition(float(reward)))
    rewards = buffer.sample(100_000, np.random.default_rng(1)).rewards
    frequencies = np.bincount(rewards.astype(int), minlength=10) / rewards.size
    np.testing.assert_allclose(frequencies, 0.1, atol=0.01)


def test_sampling_is_seeded():
    buffer = ReplayBuffer(8, obs_dim=2, act_dim=1)
    for reward in range(8):
        buffer.push(transition(float(reward)))
    a = buffer.sample(16, np.random.default_rng(3)).rewards
    b = buffer.sample(16, np.random.default_rng(3)).rewards
    np.testing.assert_array_equal(a, b)


def test_dimension_mismatch_rejected():
    buffer = ReplayBuffer(4, obs_dim=3, act_dim=1)
    with pytest.raises(InputError):
        buffer.push(transition(0.0, obs_dim=2))
    with pytest.raises(InputError):
        buffer.push(transition(0.0, obs_dim=3, act_dim=2))


def test_empty_buffer_cannot_be_sampled():
    with pytest.raises(UsageError):
        ReplayBuffer(4, obs_dim=2, act_dim=1).sample(1, np.random.default_rng(0))


def test_batch_from_transitions():
    batch = TransitionBatch.from_transitions([transition(1.0), transition(2.0)])
    assert len(batch) == 2
    assert batch.observations.shape == (2, 2)
    with pytest.raises(UsageError):
        TransitionBatch.from_transitions([])
