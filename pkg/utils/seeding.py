"""
Named random streams.
Every source of randomness in a run draws from its own stream, derived from
the run seed with numpy's SeedSequence, so that changing how one consumer
draws never shifts another.
"""

import json
import zlib
from dataclasses import dataclass

import numpy as np
import torch

# Spawn keys are part of the on-disk reproducibility contract; never reorder.
STREAM_KEYS = {
    "env": 0,
    "policy": 1,
    "decoder": 2,
    "buffer": 3,
    "init": 4,
    "eval": 5,
}


def subject_key(subject_id: str) -> int:
    """Stable integer for a subject id (Python's hash() is salted per process)."""
    return zlib.crc32((subject_id or "").encode("utf-8"))


def derive_seed(*entropy: int) -> int:
    """Collapse a tuple of integers (any sign) into one 63-bit seed."""
    words = np.random.SeedSequence([int(e) % (1 << 64) for e in entropy]).generate_state(2)
    return int((int(words[0]) << 31) ^ int(words[1])) & ((1 << 63) - 1)


def cell_seed(master_seed: int, seed: int) -> int:
    """Run seed of a sweep cell; independent of alpha and subject for pairing."""
    return derive_seed(master_seed, seed)


def stream_seed(run_seed: int, name: str, *extra: int) -> int:
    return derive_seed(run_seed, STREAM_KEYS[name], *extra)


def numpy_stream(run_seed: int, name: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(stream_seed(run_seed, name, *extra))


def torch_stream(run_seed: int, name: str) -> torch.Generator:
    gen = torch.Generator(device="cpu")
    gen.manual_seed(stream_seed(run_seed, name))
    return gen


@dataclass
class RngStreams:
    """The per-purpose streams of one training run."""
    env: np.random.Generator
    policy: torch.Generator
    decoder: np.random.Generator
    buffer: np.random.Generator
    init_seed: int
    eval_seeds: list

    @classmethod
    def from_seed(cls, run_seed: int, subject_id: str = "", eval_episodes: int = 0):
        eval_rng = numpy_stream(run_seed, "eval")
        return cls(
            env=numpy_stream(run_seed, "env"),
            policy=torch_stream(run_seed, "policy"),
            decoder=numpy_stream(run_seed, "decoder", subject_key(subject_id)),
            buffer=numpy_stream(run_seed, "buffer"),
            init_seed=stream_seed(run_seed, "init"),
            eval_seeds=[int(s) for s in eval_rng.integers(0, 2**31 - 1, size=eval_episodes)],
        )


def generator_state(rng: np.random.Generator) -> str:
    """Bit-generator state as a JSON string, loadable by a weights_only torch.load."""
    return json.dumps(rng.bit_generator.state)


def set_generator_state(rng: np.random.Generator, state: str):
    rng.bit_generator.state = json.loads(state)
