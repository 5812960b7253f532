import os
import sys
from dataclasses import replace

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from env.scene import get_preset  # noqa: E402
from rl.sac import SacConfig  # noqa: E402
from runner.config import EvalProtocol, ExperimentConfig, FeedbackConfig  # noqa: E402
from utils.paths import get_default_bank_path  # noqa: E402


@pytest.fixture
def tiny_scene():
    return replace(get_preset("planar3"), horizon=25)


@pytest.fixture
def tiny_sac():
    return SacConfig(batch_size=8, buffer_capacity=256, warmup_steps=10, hidden_sizes=(8, 8))


@pytest.fixture
def tiny_experiment(tmp_path, tiny_scene, tiny_sac):
    return ExperimentConfig(
        scene=tiny_scene,
        sac=tiny_sac,
        alpha=0.3,
        feedback=FeedbackConfig(source="observer", subject="S06", bank=get_default_bank_path()),
        total_timesteps=60,
        master_seed=7,
        eval=EvalProtocol(interval=20, episodes=2, summary_window=4),
        output_dir=str(tmp_path / "runs"),
    )


def write_yaml(path, text: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return str(path)
