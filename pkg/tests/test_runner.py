import logging
import os
from dataclasses import replace

import pytest
import torch

from errors import ConfigError
from feedback.stream import write_probability_stream
from runner.config import FeedbackConfig
from runner.train import (CURVE_HEADER, SUMMARY_HEADER, cell_directory, checkpoint_steps,
                          evaluate_checkpoint, read_curve, train_single)
from utils.paths import CHECKPOINT_FILE, CONFIG_FILE, CURVE_FILE, EPISODES_FILE, SUMMARY_FILE
from utils.tables import read_table

ARTIFACTS = (CURVE_FILE, EPISODES_FILE, SUMMARY_FILE)


def read_bytes(directory, name):
    with open(os.path.join(directory, name), "rb") as f:
        return f.read()


def test_checkpoint_steps():
    assert checkpoint_steps(60, 20) == [0, 20, 40, 60]
    assert checkpoint_steps(50, 20) == [0, 20, 40, 50]


def test_run_writes_all_artifacts(tiny_experiment):
    train_single(tiny_experiment, seed=0)
    directory = cell_directory(tiny_experiment, 0)
    assert directory.endswith(os.path.join("train", "0.3", "S06", "0"))
    for name in (CONFIG_FILE, CURVE_FILE, EPISODES_FILE, SUMMARY_FILE, CHECKPOINT_FILE):
        assert os.path.isfile(os.path.join(directory, name))

    curve_rows = read_table(os.path.join(directory, CURVE_FILE))
    assert tuple(curve_rows[0]) == CURVE_HEADER
    assert [row["step"] for row in curve_rows] == ["0", "20", "40", "60"]
    assert curve_rows[0]["train_return"] == ""

    summary = read_table(os.path.join(directory, SUMMARY_FILE))
    assert len(summary) == 1 and tuple(summary[0]) == SUMMARY_HEADER
    assert (summary[0]["method"], summary[0]["alpha"], summary[0]["subject"]) == ("rlihf", "0.3", "S06")
    assert summary[0]["episodes"] == "4"


def test_same_seed_is_byte_identical(tiny_experiment, tmp_path):
    other = replace(tiny_experiment, output_dir=str(tmp_path / "again"))
    train_single(tiny_experiment, seed=1)
    train_single(other, seed=1)
    for name in ARTIFACTS:
        assert read_bytes(cell_directory(tiny_experiment, 1), name) == read_bytes(cell_directory(other, 1), name)


def test_zero_alpha_matches_sparse_run(tiny_experiment):
    shaped = replace(tiny_experiment, alpha=0.0)
    sparse = replace(tiny_experiment, alpha=0.0, feedback=replace(tiny_experiment.feedback, source="disabled"))
    train_single(shaped)
    train_single(sparse)
    assert cell_directory(shaped, 0) != cell_directory(sparse, 0)
    assert read_bytes(cell_directory(shaped, 0), CURVE_FILE) == read_bytes(cell_directory(sparse, 0), CURVE_FILE)


def test_complete_run_is_skipped_unless_forced(tiny_experiment, caplog):
    train_single(tiny_experiment)
    directory = cell_directory(tiny_experiment, 0)
    before = {name: os.stat(os.path.join(directory, name)).st_mtime_ns for name in ARTIFACTS}
    with caplog.at_level(logging.INFO, logger="runner.train"):
        train_single(tiny_experiment)
    assert "Run already complete" in caplog.text
    assert {name: os.stat(os.path.join(directory, name)).st_mtime_ns for name in ARTIFACTS} == before

    caplog.clear()
    with caplog.at_level(logging.INFO, logger="runner.train"):
        train_single(tiny_experiment, force=True)
    assert "Starting rlihf run" in caplog.text


def test_missing_summary_triggers_rerun(tiny_experiment):
    train_single(tiny_experiment)
    directory = cell_directory(tiny_experiment, 0)
    expected = read_bytes(directory, SUMMARY_FILE)
    os.remove(os.path.join(directory, SUMMARY_FILE))
    train_single(tiny_experiment)
    assert read_bytes(directory, SUMMARY_FILE) == expected


def test_single_update_after_warmup(tiny_experiment, caplog):
    cfg = replace(tiny_experiment, total_timesteps=tiny_experiment.sac.warmup_steps + 1)
    with caplog.at_level(logging.INFO, logger="runner.train"):
        train_single(cfg)
    assert "Finished 11 steps with 1 gradient updates over 1 update phases" in caplog.text
    state = torch.load(os.path.join(cell_directory(cfg, 0), CHECKPOINT_FILE), weights_only=True)
    assert state["agent"]["update_count"] == 1
    assert state["global_step"] == 11 and state["buffer"]["size"] == 11
    curve, _ = read_curve(cell_directory(cfg, 0))
    assert curve.steps == (0, 11)


def test_invalid_config_leaves_no_trace(tiny_experiment):
    with pytest.raises(ConfigError) as info:
        train_single(replace(tiny_experiment, alpha=-0.1))
    assert info.value.field_path == "alpha"
    assert not os.path.exists(tiny_experiment.output_dir)


def test_recorded_stream_drives_training(tiny_experiment, tmp_path):
    path = str(tmp_path / "stream.csv")
    write_probability_stream(path, [0.2, 0.8] * 30)
    cfg = replace(tiny_experiment, feedback=FeedbackConfig(source="stream", stream=path))
    train_single(cfg)
    assert os.path.isfile(os.path.join(cell_directory(cfg, 0), SUMMARY_FILE))
    assert os.path.basename(os.path.dirname(cell_directory(cfg, 0))) == "stream"


def test_short_stream_is_config_error(tiny_experiment, tmp_path):
    path = str(tmp_path / "stream.csv")
    write_probability_stream(path, [0.5] * 10)
    cfg = replace(tiny_experiment, feedback=FeedbackConfig(source="stream", stream=path))
    with pytest.raises(ConfigError) as info:
        train_single(cfg)
    assert info.value.field_path == "feedback.stream"


def test_checkpoint_can_be_evaluated(tiny_experiment):
    train_single(tiny_experiment)
    path = os.path.join(cell_directory(tiny_experiment, 0), CHECKPOINT_FILE)
    first = evaluate_checkpoint(tiny_experiment, 0, path, episodes=3)
    second = evaluate_checkpoint(tiny_experiment, 0, path, episodes=3)
    assert first.episodes == 3
    assert first.success_rate == second.success_rate
    assert first.path_efficiency == second.path_efficiency
