"""
Experiment configuration: YAML file -> overrides -> typed, validated dataclasses.

Every key has a default, every unknown key is rejected with its dotted path,
and the resolved form written back out re-parses to the same resolution.
"""

import copy
import hashlib
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple, Union

import yaml

from env.scene import ArmConfig, Obstacle, SceneSpec, get_preset
from errors import ConfigError
from feedback.observer import DEFAULT_TOLERANCE, load_observer_bank
from rl.sac import SacConfig
from utils.paths import get_default_bank_path, resolve_relative

logger = logging.getLogger(__name__)

FEEDBACK_SOURCES = ("observer", "stream", "disabled")
PROTOCOLS = ("train", "sweep", "loso")
ALL_SUBJECTS = "all"

_MISSING = object()


@dataclass(frozen=True)
class FeedbackConfig:
    source: str = "observer"
    subject: Optional[str] = "S06"
    bank: str = ""
    stream: Optional[str] = None


@dataclass(frozen=True)
class EvalProtocol:
    interval: int = 5000
    episodes: int = 10
    summary_window: int = 100
    threshold_fraction: float = 0.8
    smoothing: int = 3


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneSpec = field(default_factory=lambda: get_preset("planar3"))
    sac: SacConfig = field(default_factory=SacConfig)
    alpha: float = 0.3
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    total_timesteps: int = 200_000
    master_seed: int = 0
    eval: EvalProtocol = field(default_factory=EvalProtocol)
    output_dir: str = "runs"
    protocol: str = "train"
    progress_tolerance: float = DEFAULT_TOLERANCE

    @property
    def feedback_enabled(self) -> bool:
        return self.feedback.source != "disabled"

    @property
    def subject_label(self) -> Optional[str]:
        """Directory label of the feedback source; None for sparse runs."""
        if self.feedback.source == "observer":
            return self.feedback.subject
        if self.feedback.source == "stream":
            return "stream"
        return None

    def validate(self):
        self.scene.validate("scene")
        self.sac.validate("sac")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ConfigError("alpha", f"must be >= 0 (got {self.alpha})")
        if self.total_timesteps <= self.sac.warmup_steps:
            raise ConfigError("total_timesteps",
                              f"must exceed sac.warmup_steps = {self.sac.warmup_steps} "
                              f"(got {self.total_timesteps})")
        if self.protocol not in PROTOCOLS:
            raise ConfigError("protocol", f"must be one of {', '.join(PROTOCOLS)}")
        if not (math.isfinite(self.progress_tolerance) and self.progress_tolerance >= 0):
            raise ConfigError("progress_tolerance", f"must be >= 0 (got {self.progress_tolerance})")
        if not self.output_dir:
            raise ConfigError("output_dir", "must not be empty")
        self._validate_eval()
        self._validate_feedback()

    def _validate_eval(self):
        ev = self.eval
        for name in ("interval", "episodes", "summary_window", "smoothing"):
            if getattr(ev, name) <= 0:
                raise ConfigError(f"eval.{name}", f"must be a positive integer (got {getattr(ev, name)})")
        if not 0.0 < ev.threshold_fraction <= 1.0:
            raise ConfigError("eval.threshold_fraction",
                              f"must lie in (0, 1] (got {ev.threshold_fraction})")

    def _validate_feedback(self):
        fb = self.feedback
        if fb.source not in FEEDBACK_SOURCES:
            raise ConfigError("feedback.source", f"must be one of {', '.join(FEEDBACK_SOURCES)}")
        if fb.source != "stream" and fb.stream:
            raise ConfigError("feedback.stream", "only allowed when feedback.source is 'stream'")
        if fb.source == "stream":
            if not fb.stream:
                raise ConfigError("feedback.stream", "required when feedback.source is 'stream'")
            if not os.path.isfile(fb.stream):
                raise ConfigError("feedback.stream", f"file not found: {fb.stream}")
        if fb.source == "observer":
            if not fb.subject:
                raise ConfigError("feedback.subject", "required when feedback.source is 'observer'")
            bank = load_observer_bank(fb.bank)
            if fb.subject not in bank:
                raise ConfigError("feedback.subject", f"'{fb.subject}' is not in the observer bank {fb.bank}")


@dataclass(frozen=True)
class SweepSpec:
    alphas: Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    subjects: Union[str, Tuple[str, ...]] = ("S06",)

    def validate(self):
        if not self.alphas:
            raise ConfigError("sweep.alphas", "must not be empty")
        for i, alpha in enumerate(self.alphas):
            if not (math.isfinite(alpha) and alpha >= 0):
                raise ConfigError(f"sweep.alphas[{i}]", f"must be >= 0 (got {alpha})")
        if len(set(self.alphas)) != len(self.alphas):
            raise ConfigError("sweep.alphas", "duplicate values")
        if not self.seeds:
            raise ConfigError("sweep.seeds", "must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("sweep.seeds", "duplicate values")
        if isinstance(self.subjects, str):
            if self.subjects != ALL_SUBJECTS:
                raise ConfigError("sweep.subjects", f"must be a list or '{ALL_SUBJECTS}'")
        else:
            if not self.subjects:
                raise ConfigError("sweep.subjects", "must not be empty")
            if len(set(self.subjects)) != len(self.subjects):
                raise ConfigError("sweep.subjects", "duplicate values")

    def resolve_subjects(self, bank: dict) -> List[str]:
        if self.subjects == ALL_SUBJECTS:
            return sorted(bank)
        missing = [s for s in self.subjects if s not in bank]
        if missing:
            raise ConfigError("sweep.subjects", f"not in the observer bank: {', '.join(missing)}")
        return list(self.subjects)


@dataclass(frozen=True)
class ResolvedConfig:
    experiment: ExperimentConfig
    sweep: SweepSpec
    source_path: str = field(default="", compare=False)


# ---- Typed reading -----------------------------------------------------------------------------------

def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _as_float(value, path):
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        # PyYAML reads "1e-3" as a string.
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(path, f"expected a number, got {value!r}")


def _as_int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _as_bool(value, path):
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true/false, got {value!r}")
    return value


def _as_str(value, path):
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _optional(convert):
    def wrapped(value, path):
        return None if value is None else convert(value, path)
    return wrapped


def _list_of(convert):
    def wrapped(value, path):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return tuple(convert(item, f"{path}[{i}]") for i, item in enumerate(value))
    return wrapped


def _interval(value, path):
    pair = _list_of(_as_float)(value, path)
    if len(pair) != 2:
        raise ConfigError(path, f"expected [low, high], got {value!r}")
    return pair


class _Section:
    """A mapping being consumed key by key; leftovers are unknown keys."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected a mapping, got {data!r}")
        self.data = dict(data)
        self.path = path

    def take(self, key: str, convert, default=_MISSING):
        where = _join(self.path, key)
        if key not in self.data:
            if default is _MISSING:
                raise ConfigError(where, "missing")
            return default
        return convert(self.data.pop(key), where)

    def section(self, key: str) -> "_Section":
        return _Section(self.data.pop(key, None), _join(self.path, key))

    def finish(self):
        for key in sorted(self.data, key=str):
            raise ConfigError(_join(self.path, str(key)), "unknown key")


def _read_arm(sec: _Section, base: ArmConfig) -> ArmConfig:
    arm = ArmConfig(
        link_lengths=sec.take("link_lengths", _list_of(_as_float), base.link_lengths),
        joint_limits=sec.take("joint_limits", _list_of(_interval), base.joint_limits),
        max_joint_velocity=sec.take("max_joint_velocity", _as_float, base.max_joint_velocity),
        home_pose=sec.take("home_pose", _list_of(_as_float), base.home_pose),
        planar=sec.take("planar", _as_bool, base.planar),
    )
    sec.finish()
    return arm


def _read_obstacles(value, path) -> Tuple[Obstacle, ...]:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(path, f"expected a list, got {value!r}")
    obstacles = []
    for i, item in enumerate(value):
        sec = _Section(item, f"{path}[{i}]")
        obstacles.append(Obstacle(center=sec.take("center", _list_of(_as_float)),
                                  radius=sec.take("radius", _as_float)))
        sec.finish()
    return tuple(obstacles)


def _read_scene(sec: _Section) -> SceneSpec:
    base = get_preset(sec.take("preset", _as_str, "planar3"))
    scene = SceneSpec(
        arm=_read_arm(sec.section("arm"), base.arm),
        obstacles=sec.take("obstacles", _read_obstacles, base.obstacles),
        goal_center=sec.take("goal_center", _list_of(_as_float), base.goal_center),
        goal_radius=sec.take("goal_radius", _as_float, base.goal_radius),
        object_position=sec.take("object_position", _list_of(_as_float), base.object_position),
        object_mode=sec.take("object_mode", _as_str, base.object_mode),
        object_spawn_radius=sec.take("object_spawn_radius", _as_float, base.object_spawn_radius),
        grasp_radius=sec.take("grasp_radius", _as_float, base.grasp_radius),
        horizon=sec.take("horizon", _as_int, base.horizon),
        success_bonus=sec.take("success_bonus", _as_float, base.success_bonus),
        collision_penalty=sec.take("collision_penalty", _as_float, base.collision_penalty),
        preset=base.preset,
    )
    sec.finish()
    return scene


def _read_sac(sec: _Section) -> SacConfig:
    d = SacConfig()
    sac = SacConfig(
        gamma=sec.take("gamma", _as_float, d.gamma),
        tau=sec.take("tau", _as_float, d.tau),
        actor_lr=sec.take("actor_lr", _as_float, d.actor_lr),
        critic_lr=sec.take("critic_lr", _as_float, d.critic_lr),
        temperature_lr=sec.take("temperature_lr", _as_float, d.temperature_lr),
        batch_size=sec.take("batch_size", _as_int, d.batch_size),
        buffer_capacity=sec.take("buffer_capacity", _as_int, d.buffer_capacity),
        initial_temperature=sec.take("initial_temperature", _as_float, d.initial_temperature),
        target_entropy=sec.take("target_entropy", _optional(_as_float), d.target_entropy),
        update_to_data_ratio=sec.take("update_to_data_ratio", _as_int, d.update_to_data_ratio),
        warmup_steps=sec.take("warmup_steps", _as_int, d.warmup_steps),
        hidden_sizes=sec.take("hidden_sizes", _list_of(_as_int), d.hidden_sizes),
    )
    sec.finish()
    return sac


def _read_feedback(sec: _Section, base_dir: str) -> FeedbackConfig:
    d = FeedbackConfig()
    bank = sec.take("bank", _optional(_as_str), None)
    stream = sec.take("stream", _optional(_as_str), None)
    fb = FeedbackConfig(
        source=sec.take("source", _as_str, d.source),
        subject=sec.take("subject", _optional(_as_str), d.subject),
        bank=resolve_relative(bank, base_dir) if bank else get_default_bank_path(),
        stream=resolve_relative(stream, base_dir) if stream else None,
    )
    sec.finish()
    return fb


def _read_eval(sec: _Section) -> EvalProtocol:
    d = EvalProtocol()
    ev = EvalProtocol(
        interval=sec.take("interval", _as_int, d.interval),
        episodes=sec.take("episodes", _as_int, d.episodes),
        summary_window=sec.take("summary_window", _as_int, d.summary_window),
        threshold_fraction=sec.take("threshold_fraction", _as_float, d.threshold_fraction),
        smoothing=sec.take("smoothing", _as_int, d.smoothing),
    )
    sec.finish()
    return ev


def _read_subjects(value, path):
    if value == ALL_SUBJECTS:
        return ALL_SUBJECTS
    return _list_of(_as_str)(value, path)


def _read_sweep(sec: _Section) -> SweepSpec:
    d = SweepSpec()
    sweep = SweepSpec(
        alphas=sec.take("alphas", _list_of(_as_float), d.alphas),
        seeds=sec.take("seeds", _list_of(_as_int), d.seeds),
        subjects=sec.take("subjects", _read_subjects, d.subjects),
    )
    sec.finish()
    return sweep


def build_config(data: dict, base_dir: str = ".", source_path: str = "") -> ResolvedConfig:
    root = _Section(data, "")
    d = ExperimentConfig()
    output_dir = root.take("output_dir", _as_str, d.output_dir)
    experiment = ExperimentConfig(
        scene=_read_scene(root.section("scene")),
        sac=_read_sac(root.section("sac")),
        alpha=root.take("alpha", _as_float, d.alpha),
        feedback=_read_feedback(root.section("feedback"), base_dir),
        total_timesteps=root.take("total_timesteps", _as_int, d.total_timesteps),
        master_seed=root.take("master_seed", _as_int, d.master_seed),
        eval=_read_eval(root.section("eval")),
        output_dir=os.path.abspath(resolve_relative(output_dir, os.getcwd())),
        protocol=root.take("protocol", _as_str, d.protocol),
        progress_tolerance=root.take("progress_tolerance", _as_float, d.progress_tolerance),
    )
    sweep = _read_sweep(root.section("sweep"))
    root.finish()
    experiment.validate()
    sweep.validate()
    return ResolvedConfig(experiment=experiment, sweep=sweep, source_path=source_path)


# ---- Files and overrides -----------------------------------------------------------------------------

def parse_override(text: str) -> Tuple[List[str], Any]:
    if "=" not in text:
        raise ConfigError("--set", f"expected key=value, got '{text}'")
    key, raw = text.split("=", 1)
    keys = [k.strip() for k in key.strip().split(".")]
    if not all(keys):
        raise ConfigError("--set", f"bad key path '{key}'")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError(key, f"cannot parse value '{raw}': {e}")
    return keys, value


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    data = copy.deepcopy(data) if data else {}
    for text in overrides:
        keys, value = parse_override(text)
        node = data
        for depth, key in enumerate(keys[:-1]):
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            if not isinstance(child, dict):
                raise ConfigError(".".join(keys[:depth + 1]), "is not a section; cannot set a sub-key")
            node = child
        node[keys[-1]] = value
    return data


def read_config_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}")
    except OSError as e:
        raise ConfigError("--config", f"cannot read {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError("--config", f"{path} is not valid YAML: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("--config", f"{path} must contain a mapping at the top level")
    return data


def load_config(path: str, overrides: Sequence[str] = ()) -> ResolvedConfig:
    data = apply_overrides(read_config_file(path), overrides)
    resolved = build_config(data, base_dir=os.path.dirname(os.path.abspath(path)),
                            source_path=os.path.abspath(path))
    logger.debug("Resolved configuration from %s with %d override(s)", path, len(overrides))
    return resolved


# ---- Resolved form -----------------------------------------------------------------------------------

def scene_to_dict(scene: SceneSpec) -> dict:
    arm = scene.arm
    return {
        "preset": scene.preset,
        "arm": {
            "link_lengths": list(arm.link_lengths),
            "joint_limits": [list(pair) for pair in arm.joint_limits],
            "max_joint_velocity": arm.max_joint_velocity,
            "home_pose": list(arm.home_pose),
            "planar": arm.planar,
        },
        "obstacles": [{"center": list(o.center), "radius": o.radius} for o in scene.obstacles],
        "goal_center": list(scene.goal_center),
        "goal_radius": scene.goal_radius,
        "object_position": list(scene.object_position),
        "object_mode": scene.object_mode,
        "object_spawn_radius": scene.object_spawn_radius,
        "grasp_radius": scene.grasp_radius,
        "horizon": scene.horizon,
        "success_bonus": scene.success_bonus,
        "collision_penalty": scene.collision_penalty,
    }


def experiment_to_dict(cfg: ExperimentConfig) -> dict:
    sac = cfg.sac
    return {
        "alpha": cfg.alpha,
        "total_timesteps": cfg.total_timesteps,
        "master_seed": cfg.master_seed,
        "output_dir": cfg.output_dir,
        "protocol": cfg.protocol,
        "progress_tolerance": cfg.progress_tolerance,
        "feedback": {
            "source": cfg.feedback.source,
            "subject": cfg.feedback.subject,
            "bank": cfg.feedback.bank,
            "stream": cfg.feedback.stream,
        },
        "eval": {
            "interval": cfg.eval.interval,
            "episodes": cfg.eval.episodes,
            "summary_window": cfg.eval.summary_window,
            "threshold_fraction": cfg.eval.threshold_fraction,
            "smoothing": cfg.eval.smoothing,
        },
        "scene": scene_to_dict(cfg.scene),
        "sac": {
            "gamma": sac.gamma,
            "tau": sac.tau,
            "actor_lr": sac.actor_lr,
            "critic_lr": sac.critic_lr,
            "temperature_lr": sac.temperature_lr,
            "batch_size": sac.batch_size,
            "buffer_capacity": sac.buffer_capacity,
            "initial_temperature": sac.initial_temperature,
            "target_entropy": sac.target_entropy,
            "update_to_data_ratio": sac.update_to_data_ratio,
            "warmup_steps": sac.warmup_steps,
            "hidden_sizes": list(sac.hidden_sizes),
        },
    }


def resolved_to_dict(resolved: ResolvedConfig) -> dict:
    data = experiment_to_dict(resolved.experiment)
    sweep = resolved.sweep
    data["sweep"] = {
        "alphas": list(sweep.alphas),
        "seeds": list(sweep.seeds),
        "subjects": sweep.subjects if isinstance(sweep.subjects, str) else list(sweep.subjects),
    }
    return data


def dump_config(data: dict) -> str:
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=None)


def config_fingerprint(cfg: ExperimentConfig) -> str:
    """Hash of everything that changes results (output location excluded)."""
    data = experiment_to_dict(cfg)
    data.pop("output_dir")
    data.pop("protocol")
    return hashlib.sha256(dump_config(data).encode("utf-8")).hexdigest()
