"""Pipeline configuration: one object covering model, grid, control, EKF,
noise, and classifier choices, loadable from JSON with field-path errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .control import (
    COMMAND_KINDS,
    ActionGrid,
    ControlParams,
    DEFAULT_CLASS_COMMANDS,
    default_action_grid,
)
from .ekf import EkfParams
from .gestures import DR_MISSION, DrParams
from .network import NetConfig, default_config

CLASSIFIERS = ("oracle", "gmobnet", "scripted")


@dataclass(frozen=True)
class SimNoise:
    """Plant and sensor noise levels (standard deviations)."""

    actuation: float = 0.05     # m/s kick on velocity per step
    imu_velocity: float = 0.1   # m/s
    imu_yaw: float = 0.01       # rad

    def __post_init__(self):
        if min(self.actuation, self.imu_velocity, self.imu_yaw) < 0:
            raise ValueError("noise levels must be non-negative")


ZERO_NOISE = SimNoise(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PipelineConfig:
    control: ControlParams = field(default_factory=ControlParams)
    grid: ActionGrid = field(default_factory=default_action_grid)
    ekf: EkfParams = field(default_factory=EkfParams)
    noise: SimNoise = field(default_factory=SimNoise)
    dr: DrParams = DR_MISSION
    model: NetConfig = field(default_factory=default_config)
    classifier: str = "oracle"
    weights_path: str | None = None
    class_commands: tuple = tuple(sorted(DEFAULT_CLASS_COMMANDS.items()))
    debug: bool = False

    def __post_init__(self):
        if self.classifier not in CLASSIFIERS:
            raise ValueError(
                f"classifier must be one of {CLASSIFIERS}, got {self.classifier!r}")
        if self.classifier == "gmobnet" and self.weights_path is None:
            raise ValueError("weights_path is required for the gmobnet classifier")

    @property
    def command_table(self) -> dict:
        return dict(self.class_commands)


def _number(d, key, path, default, positive=False, non_negative=False):
    if key not in d:
        return default
    v = d.pop(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"{path}.{key}: expected a number, got {v!r}")
    if positive and v <= 0:
        raise ValueError(f"{path}.{key}: must be positive, got {v}")
    if non_negative and v < 0:
        raise ValueError(f"{path}.{key}: must be non-negative, got {v}")
    return float(v)


def _range_pair(d, key, path, default):
    if key not in d:
        return default
    v = d.pop(key)
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)
            or v[0] > v[1]):
        raise ValueError(f"{path}.{key}: expected [low, high] with low <= high, got {v!r}")
    return (float(v[0]), float(v[1]))


def _no_leftovers(d, path):
    if d:
        raise ValueError(f"unknown config field {path}.{sorted(d)[0]}")


def from_dict(data: dict) -> PipelineConfig:
    """Build a PipelineConfig from a (possibly partial) plain dict.

    Any invalid or unknown field raises ValueError naming its dotted path.
    """
    if not isinstance(data, dict):
        raise ValueError(f"config must be an object, got {type(data).__name__}")
    data = {k: (dict(v) if isinstance(v, dict) else v) for k, v in data.items()}
    cfg = PipelineConfig()

    control = cfg.control
    if "control" in data:
        sec = data.pop("control")
        if not isinstance(sec, dict):
            raise ValueError("control: expected an object")
        control = ControlParams(
            step_length=_number(sec, "step_length", "control", control.step_length, positive=True),
            v_unit=_number(sec, "v_unit", "control", control.v_unit, positive=True),
            hover_alt=_number(sec, "hover_alt", "control", control.hover_alt, positive=True),
            yaw_step_deg=_number(sec, "yaw_step_deg", "control", control.yaw_step_deg),
            dt=_number(sec, "dt", "control", control.dt, positive=True),
        )
        _no_leftovers(sec, "control")

    grid = cfg.grid
    if "grid" in data:
        sec = data.pop("grid")
        if not isinstance(sec, dict):
            raise ValueError("grid: expected an object")
        n = sec.pop("n", grid.n)
        speeds = sec.pop("speeds", grid.speeds)
        if not isinstance(speeds, (list, tuple)):
            raise ValueError(f"grid.speeds: expected a list, got {speeds!r}")
        threshold = _number(sec, "threshold", "grid", grid.threshold)
        _no_leftovers(sec, "grid")
        try:
            grid = ActionGrid(n=n, speeds=tuple(speeds), threshold=threshold)
        except ValueError as e:
            raise ValueError(f"grid: {e}") from None

    ekf = cfg.ekf
    if "ekf" in data:
        sec = data.pop("ekf")
        if not isinstance(sec, dict):
            raise ValueError("ekf: expected an object")
        alpha = _number(sec, "alpha", "ekf", ekf.alpha, positive=True)
        q_diag = tuple(sec.pop("q_diag", ekf.q_diag))
        r_diag = tuple(sec.pop("r_diag", ekf.r_diag))
        _no_leftovers(sec, "ekf")
        try:
            ekf = EkfParams(alpha=alpha, q_diag=q_diag, r_diag=r_diag)
        except ValueError as e:
            raise ValueError(f"ekf: {e}") from None

    noise = cfg.noise
    if "noise" in data:
        sec = data.pop("noise")
        if not isinstance(sec, dict):
            raise ValueError("noise: expected an object")
        noise = SimNoise(
            actuation=_number(sec, "actuation", "noise", noise.actuation, non_negative=True),
            imu_velocity=_number(sec, "imu_velocity", "noise", noise.imu_velocity, non_negative=True),
            imu_yaw=_number(sec, "imu_yaw", "noise", noise.imu_yaw, non_negative=True),
        )
        _no_leftovers(sec, "noise")

    dr = cfg.dr
    if "dr" in data:
        sec = data.pop("dr")
        if not isinstance(sec, dict):
            raise ValueError("dr: expected an object")
        dr = DrParams(
            rotation_deg=_range_pair(sec, "rotation_deg", "dr", dr.rotation_deg),
            brightness=_range_pair(sec, "brightness", "dr", dr.brightness),
            noise_amp=_range_pair(sec, "noise_amp", "dr", dr.noise_amp),
            background=_range_pair(sec, "background", "dr", dr.background),
            seed=int(_number(sec, "seed", "dr", float(dr.seed))),
        )
        _no_leftovers(sec, "dr")

    model = cfg.model
    if "model" in data:
        sec = data.pop("model")
        if not isinstance(sec, dict):
            raise ValueError("model: expected an object")
        dropout_p = _number(sec, "dropout_p", "model", model.dropout_p, non_negative=True)
        if dropout_p >= 1.0:
            raise ValueError(f"model.dropout_p: must be in [0, 1), got {dropout_p}")
        _no_leftovers(sec, "model")
        model = replace(model, dropout_p=dropout_p)

    classifier = data.pop("classifier", cfg.classifier)
    if classifier not in CLASSIFIERS:
        raise ValueError(f"classifier: must be one of {CLASSIFIERS}, got {classifier!r}")

    weights_path = data.pop("weights_path", cfg.weights_path)
    if weights_path is not None and not isinstance(weights_path, str):
        raise ValueError(f"weights_path: expected a string, got {weights_path!r}")

    class_commands = cfg.class_commands
    if "class_commands" in data:
        sec = data.pop("class_commands")
        if not isinstance(sec, dict):
            raise ValueError("class_commands: expected an object of class id -> command")
        table = {}
        for key, kind in sec.items():
            try:
                class_id = int(key)
            except (TypeError, ValueError):
                raise ValueError(f"class_commands.{key}: class id must be an integer") from None
            if kind not in COMMAND_KINDS:
                raise ValueError(
                    f"class_commands.{key}: unknown command {kind!r}")
            table[class_id] = kind
        class_commands = tuple(sorted(table.items()))

    debug = data.pop("debug", cfg.debug)
    if not isinstance(debug, bool):
        raise ValueError(f"debug: expected true/false, got {debug!r}")

    if data:
        raise ValueError(f"unknown config field {sorted(data)[0]}")

    try:
        return PipelineConfig(control=control, grid=grid, ekf=ekf, noise=noise,
                              dr=dr, model=model, classifier=classifier,
                              weights_path=weights_path,
                              class_commands=class_commands, debug=debug)
    except ValueError as e:
        raise ValueError(str(e)) from None


def to_dict(cfg: PipelineConfig) -> dict:
    """Plain-JSON view of a config, loadable back via from_dict."""
    return {
        "control": {
            "step_length": cfg.control.step_length,
            "v_unit": cfg.control.v_unit,
            "hover_alt": cfg.control.hover_alt,
            "yaw_step_deg": cfg.control.yaw_step_deg,
            "dt": cfg.control.dt,
        },
        "grid": {
            "n": cfg.grid.n,
            "speeds": list(cfg.grid.speeds),
            "threshold": cfg.grid.threshold,
        },
        "ekf": {
            "alpha": cfg.ekf.alpha,
            "q_diag": list(cfg.ekf.q_diag),
            "r_diag": list(cfg.ekf.r_diag),
        },
        "noise": {
            "actuation": cfg.noise.actuation,
            "imu_velocity": cfg.noise.imu_velocity,
            "imu_yaw": cfg.noise.imu_yaw,
        },
        "dr": {
            "rotation_deg": list(cfg.dr.rotation_deg),
            "brightness": list(cfg.dr.brightness),
            "noise_amp": list(cfg.dr.noise_amp),
            "background": list(cfg.dr.background),
            "seed": cfg.dr.seed,
        },
        "model": {"dropout_p": cfg.model.dropout_p},
        "classifier": cfg.classifier,
        "weights_path": cfg.weights_path,
        "class_commands": {str(k): v for k, v in cfg.class_commands},
        "debug": cfg.debug,
    }


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"config file {path}: {e}") from None
    return from_dict(data)
