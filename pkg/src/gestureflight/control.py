"""Gesture-to-command mapping, the action grid and trajectory planning.

A recognized gesture picks a flight command through a class map; its
confidence picks a speed from the action grid quartile the gesture
occupied in the camera frame. Commands become rest-to-rest minimum-jerk
segments the controller samples at a fixed tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

COMMAND_KINDS = (
    "takeoff", "land", "up", "down", "left", "right",
    "forward", "backward", "yaw_left", "yaw_right",
)

QUARTILES = ("TL", "TR", "BL", "BR")

# class id -> command kind; classes are the glyph classes 0..9
DEFAULT_CLASS_COMMANDS = {
    0: "land", 1: "takeoff", 2: "forward", 3: "backward", 4: "left",
    5: "right", 6: "up", 7: "down", 8: "yaw_left", 9: "yaw_right",
}


@dataclass(frozen=True)
class ActionGrid:
    """n x n speed grid, n even; speeds stored row-major over the grid."""
    n: int = 4
    speeds: tuple = (2, 4, 4, 6,
                     6, 8, 8, 10,
                     2, 4, 4, 6,
                     6, 8, 8, 10)
    threshold: float = 0.5

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"grid side must be even and >= 2, got {self.n}")
        if len(self.speeds) != self.n * self.n:
            raise ValueError(
                f"speeds must have {self.n * self.n} entries, got {len(self.speeds)}")
        if any(s <= 0 for s in self.speeds):
            raise ValueError("speeds must be positive")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")


def default_action_grid() -> ActionGrid:
    """Default 4x4 grid whose quartiles hold {2,4,6,8} (left) and {4,6,8,10} (right)."""
    return ActionGrid()


def quartile_cells(grid: ActionGrid, quartile: str) -> list:
    """(row, col) cells of one n/2 x n/2 quartile block, row-major."""
    if quartile not in QUARTILES:
        raise ValueError(f"quartile must be one of {QUARTILES}, got {quartile!r}")
    half = grid.n // 2
    r0 = 0 if quartile in ("TL", "TR") else half
    c0 = 0 if quartile in ("TL", "BL") else half
    return [(r, c) for r in range(r0, r0 + half) for c in range(c0, c0 + half)]


def select_speed_cell(grid: ActionGrid, quartile: str, confidence: float):
    """Map confidence onto the quartile's ascending speeds; None when rejected.

    The quartile's cells sort by speed and split [threshold, 1] into
    equal-width ranges, slowest first; the top range is closed at 1.
    Returns ((row, col), speed) for the chosen cell.
    """
    if not (0.0 <= confidence <= 1.0):
        raise ValueError(f"confidence must be in [0, 1], got {confidence}")
    if confidence < grid.threshold:
        return None
    cells = quartile_cells(grid, quartile)
    ranked = sorted(cells, key=lambda rc: grid.speeds[rc[0] * grid.n + rc[1]])
    width = (1.0 - grid.threshold) / len(ranked)
    idx = min(int((confidence - grid.threshold) / width), len(ranked) - 1)
    row, col = ranked[idx]
    return (row, col), grid.speeds[row * grid.n + col]


def select_speed(grid: ActionGrid, quartile: str, confidence: float):
    """Speed for a confidence in the given quartile; None below the threshold."""
    chosen = select_speed_cell(grid, quartile, confidence)
    return None if chosen is None else chosen[1]


@dataclass(frozen=True)
class MappedCommand:
    kind: str
    speed: float
    cell: tuple  # (row, col) in the grid
    class_id: int
    confidence: float
    quartile: str


@dataclass(frozen=True)
class RejectedGesture:
    reason: str
    class_id: int
    confidence: float
    quartile: str


def map_gesture_to_command(class_id: int, confidence: float, quartile: str,
                           grid: ActionGrid | None = None,
                           class_commands: dict | None = None):
    """Resolve a classification into a speed-annotated command or a rejection."""
    grid = grid or default_action_grid()
    class_commands = class_commands if class_commands is not None else DEFAULT_CLASS_COMMANDS
    if class_id not in class_commands:
        raise ValueError(f"class {class_id} has no command mapping")
    kind = class_commands[class_id]
    if kind not in COMMAND_KINDS:
        raise ValueError(f"unknown command kind {kind!r}")
    chosen = select_speed_cell(grid, quartile, confidence)
    if chosen is None:
        return RejectedGesture(
            reason=f"confidence {confidence:.3f} below threshold {grid.threshold}",
            class_id=class_id, confidence=confidence, quartile=quartile)
    cell, speed = chosen
    return MappedCommand(kind=kind, speed=speed, cell=cell, class_id=class_id,
                         confidence=confidence, quartile=quartile)


# ---------------------------------------------------------------------------
# minimum-jerk trajectory segments


@dataclass(frozen=True)
class ControlParams:
    step_length: float = 1.0       # m per translation command
    v_unit: float = 0.25           # m/s of cruise per speed unit
    hover_alt: float = 1.5         # m, takeoff target
    yaw_step_deg: float = 90.0     # per yaw command
    dt: float = 0.05               # control tick, s

    def __post_init__(self):
        if min(self.step_length, self.v_unit, self.hover_alt, self.dt) <= 0:
            raise ValueError("control parameters must be positive")


@dataclass(frozen=True)
class TrajectorySegment:
    """Rest-to-rest segment: per-axis start/end positions plus a yaw sweep.

    yaw_f is kept unwrapped relative to yaw_i so interpolation is smooth;
    consumers wrap when applying.
    """
    x_i: np.ndarray
    x_f: np.ndarray
    yaw_i: float
    yaw_f: float
    duration: float
    kind: str


def _check_time(seg: TrajectorySegment, t: float) -> float:
    if seg.duration <= 0:
        raise ValueError(f"segment duration must be > 0, got {seg.duration}")
    if not (0.0 <= t <= seg.duration + 1e-12):
        raise ValueError(f"t={t} outside segment [0, {seg.duration}]")
    return min(t, seg.duration) / seg.duration


def _shape(s: float) -> float:
    return 10.0 * s**3 - 15.0 * s**4 + 6.0 * s**5


def _shape_rate(s: float) -> float:
    return 30.0 * s**2 - 60.0 * s**3 + 30.0 * s**4


def min_jerk_position(seg: TrajectorySegment, t: float) -> np.ndarray:
    """Position at time t: x_i + (x_f - x_i) * (10 s^3 - 15 s^4 + 6 s^5)."""
    s = _check_time(seg, t)
    if s == 1.0:
        return seg.x_f.copy()   # bitwise endpoint; x_i + delta can be 1 ulp off
    return seg.x_i + (seg.x_f - seg.x_i) * _shape(s)


def min_jerk_velocity(seg: TrajectorySegment, t: float) -> np.ndarray:
    """Velocity at time t: (x_f - x_i)/d * (30 s^2 - 60 s^3 + 30 s^4)."""
    s = _check_time(seg, t)
    return (seg.x_f - seg.x_i) / seg.duration * _shape_rate(s)


def min_jerk_yaw(seg: TrajectorySegment, t: float) -> tuple:
    """(yaw, yaw_rate) at time t along the segment's yaw sweep."""
    s = _check_time(seg, t)
    if s == 1.0:
        return float(seg.yaw_f), 0.0
    yaw = seg.yaw_i + (seg.yaw_f - seg.yaw_i) * _shape(s)
    rate = (seg.yaw_f - seg.yaw_i) / seg.duration * _shape_rate(s)
    return yaw, rate


def plan_segment(position, yaw: float, airborne: bool, kind: str, speed: float,
                 params: ControlParams = ControlParams()) -> TrajectorySegment:
    """Plan one command as a minimum-jerk segment from the current pose.

    Translations move step_length along the body-frame direction; takeoff
    and land are vertical to/from hover altitude; yaw commands sweep
    yaw_step with no translation. Duration follows the selected speed:
    d = distance / (speed * v_unit), with the nominal step length used
    for yaw commands.
    """
    if kind not in COMMAND_KINDS:
        raise ValueError(f"unknown command kind {kind!r}")
    if speed <= 0:
        raise ValueError(f"speed must be positive, got {speed}")
    x_i = np.asarray(position, dtype=np.float64)
    if x_i.shape != (3,):
        raise ValueError(f"position must be a 3-vector, got shape {x_i.shape}")
    cruise = speed * params.v_unit

    if kind == "takeoff":
        if airborne:
            raise ValueError("takeoff while airborne")
        x_f = np.array([x_i[0], x_i[1], params.hover_alt])
        return TrajectorySegment(x_i, x_f, yaw, yaw, params.hover_alt / cruise, kind)
    if kind == "land":
        if not airborne:
            raise ValueError("land while landed")
        x_f = np.array([x_i[0], x_i[1], 0.0])
        return TrajectorySegment(x_i, x_f, yaw, yaw, max(x_i[2], 1e-9) / cruise, kind)
    if not airborne:
        raise ValueError(f"{kind} while landed; take off first")

    duration = params.step_length / cruise
    if kind in ("yaw_left", "yaw_right"):
        sign = 1.0 if kind == "yaw_left" else -1.0
        yaw_f = yaw + sign * math.radians(params.yaw_step_deg)
        return TrajectorySegment(x_i, x_i.copy(), yaw, yaw_f, duration, kind)

    direction = {
        "forward": np.array([math.cos(yaw), math.sin(yaw), 0.0]),
        "backward": np.array([-math.cos(yaw), -math.sin(yaw), 0.0]),
        "left": np.array([-math.sin(yaw), math.cos(yaw), 0.0]),
        "right": np.array([math.sin(yaw), -math.cos(yaw), 0.0]),
        "up": np.array([0.0, 0.0, 1.0]),
        "down": np.array([0.0, 0.0, -1.0]),
    }[kind]
    x_f = x_i + params.step_length * direction
    if x_f[2] < 0.0:
        x_f[2] = 0.0  # never plan below ground
    return TrajectorySegment(x_i, x_f, yaw, yaw, duration, kind)


@dataclass(frozen=True)
class Setpoint:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    yaw: float
    yaw_rate: float


def sample_setpoints(seg: TrajectorySegment, dt: float) -> list:
    """Setpoints at t = 0, dt, 2 dt, ... with the final point exactly at d.

    When dt does not divide the duration, the last interval is shorter.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if seg.duration <= 0:
        raise ValueError(f"segment duration must be > 0, got {seg.duration}")
    times = []
    k = 0
    while k * dt < seg.duration - 1e-12:
        times.append(k * dt)
        k += 1
    times.append(seg.duration)
    out = []
    for t in times:
        yaw, yaw_rate = min_jerk_yaw(seg, t)
        out.append(Setpoint(t=t, position=min_jerk_position(seg, t),
                            velocity=min_jerk_velocity(seg, t),
                            yaw=yaw, yaw_rate=yaw_rate))
    return out
