"""Simulated micro-drone plant, closed-loop mission runner, and metrics.

The plant shares its velocity-response model with the EKF (same
process_model call), so at zero noise the estimator tracks the true
state exactly and the two-tick-lookahead controller places the drone on
the reference path to float precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import control as fc
from .config import PipelineConfig, SimNoise
from .control import MappedCommand, RejectedGesture, map_gesture_to_command
from .ekf import ekf_predict, ekf_update, initial_belief, process_model, wrap_angle
from .gestures import classify_oracle, resize_bilinear, synth_gesture_image
from .network import build_network, forward, load_weights

FRAME_SIZE = 64
# glyph center per quartile, (cx, cy) in unit frame coordinates
QUARTILE_CENTERS = {
    "TL": (0.25, 0.25), "TR": (0.75, 0.25),
    "BL": (0.25, 0.75), "BR": (0.75, 0.75),
}
MAX_MISSION_TICKS = 200_000


# ---------------------------------------------------------------------------
# plant


class SimWorld:
    """True drone state plus the seeded actuation and IMU noise streams."""

    def __init__(self, seed: int = 0, noise: SimNoise | None = None,
                 alpha: float = 2.0, position=(0.0, 0.0, 0.0), yaw: float = 0.0):
        self.p = np.array(position, dtype=np.float64)
        self.v = np.zeros(3)
        self.yaw = float(yaw)
        self.airborne = False
        self.t = 0.0
        self.alpha = float(alpha)
        self.noise = noise if noise is not None else SimNoise()
        self.rng_act = np.random.default_rng([int(seed), 1])
        self.rng_imu = np.random.default_rng([int(seed), 2])

    def state7(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, [self.yaw]])


def step_plant(world: SimWorld, u, dt: float) -> SimWorld:
    """Advance one tick under a body-frame velocity command [v_body, yaw_rate].

    Velocity relaxes toward the rotated command at rate alpha with a
    seeded Gaussian kick; position integrates the pre-step velocity.
    """
    u = np.asarray(u, dtype=np.float64)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not world.airborne:
        if np.any(u != 0.0):
            raise ValueError("translation commanded while landed")
        world.t += dt
        return world
    nominal = process_model(world.state7(), u, dt, world.alpha)
    kick = world.rng_act.normal(size=3) * world.noise.actuation
    world.p = nominal[:3]
    world.v = nominal[3:6] + kick
    world.yaw = float(nominal[6])
    if world.p[2] < 0.0:
        world.p[2] = 0.0
        if world.v[2] < 0.0:
            world.v[2] = 0.0
    world.t += dt
    return world


def read_imu(world: SimWorld) -> np.ndarray:
    """Noisy [vx, vy, vz, yaw]; consecutive reads advance the noise stream."""
    n = world.rng_imu.normal(size=4)
    z = np.empty(4)
    z[:3] = world.v + n[:3] * world.noise.imu_velocity
    raw = world.yaw + n[3] * world.noise.imu_yaw
    # wrap only when needed: in-range reads stay bitwise exact
    z[3] = raw if -math.pi < raw <= math.pi else wrap_angle(raw)
    return z


# ---------------------------------------------------------------------------
# gesture frames: a 64x64 camera view with the glyph in one quartile


def make_command_frame(class_id: int, quartile: str, dr, size: int = FRAME_SIZE) -> np.ndarray:
    if quartile not in QUARTILE_CENTERS:
        raise ValueError(f"unknown quartile {quartile!r}")
    return synth_gesture_image(class_id, dr, size=size,
                               center=QUARTILE_CENTERS[quartile], scale=0.5)


def frame_quartile(frame: np.ndarray) -> str:
    """Quartile containing the brightness centroid (background-subtracted)."""
    f = np.asarray(frame, dtype=np.float64)
    if f.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {f.shape}")
    w = np.clip(f - f.mean(), 0.0, None)
    total = w.sum()
    if total <= 0.0:
        return "TL"
    rows = np.arange(f.shape[0]) + 0.5
    cols = np.arange(f.shape[1]) + 0.5
    r = float(w.sum(axis=1) @ rows) / total
    c = float(w.sum(axis=0) @ cols) / total
    vertical = "T" if r < f.shape[0] / 2.0 else "B"
    horizontal = "L" if c < f.shape[1] / 2.0 else "R"
    return vertical + horizontal


def crop_quartile(frame: np.ndarray, quartile: str) -> np.ndarray:
    f = np.asarray(frame, dtype=np.float64)
    h2, w2 = f.shape[0] // 2, f.shape[1] // 2
    rows = slice(0, h2) if quartile[0] == "T" else slice(h2, 2 * h2)
    cols = slice(0, w2) if quartile[1] == "L" else slice(w2, 2 * w2)
    return f[rows, cols]


# ---------------------------------------------------------------------------
# classifiers driving the loop


class OracleClassifier:
    def __call__(self, crop: np.ndarray):
        result = classify_oracle(crop)
        return result.class_id, result.confidence


class NetworkClassifier:
    def __init__(self, cfg: PipelineConfig):
        self.net = build_network(cfg.model)
        from .network import expected_weight_shapes
        self.weights = load_weights(cfg.weights_path,
                                    expected_weight_shapes(self.net))
        self.in_h, self.in_w = cfg.model.input_h, cfg.model.input_w

    def __call__(self, crop: np.ndarray):
        img = resize_bilinear(crop, self.in_h, self.in_w)
        probs = forward(self.net, img, self.weights)
        cls = int(np.argmax(probs))
        return cls, float(probs[cls])


def build_classifier(cfg: PipelineConfig):
    if cfg.classifier == "oracle":
        return OracleClassifier()
    if cfg.classifier == "gmobnet":
        return NetworkClassifier(cfg)
    raise ValueError("scripted classification needs an explicit script")


# ---------------------------------------------------------------------------
# flight log


@dataclass
class LogRow:
    tick: int
    t: float
    command: str | None
    speed: float | None
    confidence: float | None
    quartile: str | None
    cell: tuple | None
    segment: int | None
    event: str
    airborne: bool
    setpoint_p: np.ndarray
    setpoint_v: np.ndarray
    setpoint_yaw: float
    true_p: np.ndarray
    true_v: np.ndarray
    true_yaw: float
    est_p: np.ndarray
    est_v: np.ndarray
    est_yaw: float


@dataclass
class FlightLog:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)


def _g17(x) -> str:
    # +0.0 canonicalizes IEEE -0.0, which JSON would reread as int 0
    return format(float(x) + 0.0, ".17g")


def _vec(v) -> str:
    return "[" + ", ".join(_g17(x) for x in v) + "]"


def _opt_num(x) -> str:
    return "null" if x is None else _g17(x)


def row_to_json(row: LogRow) -> str:
    """One log line; floats carry 17 significant digits so reads are exact."""
    cell = "null" if row.cell is None else f"[{row.cell[0]}, {row.cell[1]}]"
    parts = [
        f'"tick": {row.tick}',
        f'"t": {_g17(row.t)}',
        f'"command": {json.dumps(row.command)}',
        f'"speed": {_opt_num(row.speed)}',
        f'"confidence": {_opt_num(row.confidence)}',
        f'"quartile": {json.dumps(row.quartile)}',
        f'"cell": {cell}',
        f'"segment": {"null" if row.segment is None else row.segment}',
        f'"event": {json.dumps(row.event)}',
        f'"airborne": {"true" if row.airborne else "false"}',
        f'"setpoint_p": {_vec(row.setpoint_p)}',
        f'"setpoint_v": {_vec(row.setpoint_v)}',
        f'"setpoint_yaw": {_g17(row.setpoint_yaw)}',
        f'"true_p": {_vec(row.true_p)}',
        f'"true_v": {_vec(row.true_v)}',
        f'"true_yaw": {_g17(row.true_yaw)}',
        f'"est_p": {_vec(row.est_p)}',
        f'"est_v": {_vec(row.est_v)}',
        f'"est_yaw": {_g17(row.est_yaw)}',
    ]
    return "{" + ", ".join(parts) + "}"


_ROW_KEYS = ("tick", "t", "command", "speed", "confidence", "quartile", "cell",
             "segment", "event", "airborne", "setpoint_p", "setpoint_v",
             "setpoint_yaw", "true_p", "true_v", "true_yaw", "est_p", "est_v",
             "est_yaw")


def row_from_obj(obj: dict) -> LogRow:
    missing = [k for k in _ROW_KEYS if k not in obj]
    if missing:
        raise ValueError(f"missing field {missing[0]!r}")
    cell = obj["cell"]
    return LogRow(
        tick=int(obj["tick"]), t=float(obj["t"]),
        command=obj["command"],
        speed=None if obj["speed"] is None else float(obj["speed"]),
        confidence=None if obj["confidence"] is None else float(obj["confidence"]),
        quartile=obj["quartile"],
        cell=None if cell is None else (int(cell[0]), int(cell[1])),
        segment=None if obj["segment"] is None else int(obj["segment"]),
        event=str(obj["event"]), airborne=bool(obj["airborne"]),
        setpoint_p=np.array(obj["setpoint_p"], dtype=np.float64),
        setpoint_v=np.array(obj["setpoint_v"], dtype=np.float64),
        setpoint_yaw=float(obj["setpoint_yaw"]),
        true_p=np.array(obj["true_p"], dtype=np.float64),
        true_v=np.array(obj["true_v"], dtype=np.float64),
        true_yaw=float(obj["true_yaw"]),
        est_p=np.array(obj["est_p"], dtype=np.float64),
        est_v=np.array(obj["est_v"], dtype=np.float64),
        est_yaw=float(obj["est_yaw"]),
    )


def log_to_bytes(log: FlightLog) -> bytes:
    return "".join(row_to_json(r) + "\n" for r in log.rows).encode("utf-8")


def write_log(log: FlightLog, path) -> None:
    with open(path, "wb") as fh:
        fh.write(log_to_bytes(log))


def read_log(path) -> FlightLog:
    with open(path, "rb") as fh:
        data = fh.read()
    return log_from_bytes(data)


def log_from_bytes(data: bytes) -> FlightLog:
    rows = []
    for lineno, line in enumerate(data.decode("utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            rows.append(row_from_obj(json.loads(line)))
        except (ValueError, KeyError, TypeError, IndexError) as e:
            raise ValueError(f"line {lineno}: malformed log row ({e})") from None
    return FlightLog(rows=rows)


# ---------------------------------------------------------------------------
# closed loop


def _idle_meta() -> dict:
    return dict(command=None, speed=None, confidence=None, quartile=None,
                cell=None, segment=None)


class FlightLoop:
    """Closed-loop core shared by the mission runner and live sessions.

    One step() is one control tick: steer toward the reference two ticks
    ahead (which cancels the plant's velocity lag exactly at zero noise),
    step the plant, read the IMU, update the EKF, and log one row.
    """

    def __init__(self, cfg: PipelineConfig | None = None, seed: int = 0,
                 hover_alt: float | None = None):
        self.cfg = cfg if cfg is not None else PipelineConfig()
        params = self.cfg.control
        if hover_alt is not None:
            params = replace(params, hover_alt=hover_alt)
        self.params = params
        self.world = SimWorld(seed=seed, noise=self.cfg.noise,
                              alpha=self.cfg.ekf.alpha)
        self.belief = initial_belief()
        self.tick = 0
        self.rows: list[LogRow] = []
        self.active = None                  # (segment, start time)
        self.segment_count = 0
        self.ref_pos = np.zeros(3)
        self.ref_yaw = 0.0
        self._meta = _idle_meta()
        self._event = ""

    @property
    def idle(self) -> bool:
        return self.active is None

    def reference(self, tau: float):
        """(position, velocity, yaw) the controller steers toward at tau."""
        if self.active is not None:
            seg, t0 = self.active
            s = min(max(tau - t0, 0.0), seg.duration)
            yaw, _ = fc.min_jerk_yaw(seg, s)
            return fc.min_jerk_position(seg, s), fc.min_jerk_velocity(seg, s), yaw
        return self.ref_pos.copy(), np.zeros(3), self.ref_yaw

    def begin(self, outcome) -> bool:
        """Take a MappedCommand or RejectedGesture while idle.

        Returns True when a segment starts. Commands that cannot be
        planned in the current flight state (forward while landed, ...)
        become logged rejections so the loop never wedges.
        """
        if self.active is not None:
            raise RuntimeError("a segment is already active")
        if isinstance(outcome, RejectedGesture):
            self._event = f"rejected: {outcome.reason}"
            self._meta = _idle_meta()
            self._meta.update(confidence=outcome.confidence,
                              quartile=outcome.quartile)
            return False
        try:
            seg = fc.plan_segment(self.ref_pos, self.ref_yaw,
                                  self.world.airborne, outcome.kind,
                                  outcome.speed, self.params)
        except ValueError as e:
            self._event = f"rejected: {e}"
            self._meta = _idle_meta()
            self._meta.update(confidence=outcome.confidence,
                              quartile=outcome.quartile)
            return False
        if outcome.kind == "takeoff":
            self.world.airborne = True
        self.active = (seg, self.tick * self.params.dt)
        self._event = "accepted"
        self._meta = dict(command=outcome.kind, speed=outcome.speed,
                          confidence=outcome.confidence,
                          quartile=outcome.quartile, cell=outcome.cell,
                          segment=self.segment_count)
        self.segment_count += 1
        return True

    def step(self) -> LogRow:
        dt = self.params.dt
        alpha = self.cfg.ekf.alpha
        tau = self.tick * dt
        ref1_p, ref1_v, ref1_yaw = self.reference(tau + dt)
        ref2_p, _, _ = self.reference(tau + 2.0 * dt)
        if self.world.airborne:
            x = self.belief.x
            p_hat, v_hat, yaw_hat = x[:3], x[3:6], float(x[6])
            # two-tick lookahead: position responds to velocity one tick late
            v_tgt = (ref2_p - (p_hat + v_hat * dt)) / dt
            v_cmd = v_hat + (v_tgt - v_hat) / (alpha * dt)
            c, s = math.cos(yaw_hat), math.sin(yaw_hat)
            u = np.array([c * v_cmd[0] + s * v_cmd[1],
                          -s * v_cmd[0] + c * v_cmd[1],
                          v_cmd[2],
                          wrap_angle(ref1_yaw - yaw_hat) / dt])
        else:
            u = np.zeros(4)
        step_plant(self.world, u, dt)
        z = read_imu(self.world)
        self.belief = ekf_predict(self.belief, u, dt, self.cfg.ekf)
        self.belief = ekf_update(self.belief, z, self.cfg.ekf)
        self.tick += 1
        t_now = self.tick * dt
        if self.active is not None:
            seg, t0 = self.active
            if t_now >= t0 + seg.duration - 1e-9:
                self.ref_pos = seg.x_f.copy()
                self.ref_yaw = wrap_angle(seg.yaw_f)
                if seg.kind == "land":
                    self.world.airborne = False
                    self.world.v[:] = 0.0
                    self.world.p[2] = 0.0
                self.active = None
        est = self.belief.x
        row = LogRow(
            tick=self.tick, t=t_now,
            command=self._meta["command"], speed=self._meta["speed"],
            confidence=self._meta["confidence"], quartile=self._meta["quartile"],
            cell=self._meta["cell"], segment=self._meta["segment"],
            event=self._event, airborne=self.world.airborne,
            setpoint_p=np.asarray(ref1_p, dtype=np.float64),
            setpoint_v=np.asarray(ref1_v, dtype=np.float64),
            setpoint_yaw=float(ref1_yaw),
            true_p=self.world.p.copy(), true_v=self.world.v.copy(),
            true_yaw=self.world.yaw,
            est_p=est[:3].copy(), est_v=est[3:6].copy(), est_yaw=float(est[6]),
        )
        self._event = ""
        if self.active is None:
            self._meta = _idle_meta()
        self.rows.append(row)
        return row


# ---------------------------------------------------------------------------
# missions


@dataclass(frozen=True)
class MissionSpec:
    kind: str = "rectangle"
    width: float = 8.0
    height: float = 4.0
    altitude: float = 1.5

    def __post_init__(self):
        if self.kind not in ("rectangle", "l_shape"):
            raise ValueError(f"unknown mission kind {self.kind!r}")
        if min(self.width, self.height, self.altitude) <= 0:
            raise ValueError("mission dimensions must be positive")


def _steps(length: float, step: float) -> int:
    return max(1, round(length / step))


def compile_mission(spec: MissionSpec, params: fc.ControlParams | None = None) -> list:
    """Gesture-command sequence tracing the mission's path."""
    params = params if params is not None else fc.ControlParams()
    w = _steps(spec.width, params.step_length)
    h = _steps(spec.height, params.step_length)
    kinds = ["takeoff"]
    if spec.kind == "rectangle":
        for leg in (w, h, w, h):
            kinds.extend(["forward"] * leg)
            kinds.append("yaw_left")
    else:
        kinds.extend(["forward"] * w)
        kinds.append("yaw_left")
        kinds.extend(["forward"] * h)
    kinds.append("land")
    return kinds


def mission_params(cfg: PipelineConfig, spec: MissionSpec) -> fc.ControlParams:
    return replace(cfg.control, hover_alt=spec.altitude)


def mission_reference(spec: MissionSpec, params: fc.ControlParams | None = None) -> np.ndarray:
    """Ideal waypoint polyline the mission traces, starting at the origin."""
    params = params if params is not None else fc.ControlParams()
    params = replace(params, hover_alt=spec.altitude)
    kinds = compile_mission(spec, params)
    pos, yaw, airborne = np.zeros(3), 0.0, False
    pts = [pos.copy()]
    for kind in kinds:
        seg = fc.plan_segment(pos, yaw, airborne, kind, speed=4, params=params)
        if kind == "takeoff":
            airborne = True
        elif kind == "land":
            airborne = False
        pos, yaw = seg.x_f.copy(), wrap_angle(seg.yaw_f)
        if np.array_equal(pts[-1], pos):
            continue
        step_dir = pos - pts[-1]
        if len(pts) >= 2:
            prev_dir = pts[-1] - pts[-2]
            collinear = np.linalg.norm(np.cross(prev_dir, step_dir)) < 1e-12
            if collinear and prev_dir @ step_dir > 0:
                pts[-1] = pos.copy()   # extend the current straight run
                continue
        pts.append(pos.copy())
    return np.array(pts)


def _normalize_script(scripted) -> list:
    out = []
    for entry in scripted:
        if len(entry) == 2:
            class_id, conf = entry
            quartile = "TL"
        else:
            class_id, conf, quartile = entry
        out.append((int(class_id), float(conf), str(quartile)))
    if not out:
        raise ValueError("scripted classifier needs at least one entry")
    return out


def run_mission(spec: MissionSpec, cfg: PipelineConfig | None = None,
                seed: int = 0, scripted=None) -> FlightLog:
    """Fly a mission closed-loop and return its log.

    Each compiled command synthesizes a camera frame (glyph in a random
    quartile), classifies it, maps it through the action grid, and flies
    the planned segment; rejections hover one tick and move on.
    """
    cfg = cfg if cfg is not None else PipelineConfig()
    loop = FlightLoop(cfg, seed=seed, hover_alt=spec.altitude)
    table = cfg.command_table
    inverse = {}
    for class_id, kind in sorted(table.items()):
        inverse.setdefault(kind, class_id)
    kinds = compile_mission(spec, loop.params)
    unmapped = [k for k in kinds if k not in inverse]
    if unmapped:
        raise ValueError(f"no gesture class mapped to command {unmapped[0]!r}")
    if scripted is not None:
        script = _normalize_script(scripted)
        classifier = None
    else:
        if cfg.classifier == "scripted":
            raise ValueError("scripted classifier needs an explicit script")
        script = None
        classifier = build_classifier(cfg)
    rng_frames = np.random.default_rng([int(seed), 3])
    for i, kind in enumerate(kinds):
        if script is not None:
            class_pred, conf, quartile = script[min(i, len(script) - 1)]
        else:
            intended = fc.QUARTILES[int(rng_frames.integers(4))]
            dr = replace(cfg.dr, seed=int(rng_frames.integers(2 ** 32)))
            frame = make_command_frame(inverse[kind], intended, dr)
            quartile = frame_quartile(frame)
            crop = crop_quartile(frame, quartile)
            class_pred, conf = classifier(crop)
        outcome = map_gesture_to_command(class_pred, conf, quartile,
                                         grid=cfg.grid, class_commands=table)
        started = loop.begin(outcome)
        if not started:
            loop.step()                 # one hover tick carrying the rejection
            continue
        while not loop.idle:
            loop.step()
            if loop.tick > MAX_MISSION_TICKS:
                raise RuntimeError("mission exceeded the tick budget")
    return FlightLog(rows=loop.rows)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class TrackingReport:
    max_abs_error: np.ndarray   # per axis, m
    rmse: np.ndarray            # per axis, m
    path_length: float          # length of the flown trajectory, m


def track_displacement(log, reference) -> TrackingReport:
    """Per-axis displacement of the flown track from a reference polyline.

    Each tick's error is the vector from the nearest point on the
    polyline to the true position.
    """
    rows = log.rows if isinstance(log, FlightLog) else list(log)
    if not rows:
        raise ValueError("empty flight log")
    ref = np.asarray(reference, dtype=np.float64)
    if ref.ndim != 2 or ref.shape[0] < 1 or ref.shape[1] != 3:
        raise ValueError(f"reference polyline must be (m, 3), got {ref.shape}")
    pts = np.array([r.true_p for r in rows])
    if ref.shape[0] == 1:
        nearest = np.broadcast_to(ref[0], pts.shape)
    else:
        a, b = ref[:-1], ref[1:]
        ab = b - a
        denom = (ab * ab).sum(axis=1)
        safe = np.where(denom > 0.0, denom, 1.0)
        t = ((pts[:, None, :] - a[None]) * ab[None]).sum(axis=2) / safe[None]
        t = np.clip(t, 0.0, 1.0)
        t[:, denom == 0.0] = 0.0
        candidates = a[None] + t[:, :, None] * ab[None]
        d2 = ((pts[:, None, :] - candidates) ** 2).sum(axis=2)
        nearest = candidates[np.arange(len(pts)), np.argmin(d2, axis=1)]
    err = pts - nearest
    steps = np.diff(pts, axis=0)
    return TrackingReport(
        max_abs_error=np.abs(err).max(axis=0),
        rmse=np.sqrt((err ** 2).mean(axis=0)),
        path_length=float(np.linalg.norm(steps, axis=1).sum()) if len(pts) > 1 else 0.0,
    )
