/** Wire types for the ground-control service (HTTP + WebSocket, all JSON).
 *
 * Every message carries a `v` protocol version field. The UI is a pure
 * client: every number it displays originates from one of these payloads.
 */

export const PROTOCOL_VERSION = 1;

export type Quartile = "TL" | "TR" | "BL" | "BR";

export const QUARTILES: readonly Quartile[] = ["TL", "TR", "BL", "BR"];

/** One control tick as broadcast on the session stream.
 * true_* fields are present only when the session was created with
 * config.debug = true.
 */
export interface TickFrame {
  v: number;
  type: "tick";
  tick: number;
  t: number;
  command: string | null;
  speed: number | null;
  confidence: number | null;
  quartile: Quartile | null;
  cell: [number, number] | null;
  segment: number | null;
  /** "" on ordinary ticks; "accepted" / "rejected: ..." on command ticks. */
  event: string;
  airborne: boolean;
  setpoint_p: [number, number, number];
  setpoint_v: [number, number, number];
  setpoint_yaw: number;
  est_p: [number, number, number];
  est_v: [number, number, number];
  est_yaw: number;
  true_p?: [number, number, number];
  true_v?: [number, number, number];
  true_yaw?: number;
}

/** Dropped-frame notice: ticks from..to (inclusive) were never delivered. */
export interface GapNotice {
  v: number;
  type: "gap";
  from: number;
  to: number;
}

export type StreamMessage = TickFrame | GapNotice;

export function isTickFrame(msg: StreamMessage): msg is TickFrame {
  return msg.type === "tick";
}

export function isGapNotice(msg: StreamMessage): msg is GapNotice {
  return msg.type === "gap";
}

export interface SessionInfo {
  v: number;
  session_id: string;
  seed: number;
  mode: "realtime" | "accelerated";
  threshold: number;
}

export interface SessionStatus {
  v: number;
  session_id: string;
  mode: string;
  tick: number;
  idle: boolean;
  queue_length: number;
  airborne: boolean;
  est_p: [number, number, number];
  est_yaw: number;
  segments: number;
}

export interface GestureAccepted {
  v: number;
  status: "accepted";
  class_id: number;
  confidence: number;
  quartile: Quartile;
  queue_position: number;
  command: string;
  speed: number;
  cell: [number, number];
  frame_shape?: [number, number];
}

export interface GestureRejected {
  v: number;
  status: "rejected";
  class_id: number;
  confidence: number;
  quartile: Quartile;
  reason: string;
  frame_shape?: [number, number];
}

export type GestureAck = GestureAccepted | GestureRejected;

export interface MissionRequest {
  kind: "rectangle" | "l_shape";
  width: number;
  height: number;
  altitude: number;
  seed?: number;
}

export interface MissionReport {
  v: number;
  log_id: string;
  rows: number;
  seed: number;
  max_abs_error: [number, number, number];
  rmse: [number, number, number];
  path_length: number;
}

/** Default glyph class to command mapping mirrored from the service docs;
 * sessions created with a custom command_table should pass their own.
 */
export const DEFAULT_COMMANDS: ReadonlyArray<{ classId: number; label: string }> = [
  { classId: 1, label: "takeoff" },
  { classId: 2, label: "forward" },
  { classId: 3, label: "backward" },
  { classId: 4, label: "left" },
  { classId: 5, label: "right" },
  { classId: 6, label: "up" },
  { classId: 7, label: "down" },
  { classId: 8, label: "yaw_left" },
  { classId: 9, label: "yaw_right" },
  { classId: 0, label: "land" },
];
