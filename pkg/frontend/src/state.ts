/** Client-side session state: an append-only record of what the stream and
 * the gesture acks said. No physics happens here; the store only arranges
 * received numbers for the views.
 */

import type { GapNotice, GestureAck, TickFrame } from "./protocol.js";

export interface TracePoint {
  tick: number;
  t: number;
  p: [number, number, number];
  v: [number, number, number];
  yaw: number;
}

export interface Note {
  kind: "accepted" | "rejected" | "event";
  text: string;
}

/** One flown segment as observed on the stream: which command, and the
 * tick/time range its frames covered.
 */
export interface SegmentSpan {
  segment: number;
  command: string;
  firstTick: number;
  lastTick: number;
  t0: number;
  t1: number;
}

function toPoint(
  frame: TickFrame,
  p: [number, number, number],
  v: [number, number, number],
  yaw: number,
): TracePoint {
  return { tick: frame.tick, t: frame.t, p: [...p], v: [...v], yaw };
}

export class SessionStore {
  lastFrame: TickFrame | null = null;
  readonly gaps: GapNotice[] = [];
  readonly notes: Note[] = [];
  readonly segments: SegmentSpan[] = [];
  /** Pending commands as reported by acks minus started segments. */
  queueView: string[] = [];

  private readonly est: TracePoint[] = [];
  private readonly tru: TracePoint[] = [];
  // indices where a new polyline must start; never joined across a gap
  private readonly estBreaks: number[] = [];
  private readonly truBreaks: number[] = [];

  get tick(): number {
    return this.lastFrame?.tick ?? 0;
  }

  get estTrace(): readonly TracePoint[] {
    return this.est;
  }

  get trueTrace(): readonly TracePoint[] {
    return this.tru;
  }

  /** True only if frames carried true_* fields (session debug mode). */
  get hasTrueTrace(): boolean {
    return this.tru.length > 0;
  }

  appendFrame(frame: TickFrame): void {
    if (this.lastFrame && frame.tick <= this.lastFrame.tick) {
      return; // the stream dedupes; this is a second line of defense
    }
    this.lastFrame = frame;
    if (frame.segment !== null && frame.command !== null) {
      const span = this.segments.at(-1);
      if (span && span.segment === frame.segment) {
        span.lastTick = frame.tick;
        span.t1 = frame.t;
      } else {
        this.segments.push({
          segment: frame.segment,
          command: frame.command,
          firstTick: frame.tick,
          lastTick: frame.tick,
          t0: frame.t,
          t1: frame.t,
        });
      }
    }
    this.est.push(toPoint(frame, frame.est_p, frame.est_v, frame.est_yaw));
    if (frame.true_p && frame.true_v && frame.true_yaw !== undefined) {
      this.tru.push(toPoint(frame, frame.true_p, frame.true_v, frame.true_yaw));
    }
    // event is "" on ordinary ticks, "accepted" when a segment starts,
    // and "rejected: ..." when a queued gesture could not fly
    if (frame.event) {
      this.notes.push({ kind: "event", text: `tick ${frame.tick}: ${frame.event}` });
      if (frame.event === "accepted" || frame.event.startsWith("rejected")) {
        this.queueView.shift();
      }
    }
  }

  addGap(gap: GapNotice): void {
    this.gaps.push(gap);
    this.estBreaks.push(this.est.length);
    this.truBreaks.push(this.tru.length);
  }

  noteAck(ack: GestureAck): void {
    if (ack.status === "accepted") {
      this.notes.push({
        kind: "accepted",
        text: `${ack.command} speed ${ack.speed} cell (${ack.cell[0]},${ack.cell[1]}) queue #${ack.queue_position}`,
      });
      this.queueView.push(ack.command);
    } else {
      this.notes.push({ kind: "rejected", text: ack.reason });
    }
  }

  /** Polylines split at gap boundaries, so nothing interpolates across a
   * hole in the stream.
   */
  traceSegments(which: "est" | "true"): TracePoint[][] {
    const points = which === "est" ? this.est : this.tru;
    const breaks = which === "est" ? this.estBreaks : this.truBreaks;
    const out: TracePoint[][] = [];
    let start = 0;
    for (const b of [...breaks, points.length]) {
      if (b > start) out.push(points.slice(start, b));
      start = Math.max(start, b);
    }
    return out;
  }
}
