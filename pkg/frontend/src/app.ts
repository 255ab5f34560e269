/** Operator console assembly: session header, gesture palette, live
 * trajectory view, action grid, and an event log, wired to one session
 * stream. All state shown comes from the service; the client computes
 * nothing about the flight itself.
 */

import { GcsClient, GcsError } from "./client.js";
import type { SessionOptions } from "./client.js";
import { ActionGridView } from "./grid.js";
import { Palette } from "./palette.js";
import { fileToPgm } from "./pgm.js";
import type { GestureAck, SessionInfo } from "./protocol.js";
import { SessionStore } from "./state.js";
import { StreamClient } from "./stream.js";
import type { StreamState, WebSocketCtor } from "./stream.js";
import { replayLog } from "./stream.js";
import { TrajectoryView } from "./trajectory.js";

// display copy of the service's default 4x4 grid speeds
export const DEFAULT_GRID_SPEEDS: readonly number[] = [
  2, 4, 4, 6, 6, 8, 8, 10, 2, 4, 4, 6, 6, 8, 8, 10,
];

export interface AppOptions {
  baseUrl: string;
  webSocketImpl?: WebSocketCtor;
  fetchImpl?: typeof fetch;
  reconnectDelayMs?: number;
}

export class OperatorApp {
  readonly store = new SessionStore();
  readonly client: GcsClient;
  palette!: Palette;
  trajectory!: TrajectoryView;
  grid!: ActionGridView;
  session!: SessionInfo;
  stream!: StreamClient;

  private header!: HTMLElement;
  private notesEl!: HTMLElement;
  private queueEl!: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    private readonly opts: AppOptions,
  ) {
    this.client = new GcsClient(opts.baseUrl, { fetchImpl: opts.fetchImpl });
  }

  async start(sessionOpts: SessionOptions = {}): Promise<void> {
    this.session = await this.client.createSession(sessionOpts);
    const doc = this.root.ownerDocument;
    this.root.classList.add("operator-app");

    this.header = doc.createElement("div");
    this.header.className = "session-header";
    this.header.textContent =
      `session ${this.session.session_id} (${this.session.mode}, ` +
      `threshold ${this.session.threshold})`;
    this.root.appendChild(this.header);

    const paletteEl = doc.createElement("div");
    this.root.appendChild(paletteEl);
    this.palette = new Palette(paletteEl, {
      onCommand: (classId, confidence) => {
        void this.submit(classId, confidence);
      },
      onFile: (file) => {
        void this.submitImage(file);
      },
    });
    this.palette.setConnected(false);

    const trajEl = doc.createElement("div");
    this.root.appendChild(trajEl);
    this.trajectory = new TrajectoryView(trajEl);

    const gridCfg = (sessionOpts.config as { grid?: { n?: number; speeds?: number[] } })?.grid;
    const gridEl = doc.createElement("div");
    this.root.appendChild(gridEl);
    this.grid = new ActionGridView(gridEl, {
      n: gridCfg?.n ?? 4,
      speeds: gridCfg?.speeds ?? (gridCfg?.n ? undefined : DEFAULT_GRID_SPEEDS),
    });

    this.queueEl = doc.createElement("div");
    this.queueEl.className = "queue-view";
    this.root.appendChild(this.queueEl);

    this.notesEl = doc.createElement("ul");
    this.notesEl.className = "notes";
    this.root.appendChild(this.notesEl);

    this.stream = new StreamClient((lastTick) => this.client.streamUrl(this.session.session_id, lastTick), {
      webSocketImpl: this.opts.webSocketImpl,
      reconnectDelayMs: this.opts.reconnectDelayMs,
      onFrame: (frame) => {
        this.store.appendFrame(frame);
        this.trajectory.render(this.store);
        this.grid.render(frame);
        this.renderLists();
      },
      onGap: (gap) => {
        this.store.addGap(gap);
        this.trajectory.render(this.store);
      },
      onState: (state) => this.setStreamState(state),
    });
    this.stream.start();
    this.trajectory.render(this.store);
  }

  private setStreamState(state: StreamState): void {
    this.header.dataset.stream = state;
    this.palette.setConnected(state === "open");
  }

  private renderLists(): void {
    this.queueEl.textContent = this.store.queueView.length
      ? `queued: ${this.store.queueView.join(", ")}`
      : "queue empty";
    // rebuild; the notes list is small and append-only
    this.notesEl.textContent = "";
    for (const note of this.store.notes) {
      const li = this.notesEl.ownerDocument.createElement("li");
      li.className = note.kind;
      li.textContent = note.text;
      this.notesEl.appendChild(li);
    }
  }

  async submit(classId: number, confidence?: number): Promise<GestureAck | null> {
    const conf = confidence ?? this.palette.confidence;
    try {
      const ack = await this.client.submitGesture(this.session.session_id, {
        class_id: classId,
        confidence: conf,
      });
      this.palette.showAck(ack);
      this.store.noteAck(ack);
      this.renderLists();
      return ack;
    } catch (err) {
      this.palette.showError(err instanceof GcsError ? err.detail : String(err));
      return null;
    }
  }

  async submitImage(file: Blob): Promise<GestureAck | null> {
    try {
      const pgm = await fileToPgm(file);
      const ack = await this.client.submitFrame(this.session.session_id, pgm);
      this.palette.showAck(ack);
      this.store.noteAck(ack);
      this.renderLists();
      return ack;
    } catch (err) {
      this.palette.showError(err instanceof GcsError ? err.detail : String(err));
      return null;
    }
  }

  /** Fly a mission on the session's config and overlay its reference path
   * (the replayed setpoints) on the XY plot.
   */
  async flyMission(mission: Parameters<GcsClient["flyMission"]>[1]): Promise<void> {
    const report = await this.client.flyMission(this.session.session_id, mission);
    const reference: Array<[number, number]> = [];
    await replayLog(
      this.client.replayUrl(report.log_id),
      (frame) => reference.push([frame.setpoint_p[0], frame.setpoint_p[1]]),
      this.opts.webSocketImpl,
    );
    this.trajectory.setReference(reference);
    this.trajectory.render(this.store);
    this.store.notes.push({
      kind: "event",
      text:
        `mission ${mission.kind}: ${report.rows} ticks, ` +
        `max err [${report.max_abs_error.map((e) => e.toFixed(3)).join(", ")}] m`,
    });
    this.renderLists();
  }

  async dispose(deleteSession = false): Promise<void> {
    this.stream.stop();
    if (deleteSession) await this.client.deleteSession(this.session.session_id);
  }
}

export async function mountApp(
  root: HTMLElement,
  opts: AppOptions,
  sessionOpts: SessionOptions = {},
): Promise<OperatorApp> {
  const app = new OperatorApp(root, opts);
  await app.start(sessionOpts);
  return app;
}
