/** Session stream client: WebSocket with reconnect, resume, and dedupe.
 *
 * On reconnect the client asks the server to resume after the last tick it
 * saw (?last_tick=N) and additionally drops any frame with tick <= N, so a
 * trace built from onFrame never contains duplicated points.
 */

import { isGapNotice, isTickFrame } from "./protocol.js";
import type { GapNotice, StreamMessage, TickFrame } from "./protocol.js";

/** The subset of the browser WebSocket API the client uses; ws's
 * WebSocket class satisfies it too, which is what the tests inject.
 */
export interface WebSocketLike {
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(code?: number): void;
}

export type WebSocketCtor = new (url: string) => WebSocketLike;

export type StreamState = "connecting" | "open" | "reconnecting" | "stopped";

export interface StreamOptions {
  webSocketImpl?: WebSocketCtor;
  /** Delay before a reconnect attempt, ms. */
  reconnectDelayMs?: number;
  onFrame?: (frame: TickFrame) => void;
  onGap?: (gap: GapNotice) => void;
  onState?: (state: StreamState) => void;
}

export class StreamClient {
  lastTick = 0;
  state: StreamState = "stopped";

  private ws: WebSocketLike | null = null;
  private readonly wsCtor: WebSocketCtor;
  private readonly delayMs: number;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly urlFor: (lastTick: number) => string,
    private readonly opts: StreamOptions = {},
  ) {
    const ctor = opts.webSocketImpl ?? (globalThis as { WebSocket?: WebSocketCtor }).WebSocket;
    if (!ctor) throw new Error("no WebSocket implementation available");
    this.wsCtor = ctor;
    this.delayMs = opts.reconnectDelayMs ?? 1000;
  }

  start(): void {
    if (this.state !== "stopped") return;
    this.connect("connecting");
  }

  stop(): void {
    this.setState("stopped");
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    const ws = this.ws;
    this.ws = null;
    if (ws) {
      ws.onclose = null;
      ws.close(1000);
    }
  }

  private setState(state: StreamState): void {
    if (this.state === state) return;
    this.state = state;
    this.opts.onState?.(state);
  }

  private connect(phase: "connecting" | "reconnecting"): void {
    this.setState(phase);
    const ws = new this.wsCtor(this.urlFor(this.lastTick));
    this.ws = ws;
    ws.onopen = () => this.setState("open");
    ws.onmessage = (ev) => this.handle(ev.data);
    ws.onerror = () => {
      // the close handler owns reconnection
    };
    ws.onclose = () => {
      if (this.state === "stopped") return;
      this.ws = null;
      this.setState("reconnecting");
      this.reconnectTimer = setTimeout(() => {
        this.reconnectTimer = null;
        if (this.state !== "stopped") this.connect("reconnecting");
      }, this.delayMs);
    };
  }

  private handle(data: unknown): void {
    const text = typeof data === "string" ? data : String(data);
    let msg: StreamMessage;
    try {
      msg = JSON.parse(text) as StreamMessage;
    } catch {
      return; // not ours; ignore
    }
    if (isTickFrame(msg)) {
      if (msg.tick <= this.lastTick) return; // replayed duplicate
      this.lastTick = msg.tick;
      this.opts.onFrame?.(msg);
    } else if (isGapNotice(msg)) {
      if (msg.to <= this.lastTick) return;
      const clipped = msg.from <= this.lastTick ? { ...msg, from: this.lastTick + 1 } : msg;
      this.lastTick = clipped.to;
      this.opts.onGap?.(clipped);
    }
  }
}

/** Stream every frame of a persisted log; resolves when the server closes. */
export function replayLog(
  url: string,
  onFrame: (frame: TickFrame) => void,
  webSocketImpl?: WebSocketCtor,
): Promise<number> {
  const ctor = webSocketImpl ?? (globalThis as { WebSocket?: WebSocketCtor }).WebSocket;
  if (!ctor) throw new Error("no WebSocket implementation available");
  return new Promise((resolve, reject) => {
    const ws = new ctor(url);
    let count = 0;
    ws.onmessage = (ev) => {
      const text = typeof ev.data === "string" ? ev.data : String(ev.data);
      const msg = JSON.parse(text) as StreamMessage;
      if (isTickFrame(msg)) {
        count += 1;
        onFrame(msg);
      }
    };
    ws.onclose = () => resolve(count);
    ws.onerror = () => reject(new Error(`replay failed: ${url}`));
  });
}
