/** Thin fetch wrapper over the ground-control HTTP API. */

import type {
  GestureAck,
  MissionReport,
  MissionRequest,
  Quartile,
  SessionInfo,
  SessionStatus,
} from "./protocol.js";

export class GcsError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "GcsError";
  }
}

export interface SessionOptions {
  mode?: "realtime" | "accelerated";
  seed?: number;
  config?: Record<string, unknown>;
}

type FetchLike = typeof fetch;

async function parseError(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new GcsError(res.status, detail);
}

export class GcsClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    opts: { fetchImpl?: FetchLike } = {},
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    // bind so injected and global fetch behave the same
    this.fetchImpl = opts.fetchImpl ?? ((...args) => fetch(...args));
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  createSession(opts: SessionOptions = {}): Promise<SessionInfo> {
    return this.json("/v1/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(opts),
    });
  }

  sessionStatus(sessionId: string): Promise<SessionStatus> {
    return this.json(`/v1/sessions/${sessionId}`);
  }

  deleteSession(sessionId: string): Promise<{ ticks: number; log_id: string | null }> {
    return this.json(`/v1/sessions/${sessionId}`, { method: "DELETE" });
  }

  submitGesture(
    sessionId: string,
    gesture: { class_id: number; confidence: number; quartile?: Quartile },
  ): Promise<GestureAck> {
    return this.json(`/v1/sessions/${sessionId}/gestures`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(gesture),
    });
  }

  /** Upload a raw binary PGM command frame; the server classifies it. */
  submitFrame(sessionId: string, pgm: Uint8Array): Promise<GestureAck> {
    return this.json(`/v1/sessions/${sessionId}/gestures`, {
      method: "POST",
      headers: { "content-type": "application/octet-stream" },
      body: pgm as unknown as BodyInit,
    });
  }

  flyMission(sessionId: string, mission: MissionRequest): Promise<MissionReport> {
    return this.json(`/v1/sessions/${sessionId}/mission`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(mission),
    });
  }

  async fetchLog(logId: string): Promise<string> {
    const res = await this.fetchImpl(`${this.baseUrl}/v1/logs/${logId}`);
    if (!res.ok) await parseError(res);
    return res.text();
  }

  /** ws:// URL for the live session stream, with resume point if given. */
  streamUrl(sessionId: string, lastTick = 0): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    const query = lastTick > 0 ? `?last_tick=${lastTick}` : "";
    return `${ws}/v1/sessions/${sessionId}/stream${query}`;
  }

  replayUrl(logId: string): string {
    const ws = this.baseUrl.replace(/^http/, "ws");
    return `${ws}/v1/logs/${logId}/replay`;
  }
}
