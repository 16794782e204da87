// Typed HTTP client for the session service. Every number shown in the UI
// originates from one of these payloads; the client never recomputes scores.

import { EdgeKind, GraphDoc } from "./model.js";

export interface EvaluationPayload {
  digest: string;
  feasible: boolean;
  fitness: number;
  coherence: number;
  consistency: number;
  cohesion: number;
  dimensions: Record<string, number>;
  violations: string[];
  patterns: Record<string, number>;
}

export interface SessionInfo {
  id: string;
  status: "running" | "paused";
  created: string;
  generation: number;
  dims: string[];
  granularity: number;
  constraints: ConstraintsDoc | null;
  coverage: number;
}

export interface ConstraintsDoc {
  heroes: number;
  enemies: number;
  quest_items: number;
}

export interface TargetAck {
  session: string;
  generation: number;
  target: GraphDoc;
  evaluation: EvaluationPayload;
}

export interface GridCell {
  cell: [number, number];
  fitness: number;
  digest: string;
}

export interface GridSnapshot {
  generation: number;
  coverage: number;
  grid: GridCell[];
  dims: [string, string];
}

export interface ElitePayload extends EvaluationPayload {
  cell: [number, number];
  graph: GraphDoc;
}

export interface CreateSessionBody {
  target?: GraphDoc;
  constraints?: ConstraintsDoc | null;
  dims?: { selected: string[]; granularity?: number };
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly kind: string,
    detail: string,
  ) {
    super(detail);
  }
}

type FetchLike = typeof fetch;

async function decode<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let kind = "HttpError";
    let detail = `${response.status}`;
    try {
      const body = (await response.json()) as { error?: string; detail?: string };
      kind = body.error ?? kind;
      detail = body.detail ?? detail;
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(response.status, kind, detail);
  }
  return (await response.json()) as T;
}

export class SessionApi {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.url(path), init);
    return decode<T>(response);
  }

  createSession(body: CreateSessionBody = {}): Promise<SessionInfo> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  describe(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  getTarget(sessionId: string): Promise<TargetAck> {
    return this.request(`/sessions/${sessionId}/target`);
  }

  putTarget(sessionId: string, graph: GraphDoc): Promise<TargetAck> {
    return this.request(`/sessions/${sessionId}/target`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(graph),
    });
  }

  getGrid(sessionId: string, projection?: [string, string]): Promise<GridSnapshot> {
    const query = projection ? `?x=${projection[0]}&y=${projection[1]}` : "";
    return this.request(`/sessions/${sessionId}/grid${query}`);
  }

  getElite(sessionId: string, i: number, j: number): Promise<ElitePayload> {
    return this.request(`/sessions/${sessionId}/cells/${i}/${j}`);
  }

  adoptElite(sessionId: string, i: number, j: number): Promise<TargetAck> {
    return this.request(`/sessions/${sessionId}/cells/${i}/${j}/adopt`, {
      method: "POST",
    });
  }

  putDimensions(
    sessionId: string,
    selected: string[],
    granularity?: number,
  ): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}/dimensions`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ selected, ...(granularity ? { granularity } : {}) }),
    });
  }

  putConstraints(
    sessionId: string,
    constraints: ConstraintsDoc | null,
  ): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}/constraints`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(constraints),
    });
  }

  pause(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}/pause`, { method: "POST" });
  }

  resume(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}/resume`, { method: "POST" });
  }

  // Server-sent snapshot stream. Resolves once the stream closes; cancel via
  // the AbortSignal. Keep-alive comments are ignored.
  async streamGrid(
    sessionId: string,
    onSnapshot: (snapshot: GridSnapshot) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    const response = await this.fetchImpl(this.url(`/sessions/${sessionId}/stream`), {
      ...(signal ? { signal } : {}),
      headers: { accept: "text/event-stream" },
    });
    if (!response.ok || !response.body) {
      throw new ApiError(response.status, "StreamError", "stream unavailable");
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        for (;;) {
          const cut = buffer.indexOf("\n\n");
          if (cut < 0) break;
          const event = buffer.slice(0, cut);
          buffer = buffer.slice(cut + 2);
          for (const line of event.split("\n")) {
            if (line.startsWith("data: ")) {
              onSnapshot(JSON.parse(line.slice(6)) as GridSnapshot);
            }
          }
        }
      }
    } finally {
      reader.releaseLock();
    }
  }
}

export type { EdgeKind };
