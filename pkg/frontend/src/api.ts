/**
 * Thin fetch client for the story server. Outgoing events pass through
 * checkEvent first; a failed check never reaches the wire and is tallied
 * in `violations`.
 */
import {
  checkEvent,
  errorResponseSchema,
  eventResponseSchema,
  parseView,
  sessionCreatedSchema,
  storyListSchema,
  viewResponseSchema,
  WireShapeError,
} from "./wire.js";
import type { Note, StoryInfo, View } from "./wire.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** The request never completed; whatever was being sent is safe to re-send. */
export class NetworkFault extends Error {}

/** The server answered with an error document. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string
  ) {
    super(message);
  }
}

/** An event failed the local schema gate and was not sent. */
export class LocalSchemaError extends Error {}

export type EventResult = {
  view: View;
  notes: Note[];
  /** True when the server refused because the session is already finished. */
  conflict: boolean;
};

function errorFrom(status: number, raw: unknown): ApiError {
  const doc = errorResponseSchema.safeParse(raw);
  if (doc.success) {
    return new ApiError(status, doc.data.error.code, doc.data.error.message);
  }
  return new ApiError(status, "unknown", `server answered ${status}`);
}

export class ApiClient {
  /** Count of events the schema gate refused to send. */
  violations = 0;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    try {
      return await this.fetchFn(this.base + path, init);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new NetworkFault(`cannot reach the story server: ${reason}`);
    }
  }

  /** Fetch a JSON endpoint; non-2xx becomes an ApiError built from the body. */
  private async requestJson(path: string, init?: RequestInit): Promise<unknown> {
    const res = await this.request(path, init);
    const raw: unknown = await res.json().catch(() => null);
    if (!res.ok) throw errorFrom(res.status, raw);
    return raw;
  }

  async listStories(): Promise<StoryInfo[]> {
    return storyListSchema.parse(await this.requestJson("/api/stories"));
  }

  async createSession(storyId: string, seed?: number): Promise<{ sessionId: string; view: View }> {
    const raw = await this.requestJson(`/api/stories/${encodeURIComponent(storyId)}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: seed === undefined ? "{}" : JSON.stringify({ seed }),
    });
    const doc = sessionCreatedSchema.parse(raw);
    return { sessionId: doc.session_id, view: parseView(doc.view) };
  }

  async restoreSession(storyId: string, saveText: string): Promise<{ sessionId: string; view: View }> {
    const raw = await this.requestJson(`/api/stories/${encodeURIComponent(storyId)}/sessions:restore`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: saveText,
    });
    const doc = sessionCreatedSchema.parse(raw);
    return { sessionId: doc.session_id, view: parseView(doc.view) };
  }

  async getView(sessionId: string): Promise<View> {
    const raw = await this.requestJson(`/api/sessions/${encodeURIComponent(sessionId)}`);
    return parseView(viewResponseSchema.parse(raw).view);
  }

  async postEvent(sessionId: string, event: unknown): Promise<EventResult> {
    let body: string;
    try {
      body = JSON.stringify(checkEvent(event));
    } catch (err) {
      if (err instanceof WireShapeError) {
        this.violations += 1;
        throw new LocalSchemaError(err.message);
      }
      throw err;
    }
    const res = await this.request(`/api/sessions/${encodeURIComponent(sessionId)}/events`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body,
    });
    const raw: unknown = await res.json().catch(() => null);
    if (res.ok) {
      const doc = eventResponseSchema.parse(raw);
      return { view: parseView(doc.view), notes: doc.notes, conflict: false };
    }
    if (res.status === 409) {
      const doc = errorResponseSchema.safeParse(raw);
      if (doc.success && doc.data.view !== undefined) {
        return {
          view: parseView(doc.data.view),
          notes: [{ code: doc.data.error.code, message: doc.data.error.message }],
          conflict: true,
        };
      }
    }
    throw errorFrom(res.status, raw);
  }

  async fetchSave(sessionId: string): Promise<string> {
    const res = await this.request(`/api/sessions/${encodeURIComponent(sessionId)}/save`);
    if (!res.ok) {
      throw errorFrom(res.status, await res.json().catch(() => null));
    }
    return res.text();
  }
}
