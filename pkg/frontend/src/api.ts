import { createSSEParser } from "./core.js";
import type { CommitDoc, Knobs, LogEvent, PreviewDoc, StateSnapshot } from "./types.js";

async function asJson(res: Response): Promise<any> {
  if (!res.ok) {
    let detail: any = null;
    try {
      detail = await res.json();
    } catch {
      // non-JSON error body, keep the status line only
    }
    throw new ApiError(res.status, detail);
  }
  return res.json();
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: any,
  ) {
    super(`service error ${status}`);
  }
}

export class Client {
  constructor(private base: string = "") {}

  // No config body means the server's own default config; an empty object
  // would instead select the library defaults.
  async createSession(config?: object): Promise<{ session_id: string; lifecycle: string }> {
    const res = await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: config ? { "content-type": "application/json" } : {},
      body: config ? JSON.stringify(config) : null,
    });
    return asJson(res);
  }

  async state(sessionId: string): Promise<StateSnapshot> {
    return asJson(await fetch(`${this.base}/sessions/${sessionId}/state`));
  }

  async injectFailure(sessionId: string, body: { robot_id?: number; t?: number } = {}) {
    const res = await fetch(`${this.base}/sessions/${sessionId}/failure`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson(res);
  }

  async preview(sessionId: string, knobs: Knobs): Promise<PreviewDoc> {
    const qs = `L=${encodeURIComponent(knobs.L)}&gamma=${encodeURIComponent(knobs.gamma)}`;
    return asJson(await fetch(`${this.base}/sessions/${sessionId}/preview?${qs}`));
  }

  async commit(sessionId: string, knobs: Knobs): Promise<CommitDoc> {
    const res = await fetch(`${this.base}/sessions/${sessionId}/commit`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(knobs),
    });
    return asJson(res);
  }

  /**
   * Consume the session's server-sent event stream.
   *
   * With replay=true the service drains the log so far and closes, which is
   * how a reloaded page rebuilds its timeline. Returns an AbortController so
   * the caller can drop a live stream.
   */
  streamEvents(
    sessionId: string,
    onEvent: (ev: LogEvent) => void,
    opts: { replay?: boolean; onClose?: () => void } = {},
  ): AbortController {
    const ctrl = new AbortController();
    const url =
      `${this.base}/sessions/${sessionId}/events` + (opts.replay ? "?replay=true" : "");
    void (async () => {
      try {
        const res = await fetch(url, { signal: ctrl.signal });
        if (!res.ok || !res.body) throw new ApiError(res.status, null);
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        const parse = createSSEParser(onEvent);
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          parse(decoder.decode(value, { stream: true }));
        }
      } catch (err: any) {
        if (err?.name !== "AbortError") throw err;
      } finally {
        opts.onClose?.();
      }
    })();
    return ctrl;
  }
}
