import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiError, Client } from "../src/api.js";
import type { LogEvent } from "../src/types.js";

function jsonResponse(doc: any, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("Client", () => {
  it("creates sessions with a JSON config body", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ session_id: "s1" }));
    vi.stubGlobal("fetch", fetchMock);
    const client = new Client("http://svc");
    const snap = await client.createSession({ seed: 3 });
    expect(snap.session_id).toBe("s1");
    const [url, init] = fetchMock.mock.calls[0] as any;
    expect(url).toBe("http://svc/sessions");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body)).toEqual({ seed: 3 });
  });

  it("sends no body at all when the server default config should apply", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ session_id: "s2" }));
    vi.stubGlobal("fetch", fetchMock);
    await new Client().createSession();
    const [, init] = fetchMock.mock.calls[0] as any;
    expect(init.body).toBeNull();
  });

  it("builds preview query strings from the knobs", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ ratio_after_local: 1 }));
    vi.stubGlobal("fetch", fetchMock);
    await new Client().preview("abc", { L: 7.5, gamma: 0.25 });
    expect(fetchMock.mock.calls[0][0]).toBe("/sessions/abc/preview?L=7.5&gamma=0.25");
  });

  it("posts commit knobs as JSON", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ ratio_achieved: 0.9 }));
    vi.stubGlobal("fetch", fetchMock);
    await new Client().commit("abc", { L: 10, gamma: 1 });
    const [url, init] = fetchMock.mock.calls[0] as any;
    expect(url).toBe("/sessions/abc/commit");
    expect(JSON.parse(init.body)).toEqual({ L: 10, gamma: 1 });
  });

  it("raises ApiError with the service's JSON detail", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => jsonResponse({ error: "NoPendingFailure" }, 409)),
    );
    const err = await new Client()
      .preview("abc", { L: 1, gamma: 0 })
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toEqual({ error: "NoPendingFailure" });
  });

  it("streams and parses server-sent events", async () => {
    const encoder = new TextEncoder();
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        controller.enqueue(encoder.encode('data: {"event":"Placed","t":0,'));
        controller.enqueue(
          encoder.encode('"payload":{}}\n\ndata: {"event":"CoverageSample","t":1,"payload":{"value":0.5}}\n\n'),
        );
        controller.close();
      },
    });
    const fetchMock = vi.fn(async () => new Response(body, { status: 200 }));
    vi.stubGlobal("fetch", fetchMock);

    const events: LogEvent[] = [];
    let closed = false;
    new Client().streamEvents("abc", (ev) => events.push(ev), {
      replay: true,
      onClose: () => {
        closed = true;
      },
    });
    await vi.waitFor(() => {
      expect(closed).toBe(true);
    });
    expect(fetchMock.mock.calls[0][0]).toBe("/sessions/abc/events?replay=true");
    expect(events.map((e) => e.event)).toEqual(["Placed", "CoverageSample"]);
    expect(events[1].payload.value).toBe(0.5);
  });

  it("treats aborting a live stream as a clean close", async () => {
    const body = new ReadableStream<Uint8Array>({
      start() {
        // never produces data, the consumer aborts
      },
    });
    vi.stubGlobal("fetch", vi.fn(async (_url: any, init: any) => {
      return new Promise<Response>((resolve, reject) => {
        init.signal.addEventListener("abort", () =>
          reject(Object.assign(new Error("aborted"), { name: "AbortError" })),
        );
        setTimeout(() => resolve(new Response(body, { status: 200 })), 5);
      });
    }));
    let closed = false;
    const ctrl = new Client().streamEvents("abc", () => {}, {
      onClose: () => {
        closed = true;
      },
    });
    ctrl.abort();
    await vi.waitFor(() => {
      expect(closed).toBe(true);
    });
  });
});
