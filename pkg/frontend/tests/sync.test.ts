import { describe, expect, it } from "vitest";
import { ApiError, createClient, type FetchLike, type ResponseLike } from "../src/client";
import { createLiveSession } from "../src/sync";
import { fakeSourceFactory, flush, makeView } from "./helpers";

// A hand-rolled single-session service whose version the tests bump at
// will; counts refetches so stream handling is observable.

function okJson(body: unknown): ResponseLike {
  return {
    ok: true,
    status: 200,
    json: async () => structuredClone(body),
    text: async () => JSON.stringify(body),
  };
}

function errJson(status: number, code: string, message: string): ResponseLike {
  return {
    ok: false,
    status,
    json: async () => ({ code, message }),
    text: async () => JSON.stringify({ code, message }),
  };
}

interface MiniService {
  fetch: FetchLike;
  gets(): number;
  bump(): number;
  version(): number;
  rejectNextCommand(code: string): void;
  holdNextCommand(): () => void;
  serveStaleOnce(version: number): void;
}

function miniService(): MiniService {
  let version = 1;
  let gets = 0;
  let rejectCode: string | null = null;
  let release: (() => void) | null = null;
  let staleVersion: number | null = null;

  const fetch: FetchLike = async (url, init = {}) => {
    const method = init.method ?? "GET";
    if (method === "GET" && url.endsWith("/sessions/S")) {
      gets += 1;
      const served = staleVersion ?? version;
      staleVersion = null;
      return okJson(makeView(served));
    }
    if (method === "POST" && url.includes("/teams/")) {
      if (release !== null) {
        await new Promise<void>((resolve) => {
          const prior = release;
          release = () => {
            prior?.();
            resolve();
          };
        });
        release = null;
      }
      if (rejectCode !== null) {
        const code = rejectCode;
        rejectCode = null;
        return errJson(409, code, "rejected by test service");
      }
      version += 1;
      const view = makeView(version);
      return okJson({ record: { seq: version }, ...view });
    }
    throw new Error(`mini service got unexpected ${method} ${url}`);
  };

  return {
    fetch,
    gets: () => gets,
    bump: () => (version += 1),
    version: () => version,
    rejectNextCommand: (code) => {
      rejectCode = code;
    },
    holdNextCommand: () => {
      let opened = false;
      release = () => {
        opened = true;
      };
      return () => {
        // Release whatever the service is holding; if the request has not
        // arrived yet the flag above lets it pass straight through.
        release?.();
        if (!opened) release = null;
      };
    },
    serveStaleOnce: (v) => {
      staleVersion = v;
    },
  };
}

function connectedSession(service: MiniService) {
  const client = createClient({ fetchImpl: service.fetch });
  const { factory, sources } = fakeSourceFactory();
  const session = createLiveSession({
    client,
    sessionId: "S",
    eventSourceFactory: factory,
    reconnectDelaysMs: [1, 1],
  });
  return { client, session, sources };
}

function updateEvent(version: number): string {
  return JSON.stringify({ absolute_day: 0, phase: "planning", version });
}

describe("live session sync", () => {
  it("refetches exactly once when the stream announces a newer version", async () => {
    const service = miniService();
    const { session, sources } = connectedSession(service);
    await session.connect();
    expect(service.gets()).toBe(1);
    expect(session.state.lastSeenVersion).toBe(1);

    const announced = service.bump();
    sources[0]?.emit("update", updateEvent(announced));
    await flush();
    expect(service.gets()).toBe(2);
    expect(session.state.lastSeenVersion).toBe(announced);
    session.close();
  });

  it("ignores duplicate stream events for an already-rendered version", async () => {
    const service = miniService();
    const { session, sources } = connectedSession(service);
    await session.connect();
    const announced = service.bump();
    sources[0]?.emit("update", updateEvent(announced));
    await flush();
    const settled = service.gets();

    sources[0]?.emit("update", updateEvent(announced));
    sources[0]?.emit("update", updateEvent(announced - 1));
    await flush();
    expect(service.gets()).toBe(settled);
    expect(session.state.lastSeenVersion).toBe(announced);
    session.close();
  });

  it("reconnects with backoff after a stream drop and refetches in full", async () => {
    const service = miniService();
    const { session, sources } = connectedSession(service);
    await session.connect();
    const before = service.gets();

    service.bump();
    sources[0]?.emit("error");
    expect(session.state.connection).toBe("retrying");
    await flush(8);
    expect(sources.length).toBe(2);
    expect(sources[0]?.closed).toBe(true);

    sources[1]?.emit("open");
    await flush();
    expect(session.state.connection).toBe("open");
    expect(service.gets()).toBe(before + 1);
    expect(session.state.lastSeenVersion).toBe(service.version());
    session.close();
  });

  it("marks a command pending until the server acknowledges it", async () => {
    const service = miniService();
    const { session } = connectedSession(service);
    await session.connect();

    const open = service.holdNextCommand();
    const submitted = session.submit(
      "T1",
      { op: "plan-commit", story_ids: ["S1"] },
      "token",
    );
    await flush(1);
    expect(session.state.pending.length).toBe(1);
    const entry = session.state.pending[0];
    expect(entry?.action.kind).toBe("command");

    open();
    const response = await submitted;
    expect(session.state.pending.length).toBe(0);
    expect(session.state.lastSeenVersion).toBe(response.version);
    expect(session.state.view?.version).toBe(response.version);
    session.close();
  });

  it("surfaces a rejection code inline and leaves the snapshot untouched", async () => {
    const service = miniService();
    const { session } = connectedSession(service);
    await session.connect();
    const shown = session.state.lastSeenVersion;

    service.rejectNextCommand("SPECIALIST_MISMATCH");
    await expect(
      session.submit("T1", { op: "assign-task", member: 1, task: "S1-T2", position: null }, "t"),
    ).rejects.toBeInstanceOf(ApiError);
    expect(session.state.lastError?.code).toBe("SPECIALIST_MISMATCH");
    expect(session.state.lastSeenVersion).toBe(shown);
    expect(session.state.pending.length).toBe(0);
    session.close();
  });

  it("never adopts a snapshot older than the one on screen", async () => {
    const service = miniService();
    const { session } = connectedSession(service);
    await session.connect();
    service.bump();
    await session.refresh();
    const current = session.state.lastSeenVersion;

    // A late response from the past must not roll the UI back.
    service.serveStaleOnce(current - 1);
    await session.refresh();
    expect(session.state.lastSeenVersion).toBe(current);
    expect(session.state.view?.version).toBe(current);
    session.close();
  });
});
