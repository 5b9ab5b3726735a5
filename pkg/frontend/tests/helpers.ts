import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import type { FetchLike } from "../src/client";
import type { EventSourceFactory, EventSourceLike } from "../src/sync";
import type { LogRecord, Phase, SessionView, StateDoc, TeamDoc } from "../src/types";

// Shared test scaffolding: the recorded service conversation, a fetch that
// replays it verbatim, a scriptable EventSource, and small view builders.

export interface Exchange {
  label: string;
  request: {
    method: string;
    path: string;
    token: string | null;
    body: unknown;
  };
  response: { status: number; body?: unknown; text?: string };
}

export interface Fixture {
  session_id: string;
  facilitator_token: string;
  team_token: string;
  exchanges: Exchange[];
  log_records: LogRecord[];
}

export function loadFixture(): Fixture {
  const here = dirname(fileURLToPath(import.meta.url));
  const raw = readFileSync(join(here, "fixtures", "session.json"), "utf8");
  return JSON.parse(raw) as Fixture;
}

function deepEqual(a: unknown, b: unknown): boolean {
  if (Object.is(a, b)) return true;
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((item, i) => deepEqual(item, b[i]));
  }
  if (a && b && typeof a === "object" && typeof b === "object") {
    const ka = Object.keys(a as object).sort();
    const kb = Object.keys(b as object).sort();
    return (
      deepEqual(ka, kb) &&
      ka.every((key) =>
        deepEqual((a as Record<string, unknown>)[key], (b as Record<string, unknown>)[key]),
      )
    );
  }
  return false;
}

export interface FixtureFetch {
  fetch: FetchLike;
  consumed(): number;
  remaining(): number;
}

// Replays the recorded conversation in strict order; any request that
// deviates from the recording fails the test immediately.
export function fixtureFetch(fixture: Fixture): FixtureFetch {
  let index = 0;
  const fetch: FetchLike = async (url, init = {}) => {
    const exchange = fixture.exchanges[index];
    const method = init.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (!exchange) {
      throw new Error(`recording exhausted; extra request ${method} ${path}`);
    }
    index += 1;
    const want = exchange.request;
    if (method !== want.method || path !== want.path) {
      throw new Error(
        `request ${index} was ${method} ${path}; recording has ` +
          `${want.method} ${want.path} (${exchange.label})`,
      );
    }
    const auth = init.headers?.["Authorization"];
    const wantAuth = want.token === null ? undefined : `Bearer ${want.token}`;
    if (auth !== wantAuth) {
      throw new Error(`request ${index} (${exchange.label}) sent wrong credentials`);
    }
    if (want.body !== null) {
      const sent: unknown = init.body === undefined ? undefined : JSON.parse(init.body);
      if (!deepEqual(sent, want.body)) {
        throw new Error(
          `request ${index} (${exchange.label}) body mismatch:\n` +
            `sent: ${JSON.stringify(sent)}\nrecorded: ${JSON.stringify(want.body)}`,
        );
      }
    }
    return {
      ok: exchange.response.status < 400,
      status: exchange.response.status,
      json: async () => structuredClone(exchange.response.body),
      text: async () =>
        exchange.response.text ?? JSON.stringify(exchange.response.body),
    };
  };
  return {
    fetch,
    consumed: () => index,
    remaining: () => fixture.exchanges.length - index,
  };
}

type Listener = (event: { data?: string }) => void;

export class FakeEventSource implements EventSourceLike {
  readonly url: string;
  closed = false;
  private listeners = new Map<string, Listener[]>();

  constructor(url: string) {
    this.url = url;
  }

  addEventListener(type: string, listener: Listener): void {
    const list = this.listeners.get(type) ?? [];
    list.push(listener);
    this.listeners.set(type, list);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, data?: string): void {
    for (const listener of this.listeners.get(type) ?? []) listener({ data });
  }
}

export function fakeSourceFactory(): {
  factory: EventSourceFactory;
  sources: FakeEventSource[];
} {
  const sources: FakeEventSource[] = [];
  const factory: EventSourceFactory = (url) => {
    const source = new FakeEventSource(url);
    sources.push(source);
    return source;
  };
  return { factory, sources };
}

// Let queued promises and short timers run.
export async function flush(rounds = 4): Promise<void> {
  for (let i = 0; i < rounds; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

export function makeTeam(overrides: Partial<TeamDoc> = {}): TeamDoc {
  return {
    id: "T1",
    members: [
      {
        index: 1,
        name: "Dana",
        role: "db",
        absent_from: null,
        absent_until: null,
        overtime_ticks: 0,
      },
      {
        index: 2,
        name: "Gene",
        role: null,
        absent_from: null,
        absent_until: null,
        overtime_ticks: 0,
      },
    ],
    stories: {
      S1: {
        id: "S1",
        title: "Checkout flow",
        kind: "user",
        points: 5,
        priority: "must",
        depends_on: [],
        status: "committed",
        origin: "planned",
      },
    },
    tasks: {
      "S1-T1": {
        id: "S1-T1",
        story: "S1",
        estimate_ticks: 12,
        remaining_ticks: 6,
        required_role: "db",
        status: "in-progress",
        origin: "planned",
      },
      "S1-T2": {
        id: "S1-T2",
        story: "S1",
        estimate_ticks: 8,
        remaining_ticks: 8,
        required_role: null,
        status: "todo",
        origin: "planned",
      },
      "S1-T3": {
        id: "S1-T3",
        story: "S1",
        estimate_ticks: 4,
        remaining_ticks: 0,
        required_role: null,
        status: "done",
        origin: "planned",
      },
    },
    assignments: { "1": ["S1-T1"] },
    charged_regular_ticks: 0,
    charged_overtime_ticks: 0,
    committed_value: 5,
    committed_ids: ["S1"],
    decision_log: [],
    burndown_actual: [[0, 24]],
    burndown_history: [],
    release_actual: [],
    idle_ticks: 0,
    event_added_ticks: 0,
    discarded_ticks: 0,
    ...overrides,
  };
}

export function makeView(
  version: number,
  overrides: Partial<StateDoc> = {},
): SessionView {
  const state: StateDoc = {
    config: { sprint_length_days: 10 },
    phase: "planning" as Phase,
    sprint_index: 0,
    sprint_day: 1,
    absolute_day: 0,
    rng: { seed: 1, counter: 0 },
    teams: { T1: makeTeam() },
    draw_history: [],
    ...overrides,
  };
  return { session_id: "S", version, state };
}
