import { isApiError, type ServiceClient } from "./client";
import type {
  Command,
  CommandResponse,
  ErrorBody,
  SessionView,
  SpinResponse,
  StreamUpdate,
} from "./types";

// Keeps a local mirror of one server session.  The mirror is always a
// single server snapshot (never a local blend); actions render as pending
// only until the server answers, and the answer always wins.

export type PendingAction =
  | { kind: "command"; teamId: string; command: Command }
  | { kind: "spin"; expectedDay: number }
  | { kind: "close-sprint" };

export interface PendingEntry {
  key: number;
  action: PendingAction;
}

export type ConnectionState = "idle" | "connecting" | "open" | "retrying";

export interface ClientState {
  view: SessionView | null;
  lastSeenVersion: number;
  pending: PendingEntry[];
  connection: ConnectionState;
  lastError: ErrorBody | null;
}

// The slice of EventSource the store touches; tests drive a scripted one.
export interface EventSourceLike {
  addEventListener(type: string, listener: (event: { data?: string }) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface LiveSessionOptions {
  client: ServiceClient;
  sessionId: string;
  eventSourceFactory?: EventSourceFactory;
  reconnectDelaysMs?: number[];
  onChange?: (state: ClientState) => void;
}

export interface LiveSession {
  readonly state: ClientState;
  connect(): Promise<void>;
  refresh(): Promise<void>;
  submit(teamId: string, command: Command, token: string): Promise<CommandResponse>;
  spin(token: string, expectedDay: number): Promise<SpinResponse>;
  closeSprint(token: string): Promise<CommandResponse>;
  close(): void;
}

const DEFAULT_RECONNECT_MS = [500, 1000, 2000, 5000];

function defaultFactory(url: string): EventSourceLike {
  return new EventSource(url);
}

export function createLiveSession(options: LiveSessionOptions): LiveSession {
  const client = options.client;
  const sessionId = options.sessionId;
  const makeSource = options.eventSourceFactory ?? defaultFactory;
  const delays = options.reconnectDelaysMs ?? DEFAULT_RECONNECT_MS;

  const state: ClientState = {
    view: null,
    lastSeenVersion: -1,
    pending: [],
    connection: "idle",
    lastError: null,
  };

  let source: EventSourceLike | null = null;
  let retryTimer: ReturnType<typeof setTimeout> | null = null;
  let attempts = 0;
  let closed = false;
  let nextKey = 1;

  function notify(): void {
    options.onChange?.(state);
  }

  // Server wins: adopt a snapshot only if it is newer than the one shown.
  function adopt(view: SessionView): boolean {
    if (view.version <= state.lastSeenVersion) return false;
    state.view = view;
    state.lastSeenVersion = view.version;
    return true;
  }

  async function refresh(): Promise<void> {
    const view = await client.getSession(sessionId);
    if (adopt(view)) notify();
  }

  function handleUpdate(raw: string | undefined): void {
    if (closed || !raw) return;
    let update: StreamUpdate;
    try {
      update = JSON.parse(raw) as StreamUpdate;
    } catch {
      return;
    }
    // A repeat of the version already on screen carries nothing new.
    if (update.version <= state.lastSeenVersion) return;
    void refresh().catch(() => undefined);
  }

  function attach(): void {
    if (closed) return;
    source = makeSource(client.streamUrl(sessionId));
    source.addEventListener("open", () => {
      if (closed) return;
      attempts = 0;
      state.connection = "open";
      notify();
      // A fresh stream says nothing about what was missed while away.
      void refresh().catch(() => undefined);
    });
    source.addEventListener("update", (event) => handleUpdate(event.data));
    source.addEventListener("error", () => scheduleReconnect());
  }

  function scheduleReconnect(): void {
    if (closed || retryTimer !== null) return;
    source?.close();
    source = null;
    state.connection = "retrying";
    notify();
    const delay = delays[Math.min(attempts, delays.length - 1)] ?? 1000;
    attempts += 1;
    retryTimer = setTimeout(() => {
      retryTimer = null;
      attach();
    }, delay);
  }

  function dropPending(key: number): void {
    state.pending = state.pending.filter((entry) => entry.key !== key);
  }

  async function tracked<T extends CommandResponse>(
    action: PendingAction,
    work: () => Promise<T>,
  ): Promise<T> {
    const entry: PendingEntry = { key: nextKey++, action };
    state.pending = [...state.pending, entry];
    state.lastError = null;
    notify();
    try {
      const response = await work();
      dropPending(entry.key);
      adopt(response);
      notify();
      return response;
    } catch (error) {
      dropPending(entry.key);
      if (isApiError(error)) {
        state.lastError = { code: error.code, message: error.message };
      } else {
        state.lastError = { code: "NETWORK_ERROR", message: String(error) };
      }
      notify();
      throw error;
    }
  }

  return {
    get state() {
      return state;
    },

    async connect() {
      state.connection = "connecting";
      notify();
      attach();
      await refresh();
    },

    refresh,

    submit(teamId, command, token) {
      return tracked({ kind: "command", teamId, command }, () =>
        client.postCommand(sessionId, teamId, command, token),
      );
    },

    spin(token, expectedDay) {
      return tracked({ kind: "spin", expectedDay }, () =>
        client.spin(sessionId, token, { expectedDay }),
      );
    },

    closeSprint(token) {
      return tracked({ kind: "close-sprint" }, () =>
        client.closeSprint(sessionId, token),
      );
    },

    close() {
      closed = true;
      if (retryTimer !== null) clearTimeout(retryTimer);
      retryTimer = null;
      source?.close();
      source = null;
      state.connection = "idle";
    },
  };
}
