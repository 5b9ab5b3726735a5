import type {
  Command,
  CommandResponse,
  CreateResponse,
  LogRecord,
  MetricsDoc,
  SessionView,
  SpinResponse,
} from "./types";

// Thin wrapper over the session service HTTP API.  All state lives on the
// server; this layer only shapes requests and surfaces rejections.

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
  }
}

export function isApiError(value: unknown): value is ApiError {
  return value instanceof ApiError;
}

// Just enough of the fetch Response surface for this client; lets tests
// substitute a recorded conversation for the network.
export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<ResponseLike>;

export interface ServiceClient {
  createSession(config: Record<string, unknown>): Promise<CreateResponse>;
  getSession(sessionId: string): Promise<SessionView>;
  postCommand(
    sessionId: string,
    teamId: string,
    command: Command,
    token: string,
    expectedVersion?: number,
  ): Promise<CommandResponse>;
  spin(
    sessionId: string,
    token: string,
    opts?: { expectedDay?: number; expectedVersion?: number },
  ): Promise<SpinResponse>;
  closeSprint(sessionId: string, token: string, expectedVersion?: number): Promise<CommandResponse>;
  metrics(sessionId: string): Promise<MetricsDoc>;
  exportLog(sessionId: string): Promise<LogRecord[]>;
  streamUrl(sessionId: string): string;
}

export interface ClientOptions {
  baseUrl?: string;
  fetchImpl?: FetchLike;
}

async function readError(response: ResponseLike): Promise<ApiError> {
  let code = `HTTP_${response.status}`;
  let message = "request failed";
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    if (body && typeof body.code === "string") code = body.code;
    if (body && typeof body.message === "string") message = body.message;
  } catch {
    // keep the generic code; the status is still meaningful
  }
  return new ApiError(code, message, response.status);
}

export function createClient(options: ClientOptions = {}): ServiceClient {
  const base = (options.baseUrl ?? "").replace(/\/$/, "");
  const fetchImpl: FetchLike =
    options.fetchImpl ?? ((url, init) => globalThis.fetch(url, init));

  // Mutating calls run one at a time so rejections land on the request
  // that earned them instead of on whichever response arrives first.
  let tail: Promise<unknown> = Promise.resolve();

  function enqueue<T>(work: () => Promise<T>): Promise<T> {
    const next = tail.then(work, work);
    tail = next.catch(() => undefined);
    return next;
  }

  async function request<T>(
    method: string,
    path: string,
    opts: { token?: string; body?: unknown } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (opts.token) headers["Authorization"] = `Bearer ${opts.token}`;
    let body: string | undefined;
    if (opts.body !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(opts.body);
    }
    const response = await fetchImpl(`${base}${path}`, { method, headers, body });
    if (!response.ok) throw await readError(response);
    return (await response.json()) as T;
  }

  return {
    createSession(config) {
      return enqueue(() =>
        request<CreateResponse>("POST", "/sessions", { body: { config } }),
      );
    },

    getSession(sessionId) {
      return request<SessionView>("GET", `/sessions/${sessionId}`);
    },

    postCommand(sessionId, teamId, command, token, expectedVersion) {
      const body: Record<string, unknown> = { command };
      if (expectedVersion !== undefined) body["expected_version"] = expectedVersion;
      return enqueue(() =>
        request<CommandResponse>(
          "POST",
          `/sessions/${sessionId}/teams/${teamId}/commands`,
          { token, body },
        ),
      );
    },

    spin(sessionId, token, opts = {}) {
      const body: Record<string, unknown> = {};
      if (opts.expectedDay !== undefined) body["expected_day"] = opts.expectedDay;
      if (opts.expectedVersion !== undefined) body["expected_version"] = opts.expectedVersion;
      return enqueue(() =>
        request<SpinResponse>("POST", `/sessions/${sessionId}/spin`, { token, body }),
      );
    },

    closeSprint(sessionId, token, expectedVersion) {
      const body: Record<string, unknown> = {};
      if (expectedVersion !== undefined) body["expected_version"] = expectedVersion;
      return enqueue(() =>
        request<CommandResponse>("POST", `/sessions/${sessionId}/close-sprint`, {
          token,
          body,
        }),
      );
    },

    metrics(sessionId) {
      return request<MetricsDoc>("GET", `/sessions/${sessionId}/metrics`);
    },

    async exportLog(sessionId) {
      const response = await fetchImpl(
        `${base}/sessions/${sessionId}/export?what=log&format=jsonl`,
        { method: "GET" },
      );
      if (!response.ok) throw await readError(response);
      const text = await response.text();
      return text
        .split("\n")
        .filter((line) => line.trim() !== "")
        .map((line) => JSON.parse(line) as LogRecord);
    },

    streamUrl(sessionId) {
      return `${base}/sessions/${sessionId}/stream`;
    },
  };
}
