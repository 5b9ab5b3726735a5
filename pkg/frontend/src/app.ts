import { renderBoard } from "./board";
import { renderBurndown } from "./burndown";
import { createClient, type ServiceClient } from "./client";
import { createLiveSession, type ClientState, type LiveSession } from "./sync";
import { createFacilitatorPanel, type FacilitatorPanel } from "./wheel";
import type { MetricsDoc } from "./types";

// Browser wiring: join or create a session, then keep one dashboard in
// sync with the service.  Everything below is glue; the behaviour lives
// in the imported modules.

interface AppContext {
  client: ServiceClient;
  session: LiveSession;
  sessionId: string;
  token: string;
  facilitator: boolean;
  panel: FacilitatorPanel | null;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderLeaderboard(target: HTMLElement, metrics: MetricsDoc): void {
  const table = document.createElement("table");
  table.className = "leaderboard";
  const head = document.createElement("tr");
  for (const label of ["team", "value", "cost h", "efficiency", "effectiveness"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const row of metrics.leaderboard) {
    const tr = document.createElement("tr");
    const cells = [
      row.team,
      String(row.value),
      row.cost_hours.toFixed(1),
      row.efficiency === null ? "-" : row.efficiency.toFixed(3),
      row.effectiveness === null ? "-" : row.effectiveness.toFixed(3),
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  target.replaceChildren(table);
}

function renderDashboard(ctx: AppContext, state: ClientState): void {
  const status = el("connection");
  status.textContent = `${state.connection} (v${state.lastSeenVersion})`;
  const errorBox = el("session-error");
  if (state.lastError) {
    errorBox.textContent = `${state.lastError.code}: ${state.lastError.message}`;
    errorBox.classList.remove("hidden");
  } else {
    errorBox.classList.add("hidden");
  }

  if (ctx.panel) ctx.panel.render(state);

  const view = state.view;
  if (!view) return;
  const boards = el("boards");
  for (const teamId of Object.keys(view.state.teams).sort()) {
    let host = boards.querySelector<HTMLElement>(`[data-board="${teamId}"]`);
    if (!host) {
      host = document.createElement("section");
      host.dataset["board"] = teamId;
      const caption = document.createElement("h2");
      caption.textContent = teamId;
      boards.appendChild(caption);
      boards.appendChild(host);
    }
    const team = view.state.teams[teamId];
    if (!team) continue;
    const policy = view.state.config["policy"] as
      | { max_overtime_ticks?: number }
      | undefined;
    renderBoard(
      host,
      team,
      state.pending,
      {
        assign: (member, task) =>
          ctx.session.submit(teamId, { op: "assign-task", member, task, position: null }, ctx.token),
        unassign: (member, task) =>
          ctx.session.submit(teamId, { op: "unassign-task", member, task }, ctx.token),
        setOvertime: (member, ticks) =>
          ctx.session.submit(teamId, { op: "set-overtime", member, ticks }, ctx.token),
      },
      { maxOvertimeTicks: policy?.max_overtime_ticks ?? 4 },
    );
  }

  void ctx.client
    .metrics(ctx.sessionId)
    .then((metrics) => {
      const charts = el("charts");
      for (const [teamId, team] of Object.entries(metrics.teams)) {
        let host = charts.querySelector<HTMLElement>(`[data-chart="${teamId}"]`);
        if (!host) {
          host = document.createElement("div");
          host.dataset["chart"] = teamId;
          charts.appendChild(host);
        }
        renderBurndown(host, team);
      }
      renderLeaderboard(el("leaderboard"), metrics);
    })
    .catch(() => undefined);
}

async function start(sessionId: string, token: string, facilitator: boolean): Promise<void> {
  const client = createClient({ baseUrl: "" });
  const ctx: AppContext = {
    client,
    session: createLiveSession({
      client,
      sessionId,
      onChange: (state) => renderDashboard(ctx, state),
    }),
    sessionId,
    token,
    facilitator,
    panel: null,
  };
  if (facilitator) {
    ctx.panel = createFacilitatorPanel(el("facilitator"), {
      session: ctx.session,
      token,
    });
  }
  el("join-card").classList.add("hidden");
  el("dashboard").classList.remove("hidden");
  await ctx.session.connect();
}

export function mount(): void {
  el<HTMLFormElement>("join-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const sessionId = el<HTMLInputElement>("join-session").value.trim();
    const token = el<HTMLInputElement>("join-token").value.trim();
    const facilitator = el<HTMLInputElement>("join-facilitator").checked;
    if (sessionId && token) void start(sessionId, token, facilitator);
  });

  el<HTMLFormElement>("create-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const raw = el<HTMLTextAreaElement>("create-config").value;
    let config: Record<string, unknown>;
    try {
      config = JSON.parse(raw) as Record<string, unknown>;
    } catch {
      el("create-error").textContent = "config is not valid JSON";
      return;
    }
    const client = createClient({ baseUrl: "" });
    client
      .createSession(config)
      .then((created) => {
        el("create-error").textContent =
          `session ${created.session_id} -- facilitator ${created.facilitator_token}, ` +
          `team ${created.team_token}`;
        el<HTMLInputElement>("join-session").value = created.session_id;
        el<HTMLInputElement>("join-token").value = created.facilitator_token;
        el<HTMLInputElement>("join-facilitator").checked = true;
      })
      .catch((error) => {
        el("create-error").textContent = String(error);
      });
  });
}

if (typeof document !== "undefined" && document.getElementById("join-form")) {
  mount();
}
