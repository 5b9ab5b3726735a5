import { isApiError } from "./client";
import type { ClientState, LiveSession } from "./sync";
import type { DrawsDoc, SessionView } from "./types";
import { formatHours } from "./types";

// Facilitator console: day banner, the two wheels, sprint close, and the
// daily-gate checklist with its override.  The wheels display only what
// the server answered -- the panel holds no randomness of its own, and the
// spin animation is a CSS flourish over already-final values.

export interface FacilitatorPanelOptions {
  session: LiveSession;
  token: string;
  // Injectable so tests can script the answer; defaults to window.confirm.
  confirmDialog?: (message: string) => boolean;
}

export interface FacilitatorPanel {
  render(state: ClientState): void;
  lastDraws(): DrawsDoc | null;
}

function memberNames(view: SessionView | null): Map<number, string> {
  const names = new Map<number, string>();
  const teams = view ? Object.values(view.state.teams) : [];
  for (const member of teams[0]?.members ?? []) {
    names.set(member.index, member.name);
  }
  return names;
}

export function createFacilitatorPanel(
  root: HTMLElement,
  options: FacilitatorPanelOptions,
): FacilitatorPanel {
  const session = options.session;
  const confirmDialog =
    options.confirmDialog ?? ((message: string) => window.confirm(message));

  let draws: DrawsDoc | null = null;
  let drawsSprintDay = 0;
  let lastState: ClientState = session.state;
  const readyTeams = new Set<string>();

  root.classList.add("facilitator-panel");
  const banner = document.createElement("div");
  banner.className = "day-banner";
  const errorBar = document.createElement("div");
  errorBar.className = "panel-error hidden";
  errorBar.setAttribute("role", "alert");

  const controls = document.createElement("div");
  controls.className = "controls";
  const spinButton = document.createElement("button");
  spinButton.type = "button";
  spinButton.className = "spin";
  spinButton.textContent = "Spin";
  const closeButton = document.createElement("button");
  closeButton.type = "button";
  closeButton.className = "close-sprint";
  closeButton.textContent = "Close sprint";
  const skipLabel = document.createElement("label");
  skipLabel.className = "skip-anim";
  const skipBox = document.createElement("input");
  skipBox.type = "checkbox";
  skipLabel.appendChild(skipBox);
  skipLabel.appendChild(document.createTextNode(" skip animation"));
  controls.appendChild(spinButton);
  controls.appendChild(closeButton);
  controls.appendChild(skipLabel);

  const gate = document.createElement("div");
  gate.className = "gate";
  const wheels = document.createElement("div");
  wheels.className = "wheel-result";

  root.replaceChildren(banner, errorBar, controls, gate, wheels);

  function showError(error: unknown): void {
    const code = isApiError(error) ? error.code : "NETWORK_ERROR";
    const message = isApiError(error) ? error.message : String(error);
    errorBar.dataset["code"] = code;
    errorBar.textContent = `${code}: ${message}`;
    errorBar.classList.remove("hidden");
  }

  function clearError(): void {
    delete errorBar.dataset["code"];
    errorBar.textContent = "";
    errorBar.classList.add("hidden");
  }

  function renderBanner(): void {
    const view = lastState.view;
    if (!view) {
      banner.textContent = "no session";
      return;
    }
    const s = view.state;
    banner.textContent =
      `Sprint ${s.sprint_index + 1}, day ${s.sprint_day}/` +
      `${(s.config["sprint_length_days"] as number | undefined) ?? "?"}, ` +
      `${s.phase} (v${view.version})`;
    spinButton.disabled = s.phase === "sprint-closed" || s.phase === "finished";
    closeButton.disabled = s.phase !== "sprint-closed";
  }

  function renderGate(): void {
    const view = lastState.view;
    gate.replaceChildren();
    if (!view) return;
    const title = document.createElement("span");
    title.textContent = "Daily gate:";
    gate.appendChild(title);
    for (const teamId of Object.keys(view.state.teams).sort()) {
      const label = document.createElement("label");
      label.className = "gate-team";
      label.dataset["team"] = teamId;
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = readyTeams.has(teamId);
      box.addEventListener("change", () => {
        if (box.checked) readyTeams.add(teamId);
        else readyTeams.delete(teamId);
      });
      label.appendChild(box);
      label.appendChild(document.createTextNode(` ${teamId} ready`));
      gate.appendChild(label);
    }
    const override = document.createElement("button");
    override.type = "button";
    override.className = "override";
    override.textContent = "Override gate";
    override.addEventListener("click", () => {
      const teams = Object.keys(view.state.teams).sort();
      const unready = teams.filter((id) => !readyTeams.has(id));
      if (unready.length === 0) return;
      const ok = confirmDialog(
        `Gate is open (${unready.join(", ")} not ready). Override and log it?`,
      );
      if (!ok) return;
      clearError();
      const target = unready[0];
      if (target === undefined) return;
      session
        .submit(
          target,
          {
            op: "facilitator-note",
            text: `gate override: proceeding before ${unready.join(", ")} reported ready`,
          },
          options.token,
        )
        .catch(showError);
    });
    gate.appendChild(override);
  }

  function renderDraws(): void {
    wheels.replaceChildren();
    if (!draws) return;
    const animate = !skipBox.checked;

    const progress = document.createElement("div");
    progress.className = animate ? "progress-wheel anim" : "progress-wheel";
    const names = memberNames(lastState.view);
    for (const [key, ticks] of Object.entries(draws.progress).sort(
      (a, b) => Number(a[0]) - Number(b[0]),
    )) {
      const row = document.createElement("div");
      row.className = "draw";
      row.dataset["member"] = key;
      row.dataset["ticks"] = String(ticks);
      const name = names.get(Number(key)) ?? `member ${key}`;
      row.textContent = `${name} drew ${formatHours(ticks)}`;
      progress.appendChild(row);
    }
    wheels.appendChild(progress);

    // The events wheel is not spun on a sprint's first day, so there is
    // nothing to show -- not even an empty slot.
    if (drawsSprintDay >= 2) {
      const eventBox = document.createElement("div");
      eventBox.className = animate ? "event-wheel anim" : "event-wheel";
      const card = draws.event ? draws.event.card : "no-event";
      eventBox.dataset["card"] = card;
      eventBox.textContent = draws.event ? `Event: ${card}` : "Event: none";
      wheels.appendChild(eventBox);
    }
  }

  spinButton.addEventListener("click", () => {
    const view = lastState.view;
    if (!view) return;
    clearError();
    // A click while a spin is still in flight repeats that spin's day, so
    // the server rejects it instead of advancing twice.
    let expectedDay = view.state.absolute_day + 1;
    for (const entry of session.state.pending) {
      if (entry.action.kind === "spin") expectedDay = entry.action.expectedDay;
    }
    session
      .spin(options.token, expectedDay)
      .then((response) => {
        draws = response.draws;
        // The spun day is absolute_day after the advance; its position
        // in the sprint decides whether the events wheel was spun at all.
        const length =
          (response.state.config["sprint_length_days"] as number | undefined) ?? 10;
        drawsSprintDay = ((response.state.absolute_day - 1) % length) + 1;
        readyTeams.clear();
        renderDraws();
      })
      .catch(showError);
  });

  closeButton.addEventListener("click", () => {
    clearError();
    session.closeSprint(options.token).catch(showError);
  });

  return {
    render(state: ClientState) {
      lastState = state;
      renderBanner();
      renderGate();
      renderDraws();
    },
    lastDraws() {
      return draws;
    },
  };
}
