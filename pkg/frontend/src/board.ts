import { isApiError } from "./client";
import type { PendingEntry } from "./sync";
import type { MemberDoc, StoryDoc, TaskDoc, TaskStatus, TeamDoc } from "./types";
import { formatHours } from "./types";

// Task board: one lane per story, three columns per lane, one chip per
// member.  Rendering is a pure projection of the server team document;
// gestures call back with exactly one command each and never mutate the
// DOM themselves -- the board only changes when a new snapshot arrives.

export interface BoardHandlers {
  assign(member: number, task: string): Promise<unknown>;
  unassign(member: number, task: string): Promise<unknown>;
  setOvertime(member: number, ticks: number): Promise<unknown>;
}

export interface BoardOptions {
  // Upper bound of the overtime slider, from the session's policy.
  maxOvertimeTicks?: number;
}

export const COLUMNS: readonly { key: TaskStatus; label: string }[] = [
  { key: "todo", label: "To Do" },
  { key: "in-progress", label: "In Progress" },
  { key: "done", label: "Done" },
];

// Drag state shared across cards; DataTransfer is unreliable outside real
// browsers, so the board carries the dragged task id itself.
let draggedTask: string | null = null;

export function showBoardError(root: HTMLElement, code: string, message: string): void {
  const bar = root.querySelector<HTMLElement>(".error-bar");
  if (!bar) return;
  bar.dataset["code"] = code;
  bar.textContent = `${code}: ${message}`;
  bar.classList.remove("hidden");
}

export function clearBoardError(root: HTMLElement): void {
  const bar = root.querySelector<HTMLElement>(".error-bar");
  if (!bar) return;
  delete bar.dataset["code"];
  bar.textContent = "";
  bar.classList.add("hidden");
}

function reportRejection(root: HTMLElement, error: unknown): void {
  if (isApiError(error)) {
    showBoardError(root, error.code, error.message);
  } else {
    showBoardError(root, "NETWORK_ERROR", String(error));
  }
}

function pendingTaskIds(pending: PendingEntry[], teamId: string): Set<string> {
  const ids = new Set<string>();
  for (const entry of pending) {
    if (entry.action.kind !== "command" || entry.action.teamId !== teamId) continue;
    const command = entry.action.command;
    if (command.op === "assign-task" || command.op === "unassign-task") {
      ids.add(command.task);
    }
  }
  return ids;
}

function pendingOvertimeMembers(pending: PendingEntry[], teamId: string): Set<number> {
  const members = new Set<number>();
  for (const entry of pending) {
    if (entry.action.kind !== "command" || entry.action.teamId !== teamId) continue;
    if (entry.action.command.op === "set-overtime") {
      members.add(entry.action.command.member);
    }
  }
  return members;
}

function taskCard(task: TaskDoc, pending: Set<string>): HTMLElement {
  const card = document.createElement("div");
  card.className = "task-card";
  card.dataset["task"] = task.id;
  card.dataset["status"] = task.status;
  if (task.required_role) {
    card.classList.add("specialist");
    card.dataset["role"] = task.required_role;
  }
  if (task.origin === "event-injected") card.classList.add("injected");
  if (pending.has(task.id)) card.classList.add("pending");
  card.draggable = task.status !== "done";

  const name = document.createElement("span");
  name.className = "task-id";
  name.textContent = task.id;
  card.appendChild(name);

  const left = document.createElement("span");
  left.className = "task-hours";
  left.textContent = `${formatHours(task.remaining_ticks)} left`;
  card.appendChild(left);

  if (task.required_role) {
    const badge = document.createElement("span");
    badge.className = "role-badge";
    badge.textContent = task.required_role;
    card.appendChild(badge);
  }

  card.addEventListener("dragstart", (event) => {
    draggedTask = task.id;
    const transfer = (event as DragEvent).dataTransfer;
    if (transfer) transfer.setData("text/plain", task.id);
  });
  card.addEventListener("dragend", () => {
    draggedTask = null;
  });
  return card;
}

function storyLane(
  root: HTMLElement,
  story: StoryDoc,
  tasks: TaskDoc[],
  pending: Set<string>,
): HTMLElement {
  const lane = document.createElement("section");
  lane.className = "lane";
  lane.dataset["story"] = story.id;
  lane.dataset["status"] = story.status;

  const head = document.createElement("div");
  head.className = "lane-head";
  const title = document.createElement("strong");
  title.textContent = `${story.id} ${story.title}`;
  head.appendChild(title);
  const meta = document.createElement("span");
  meta.className = "story-meta";
  const deps = story.depends_on.length ? ` after ${story.depends_on.join(", ")}` : "";
  meta.textContent = `${story.points} pts, ${story.priority}, ${story.status}${deps}`;
  head.appendChild(meta);
  lane.appendChild(head);

  const cols = document.createElement("div");
  cols.className = "lane-cols";
  for (const column of COLUMNS) {
    const col = document.createElement("div");
    col.className = "col";
    col.dataset["col"] = column.key;
    col.setAttribute("aria-label", column.label);
    for (const task of tasks) {
      if (task.status === column.key) col.appendChild(taskCard(task, pending));
    }
    if (column.key === "done") {
      // Done is earned through progress; dropping here never posts.
      col.addEventListener("dragover", (event) => event.preventDefault());
      col.addEventListener("drop", (event) => {
        event.preventDefault();
        if (draggedTask === null) return;
        draggedTask = null;
        showBoardError(
          root,
          "PROGRESS_ONLY",
          "tasks reach Done through logged progress, not by dragging",
        );
      });
    }
    cols.appendChild(col);
  }
  lane.appendChild(cols);
  return lane;
}

function memberChip(
  root: HTMLElement,
  team: TeamDoc,
  member: MemberDoc,
  pending: PendingEntry[],
  handlers: BoardHandlers,
  maxOvertimeTicks: number,
): HTMLElement {
  const chip = document.createElement("div");
  chip.className = "member-chip";
  chip.dataset["member"] = String(member.index);
  if (pendingOvertimeMembers(pending, team.id).has(member.index)) {
    chip.classList.add("pending");
  }

  const name = document.createElement("span");
  name.className = "chip-name";
  name.textContent = member.name;
  chip.appendChild(name);

  if (member.role) {
    const badge = document.createElement("span");
    badge.className = "role-badge";
    badge.textContent = member.role;
    chip.appendChild(badge);
  }

  const ot = document.createElement("label");
  ot.className = "chip-ot";
  const otText = document.createElement("span");
  otText.textContent = `OT ${formatHours(member.overtime_ticks)}`;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "0";
  slider.max = String(maxOvertimeTicks);
  slider.step = "1";
  slider.value = String(member.overtime_ticks);
  slider.dataset["otMember"] = String(member.index);
  slider.addEventListener("change", () => {
    clearBoardError(root);
    handlers
      .setOvertime(member.index, Number(slider.value))
      .catch((error) => reportRejection(root, error));
  });
  ot.appendChild(otText);
  ot.appendChild(slider);
  chip.appendChild(ot);

  const queue = document.createElement("div");
  queue.className = "chip-tasks";
  for (const taskId of team.assignments[String(member.index)] ?? []) {
    const item = document.createElement("span");
    item.className = "assigned";
    item.dataset["task"] = taskId;
    item.textContent = taskId;
    const off = document.createElement("button");
    off.type = "button";
    off.className = "unassign";
    off.textContent = "x";
    off.addEventListener("click", () => {
      clearBoardError(root);
      handlers
        .unassign(member.index, taskId)
        .catch((error) => reportRejection(root, error));
    });
    item.appendChild(off);
    queue.appendChild(item);
  }
  chip.appendChild(queue);

  chip.addEventListener("dragover", (event) => event.preventDefault());
  chip.addEventListener("drop", (event) => {
    event.preventDefault();
    if (draggedTask === null) return;
    const task = draggedTask;
    draggedTask = null;
    clearBoardError(root);
    handlers.assign(member.index, task).catch((error) => reportRejection(root, error));
  });
  return chip;
}

function storyOrder(team: TeamDoc): StoryDoc[] {
  const stories = Object.values(team.stories);
  const rank = (s: StoryDoc) =>
    s.status === "committed" ? 0 : s.status === "done" ? 1 : 2;
  return stories.sort((a, b) => rank(a) - rank(b) || a.id.localeCompare(b.id));
}

export function renderBoard(
  root: HTMLElement,
  team: TeamDoc,
  pending: PendingEntry[],
  handlers: BoardHandlers,
  options: BoardOptions = {},
): void {
  const maxOvertimeTicks = options.maxOvertimeTicks ?? 4;
  root.classList.add("board-root");
  // The error bar outlives re-renders so a rejection stays visible until
  // the next gesture replaces or clears it.
  let bar = root.querySelector<HTMLElement>(".error-bar");
  if (!bar) {
    bar = document.createElement("div");
    bar.className = "error-bar hidden";
    bar.setAttribute("role", "alert");
  }
  root.replaceChildren(bar);

  const pendingTasks = pendingTaskIds(pending, team.id);

  const lanes = document.createElement("div");
  lanes.className = "lanes";
  const byStory = new Map<string, TaskDoc[]>();
  for (const task of Object.values(team.tasks)) {
    const list = byStory.get(task.story) ?? [];
    list.push(task);
    byStory.set(task.story, list);
  }
  for (const story of storyOrder(team)) {
    const tasks = (byStory.get(story.id) ?? []).sort((a, b) =>
      a.id.localeCompare(b.id),
    );
    lanes.appendChild(storyLane(root, story, tasks, pendingTasks));
  }
  root.appendChild(lanes);

  const membersBox = document.createElement("div");
  membersBox.className = "members";
  for (const member of team.members) {
    membersBox.appendChild(
      memberChip(root, team, member, pending, handlers, maxOvertimeTicks),
    );
  }
  root.appendChild(membersBox);
}
