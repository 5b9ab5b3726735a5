// Wire types for the session service.  Every shape here mirrors a JSON
// document the HTTP API serves; the UI never invents fields of its own.

export type Phase = "planning" | "in-day" | "day-closed" | "sprint-closed" | "finished";
export type TaskStatus = "todo" | "in-progress" | "done";
export type StoryStatus = "backlog" | "committed" | "done";
export type StoryKind = "user" | "technical";
export type Priority = "must" | "should" | "could";
export type Origin = "planned" | "event-injected";

export interface MemberDoc {
  index: number;
  name: string;
  role: string | null;
  absent_from: number | null;
  absent_until: number | null;
  overtime_ticks: number;
}

export interface StoryDoc {
  id: string;
  title: string;
  kind: StoryKind;
  points: number;
  priority: Priority;
  depends_on: string[];
  status: StoryStatus;
  origin: Origin;
}

export interface TaskDoc {
  id: string;
  story: string;
  estimate_ticks: number;
  remaining_ticks: number;
  required_role: string | null;
  status: TaskStatus;
  origin: Origin;
}

export interface DecisionEntryDoc {
  seq: number;
  day: number;
  author: string;
  kind: string;
  text: string;
  payload: Record<string, unknown>;
}

export interface TeamDoc {
  id: string;
  members: MemberDoc[];
  stories: Record<string, StoryDoc>;
  tasks: Record<string, TaskDoc>;
  assignments: Record<string, string[]>;
  charged_regular_ticks: number;
  charged_overtime_ticks: number;
  committed_value: number;
  committed_ids: string[];
  decision_log: DecisionEntryDoc[];
  burndown_actual: [number, number][];
  burndown_history: [number, number][][];
  release_actual: [number, number, number][];
  idle_ticks: number;
  event_added_ticks: number;
  discarded_ticks: number;
}

export interface EventDraw {
  card: string;
  params: Record<string, unknown>;
}

// One day's shared randomness: the event card (null on a quiet or first
// day) and each member index's drawn progress ticks.
export interface DrawsDoc {
  day: number;
  event: EventDraw | null;
  progress: Record<string, number>;
  rng_steps: number;
}

export interface StateDoc {
  config: Record<string, unknown>;
  phase: Phase;
  sprint_index: number;
  sprint_day: number;
  absolute_day: number;
  rng: { seed: number; counter: number };
  teams: Record<string, TeamDoc>;
  draw_history: DrawsDoc[];
}

export interface SessionView {
  session_id: string;
  version: number;
  state: StateDoc;
}

export interface CreateResponse extends SessionView {
  facilitator_token: string;
  team_token: string;
}

// Append-only log record; `integrity` chains each record to the one before.
export interface LogRecord {
  seq: number;
  wall_ms: number;
  day: number;
  team: string;
  kind: "command" | "draws";
  actor: string;
  payload: Record<string, unknown>;
  integrity: string;
}

export interface CommandResponse extends SessionView {
  record: LogRecord;
}

export interface SpinResponse extends CommandResponse {
  draws: DrawsDoc;
}

export type Command =
  | { op: "plan-commit"; story_ids: string[] }
  | { op: "assign-task"; member: number; task: string; position: number | null }
  | { op: "unassign-task"; member: number; task: string }
  | { op: "set-overtime"; member: number; ticks: number }
  | { op: "drop-story"; story: string }
  | { op: "log-note"; text: string; member: number | null }
  | { op: "facilitator-note"; text: string };

export interface TeamMetrics {
  burndown: [number, number][];
  burndown_history: [number, number][][];
  ideal: [number, number][];
  release: [number, number, number][];
  value: number;
  committed_value: number;
  cost_hours: number;
  idle_hours: number;
  efficiency: number | null;
  effectiveness: number | null;
}

export interface LeaderboardRow {
  team: string;
  value: number;
  cost_hours: number;
  efficiency: number | null;
  effectiveness: number | null;
  event_value: number;
}

export interface MetricsDoc {
  sprint_index: number;
  sprint_day: number;
  absolute_day: number;
  phase: Phase;
  teams: Record<string, TeamMetrics>;
  leaderboard: LeaderboardRow[];
}

// Payload of every server-sent "update" event on the session stream.
export interface StreamUpdate {
  absolute_day: number;
  phase: Phase;
  version: number;
}

export interface ErrorBody {
  code: string;
  message: string;
}

export const TICKS_PER_HOUR = 2;

export function ticksToHours(ticks: number): number {
  return ticks / TICKS_PER_HOUR;
}

export function formatHours(ticks: number): string {
  const hours = ticksToHours(ticks);
  return Number.isInteger(hours) ? `${hours}h` : `${hours.toFixed(1)}h`;
}
