"""Board-state types, session configuration, and config validation.

Every hour quantity in the simulator is stored as an integer count of
half-hour ticks (2 ticks per hour).  Keeping hours integral makes daily
accounting exact and replay byte-stable; conversion helpers live here so
the rest of the package never multiplies by 0.5.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping

TICKS_PER_HOUR = 2

FACILITATOR = "facilitator"
ENGINE = "engine"


def ticks(hours: int | float | str | Fraction) -> int:
    """Convert an hour quantity to ticks, rejecting sub-tick fractions."""
    frac = Fraction(str(hours)) if isinstance(hours, float) else Fraction(hours)
    out = frac * TICKS_PER_HOUR
    if out.denominator != 1:
        raise ValueError(f"{hours} hours is not a whole number of half-hour ticks")
    return int(out)


def hours(tick_count: int) -> Fraction:
    return Fraction(tick_count, TICKS_PER_HOUR)


def hours_str(tick_count: int) -> str:
    """Render ticks as an hour string: 7 ticks -> '3.5', 12 ticks -> '6'."""
    whole, rem = divmod(tick_count, TICKS_PER_HOUR)
    return f"{whole}.5" if rem else str(whole)


class StoryKind(str, Enum):
    USER = "user"
    TECHNICAL = "technical"


class Priority(str, Enum):
    MUST = "must"
    SHOULD = "should"
    COULD = "could"


class StoryStatus(str, Enum):
    BACKLOG = "backlog"
    COMMITTED = "committed"
    DONE = "done"


class TaskStatus(str, Enum):
    TODO = "todo"
    IN_PROGRESS = "in-progress"
    DONE = "done"


class Origin(str, Enum):
    PLANNED = "planned"
    EVENT_INJECTED = "event-injected"


class LogKind(str, Enum):
    DECISION = "decision"
    EVENT = "event"
    PROGRESS = "progress"
    NOTE = "note"


class Phase(str, Enum):
    PLANNING = "planning"
    IN_DAY = "in-day"
    DAY_CLOSED = "day-closed"
    SPRINT_CLOSED = "sprint-closed"
    FINISHED = "finished"


class EventKind(str, Enum):
    DEFECT = "defect"
    ADD_STORY = "add-story"
    ABSENCE = "absence"
    PRIORITY_CHANGE = "priority-change"
    SCOPE_CUT = "scope-cut"
    ESTIMATE_REVISION = "estimate-revision"
    NO_EVENT = "no-event"


@dataclass(frozen=True)
class Story:
    id: str
    title: str
    kind: StoryKind
    points: int
    priority: Priority
    depends_on: tuple[str, ...] = ()
    status: StoryStatus = StoryStatus.BACKLOG
    origin: Origin = Origin.PLANNED


@dataclass(frozen=True)
class Task:
    id: str
    story: str
    estimate_ticks: int
    remaining_ticks: int
    required_role: str | None = None
    status: TaskStatus = TaskStatus.TODO
    origin: Origin = Origin.PLANNED


@dataclass(frozen=True)
class Member:
    index: int
    name: str
    role: str | None = None
    absent_from: int | None = None
    absent_until: int | None = None
    overtime_ticks: int = 0

    def absent_on(self, day: int) -> bool:
        if self.absent_until is None:
            return False
        start = self.absent_from if self.absent_from is not None else 0
        return start <= day <= self.absent_until


@dataclass(frozen=True)
class LogEntry:
    seq: int
    day: int
    author: int | str
    kind: LogKind
    text: str
    payload: Mapping[str, Any] | None = None


@dataclass(frozen=True)
class TeamState:
    id: str
    members: tuple[Member, ...]
    stories: Mapping[str, Story]
    tasks: Mapping[str, Task]
    assignments: Mapping[int, tuple[str, ...]]
    charged_regular_ticks: int = 0
    charged_overtime_ticks: int = 0
    committed_value: int = 0
    committed_ids: tuple[str, ...] = ()
    decision_log: tuple[LogEntry, ...] = ()
    burndown_actual: tuple[tuple[int, int], ...] = ()
    burndown_history: tuple[tuple[tuple[int, int], ...], ...] = ()
    release_actual: tuple[tuple[int, int, int], ...] = ()
    idle_ticks: int = 0
    event_added_ticks: int = 0
    discarded_ticks: int = 0

    def member(self, index: int) -> Member:
        for m in self.members:
            if m.index == index:
                return m
        raise KeyError(f"no member with index {index}")

    def queue(self, index: int) -> tuple[str, ...]:
        return self.assignments.get(index, ())

    def committed_remaining_ticks(self) -> int:
        done = StoryStatus.DONE
        live = {
            sid for sid, s in self.stories.items()
            if s.status is StoryStatus.COMMITTED or s.status is done
        }
        return sum(
            t.remaining_ticks for t in self.tasks.values() if t.story in live
        )

    def log_tail(self, n: int = 10) -> tuple[LogEntry, ...]:
        return self.decision_log[-n:]


@dataclass(frozen=True)
class WheelConfig:
    """A discrete weighted lottery: slots of (value_ticks, weight)."""
    slots: tuple[tuple[int, int], ...]

    def total_weight(self) -> int:
        return sum(w for _, w in self.slots)


@dataclass(frozen=True)
class EventCard:
    id: str
    title: str
    kind: EventKind
    weight: int = 1
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class TaskDef:
    id: str
    estimate_ticks: int
    required_role: str | None = None


@dataclass(frozen=True)
class StoryDef:
    id: str
    title: str
    kind: StoryKind
    points: int
    priority: Priority
    tasks: tuple[TaskDef, ...]
    depends_on: tuple[str, ...] = ()


@dataclass(frozen=True)
class MemberDef:
    name: str
    role: str | None = None


@dataclass(frozen=True)
class PolicyConstants:
    max_overtime_ticks: int = 2 * TICKS_PER_HOUR
    overtime_productivity: Fraction = Fraction(3, 4)
    overtime_cost_weight: Fraction = Fraction(3, 2)
    moscow_weights: Mapping[str, int] = field(
        default_factory=lambda: {"must": 3, "should": 2, "could": 1}
    )

    def weight(self, priority: Priority) -> int:
        return self.moscow_weights[priority.value]


@dataclass(frozen=True)
class IdealLinePolicy:
    include_technical_stories: bool = True
    include_ceremony_hours: bool = False
    ceremony_ticks_per_member_day: int = 1


@dataclass(frozen=True)
class SessionConfig:
    backlog: tuple[StoryDef, ...]
    seed: int
    team_count: int = 1
    team_size: int = 5
    sprint_length_days: int = 10
    sprint_count: int = 1
    nominal_day_ticks: int = 6 * TICKS_PER_HOUR
    progress_wheel: WheelConfig = WheelConfig(slots=())
    event_deck: tuple[EventCard, ...] = ()
    policy: PolicyConstants = PolicyConstants()
    ideal_line: IdealLinePolicy = IdealLinePolicy()
    members: tuple[MemberDef, ...] = ()

    def capacity_ticks(self) -> int:
        return self.team_size * self.sprint_length_days * self.nominal_day_ticks


def story_value(story: Story, constants: PolicyConstants) -> int:
    """MoSCoW-weighted points.  Only user stories carry delivery value."""
    if story.kind is not StoryKind.USER:
        return 0
    return constants.weight(story.priority) * story.points


def dependency_cycle(backlog: tuple[StoryDef, ...]) -> list[str] | None:
    """Return one dependency cycle as an id path, or None if acyclic."""
    graph = {s.id: tuple(s.depends_on) for s in backlog}
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> list[str] | None:
        state[node] = 1
        stack.append(node)
        for dep in graph.get(node, ()):
            if dep not in graph:
                continue
            mark = state.get(dep, 0)
            if mark == 1:
                return stack[stack.index(dep):] + [dep]
            if mark == 0:
                found = visit(dep)
                if found:
                    return found
        state[node] = 2
        stack.pop()
        return None

    for sid in graph:
        if state.get(sid, 0) == 0:
            found = visit(sid)
            if found:
                return found
    return None


def validate_config(config: SessionConfig) -> list[str]:
    """Return hard violations (empty list means the config is runnable).

    Over-capacity commitment is deliberately not checked here: committing
    more than the team can do is a planning warning, not a config error.
    """
    bad: list[str] = []
    if config.team_count < 1:
        bad.append("team_count must be at least 1")
    if not 1 <= config.team_size <= 12:
        bad.append("team_size must be between 1 and 12")
    if config.sprint_length_days < 1:
        bad.append("sprint_length_days must be at least 1")
    if config.sprint_count < 1:
        bad.append("sprint_count must be at least 1")
    if config.nominal_day_ticks < 1:
        bad.append("nominal_day_ticks must be positive")
    if not 0 <= config.seed < 2**64:
        bad.append("seed must fit in 64 bits")

    consts = config.policy
    if consts.max_overtime_ticks < 0:
        bad.append("max_overtime_ticks must not be negative")
    if not 0 < consts.overtime_productivity <= 1:
        bad.append("overtime_productivity must be in (0, 1]")
    if consts.overtime_cost_weight < 1:
        bad.append("overtime_cost_weight must be at least 1")
    for name in ("must", "should", "could"):
        if consts.moscow_weights.get(name, 0) < 1:
            bad.append(f"moscow weight for {name} must be a positive integer")

    if not config.progress_wheel.slots:
        bad.append("progress wheel needs at least one slot")
    for value, weight in config.progress_wheel.slots:
        if not isinstance(value, int) or not 0 <= value <= 24 * TICKS_PER_HOUR:
            bad.append(f"progress wheel value {value} outside 0..{24 * TICKS_PER_HOUR} ticks")
        if not isinstance(weight, int) or weight < 1:
            bad.append(f"progress wheel weight {weight} must be a positive integer")

    if not config.event_deck:
        bad.append("event deck needs at least one card")
    card_ids = [c.id for c in config.event_deck]
    if len(set(card_ids)) != len(card_ids):
        bad.append("event card ids must be unique")
    for card in config.event_deck:
        if card.weight < 1:
            bad.append(f"event card {card.id} weight must be a positive integer")

    if config.members:
        if len(config.members) != config.team_size:
            bad.append(
                f"{len(config.members)} members configured for team_size {config.team_size}"
            )
    roles = {m.role for m in config.members if m.role}

    story_ids = [s.id for s in config.backlog]
    if len(set(story_ids)) != len(story_ids):
        bad.append("story ids must be unique")
    known = set(story_ids)
    task_ids: list[str] = []
    for story in config.backlog:
        if story.points < 1:
            bad.append(f"story {story.id} points must be at least 1")
        if not story.tasks:
            bad.append(f"story {story.id} has no tasks")
        for dep in story.depends_on:
            if dep not in known:
                bad.append(f"story {story.id} depends on unknown story {dep}")
            if dep == story.id:
                bad.append(f"story {story.id} depends on itself")
        for task in story.tasks:
            task_ids.append(task.id)
            if task.estimate_ticks < 1:
                bad.append(f"task {task.id} estimate must be positive")
            if task.required_role and config.members and task.required_role not in roles:
                bad.append(
                    f"task {task.id} requires role {task.required_role} "
                    "which no member holds"
                )
    if len(set(task_ids)) != len(task_ids):
        bad.append("task ids must be unique")

    cycle = dependency_cycle(config.backlog)
    if cycle:
        bad.append("dependency cycle: " + " -> ".join(cycle))
    return bad


def default_members(team_size: int, defs: tuple[MemberDef, ...]) -> tuple[Member, ...]:
    if defs:
        return tuple(
            Member(index=i + 1, name=d.name, role=d.role) for i, d in enumerate(defs)
        )
    return tuple(
        Member(index=i + 1, name=f"Member {i + 1}") for i in range(team_size)
    )


def materialize_board(
    config: SessionConfig,
) -> tuple[dict[str, Story], dict[str, Task]]:
    """Instantiate backlog blueprints into live story and task records."""
    stories: dict[str, Story] = {}
    tasks: dict[str, Task] = {}
    for sdef in config.backlog:
        stories[sdef.id] = Story(
            id=sdef.id,
            title=sdef.title,
            kind=sdef.kind,
            points=sdef.points,
            priority=sdef.priority,
            depends_on=tuple(sdef.depends_on),
        )
        for tdef in sdef.tasks:
            tasks[tdef.id] = Task(
                id=tdef.id,
                story=sdef.id,
                estimate_ticks=tdef.estimate_ticks,
                remaining_ticks=tdef.estimate_ticks,
                required_role=tdef.required_role,
            )
    return stories, tasks


def fresh_team(config: SessionConfig, team_id: str) -> TeamState:
    stories, tasks = materialize_board(config)
    members = default_members(config.team_size, config.members)
    return TeamState(
        id=team_id,
        members=members,
        stories=stories,
        tasks=tasks,
        assignments={m.index: () for m in members},
    )


def with_member(team: TeamState, member: Member) -> TeamState:
    updated = tuple(member if m.index == member.index else m for m in team.members)
    return replace(team, members=updated)
