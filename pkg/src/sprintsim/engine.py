"""Board engine: planning, daily advance, sprint close, and replay.

States are immutable; every operation returns a new SessionState and
raises EngineError (with a machine-readable code) instead of mutating
on failure.  A session advances one day at a time: the shared event is
applied first, then each member's drawn progress in index order, then
the burndown point is appended and the calendar moves.

Replay never touches the random stream.  It consumes logged draws and
moves the counter by the recorded step count, so a replayed session is
canonically identical to the live one, byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence, Union

from .chance import DayDraws, RngState, build_wheel, draw_day, draws_from_payload
from .model import (
    ENGINE,
    FACILITATOR,
    EventCard,
    EventKind,
    LogEntry,
    LogKind,
    Member,
    Phase,
    Priority,
    SessionConfig,
    Story,
    StoryKind,
    StoryStatus,
    Task,
    TaskStatus,
    TeamState,
    Origin,
    fresh_team,
    hours_str,
    story_value,
    validate_config,
    with_member,
)

VALIDATION_ERROR = "VALIDATION_ERROR"
UNKNOWN_ID = "UNKNOWN_ID"
PHASE_ERROR = "PHASE_ERROR"
SPECIALIST_MISMATCH = "SPECIALIST_MISMATCH"
OVERTIME_CAP = "OVERTIME_CAP"
ABSENT_MEMBER = "ABSENT_MEMBER"
DEPENDENCY_ERROR = "DEPENDENCY_ERROR"
LIFECYCLE_ERROR = "LIFECYCLE_ERROR"
INTEGRITY_ERROR = "INTEGRITY_ERROR"

QUALITY_STORY_ID = "QUALITY"


class EngineError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class PlanCommit:
    story_ids: tuple[str, ...]


@dataclass(frozen=True)
class AssignTask:
    member: int
    task: str
    position: int | None = None


@dataclass(frozen=True)
class UnassignTask:
    member: int
    task: str


@dataclass(frozen=True)
class SetOvertime:
    member: int
    ticks: int


@dataclass(frozen=True)
class DropStory:
    story: str


@dataclass(frozen=True)
class LogNote:
    text: str
    member: int | None = None


@dataclass(frozen=True)
class FacilitatorNote:
    text: str


Command = Union[
    PlanCommit, AssignTask, UnassignTask, SetOvertime, DropStory, LogNote, FacilitatorNote
]

_NOTE_COMMANDS = (LogNote, FacilitatorNote)


def command_to_payload(command: Command) -> dict[str, Any]:
    if isinstance(command, PlanCommit):
        return {"op": "plan-commit", "story_ids": list(command.story_ids)}
    if isinstance(command, AssignTask):
        return {
            "op": "assign-task",
            "member": command.member,
            "task": command.task,
            "position": command.position,
        }
    if isinstance(command, UnassignTask):
        return {"op": "unassign-task", "member": command.member, "task": command.task}
    if isinstance(command, SetOvertime):
        return {"op": "set-overtime", "member": command.member, "ticks": command.ticks}
    if isinstance(command, DropStory):
        return {"op": "drop-story", "story": command.story}
    if isinstance(command, LogNote):
        return {"op": "log-note", "text": command.text, "member": command.member}
    if isinstance(command, FacilitatorNote):
        return {"op": "facilitator-note", "text": command.text}
    raise EngineError(VALIDATION_ERROR, f"unknown command {command!r}")


def command_from_payload(payload: Mapping[str, Any]) -> Command:
    op = payload.get("op")
    try:
        if op == "plan-commit":
            return PlanCommit(story_ids=tuple(payload["story_ids"]))
        if op == "assign-task":
            return AssignTask(
                member=int(payload["member"]),
                task=payload["task"],
                position=payload.get("position"),
            )
        if op == "unassign-task":
            return UnassignTask(member=int(payload["member"]), task=payload["task"])
        if op == "set-overtime":
            return SetOvertime(member=int(payload["member"]), ticks=int(payload["ticks"]))
        if op == "drop-story":
            return DropStory(story=payload["story"])
        if op == "log-note":
            return LogNote(text=payload["text"], member=payload.get("member"))
        if op == "facilitator-note":
            return FacilitatorNote(text=payload["text"])
    except (KeyError, TypeError, ValueError) as exc:
        raise EngineError(VALIDATION_ERROR, f"malformed {op} payload: {exc}") from exc
    raise EngineError(VALIDATION_ERROR, f"unknown command op {op!r}")


@dataclass(frozen=True)
class SessionState:
    config: SessionConfig
    teams: Mapping[str, TeamState]
    rng: RngState
    sprint_index: int = 1
    sprint_day: int = 1
    absolute_day: int = 0
    draw_history: tuple[DayDraws, ...] = ()
    phase: Phase = Phase.PLANNING

    def team(self, team_id: str) -> TeamState:
        try:
            return self.teams[team_id]
        except KeyError:
            raise EngineError(UNKNOWN_ID, f"no team {team_id}") from None

    def pending_day(self) -> int:
        return self.absolute_day + 1


def init_session(config: SessionConfig) -> SessionState:
    problems = validate_config(config)
    if problems:
        raise EngineError(VALIDATION_ERROR, "; ".join(problems))
    teams: dict[str, TeamState] = {}
    for i in range(config.team_count):
        tid = f"T{i + 1}"
        team = fresh_team(config, tid)
        user = sum(s.points for s in team.stories.values() if s.kind is StoryKind.USER)
        tech = sum(s.points for s in team.stories.values() if s.kind is StoryKind.TECHNICAL)
        teams[tid] = replace(team, release_actual=((0, user, tech),))
    return SessionState(config=config, teams=teams, rng=RngState(config.seed))


def _set_team(state: SessionState, team: TeamState) -> SessionState:
    teams = dict(state.teams)
    teams[team.id] = team
    return replace(state, teams=teams)


def _log(
    team: TeamState,
    day: int,
    author: int | str,
    kind: LogKind,
    text: str,
    payload: Mapping[str, Any] | None = None,
) -> TeamState:
    entry = LogEntry(
        seq=len(team.decision_log) + 1,
        day=day,
        author=author,
        kind=kind,
        text=text,
        payload=payload,
    )
    return replace(team, decision_log=team.decision_log + (entry,))


def _unassign_everywhere(team: TeamState, task_ids: set[str]) -> TeamState:
    assignments = {
        idx: tuple(t for t in queue if t not in task_ids)
        for idx, queue in team.assignments.items()
    }
    tasks = dict(team.tasks)
    for tid in task_ids:
        task = tasks[tid]
        if task.status is TaskStatus.IN_PROGRESS:
            tasks[tid] = replace(task, status=TaskStatus.TODO)
    return replace(team, assignments=assignments, tasks=tasks)


def _story_remaining(team: TeamState, story_id: str) -> int:
    return sum(t.remaining_ticks for t in team.tasks.values() if t.story == story_id)


def _commit_stories(
    team: TeamState, story_ids: Sequence[str], day: int, planning: bool,
    config: SessionConfig,
) -> TeamState:
    batch = set(story_ids)
    if len(batch) != len(story_ids):
        raise EngineError(VALIDATION_ERROR, "duplicate story ids in commitment")
    for sid in story_ids:
        story = team.stories.get(sid)
        if story is None:
            raise EngineError(UNKNOWN_ID, f"no story {sid}")
        if story.status is not StoryStatus.BACKLOG:
            raise EngineError(LIFECYCLE_ERROR, f"story {sid} is {story.status.value}, not backlog")
        if not planning and story.origin is not Origin.EVENT_INJECTED:
            raise EngineError(
                PHASE_ERROR,
                f"story {sid} was not injected by an event; planned stories commit during planning",
            )
        for dep in story.depends_on:
            dep_story = team.stories.get(dep)
            if dep_story is None:
                raise EngineError(UNKNOWN_ID, f"story {sid} depends on unknown {dep}")
            ok = dep in batch or dep_story.status in (StoryStatus.COMMITTED, StoryStatus.DONE)
            if not ok:
                raise EngineError(
                    DEPENDENCY_ERROR,
                    f"story {sid} needs {dep} committed or done first",
                )
    stories = dict(team.stories)
    added_value = 0
    for sid in story_ids:
        stories[sid] = replace(stories[sid], status=StoryStatus.COMMITTED)
        added_value += story_value(stories[sid], config.policy)
    team = replace(team, stories=stories)
    if planning:
        team = replace(
            team,
            committed_ids=team.committed_ids + tuple(story_ids),
            committed_value=team.committed_value + added_value,
        )
    committed_ticks = team.committed_remaining_ticks()
    capacity = config.capacity_ticks()
    payload: dict[str, Any] = {
        "stories": sorted(batch),
        "committed_ticks": committed_ticks,
        "capacity_ticks": capacity,
        "over_capacity": committed_ticks > capacity,
    }
    text = f"committed {', '.join(sorted(batch))}"
    if committed_ticks > capacity:
        text += (
            f" (warning: {hours_str(committed_ticks)}h committed exceeds"
            f" {hours_str(capacity)}h capacity)"
        )
    return _log(team, day, ENGINE, LogKind.DECISION, text, payload)


def submit_command(state: SessionState, team_id: str, command: Command) -> SessionState:
    """Apply one scrum decision to one team's board."""
    if isinstance(command, _NOTE_COMMANDS):
        pass  # diary entries are welcome in any phase
    elif state.phase not in (Phase.PLANNING, Phase.IN_DAY):
        raise EngineError(
            PHASE_ERROR, f"commands are not accepted in phase {state.phase.value}"
        )
    team = state.team(team_id)
    day = state.pending_day()
    config = state.config

    if isinstance(command, PlanCommit):
        team = _commit_stories(
            team, command.story_ids, day, planning=state.phase is Phase.PLANNING,
            config=config,
        )
        return _set_team(state, team)

    if isinstance(command, AssignTask):
        if command.member not in {m.index for m in team.members}:
            raise EngineError(UNKNOWN_ID, f"no member {command.member}")
        member = team.member(command.member)
        task = team.tasks.get(command.task)
        if task is None:
            raise EngineError(UNKNOWN_ID, f"no task {command.task}")
        if task.status is TaskStatus.DONE:
            raise EngineError(LIFECYCLE_ERROR, f"task {task.id} is already done")
        story = team.stories[task.story]
        if story.status is not StoryStatus.COMMITTED:
            raise EngineError(
                LIFECYCLE_ERROR,
                f"task {task.id} belongs to {story.id} which is not committed",
            )
        if member.absent_on(day):
            raise EngineError(ABSENT_MEMBER, f"member {member.index} is absent on day {day}")
        if task.required_role is not None and member.role != task.required_role:
            raise EngineError(
                SPECIALIST_MISMATCH,
                f"task {task.id} needs role {task.required_role}; "
                f"member {member.index} has {member.role or 'no specialty'}",
            )
        team = _unassign_everywhere(team, {task.id})
        queue = list(team.queue(member.index))
        position = len(queue) if command.position is None else max(0, min(command.position, len(queue)))
        queue.insert(position, task.id)
        assignments = dict(team.assignments)
        assignments[member.index] = tuple(queue)
        tasks = dict(team.tasks)
        tasks[task.id] = replace(tasks[task.id], status=TaskStatus.IN_PROGRESS)
        team = replace(team, assignments=assignments, tasks=tasks)
        team = _log(
            team, day, ENGINE, LogKind.DECISION,
            f"assigned {task.id} to member {member.index}",
            {"member": member.index, "task": task.id, "position": position},
        )
        return _set_team(state, team)

    if isinstance(command, UnassignTask):
        if command.member not in {m.index for m in team.members}:
            raise EngineError(UNKNOWN_ID, f"no member {command.member}")
        if command.task not in team.queue(command.member):
            raise EngineError(
                LIFECYCLE_ERROR,
                f"task {command.task} is not queued on member {command.member}",
            )
        team = _unassign_everywhere(team, {command.task})
        team = _log(
            team, day, ENGINE, LogKind.DECISION,
            f"unassigned {command.task} from member {command.member}",
            {"member": command.member, "task": command.task},
        )
        return _set_team(state, team)

    if isinstance(command, SetOvertime):
        if command.member not in {m.index for m in team.members}:
            raise EngineError(UNKNOWN_ID, f"no member {command.member}")
        member = team.member(command.member)
        cap = config.policy.max_overtime_ticks
        if not 0 <= command.ticks <= cap:
            raise EngineError(
                OVERTIME_CAP,
                f"overtime must be between 0 and {hours_str(cap)} hours",
            )
        if member.absent_on(day):
            raise EngineError(ABSENT_MEMBER, f"member {member.index} is absent on day {day}")
        team = with_member(team, replace(member, overtime_ticks=command.ticks))
        team = _log(
            team, day, ENGINE, LogKind.DECISION,
            f"member {member.index} works {hours_str(command.ticks)}h overtime today",
            {"member": member.index, "ticks": command.ticks},
        )
        return _set_team(state, team)

    if isinstance(command, DropStory):
        story = team.stories.get(command.story)
        if story is None:
            raise EngineError(UNKNOWN_ID, f"no story {command.story}")
        if story.status is not StoryStatus.COMMITTED:
            raise EngineError(LIFECYCLE_ERROR, f"story {story.id} is not committed")
        remaining = _story_remaining(team, story.id)
        task_ids = {t.id for t in team.tasks.values() if t.story == story.id}
        team = _unassign_everywhere(team, task_ids)
        stories = dict(team.stories)
        stories[story.id] = replace(story, status=StoryStatus.BACKLOG)
        team = replace(team, stories=stories)
        if state.phase is Phase.PLANNING and story.id in team.committed_ids:
            team = replace(
                team,
                committed_ids=tuple(s for s in team.committed_ids if s != story.id),
                committed_value=team.committed_value - story_value(story, config.policy),
            )
        else:
            team = replace(team, discarded_ticks=team.discarded_ticks + remaining)
        team = _log(
            team, day, ENGINE, LogKind.DECISION,
            f"dropped {story.id} back to the backlog",
            {"story": story.id, "remaining_ticks": remaining},
        )
        return _set_team(state, team)

    if isinstance(command, LogNote):
        author: int | str = command.member if command.member is not None else ENGINE
        if command.member is not None and command.member not in {m.index for m in team.members}:
            raise EngineError(UNKNOWN_ID, f"no member {command.member}")
        team = _log(team, day, author, LogKind.NOTE, command.text)
        return _set_team(state, team)

    if isinstance(command, FacilitatorNote):
        team = _log(team, day, FACILITATOR, LogKind.NOTE, command.text)
        return _set_team(state, team)

    raise EngineError(VALIDATION_ERROR, f"unknown command {command!r}")


def plan_sprint(state: SessionState, team_id: str, story_ids: Sequence[str]) -> SessionState:
    return submit_command(state, team_id, PlanCommit(story_ids=tuple(story_ids)))


def _select_story(
    team: TeamState, config: SessionConfig, selector: str, need_remaining: bool
) -> Story | None:
    candidates = [
        s for s in team.stories.values()
        if s.status is StoryStatus.COMMITTED and s.kind is StoryKind.USER
        and (not need_remaining or _story_remaining(team, s.id) > 0)
    ]
    if not candidates:
        return None
    if selector == "highest-value-committed":
        return max(candidates, key=lambda s: (story_value(s, config.policy), s.id))
    # default: lowest-value-committed
    return min(candidates, key=lambda s: (story_value(s, config.policy), s.id))


def _apply_event(
    team: TeamState, card: EventCard, params: Mapping[str, Any], day: int,
    config: SessionConfig,
) -> TeamState:
    kind = card.kind

    if kind is EventKind.NO_EVENT:
        return _log(team, day, ENGINE, LogKind.EVENT, card.title, {"card": card.id})

    if kind is EventKind.DEFECT:
        estimate = int(params.get("estimate_ticks", 12))
        stories = dict(team.stories)
        quality = stories.get(QUALITY_STORY_ID)
        if quality is None:
            quality = Story(
                id=QUALITY_STORY_ID,
                title="Quality",
                kind=StoryKind.TECHNICAL,
                points=1,
                priority=Priority.MUST,
                status=StoryStatus.COMMITTED,
                origin=Origin.EVENT_INJECTED,
            )
        else:
            quality = replace(quality, status=StoryStatus.COMMITTED)
        stories[QUALITY_STORY_ID] = quality
        task_id = f"DEF-{day}"
        tasks = dict(team.tasks)
        tasks[task_id] = Task(
            id=task_id,
            story=QUALITY_STORY_ID,
            estimate_ticks=estimate,
            remaining_ticks=estimate,
            required_role=params.get("required_role"),
            origin=Origin.EVENT_INJECTED,
        )
        team = replace(team, stories=stories, tasks=tasks)
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: {task_id} ({hours_str(estimate)}h) must be fixed this sprint",
            {"card": card.id, "task": task_id, "estimate_ticks": estimate},
        )

    if kind is EventKind.ADD_STORY:
        blueprint = params.get("story", {})
        sid = f"{card.id}-d{day}"
        if sid in team.stories:
            return _log(
                team, day, ENGINE, LogKind.EVENT,
                f"{card.title} had no effect (duplicate {sid})",
                {"card": card.id, "fizzled": True},
            )
        stories = dict(team.stories)
        stories[sid] = Story(
            id=sid,
            title=blueprint.get("title", card.title),
            kind=StoryKind.USER,
            points=int(blueprint.get("points", 1)),
            priority=_parse_priority(blueprint.get("priority", "must")),
            origin=Origin.EVENT_INJECTED,
        )
        tasks = dict(team.tasks)
        for i, estimate in enumerate(blueprint.get("task_ticks", [12])):
            tasks[f"{sid}-T{i + 1}"] = Task(
                id=f"{sid}-T{i + 1}",
                story=sid,
                estimate_ticks=int(estimate),
                remaining_ticks=int(estimate),
                origin=Origin.EVENT_INJECTED,
            )
        team = replace(team, stories=stories, tasks=tasks)
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: {sid} added to the backlog (commit it or leave it)",
            {"card": card.id, "story": sid},
        )

    if kind is EventKind.ABSENCE:
        index = int(params["member"])
        duration = int(params.get("duration_days", 1))
        member = team.member(index)
        if member.absent_on(day):
            absent_until = max(member.absent_until or 0, day + duration)
            absent_from = member.absent_from
        else:
            absent_from = day + 1
            absent_until = day + duration
        team = with_member(
            team, replace(member, absent_from=absent_from, absent_until=absent_until)
        )
        freed = team.queue(index)
        team = _unassign_everywhere(team, set(freed))
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: member {index} away until day {absent_until}",
            {
                "card": card.id,
                "member": index,
                "absent_from": absent_from,
                "absent_until": absent_until,
                "unassigned": sorted(freed),
            },
        )

    if kind is EventKind.PRIORITY_CHANGE:
        story = _select_story(team, config, params.get("selector", "lowest-value-committed"), False)
        if story is None:
            return _log(
                team, day, ENGINE, LogKind.EVENT,
                f"{card.title} had no effect (nothing committed to reprioritise)",
                {"card": card.id, "fizzled": True},
            )
        new_priority = _parse_priority(params.get("new_priority", "must"))
        old_value = story_value(story, config.policy)
        stories = dict(team.stories)
        stories[story.id] = replace(story, priority=new_priority)
        team = replace(team, stories=stories)
        if story.id in team.committed_ids:
            delta = story_value(stories[story.id], config.policy) - old_value
            team = replace(team, committed_value=team.committed_value + delta)
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: {story.id} is now {new_priority.value}",
            {"card": card.id, "story": story.id, "new_priority": new_priority.value},
        )

    if kind is EventKind.SCOPE_CUT:
        story = _select_story(team, config, params.get("selector", "lowest-value-committed"), True)
        if story is None:
            return _log(
                team, day, ENGINE, LogKind.EVENT,
                f"{card.title} had no effect (nothing left to cut)",
                {"card": card.id, "fizzled": True},
            )
        remaining = _story_remaining(team, story.id)
        task_ids = {t.id for t in team.tasks.values() if t.story == story.id}
        team = _unassign_everywhere(team, task_ids)
        stories = dict(team.stories)
        stories[story.id] = replace(stories[story.id], status=StoryStatus.BACKLOG)
        team = replace(team, stories=stories)
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: {story.id} cut from the sprint",
            {"card": card.id, "story": story.id, "remaining_ticks": remaining},
        )

    if kind is EventKind.ESTIMATE_REVISION:
        numerator = int(params.get("numerator", 3))
        denominator = int(params.get("denominator", 2))
        live = {
            s.id for s in team.stories.values() if s.status is StoryStatus.COMMITTED
        }
        candidates = [
            t for t in team.tasks.values()
            if t.story in live and t.remaining_ticks > 0
        ]
        if not candidates:
            return _log(
                team, day, ENGINE, LogKind.EVENT,
                f"{card.title} had no effect (no open work)",
                {"card": card.id, "fizzled": True},
            )
        target = max(candidates, key=lambda t: (t.remaining_ticks, t.id))
        new_remaining = -(-target.remaining_ticks * numerator // denominator)
        tasks = dict(team.tasks)
        tasks[target.id] = replace(
            target,
            remaining_ticks=new_remaining,
            estimate_ticks=max(target.estimate_ticks, new_remaining),
        )
        team = replace(team, tasks=tasks)
        return _log(
            team, day, ENGINE, LogKind.EVENT,
            f"{card.title}: {target.id} grows from {hours_str(target.remaining_ticks)}h"
            f" to {hours_str(new_remaining)}h remaining",
            {
                "card": card.id,
                "task": target.id,
                "old_remaining_ticks": target.remaining_ticks,
                "remaining_ticks": new_remaining,
            },
        )

    raise EngineError(VALIDATION_ERROR, f"unhandled event kind {kind}")


def _parse_priority(raw: str) -> Priority:
    try:
        return Priority(raw)
    except ValueError:
        raise EngineError(VALIDATION_ERROR, f"unknown priority {raw!r}") from None


def _apply_member_progress(
    team: TeamState, member: Member, drawn: int, day: int, config: SessionConfig
) -> TeamState:
    if member.absent_on(day):
        return _log(
            team, day, member.index, LogKind.PROGRESS,
            f"member {member.index} absent; drawn {hours_str(drawn)}h unused",
            {
                "member": member.index, "absent": True, "drawn": drawn,
                "overtime": 0, "effective": 0, "applied": 0, "idle": 0,
                "completed": [],
            },
        )
    overtime = member.overtime_ticks
    boost = 1 + config.policy.overtime_productivity * Fraction(
        overtime, config.nominal_day_ticks
    )
    effective = int(Fraction(drawn) * boost)
    left = effective
    applied = 0
    completed: list[str] = []
    tasks = dict(team.tasks)
    queue = list(team.queue(member.index))
    surviving: list[str] = []
    for task_id in queue:
        task = tasks[task_id]
        take = min(task.remaining_ticks, left)
        if take:
            remaining = task.remaining_ticks - take
            tasks[task_id] = replace(
                task,
                remaining_ticks=remaining,
                status=TaskStatus.DONE if remaining == 0 else TaskStatus.IN_PROGRESS,
            )
            left -= take
            applied += take
        if tasks[task_id].remaining_ticks > 0:
            surviving.append(task_id)
        else:
            completed.append(task_id)
    idle = effective - applied
    assignments = dict(team.assignments)
    assignments[member.index] = tuple(surviving)
    team = replace(
        team,
        tasks=tasks,
        assignments=assignments,
        charged_regular_ticks=team.charged_regular_ticks + config.nominal_day_ticks,
        charged_overtime_ticks=team.charged_overtime_ticks + overtime,
        idle_ticks=team.idle_ticks + idle,
    )
    text = f"member {member.index} drew {hours_str(drawn)}h"
    if overtime:
        text += f" (+{hours_str(overtime)}h overtime, {hours_str(effective)}h effective)"
    if completed:
        text += f", finished {', '.join(completed)}"
    if idle:
        text += f", {hours_str(idle)}h idle"
    return _log(
        team, day, member.index, LogKind.PROGRESS, text,
        {
            "member": member.index, "absent": False, "drawn": drawn,
            "overtime": overtime, "effective": effective, "applied": applied,
            "idle": idle, "completed": completed,
        },
    )


def apply_day(state: SessionState, draws: DayDraws) -> SessionState:
    """Apply one day of logged draws to every team in lockstep.

    The random stream is not consulted; callers are responsible for
    positioning the counter (advance_day does, replay skips by the
    recorded step count).
    """
    if state.phase not in (Phase.PLANNING, Phase.IN_DAY):
        raise EngineError(PHASE_ERROR, f"cannot advance in phase {state.phase.value}")
    day = state.pending_day()
    config = state.config
    if draws.day != day:
        raise EngineError(
            INTEGRITY_ERROR, f"draws are for day {draws.day}, expected day {day}"
        )
    if (draws.event is not None) != (state.sprint_day >= 2):
        raise EngineError(
            INTEGRITY_ERROR,
            f"event draw presence is wrong for sprint day {state.sprint_day}",
        )
    if sorted(draws.progress) != list(range(1, config.team_size + 1)):
        raise EngineError(INTEGRITY_ERROR, "progress draws do not cover the team")

    card: EventCard | None = None
    if draws.event is not None:
        card_id = draws.event[0]
        by_id = {c.id: c for c in config.event_deck}
        card = by_id.get(card_id)
        if card is None:
            raise EngineError(INTEGRITY_ERROR, f"no event card {card_id} in the deck")

    teams = dict(state.teams)
    for tid, team in teams.items():
        scope_start = team.committed_remaining_ticks()
        if card is not None:
            team = _apply_event(team, card, draws.event[1], day, config)
            scope_mid = team.committed_remaining_ticks()
            delta = scope_mid - scope_start
            if delta > 0:
                team = replace(team, event_added_ticks=team.event_added_ticks + delta)
            elif delta < 0:
                team = replace(team, discarded_ticks=team.discarded_ticks - delta)
        else:
            scope_mid = scope_start
        applied_total = 0
        idle_total = 0
        for member in sorted(team.members, key=lambda m: m.index):
            before = team.idle_ticks
            remaining_before = team.committed_remaining_ticks()
            team = _apply_member_progress(
                team, team.member(member.index), draws.progress[member.index], day, config
            )
            applied_total += remaining_before - team.committed_remaining_ticks()
            idle_total += team.idle_ticks - before
        scope_end = team.committed_remaining_ticks()
        points: tuple[tuple[int, int], ...] = team.burndown_actual
        if state.sprint_day == 1:
            points = points + ((0, scope_start),)
        points = points + ((state.sprint_day, scope_end),)
        team = replace(
            team,
            burndown_actual=points,
            members=tuple(
                replace(m, overtime_ticks=0)
                for m in sorted(team.members, key=lambda m: m.index)
            ),
        )
        team = _log(
            team, day, ENGINE, LogKind.PROGRESS,
            f"day {day} closed with {hours_str(scope_end)}h committed work left",
            {
                "sprint": state.sprint_index,
                "sprint_day": state.sprint_day,
                "scope_start": scope_start,
                "event_delta": scope_mid - scope_start,
                "applied": applied_total,
                "idle": idle_total,
                "scope_end": scope_end,
            },
        )
        teams[tid] = team

    last = state.sprint_day >= config.sprint_length_days
    return replace(
        state,
        teams=teams,
        absolute_day=day,
        sprint_day=state.sprint_day if last else state.sprint_day + 1,
        phase=Phase.SPRINT_CLOSED if last else Phase.IN_DAY,
        draw_history=state.draw_history + (draws,),
    )


def advance_day(state: SessionState) -> SessionState:
    """Draw the day's shared randomness and apply it."""
    if state.phase not in (Phase.PLANNING, Phase.IN_DAY):
        raise EngineError(PHASE_ERROR, f"cannot advance in phase {state.phase.value}")
    draws, rng = draw_day(
        day=state.pending_day(),
        sprint_day=state.sprint_day,
        team_size=state.config.team_size,
        progress_wheel=build_wheel(state.config.progress_wheel),
        deck=state.config.event_deck,
        rng=state.rng,
    )
    return apply_day(replace(state, rng=rng), draws)


def close_sprint(state: SessionState) -> SessionState:
    """Accept finished stories, revert the rest, and move the calendar."""
    if state.phase is not Phase.SPRINT_CLOSED:
        raise EngineError(PHASE_ERROR, f"cannot close a sprint in phase {state.phase.value}")
    config = state.config
    day = state.absolute_day
    teams = dict(state.teams)
    for tid, team in teams.items():
        stories = dict(team.stories)
        accepted: list[str] = []
        changed = True
        while changed:
            changed = False
            for sid in sorted(stories):
                story = stories[sid]
                if story.status is not StoryStatus.COMMITTED:
                    continue
                tasks = [t for t in team.tasks.values() if t.story == sid]
                if any(t.status is not TaskStatus.DONE for t in tasks):
                    continue
                if any(
                    stories[dep].status is not StoryStatus.DONE for dep in story.depends_on
                ):
                    continue
                stories[sid] = replace(story, status=StoryStatus.DONE)
                accepted.append(sid)
                changed = True
        reverted = sorted(
            sid for sid, s in stories.items() if s.status is StoryStatus.COMMITTED
        )
        for sid in reverted:
            stories[sid] = replace(stories[sid], status=StoryStatus.BACKLOG)
        team = replace(team, stories=stories)
        open_tasks = {
            t.id for t in team.tasks.values() if t.status is TaskStatus.IN_PROGRESS
        }
        team = _unassign_everywhere(team, open_tasks)
        team = replace(
            team, assignments={m.index: () for m in team.members}
        )
        user_left = sum(
            s.points for s in stories.values()
            if s.kind is StoryKind.USER and s.status is not StoryStatus.DONE
        )
        tech_left = sum(
            s.points for s in stories.values()
            if s.kind is StoryKind.TECHNICAL and s.status is not StoryStatus.DONE
        )
        team = replace(
            team,
            release_actual=team.release_actual + ((state.sprint_index, user_left, tech_left),),
            burndown_history=team.burndown_history + (team.burndown_actual,),
            burndown_actual=(),
            committed_ids=(),
        )
        team = _log(
            team, day, ENGINE, LogKind.EVENT,
            f"sprint {state.sprint_index} closed: accepted {', '.join(sorted(accepted)) or 'nothing'};"
            f" reverted {', '.join(reverted) or 'nothing'}",
            {
                "sprint": state.sprint_index,
                "accepted": sorted(accepted),
                "reverted": reverted,
            },
        )
        teams[tid] = team

    finished = state.sprint_index >= config.sprint_count
    return replace(
        state,
        teams=teams,
        sprint_index=state.sprint_index if finished else state.sprint_index + 1,
        sprint_day=1,
        phase=Phase.FINISHED if finished else Phase.PLANNING,
    )


@dataclass(frozen=True)
class SessionRecord:
    """One replayable log record: a command, a day of draws, or a close."""
    seq: int
    day: int
    team: str
    kind: str
    payload: Mapping[str, Any]

    def to_payload(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "day": self.day,
            "team": self.team,
            "kind": self.kind,
            "payload": dict(self.payload),
        }


SESSION_SCOPE = "session"
CLOSE_SPRINT_OP = "close-sprint"


def apply_record(state: SessionState, raw: Mapping[str, Any]) -> SessionState:
    """Apply one replayable log record; failures are tagged with its seq."""
    seq = raw.get("seq")
    kind = raw.get("kind")
    payload = raw.get("payload", {})
    try:
        if kind == "draws":
            draws = draws_from_payload(payload)
            state = replace(state, rng=state.rng.skip(draws.rng_steps))
            return apply_day(state, draws)
        if kind == "command" and raw.get("team") == SESSION_SCOPE:
            if payload.get("op") != CLOSE_SPRINT_OP:
                raise EngineError(
                    INTEGRITY_ERROR, f"unknown session command {payload.get('op')!r}"
                )
            return close_sprint(state)
        if kind == "command":
            return submit_command(state, raw.get("team"), command_from_payload(payload))
        raise EngineError(INTEGRITY_ERROR, f"unknown record kind {kind!r}")
    except EngineError as exc:
        if exc.code == INTEGRITY_ERROR:
            raise EngineError(INTEGRITY_ERROR, f"record {seq}: {exc.message}") from exc
        raise EngineError(
            INTEGRITY_ERROR,
            f"record {seq} no longer applies: [{exc.code}] {exc.message}",
        ) from exc


def replay(config: SessionConfig, records: Iterable[Mapping[str, Any]]) -> SessionState:
    """Rebuild a session from its record log without any randomness.

    Records must be seq-dense from 1 and in order; any gap, reorder, or
    record that no longer applies raises INTEGRITY_ERROR naming the seq.
    """
    state = init_session(config)
    expected = 1
    for raw in records:
        seq = raw.get("seq")
        if seq != expected:
            raise EngineError(
                INTEGRITY_ERROR, f"expected record seq {expected}, found {seq}"
            )
        state = apply_record(state, raw)
        expected += 1
    return state


class SessionRun:
    """Mutable runner that applies operations and keeps the replay log."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.state = init_session(config)
        self.records: list[SessionRecord] = []

    def _push(self, day: int, team: str, kind: str, payload: Mapping[str, Any]) -> SessionRecord:
        record = SessionRecord(
            seq=len(self.records) + 1, day=day, team=team, kind=kind, payload=payload
        )
        self.records.append(record)
        return record

    def command(self, team_id: str, command: Command) -> SessionRecord:
        day = self.state.pending_day()
        self.state = submit_command(self.state, team_id, command)
        return self._push(day, team_id, "command", command_to_payload(command))

    def advance(self) -> SessionRecord:
        day = self.state.pending_day()
        before = self.state
        self.state = advance_day(before)
        draws = self.state.draw_history[-1]
        return self._push(day, SESSION_SCOPE, "draws", draws.to_payload())

    def close_sprint(self) -> SessionRecord:
        day = self.state.absolute_day
        self.state = close_sprint(self.state)
        return self._push(day, SESSION_SCOPE, "command", {"op": CLOSE_SPRINT_OP})

    def record_payloads(self) -> list[dict[str, Any]]:
        return [r.to_payload() for r in self.records]
