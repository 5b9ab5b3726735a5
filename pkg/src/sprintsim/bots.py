"""Scripted team policies for headless play.

A bot looks at one team's board and emits ordinary commands: what to
commit at planning, who picks up which task at the daily scrum, and
when to elect overtime. Bots never touch the engine's random stream;
the one stochastic policy carries its own seeded generator.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .engine import AssignTask, Command, PlanCommit, SessionState, SetOvertime
from .model import (
    Phase,
    SessionConfig,
    Story,
    StoryStatus,
    TaskStatus,
    TeamState,
    Origin,
    story_value,
)

POLICY_NAMES = ("greedy-value", "dependency-first", "specialist-aware", "random")
OVERTIME_RULES = ("never", "when-behind-ideal")


@dataclass(frozen=True)
class BotPolicy:
    """A named scheduling strategy plus an overtime election rule."""

    name: str = "greedy-value"
    overtime_rule: str = "never"
    queue_depth: int = 2
    commit_event_stories: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}")
        if self.overtime_rule not in OVERTIME_RULES:
            raise ValueError(f"unknown overtime rule {self.overtime_rule!r}")


def _rng_for(policy: BotPolicy, state: SessionState, team_id: str) -> random.Random:
    # stable per (policy seed, session seed, team, day) so replays of the
    # same batch land on identical choices
    key = (policy.seed, state.config.seed, team_id, state.absolute_day)
    return random.Random(repr(key))


def _story_remaining(team: TeamState, sid: str) -> int:
    return sum(t.remaining_ticks for t in team.tasks.values() if t.story == sid)


def _density(team: TeamState, story: Story, config: SessionConfig) -> Fraction:
    """Value per remaining tick; finished-but-unaccepted work is free value."""
    remaining = _story_remaining(team, story.id)
    value = story_value(story, config.policy)
    if remaining == 0:
        return Fraction(value * 10 ** 6 + 1)
    return Fraction(value, remaining)


def _backlog_closure(team: TeamState, sid: str) -> set[str]:
    """The story plus every backlog dependency it drags along, transitively."""
    closure: set[str] = set()
    stack = [sid]
    while stack:
        cur = stack.pop()
        if cur in closure:
            continue
        closure.add(cur)
        for dep in team.stories[cur].depends_on:
            dep_story = team.stories.get(dep)
            if dep_story is not None and dep_story.status is StoryStatus.BACKLOG:
                stack.append(dep)
    return closure


def _unlocked_ticks(team: TeamState, sid: str) -> int:
    """Remaining work in backlog stories that transitively depend on sid."""
    dependents: set[str] = set()
    changed = True
    while changed:
        changed = False
        for story in team.stories.values():
            if story.id in dependents or story.status is not StoryStatus.BACKLOG:
                continue
            if any(d == sid or d in dependents for d in story.depends_on):
                dependents.add(story.id)
                changed = True
    return sum(_story_remaining(team, d) for d in dependents)


def _plan_order(
    policy: BotPolicy, team: TeamState, candidates: list[Story],
    config: SessionConfig, rng: random.Random,
) -> list[Story]:
    if policy.name == "random":
        shuffled = list(candidates)
        rng.shuffle(shuffled)
        return shuffled
    if policy.name == "dependency-first":
        return sorted(
            candidates,
            key=lambda s: (
                -_unlocked_ticks(team, s.id),
                -_density(team, s, config),
                s.id,
            ),
        )
    return sorted(
        candidates, key=lambda s: (-_density(team, s, config), s.id)
    )


def plan_commands(
    policy: BotPolicy, state: SessionState, team_id: str
) -> list[Command]:
    """Pick a sprint commitment that fits the nominal capacity."""
    team = state.team(team_id)
    config = state.config
    rng = _rng_for(policy, state, team_id)
    candidates = [
        s for s in team.stories.values() if s.status is StoryStatus.BACKLOG
    ]
    budget = config.capacity_ticks() - team.committed_remaining_ticks()
    picked: list[str] = []
    picked_set: set[str] = set()
    for story in _plan_order(policy, team, candidates, config, rng):
        if story.id in picked_set:
            continue
        if story_value(story, config.policy) == 0 and policy.name != "random":
            continue
        closure = _backlog_closure(team, story.id) - picked_set
        cost = sum(_story_remaining(team, sid) for sid in closure)
        if cost > budget:
            continue
        budget -= cost
        # dependencies first keeps the batch readable in the log
        for sid in sorted(closure, key=lambda c: (len(_backlog_closure(team, c)), c)):
            picked.append(sid)
            picked_set.add(sid)
    if not picked:
        return []
    return [PlanCommit(story_ids=tuple(picked))]


def _event_commit_commands(
    policy: BotPolicy, state: SessionState, team_id: str, rng: random.Random
) -> list[Command]:
    """Mid-sprint, take on injected stories that still fit the calendar."""
    if not policy.commit_event_stories:
        return []
    team = state.team(team_id)
    config = state.config
    days_left = config.sprint_length_days - state.sprint_day + 1
    budget = days_left * config.team_size * config.nominal_day_ticks
    budget -= team.committed_remaining_ticks()
    commands: list[Command] = []
    injected = sorted(
        (
            s for s in team.stories.values()
            if s.status is StoryStatus.BACKLOG and s.origin is Origin.EVENT_INJECTED
        ),
        key=lambda s: s.id,
    )
    for story in injected:
        if story_value(story, config.policy) == 0:
            continue
        closure = _backlog_closure(team, story.id)
        if any(team.stories[sid].origin is not Origin.EVENT_INJECTED for sid in closure):
            continue
        cost = sum(_story_remaining(team, sid) for sid in closure)
        if cost > budget:
            continue
        if policy.name == "random" and rng.random() < 0.5:
            continue
        budget -= cost
        commands.append(PlanCommit(story_ids=tuple(sorted(closure))))
    return commands


def _open_tasks(team: TeamState) -> list:
    queued = {tid for q in team.assignments.values() for tid in q}
    out = []
    for task in team.tasks.values():
        if task.status is TaskStatus.DONE or task.remaining_ticks == 0:
            continue
        if task.id in queued:
            continue
        story = team.stories[task.story]
        if story.status is not StoryStatus.COMMITTED:
            continue
        out.append(task)
    return out


def _task_order(
    policy: BotPolicy, team: TeamState, tasks: list, config: SessionConfig,
    rng: random.Random,
) -> list:
    if policy.name == "random":
        shuffled = list(tasks)
        rng.shuffle(shuffled)
        return shuffled
    if policy.name == "dependency-first":
        return sorted(
            tasks,
            key=lambda t: (-_unlocked_ticks(team, t.story), t.story, t.id),
        )
    return sorted(
        tasks,
        key=lambda t: (
            -_density(team, team.stories[t.story], config),
            t.story,
            t.id,
        ),
    )


def schedule_commands(
    policy: BotPolicy, state: SessionState, team_id: str
) -> list[Command]:
    """Top up each present member's queue with allowed open tasks."""
    team = state.team(team_id)
    config = state.config
    day = state.pending_day()
    rng = _rng_for(policy, state, team_id)
    open_tasks = _task_order(policy, team, _open_tasks(team), config, rng)
    members = [m for m in team.members if not m.absent_on(day)]
    if policy.name == "random":
        rng.shuffle(members)

    commands: list[Command] = []
    claimed: set[str] = set()
    load = {m.index: len(team.queue(m.index)) for m in team.members}

    def give(member, task) -> None:
        commands.append(AssignTask(member=member.index, task=task.id))
        claimed.add(task.id)
        load[member.index] += 1

    if policy.name == "specialist-aware":
        # specialists stock up on their own role's tasks before anyone
        # grabs generic work
        for member in members:
            if member.role is None:
                continue
            for task in open_tasks:
                if load[member.index] >= policy.queue_depth:
                    break
                if task.id in claimed or task.required_role != member.role:
                    continue
                give(member, task)
    for member in members:
        for task in open_tasks:
            if load[member.index] >= policy.queue_depth:
                break
            if task.id in claimed:
                continue
            if task.required_role is not None and task.required_role != member.role:
                continue
            give(member, task)
    return commands


def _behind_ideal(state: SessionState, team: TeamState) -> bool:
    """More than one nominal team-day behind the straight line to zero."""
    if not team.burndown_actual:
        return False
    config = state.config
    scope0 = team.burndown_actual[0][1]
    days = config.sprint_length_days
    elapsed = state.sprint_day - 1
    ideal = Fraction(scope0) * (days - elapsed) / days
    actual = team.committed_remaining_ticks()
    return actual - ideal > config.team_size * config.nominal_day_ticks


def overtime_commands(
    policy: BotPolicy, state: SessionState, team_id: str
) -> list[Command]:
    if policy.overtime_rule != "when-behind-ideal":
        return []
    team = state.team(team_id)
    if not _behind_ideal(state, team):
        return []
    day = state.pending_day()
    cap = state.config.policy.max_overtime_ticks
    return [
        SetOvertime(member=m.index, ticks=cap)
        for m in team.members
        if not m.absent_on(day) and m.overtime_ticks != cap
    ]


def bot_commands(
    policy: BotPolicy, state: SessionState, team_id: str
) -> list[Command]:
    """Everything the bot wants to do before the next wheel spin."""
    commands: list[Command] = []
    if state.phase is Phase.PLANNING:
        commands.extend(plan_commands(policy, state, team_id))
    else:
        rng = _rng_for(policy, state, team_id)
        commands.extend(_event_commit_commands(policy, state, team_id, rng))
    commands.extend(overtime_commands(policy, state, team_id))
    return commands


def drive_team_day(
    policy: BotPolicy, state: SessionState, team_id: str
) -> SessionState:
    """Apply the bot's decisions for one team, rescheduling after commits."""
    from .engine import submit_command

    for command in bot_commands(policy, state, team_id):
        state = submit_command(state, team_id, command)
    for command in schedule_commands(policy, state, team_id):
        state = submit_command(state, team_id, command)
    return state
