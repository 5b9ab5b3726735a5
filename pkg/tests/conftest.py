"""Shared test helpers: a quiet deck, a scripted session driver, and a
plain-random config generator for fuzz suites that do not use hypothesis."""
from __future__ import annotations

import random

from sprintsim.defaults import DEFAULT_DECK
from sprintsim.engine import (
    AssignTask,
    EngineError,
    PlanCommit,
    SessionRun,
    SetOvertime,
    UnassignTask,
)
from sprintsim.model import (
    EventCard,
    EventKind,
    Phase,
    Priority,
    SessionConfig,
    StoryDef,
    StoryKind,
    StoryStatus,
    TaskDef,
    WheelConfig,
)

QUIET_DECK = (
    EventCard(id="no-event", title="Quiet", kind=EventKind.NO_EVENT, weight=1),
)


def scripted_play(config: SessionConfig, choices) -> SessionRun:
    """Interpret a flat integer script as best-effort legal commands."""
    run = SessionRun(config)
    cursor = 0

    def pick(size):
        nonlocal cursor
        if size <= 0:
            return 0
        value = choices[cursor % len(choices)] if choices else 0
        cursor += 1
        return value % size

    while run.state.phase is not Phase.FINISHED:
        if run.state.phase is Phase.SPRINT_CLOSED:
            run.close_sprint()
            continue
        for tid in run.state.teams:
            team = run.state.team(tid)
            if run.state.phase is Phase.PLANNING:
                backlog = sorted(
                    s.id for s in team.stories.values()
                    if s.status is StoryStatus.BACKLOG
                )
                if backlog:
                    take = pick(len(backlog)) + 1
                    batch = set(backlog[:take])
                    for sid in list(batch):
                        batch.update(team.stories[sid].depends_on)
                    try:
                        run.command(tid, PlanCommit(story_ids=tuple(sorted(batch))))
                    except EngineError:
                        pass
            for _ in range(pick(4)):
                action = pick(3)
                team = run.state.team(tid)
                try:
                    if action == 0:
                        open_tasks = sorted(
                            t.id for t in team.tasks.values()
                            if t.remaining_ticks > 0
                            and team.stories[t.story].status is StoryStatus.COMMITTED
                        )
                        if open_tasks:
                            member = pick(len(team.members)) + 1
                            run.command(tid, AssignTask(
                                member=member,
                                task=open_tasks[pick(len(open_tasks))],
                            ))
                    elif action == 1:
                        member = pick(len(team.members)) + 1
                        run.command(tid, SetOvertime(member=member, ticks=pick(5)))
                    else:
                        queues = [
                            (m, q[0]) for m, q in sorted(team.assignments.items()) if q
                        ]
                        if queues:
                            member, task = queues[pick(len(queues))]
                            run.command(tid, UnassignTask(member=member, task=task))
                except EngineError:
                    pass
        run.advance()
    return run


def random_board(rng: random.Random) -> tuple[StoryDef, ...]:
    stories = []
    for index in range(rng.randint(1, 6)):
        sid = f"S{index + 1}"
        tasks = tuple(
            TaskDef(id=f"{sid}-T{t + 1}", estimate_ticks=rng.randint(1, 20))
            for t in range(rng.randint(1, 3))
        )
        deps = tuple(
            f"S{j + 1}" for j in range(index) if rng.random() < 0.25
        )
        stories.append(StoryDef(
            id=sid, title=sid,
            kind=rng.choice(list(StoryKind)),
            points=rng.randint(1, 8),
            priority=rng.choice(list(Priority)),
            depends_on=deps,
            tasks=tasks,
        ))
    return tuple(stories)


def random_config(rng: random.Random, **overrides) -> SessionConfig:
    values = rng.sample(range(0, 21), rng.randint(1, 4))
    slots = tuple(sorted((v, rng.randint(1, 5)) for v in values))
    settings = dict(
        backlog=random_board(rng),
        seed=rng.randrange(2 ** 48),
        team_count=rng.randint(1, 3),
        team_size=rng.randint(1, 4),
        sprint_length_days=rng.randint(2, 10),
        sprint_count=rng.randint(1, 2),
        progress_wheel=WheelConfig(slots=slots),
        event_deck=DEFAULT_DECK if rng.random() < 0.7 else QUIET_DECK,
    )
    settings.update(overrides)
    return SessionConfig(**settings)


def random_script(rng: random.Random) -> list[int]:
    return [rng.randrange(1_000_000) for _ in range(rng.randint(0, 60))]
