"""Shipped configuration: default wheel, event deck, and demo backlogs.

The default progress wheel has 20 equal slots over small hour values
and hits a 5.4 hour mean with a 2.94 hour standard deviation, slightly
below the 6 nominal hours a member is charged for, so a sprint planned
to full capacity usually misses.
"""
from __future__ import annotations

from dataclasses import replace

from .model import (
    EventCard,
    EventKind,
    MemberDef,
    Priority,
    SessionConfig,
    StoryDef,
    StoryKind,
    TaskDef,
    WheelConfig,
    ticks,
)

# hour value -> slot count, 20 slots total
_DEFAULT_WHEEL_HOURS = ((0, 2), (2, 1), (3, 2), (4, 3), (6, 6), (7, 2), (8, 2), (10, 1), (12, 1))

DEFAULT_WHEEL = WheelConfig(
    slots=tuple((ticks(h), count) for h, count in _DEFAULT_WHEEL_HOURS)
)

DEFAULT_DECK: tuple[EventCard, ...] = (
    EventCard(id="no-event", title="Quiet day", kind=EventKind.NO_EVENT, weight=8),
    EventCard(
        id="defect",
        title="Escaped defect needs fixing",
        kind=EventKind.DEFECT,
        weight=3,
        params={"estimate_ticks": ticks(6)},
    ),
    EventCard(
        id="rush-request",
        title="Stakeholder rushes in a new request",
        kind=EventKind.ADD_STORY,
        weight=2,
        params={
            "story": {
                "title": "Rush feature request",
                "points": 10,
                "priority": "must",
                "task_ticks": [ticks(8), ticks(8), ticks(8)],
            }
        },
    ),
    EventCard(
        id="flu",
        title="Team member out sick",
        kind=EventKind.ABSENCE,
        weight=2,
        params={"duration_days": 3},
    ),
    EventCard(
        id="priority-shuffle",
        title="Stakeholders reshuffle priorities",
        kind=EventKind.PRIORITY_CHANGE,
        weight=2,
        params={"selector": "lowest-value-committed", "new_priority": "must"},
    ),
    EventCard(
        id="budget-cut",
        title="Budget cut removes committed scope",
        kind=EventKind.SCOPE_CUT,
        weight=1,
        params={"selector": "lowest-value-committed"},
    ),
    EventCard(
        id="underestimated",
        title="Task turns out harder than estimated",
        kind=EventKind.ESTIMATE_REVISION,
        weight=2,
        params={"selector": "largest-remaining-task", "numerator": 3, "denominator": 2},
    ),
)


def _story(
    sid: str,
    title: str,
    priority: Priority,
    points: int,
    task_hours: tuple[int, ...],
    depends_on: tuple[str, ...] = (),
    kind: StoryKind = StoryKind.USER,
    roles: tuple[str | None, ...] | None = None,
) -> StoryDef:
    return StoryDef(
        id=sid,
        title=title,
        kind=kind,
        points=points,
        priority=priority,
        depends_on=depends_on,
        tasks=tuple(
            TaskDef(
                id=f"{sid}-T{i + 1}",
                estimate_ticks=ticks(h),
                required_role=roles[i] if roles else None,
            )
            for i, h in enumerate(task_hours)
        ),
    )


# A small web-shop release: 326 planned hours, so a five-person
# ten-day sprint (300 hours nominal) cannot take everything.
DEFAULT_BACKLOG: tuple[StoryDef, ...] = (
    _story("US01", "Customer account sign-up", Priority.MUST, 8, (8, 8, 6, 6)),
    _story("US02", "Sign-in and session handling", Priority.MUST, 5, (6, 6, 4), ("US01",)),
    _story("US03", "Profile and preferences page", Priority.SHOULD, 3, (6, 6, 4), ("US02",)),
    _story("US04", "Product catalog browsing", Priority.MUST, 8, (8, 8, 6, 6)),
    _story("US05", "Full-text product search", Priority.SHOULD, 5, (8, 6, 6), ("US04",)),
    _story("US06", "Shopping cart", Priority.MUST, 8, (8, 6, 8, 6), ("US04",)),
    _story("US07", "Checkout and payment", Priority.MUST, 13, (8, 8, 8, 6, 6), ("US06",)),
    _story("US08", "Order history view", Priority.SHOULD, 5, (6, 6, 6), ("US07",)),
    _story("US09", "Order confirmation emails", Priority.SHOULD, 3, (6, 6), ("US07",)),
    _story("US10", "Admin product dashboard", Priority.COULD, 5, (8, 8, 6)),
    _story("US11", "Sales analytics reports", Priority.COULD, 3, (8, 6, 4), ("US10",)),
    _story("US12", "Wishlist", Priority.COULD, 2, (6, 4), ("US02",)),
    _story("US13", "Mobile responsive layout", Priority.SHOULD, 5, (8, 6, 6), ("US03",)),
    _story("US14", "Social media sharing", Priority.COULD, 2, (6, 6), ("US03",)),
    _story("TS01", "Continuous integration pipeline", Priority.MUST, 3, (6, 6), kind=StoryKind.TECHNICAL),
    _story("TS02", "Database migration tooling", Priority.SHOULD, 2, (8, 6), kind=StoryKind.TECHNICAL),
    _story("TS03", "Performance hardening", Priority.COULD, 3, (8, 8), ("US07",), kind=StoryKind.TECHNICAL),
)


def default_config(seed: int = 1, **overrides) -> SessionConfig:
    config = SessionConfig(
        backlog=DEFAULT_BACKLOG,
        seed=seed,
        team_count=1,
        team_size=5,
        sprint_length_days=10,
        sprint_count=1,
        progress_wheel=DEFAULT_WHEEL,
        event_deck=DEFAULT_DECK,
    )
    return replace(config, **overrides) if overrides else config


def flat_backlog(
    stories: int = 10,
    story_hours: int = 30,
    task_hours: int = 6,
    points: int = 5,
    priority: Priority = Priority.MUST,
) -> tuple[StoryDef, ...]:
    """Independent same-shaped must stories; handy for capacity studies.

    With the defaults this is exactly the 300 nominal hours of a
    five-person ten-day sprint, cut into 6 hour tasks.
    """
    if story_hours % task_hours:
        raise ValueError("story_hours must divide evenly into tasks")
    per = story_hours // task_hours
    return tuple(
        _story(f"B{i + 1:02d}", f"Feature block {i + 1}", priority, points,
               tuple(task_hours for _ in range(per)))
        for i in range(stories)
    )


SPECIALIST_ROLES = ("db", "ui", "api")


def specialist_pair(seed: int) -> tuple[SessionConfig, SessionConfig]:
    """Twin configs differing only in role restrictions.

    The restricted twin marks 60 percent of the task hours as specialist
    work (three roles, one qualified member each); the open twin is the
    same board with every restriction removed.  Members and seed match,
    so draws and events line up one for one.
    """
    roles_per_story: tuple[str | None, ...] = ("db", "ui", "api", None, None)
    backlog = tuple(
        _story(
            f"B{i + 1:02d}",
            f"Feature block {i + 1}",
            Priority.MUST,
            5,
            (6, 6, 6, 6, 6),
            roles=roles_per_story,
        )
        for i in range(10)
    )
    members = (
        MemberDef(name="Dana", role="db"),
        MemberDef(name="Uma", role="ui"),
        MemberDef(name="Ari", role="api"),
        MemberDef(name="Gene"),
        MemberDef(name="Blake"),
    )
    specialist = SessionConfig(
        backlog=backlog,
        seed=seed,
        team_size=5,
        progress_wheel=DEFAULT_WHEEL,
        event_deck=DEFAULT_DECK,
        members=members,
    )
    open_backlog = tuple(
        replace(
            s,
            tasks=tuple(replace(t, required_role=None) for t in s.tasks),
        )
        for s in backlog
    )
    generalist = replace(specialist, backlog=open_backlog)
    return specialist, generalist
