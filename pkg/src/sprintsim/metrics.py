"""Burndown series, value, cost, and the leaderboard.

Money-like quantities stay exact: costs and ratios are Fractions until
they are rendered.  Delivery value counts user stories only; technical
stories carry points for the release burndown but earn nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .model import (
    IdealLinePolicy,
    Origin,
    PolicyConstants,
    StoryKind,
    StoryStatus,
    TaskStatus,
    TeamState,
    hours,
    story_value,
)


@dataclass(frozen=True)
class Series:
    name: str
    points: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        xs = [x for x, _ in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError(f"series {self.name} x values must be strictly increasing")

    def as_floats(self) -> list[list[float]]:
        return [[float(x), float(y)] for x, y in self.points]


def ideal_line(
    scope_ticks: int,
    sprint_length_days: int,
    team_size: int,
    policy: IdealLinePolicy | None = None,
    name: str = "ideal",
) -> Series:
    """Straight line from the committed scope (in hours) down to zero.

    With ceremony hours included the line starts higher: the scope plus
    the ceremony overhead the whole team will spend across the sprint.
    """
    policy = policy or IdealLinePolicy()
    start = hours(scope_ticks)
    if policy.include_ceremony_hours:
        start += hours(
            policy.ceremony_ticks_per_member_day * team_size * sprint_length_days
        )
    days = sprint_length_days
    return Series(
        name=name,
        points=tuple(
            (Fraction(d), start * (days - d) / days) for d in range(days + 1)
        ),
    )


def sprint_burndown(team: TeamState, sprint: int | None = None) -> Series:
    """The recorded actual line for the current (or an archived) sprint."""
    if sprint is None or sprint - 1 == len(team.burndown_history):
        points = team.burndown_actual
    else:
        try:
            points = team.burndown_history[sprint - 1]
        except IndexError:
            raise ValueError(f"no burndown recorded for sprint {sprint}") from None
    return Series(
        name=f"{team.id} actual",
        points=tuple((Fraction(d), hours(t)) for d, t in points),
    )


def release_burndown(team: TeamState, include_technical: bool = True) -> Series:
    return Series(
        name=f"{team.id} release",
        points=tuple(
            (Fraction(sprint), Fraction(user + (tech if include_technical else 0)))
            for sprint, user, tech in team.release_actual
        ),
    )


def value_delivered(team: TeamState, constants: PolicyConstants) -> int:
    return sum(
        story_value(s, constants)
        for s in team.stories.values()
        if s.status is StoryStatus.DONE
    )


def event_value_delivered(team: TeamState, constants: PolicyConstants) -> int:
    return sum(
        story_value(s, constants)
        for s in team.stories.values()
        if s.status is StoryStatus.DONE and s.origin is Origin.EVENT_INJECTED
    )


def labor_cost_hours(team: TeamState, constants: PolicyConstants) -> Fraction:
    return hours(team.charged_regular_ticks) + constants.overtime_cost_weight * hours(
        team.charged_overtime_ticks
    )


def completed_estimate_ticks(team: TeamState) -> int:
    return sum(
        t.estimate_ticks for t in team.tasks.values() if t.status is TaskStatus.DONE
    )


def efficiency(team: TeamState, constants: PolicyConstants) -> Fraction | None:
    """Original estimates completed per weighted labor hour; None if unworked."""
    cost = labor_cost_hours(team, constants)
    if cost == 0:
        return None
    return hours(completed_estimate_ticks(team)) / cost


def effectiveness(team: TeamState, constants: PolicyConstants) -> Fraction | None:
    """Delivered share of the committed value; None before any commitment."""
    if team.committed_value == 0:
        return None
    return Fraction(value_delivered(team, constants), team.committed_value)


@dataclass(frozen=True)
class LeaderboardRow:
    team_id: str
    value: int
    cost_hours: Fraction
    efficiency: Fraction | None
    effectiveness: Fraction | None
    event_value: int

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "team": self.team_id,
            "value": self.value,
            "cost_hours": float(self.cost_hours),
            "efficiency": None if self.efficiency is None else float(self.efficiency),
            "effectiveness": None
            if self.effectiveness is None
            else float(self.effectiveness),
            "event_value": self.event_value,
        }


def leaderboard(
    teams: Iterable[TeamState], constants: PolicyConstants
) -> list[LeaderboardRow]:
    """Teams ranked by value delivered, then lower cost, then id."""
    rows = []
    for team in teams:
        value = value_delivered(team, constants)
        cost = labor_cost_hours(team, constants)
        eff = efficiency(team, constants)
        rows.append(
            LeaderboardRow(
                team_id=team.id,
                value=value,
                cost_hours=cost,
                efficiency=eff,
                effectiveness=effectiveness(team, constants),
                event_value=event_value_delivered(team, constants),
            )
        )
    rows.sort(key=lambda r: (-r.value, r.cost_hours, r.team_id))
    return rows


def metrics_document(state) -> dict[str, Any]:
    """Everything a scoreboard needs, JSON-ready, one key per team."""
    config = state.config
    teams_doc: dict[str, Any] = {}
    for tid, team in state.teams.items():
        scope = team.burndown_actual[0][1] if team.burndown_actual else (
            team.committed_remaining_ticks()
        )
        teams_doc[tid] = {
            "burndown": sprint_burndown(team).as_floats(),
            "burndown_history": [
                Series(
                    name=f"{tid} sprint {i + 1}",
                    points=tuple((Fraction(d), hours(t)) for d, t in pts),
                ).as_floats()
                for i, pts in enumerate(team.burndown_history)
            ],
            "ideal": ideal_line(
                scope,
                config.sprint_length_days,
                config.team_size,
                config.ideal_line,
            ).as_floats(),
            "release": release_burndown(
                team, config.ideal_line.include_technical_stories
            ).as_floats(),
            "value": value_delivered(team, config.policy),
            "committed_value": team.committed_value,
            "cost_hours": float(labor_cost_hours(team, config.policy)),
            "idle_hours": float(hours(team.idle_ticks)),
            "efficiency": None
            if (eff := efficiency(team, config.policy)) is None
            else float(eff),
            "effectiveness": None
            if (out := effectiveness(team, config.policy)) is None
            else float(out),
        }
    return {
        "sprint_index": state.sprint_index,
        "sprint_day": state.sprint_day,
        "absolute_day": state.absolute_day,
        "phase": state.phase.value,
        "teams": teams_doc,
        "leaderboard": [
            row.to_jsonable()
            for row in leaderboard(state.teams.values(), config.policy)
        ],
    }
