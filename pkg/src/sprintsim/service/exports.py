"""Deterministic text exports of a session: record log, burndown, leaderboard.

Same session, same bytes: canonical JSON lines for the log and csv
module output with fixed column orders and a bare newline terminator.
"""
from __future__ import annotations

import csv
import io
from typing import Any, Iterable, Mapping

from ..metrics import ideal_line, leaderboard
from ..model import hours
from ..serialize import canonical_json

LOG_COLUMNS = ("seq", "day", "team", "actor", "kind", "summary", "payload")


def record_summary(record: Mapping[str, Any]) -> str:
    payload = record.get("payload", {})
    if record.get("kind") == "draws":
        event = payload.get("event")
        suffix = f", event {event['card']}" if event else ", no event"
        return f"day {payload.get('day')} draws{suffix}"
    op = payload.get("op", "?")
    if op == "plan-commit":
        return f"plan-commit {' '.join(payload.get('story_ids', []))}"
    if op == "assign-task":
        return f"assign {payload.get('task')} to member {payload.get('member')}"
    if op == "unassign-task":
        return f"unassign {payload.get('task')} from member {payload.get('member')}"
    if op == "set-overtime":
        return f"member {payload.get('member')} overtime {payload.get('ticks')} ticks"
    if op == "drop-story":
        return f"drop {payload.get('story')}"
    if op in ("log-note", "facilitator-note"):
        return f"{op}: {payload.get('text', '')}"
    return op


def log_jsonl(records: Iterable[Mapping[str, Any]]) -> str:
    return "".join(canonical_json(dict(r)) + "\n" for r in records)


def log_csv(records: Iterable[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOG_COLUMNS)
    for record in records:
        writer.writerow([
            record.get("seq"),
            record.get("day"),
            record.get("team"),
            record.get("actor", ""),
            record.get("kind"),
            record_summary(record),
            canonical_json(record.get("payload", {})),
        ])
    return buf.getvalue()


def burndown_csv(state) -> str:
    """Every sprint's actual line plus the corresponding ideal points."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["team", "sprint", "day", "remaining_hours", "ideal_hours"])
    config = state.config
    for tid in sorted(state.teams):
        team = state.teams[tid]
        sprints = [
            (i + 1, points) for i, points in enumerate(team.burndown_history)
        ]
        if team.burndown_actual:
            sprints.append((len(team.burndown_history) + 1, team.burndown_actual))
        for sprint, points in sprints:
            if not points:
                continue
            ideal = ideal_line(
                points[0][1],
                config.sprint_length_days,
                config.team_size,
                config.ideal_line,
            )
            ideal_at = {int(x): y for x, y in ideal.points}
            for day, ticks_left in points:
                writer.writerow([
                    tid, sprint, day,
                    format(float(hours(ticks_left)), ".6g"),
                    format(float(ideal_at.get(day, 0)), ".6g"),
                ])
    return buf.getvalue()


def leaderboard_csv(state) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "rank", "team", "value", "cost_hours", "efficiency",
        "effectiveness", "event_value",
    ])
    rows = leaderboard(state.teams.values(), state.config.policy)
    for rank, row in enumerate(rows, start=1):
        writer.writerow([
            rank, row.team_id, row.value,
            format(float(row.cost_hours), ".6g"),
            "" if row.efficiency is None else format(float(row.efficiency), ".6g"),
            "" if row.effectiveness is None else format(float(row.effectiveness), ".6g"),
            row.event_value,
        ])
    return buf.getvalue()
