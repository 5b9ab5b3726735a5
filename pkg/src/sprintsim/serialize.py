"""Canonical JSON forms for configs, teams, and whole sessions.

Canonical means sorted keys, no whitespace, and UTF-8 text, so equal
states always render to equal bytes.  Replay equivalence and export
determinism are checked by comparing these strings.
"""
from __future__ import annotations

import json
from typing import Any, Mapping

from .model import (
    EventCard,
    EventKind,
    IdealLinePolicy,
    LogEntry,
    LogKind,
    Member,
    MemberDef,
    Origin,
    Phase,
    PolicyConstants,
    Priority,
    SessionConfig,
    Story,
    StoryDef,
    StoryKind,
    StoryStatus,
    Task,
    TaskDef,
    TaskStatus,
    TeamState,
    WheelConfig,
    validate_config,
)

from fractions import Fraction


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _fraction_out(value: Fraction) -> float:
    return float(value)


def config_to_jsonable(config: SessionConfig) -> dict[str, Any]:
    return {
        "seed": config.seed,
        "team_count": config.team_count,
        "team_size": config.team_size,
        "sprint_length_days": config.sprint_length_days,
        "sprint_count": config.sprint_count,
        "nominal_day_ticks": config.nominal_day_ticks,
        "progress_wheel": {"slots": [[v, w] for v, w in config.progress_wheel.slots]},
        "event_deck": [
            {
                "id": c.id,
                "title": c.title,
                "kind": c.kind.value,
                "weight": c.weight,
                "params": dict(c.params),
            }
            for c in config.event_deck
        ],
        "policy": {
            "max_overtime_ticks": config.policy.max_overtime_ticks,
            "overtime_productivity": _fraction_out(config.policy.overtime_productivity),
            "overtime_cost_weight": _fraction_out(config.policy.overtime_cost_weight),
            "moscow_weights": dict(config.policy.moscow_weights),
        },
        "ideal_line": {
            "include_technical_stories": config.ideal_line.include_technical_stories,
            "include_ceremony_hours": config.ideal_line.include_ceremony_hours,
            "ceremony_ticks_per_member_day": config.ideal_line.ceremony_ticks_per_member_day,
        },
        "members": [{"name": m.name, "role": m.role} for m in config.members],
        "backlog": [
            {
                "id": s.id,
                "title": s.title,
                "kind": s.kind.value,
                "points": s.points,
                "priority": s.priority.value,
                "depends_on": list(s.depends_on),
                "tasks": [
                    {
                        "id": t.id,
                        "estimate_ticks": t.estimate_ticks,
                        "required_role": t.required_role,
                    }
                    for t in s.tasks
                ],
            }
            for s in config.backlog
        ],
    }


def config_from_jsonable(doc: Mapping[str, Any]) -> SessionConfig:
    try:
        wheel = WheelConfig(
            slots=tuple(
                (int(v), int(w)) for v, w in doc["progress_wheel"]["slots"]
            )
        )
        deck = tuple(
            EventCard(
                id=c["id"],
                title=c.get("title", c["id"]),
                kind=EventKind(c["kind"]),
                weight=int(c.get("weight", 1)),
                params=dict(c.get("params", {})),
            )
            for c in doc["event_deck"]
        )
        policy_doc = doc.get("policy", {})
        policy = PolicyConstants(
            max_overtime_ticks=int(policy_doc.get("max_overtime_ticks", 4)),
            overtime_productivity=Fraction(
                str(policy_doc.get("overtime_productivity", 0.75))
            ),
            overtime_cost_weight=Fraction(
                str(policy_doc.get("overtime_cost_weight", 1.5))
            ),
            moscow_weights=dict(
                policy_doc.get("moscow_weights", {"must": 3, "should": 2, "could": 1})
            ),
        )
        ideal_doc = doc.get("ideal_line", {})
        ideal = IdealLinePolicy(
            include_technical_stories=bool(
                ideal_doc.get("include_technical_stories", True)
            ),
            include_ceremony_hours=bool(ideal_doc.get("include_ceremony_hours", False)),
            ceremony_ticks_per_member_day=int(
                ideal_doc.get("ceremony_ticks_per_member_day", 1)
            ),
        )
        members = tuple(
            MemberDef(name=m["name"], role=m.get("role"))
            for m in doc.get("members", [])
        )
        backlog = tuple(
            StoryDef(
                id=s["id"],
                title=s.get("title", s["id"]),
                kind=StoryKind(s.get("kind", "user")),
                points=int(s["points"]),
                priority=Priority(s["priority"]),
                depends_on=tuple(s.get("depends_on", [])),
                tasks=tuple(
                    TaskDef(
                        id=t["id"],
                        estimate_ticks=int(t["estimate_ticks"]),
                        required_role=t.get("required_role"),
                    )
                    for t in s.get("tasks", [])
                ),
            )
            for s in doc["backlog"]
        )
        return SessionConfig(
            backlog=backlog,
            seed=int(doc["seed"]),
            team_count=int(doc.get("team_count", 1)),
            team_size=int(doc.get("team_size", 5)),
            sprint_length_days=int(doc.get("sprint_length_days", 10)),
            sprint_count=int(doc.get("sprint_count", 1)),
            nominal_day_ticks=int(doc.get("nominal_day_ticks", 12)),
            progress_wheel=wheel,
            event_deck=deck,
            policy=policy,
            ideal_line=ideal,
            members=members,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad session config document: {exc}") from exc


def log_entry_to_jsonable(entry: LogEntry) -> dict[str, Any]:
    return {
        "seq": entry.seq,
        "day": entry.day,
        "author": entry.author,
        "kind": entry.kind.value,
        "text": entry.text,
        "payload": None if entry.payload is None else dict(entry.payload),
    }


def member_to_jsonable(member: Member) -> dict[str, Any]:
    return {
        "index": member.index,
        "name": member.name,
        "role": member.role,
        "absent_from": member.absent_from,
        "absent_until": member.absent_until,
        "overtime_ticks": member.overtime_ticks,
    }


def story_to_jsonable(story: Story) -> dict[str, Any]:
    return {
        "id": story.id,
        "title": story.title,
        "kind": story.kind.value,
        "points": story.points,
        "priority": story.priority.value,
        "depends_on": list(story.depends_on),
        "status": story.status.value,
        "origin": story.origin.value,
    }


def task_to_jsonable(task: Task) -> dict[str, Any]:
    return {
        "id": task.id,
        "story": task.story,
        "estimate_ticks": task.estimate_ticks,
        "remaining_ticks": task.remaining_ticks,
        "required_role": task.required_role,
        "status": task.status.value,
        "origin": task.origin.value,
    }


def team_to_jsonable(team: TeamState) -> dict[str, Any]:
    return {
        "id": team.id,
        "members": [member_to_jsonable(m) for m in team.members],
        "stories": {sid: story_to_jsonable(s) for sid, s in team.stories.items()},
        "tasks": {tid: task_to_jsonable(t) for tid, t in team.tasks.items()},
        "assignments": {str(i): list(q) for i, q in team.assignments.items()},
        "charged_regular_ticks": team.charged_regular_ticks,
        "charged_overtime_ticks": team.charged_overtime_ticks,
        "committed_value": team.committed_value,
        "committed_ids": list(team.committed_ids),
        "decision_log": [log_entry_to_jsonable(e) for e in team.decision_log],
        "burndown_actual": [list(p) for p in team.burndown_actual],
        "burndown_history": [
            [list(p) for p in sprint] for sprint in team.burndown_history
        ],
        "release_actual": [list(p) for p in team.release_actual],
        "idle_ticks": team.idle_ticks,
        "event_added_ticks": team.event_added_ticks,
        "discarded_ticks": team.discarded_ticks,
    }


def state_to_jsonable(state) -> dict[str, Any]:
    return {
        "config": config_to_jsonable(state.config),
        "phase": state.phase.value,
        "sprint_index": state.sprint_index,
        "sprint_day": state.sprint_day,
        "absolute_day": state.absolute_day,
        "rng": {"seed": state.rng.seed, "counter": state.rng.counter},
        "teams": {tid: team_to_jsonable(t) for tid, t in state.teams.items()},
        "draw_history": [d.to_payload() for d in state.draw_history],
    }


def state_canonical(state) -> str:
    return canonical_json(state_to_jsonable(state))


def log_entry_from_jsonable(doc: Mapping[str, Any]) -> LogEntry:
    return LogEntry(
        seq=int(doc["seq"]),
        day=int(doc["day"]),
        author=doc["author"],
        kind=LogKind(doc["kind"]),
        text=doc["text"],
        payload=None if doc["payload"] is None else dict(doc["payload"]),
    )


def member_from_jsonable(doc: Mapping[str, Any]) -> Member:
    return Member(
        index=int(doc["index"]),
        name=doc["name"],
        role=doc["role"],
        absent_from=doc["absent_from"],
        absent_until=doc["absent_until"],
        overtime_ticks=int(doc["overtime_ticks"]),
    )


def story_from_jsonable(doc: Mapping[str, Any]) -> Story:
    return Story(
        id=doc["id"],
        title=doc["title"],
        kind=StoryKind(doc["kind"]),
        points=int(doc["points"]),
        priority=Priority(doc["priority"]),
        depends_on=tuple(doc["depends_on"]),
        status=StoryStatus(doc["status"]),
        origin=Origin(doc["origin"]),
    )


def task_from_jsonable(doc: Mapping[str, Any]) -> Task:
    return Task(
        id=doc["id"],
        story=doc["story"],
        estimate_ticks=int(doc["estimate_ticks"]),
        remaining_ticks=int(doc["remaining_ticks"]),
        required_role=doc["required_role"],
        status=TaskStatus(doc["status"]),
        origin=Origin(doc["origin"]),
    )


def team_from_jsonable(doc: Mapping[str, Any]) -> TeamState:
    return TeamState(
        id=doc["id"],
        members=tuple(member_from_jsonable(m) for m in doc["members"]),
        stories={sid: story_from_jsonable(s) for sid, s in doc["stories"].items()},
        tasks={tid: task_from_jsonable(t) for tid, t in doc["tasks"].items()},
        assignments={int(i): tuple(q) for i, q in doc["assignments"].items()},
        charged_regular_ticks=int(doc["charged_regular_ticks"]),
        charged_overtime_ticks=int(doc["charged_overtime_ticks"]),
        committed_value=int(doc["committed_value"]),
        committed_ids=tuple(doc["committed_ids"]),
        decision_log=tuple(log_entry_from_jsonable(e) for e in doc["decision_log"]),
        burndown_actual=tuple((int(d), int(t)) for d, t in doc["burndown_actual"]),
        burndown_history=tuple(
            tuple((int(d), int(t)) for d, t in sprint)
            for sprint in doc["burndown_history"]
        ),
        release_actual=tuple(
            (int(s), int(u), int(t)) for s, u, t in doc["release_actual"]
        ),
        idle_ticks=int(doc["idle_ticks"]),
        event_added_ticks=int(doc["event_added_ticks"]),
        discarded_ticks=int(doc["discarded_ticks"]),
    )


def state_from_jsonable(doc: Mapping[str, Any]):
    """Rebuild a full session state, the exact inverse of state_to_jsonable."""
    from .chance import RngState, draws_from_payload
    from .engine import SessionState

    return SessionState(
        config=config_from_jsonable(doc["config"]),
        teams={tid: team_from_jsonable(t) for tid, t in doc["teams"].items()},
        rng=RngState(seed=int(doc["rng"]["seed"]), counter=int(doc["rng"]["counter"])),
        sprint_index=int(doc["sprint_index"]),
        sprint_day=int(doc["sprint_day"]),
        absolute_day=int(doc["absolute_day"]),
        draw_history=tuple(draws_from_payload(d) for d in doc["draw_history"]),
        phase=Phase(doc["phase"]),
    )


def _config_schema() -> dict[str, Any]:
    import importlib.resources

    text = (
        importlib.resources.files("sprintsim")
        .joinpath("schema/session.schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def config_document_errors(doc: Any) -> list[str]:
    """Structural and semantic problems with a config document, if any."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(_config_schema())
    problems = [
        f"{'/'.join(str(p) for p in err.absolute_path) or '(root)'}: {err.message}"
        for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    ]
    if problems:
        return problems
    try:
        config = config_from_jsonable(doc)
    except ValueError as exc:
        return [str(exc)]
    return validate_config(config)


def load_config_document(doc: Any) -> SessionConfig:
    """Parse and fully validate a config document or raise ValueError."""
    problems = config_document_errors(doc)
    if problems:
        raise ValueError("; ".join(problems))
    return config_from_jsonable(doc)
