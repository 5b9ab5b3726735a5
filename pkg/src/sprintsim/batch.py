"""Monte Carlo runs of one team under a scripted policy.

Each run reseeds the engine, plays every sprint to the end, and folds
the outcome into summary statistics. A bad run records its error and
keeps the batch going.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass, replace
from fractions import Fraction

from .bots import BotPolicy, drive_team_day
from .engine import EngineError, SessionState, advance_day, close_sprint, init_session
from .metrics import effectiveness, efficiency, labor_cost_hours, value_delivered
from .model import Phase, SessionConfig, StoryStatus, hours


@dataclass(frozen=True)
class RunOutcome:
    seed: int
    value: int
    committed_value: int
    cost_hours: Fraction
    efficiency: Fraction | None
    effectiveness: Fraction | None
    completed: bool
    idle_hours: Fraction
    error: str | None = None


@dataclass(frozen=True)
class BatchResult:
    policy: BotPolicy
    rows: tuple[RunOutcome, ...]

    def clean_rows(self) -> list[RunOutcome]:
        return [r for r in self.rows if r.error is None]

    def completion_rate(self) -> float:
        rows = self.clean_rows()
        if not rows:
            return 0.0
        return sum(1 for r in rows if r.completed) / len(rows)

    def error_count(self) -> int:
        return len(self.rows) - len(self.clean_rows())


def run_once(config: SessionConfig, policy: BotPolicy) -> tuple[RunOutcome, SessionState]:
    """Play a single-team session to the end under the policy."""
    state = init_session(config)
    team_id = next(iter(state.teams))
    planned: set[str] = set()
    while state.phase is not Phase.FINISHED:
        if state.phase is Phase.SPRINT_CLOSED:
            state = close_sprint(state)
            continue
        was_planning = state.phase is Phase.PLANNING
        state = drive_team_day(policy, state, team_id)
        if was_planning:
            planned.update(state.team(team_id).committed_ids)
        state = advance_day(state)
    team = state.team(team_id)
    constants = config.policy
    completed = bool(planned) and all(
        team.stories[sid].status is StoryStatus.DONE for sid in planned
    )
    outcome = RunOutcome(
        seed=config.seed,
        value=value_delivered(team, constants),
        committed_value=team.committed_value,
        cost_hours=labor_cost_hours(team, constants),
        efficiency=efficiency(team, constants),
        effectiveness=effectiveness(team, constants),
        completed=completed,
        idle_hours=hours(team.idle_ticks),
    )
    return outcome, state


def run_batch(
    config: SessionConfig,
    policy: BotPolicy,
    runs: int,
    base_seed: int | None = None,
) -> BatchResult:
    """Run seeds base..base+runs-1 on a one-team copy of the config."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    start = config.seed if base_seed is None else base_seed
    rows = []
    for offset in range(runs):
        seeded = replace(config, seed=start + offset, team_count=1)
        try:
            outcome, _ = run_once(seeded, policy)
        except EngineError as err:
            outcome = RunOutcome(
                seed=start + offset, value=0, committed_value=0,
                cost_hours=Fraction(0), efficiency=None, effectiveness=None,
                completed=False, idle_hours=Fraction(0),
                error=f"{err.code}: {err}",
            )
        rows.append(outcome)
    return BatchResult(policy=policy, rows=tuple(rows))


def _quantile(sorted_values: list[float], q: float) -> float:
    # nearest-rank so repeated batches print identical digits
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


def summarize(result: BatchResult) -> dict[str, object]:
    """Mean, spread, and quantiles per metric over the clean runs."""
    rows = result.clean_rows()
    metrics: dict[str, list[float]] = {
        "value": [float(r.value) for r in rows],
        "cost_hours": [float(r.cost_hours) for r in rows],
        "efficiency": [float(r.efficiency) for r in rows if r.efficiency is not None],
        "effectiveness": [
            float(r.effectiveness) for r in rows if r.effectiveness is not None
        ],
        "idle_hours": [float(r.idle_hours) for r in rows],
    }
    stats: dict[str, object] = {
        "runs": len(result.rows),
        "errors": result.error_count(),
        "completion_rate": result.completion_rate(),
    }
    for name, values in metrics.items():
        if not values:
            stats[name] = None
            continue
        ordered = sorted(values)
        stats[name] = {
            "mean": statistics.fmean(values),
            "sd": statistics.pstdev(values),
            "min": ordered[0],
            "p10": _quantile(ordered, 0.10),
            "p50": _quantile(ordered, 0.50),
            "p90": _quantile(ordered, 0.90),
            "max": ordered[-1],
        }
    return stats


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Fraction):
        return format(float(value), ".6g")
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


OUTCOME_COLUMNS = (
    "seed", "value", "committed_value", "cost_hours", "efficiency",
    "effectiveness", "completed", "idle_hours", "error",
)


def outcomes_csv(result: BatchResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(OUTCOME_COLUMNS)
    for r in result.rows:
        writer.writerow([
            _cell(r.seed), _cell(r.value), _cell(r.committed_value),
            _cell(r.cost_hours), _cell(r.efficiency), _cell(r.effectiveness),
            _cell(r.completed), _cell(r.idle_hours), _cell(r.error),
        ])
    return buf.getvalue()


def summary_csv(result: BatchResult) -> str:
    stats = summarize(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "mean", "sd", "min", "p10", "p50", "p90", "max"])
    writer.writerow(["runs", _cell(stats["runs"]), "", "", "", "", "", ""])
    writer.writerow(["errors", _cell(stats["errors"]), "", "", "", "", "", ""])
    writer.writerow(
        ["completion_rate", _cell(stats["completion_rate"]), "", "", "", "", "", ""]
    )
    for name in ("value", "cost_hours", "efficiency", "effectiveness", "idle_hours"):
        entry = stats[name]
        if entry is None:
            writer.writerow([name, "", "", "", "", "", "", ""])
            continue
        writer.writerow([
            name, _cell(entry["mean"]), _cell(entry["sd"]), _cell(entry["min"]),
            _cell(entry["p10"]), _cell(entry["p50"]), _cell(entry["p90"]),
            _cell(entry["max"]),
        ])
    return buf.getvalue()
