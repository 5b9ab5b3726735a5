"""End-to-end acceptance checks, one test per promised behavior.

Each test prints a single PASS or FAIL line with its headline numbers so
a plain pytest run reads as a checklist.  Budgets are enforced with a
monotonic clock where a behavior promises a running-time bound.
"""
from __future__ import annotations

import contextlib
import io
import json
import random
import statistics
import time
from fractions import Fraction

import pytest

from sprintsim.batch import run_batch
from sprintsim.bots import BotPolicy, plan_commands
from sprintsim.chance import wheel_stats
from sprintsim.cli import run_cli
from sprintsim.defaults import (
    DEFAULT_WHEEL,
    default_config,
    flat_backlog,
    specialist_pair,
)
from sprintsim.engine import (
    INTEGRITY_ERROR,
    AssignTask,
    EngineError,
    PlanCommit,
    SessionRun,
    SetOvertime,
    advance_day,
    init_session,
    replay,
    submit_command,
)
from sprintsim.metrics import (
    completed_estimate_ticks,
    efficiency,
    value_delivered,
)
from sprintsim.model import (
    LogKind,
    Phase,
    Priority,
    StoryDef,
    StoryKind,
    StoryStatus,
    TaskDef,
    TaskStatus,
    WheelConfig,
)
from sprintsim.serialize import canonical_json, config_to_jsonable, state_canonical
from sprintsim.service.store import SessionStore

from conftest import QUIET_DECK, random_config, random_script, scripted_play


@contextlib.contextmanager
def announced(capsys, name):
    report = {}
    try:
        yield report
    except BaseException as exc:
        with capsys.disabled():
            print(f"FAIL {name}: {exc}")
        raise
    detail = report.get("detail", "")
    with capsys.disabled():
        print(f"PASS {name}" + (f" ({detail})" if detail else ""))


def test_default_wheel_mean_and_sd_match_calibration(capsys):
    with announced(capsys, "default wheel moments") as report:
        started = time.monotonic()
        stats = wheel_stats(DEFAULT_WHEEL)
        elapsed = time.monotonic() - started
        assert stats.mean == Fraction(27, 5)
        assert 2.85 <= stats.sd <= 2.95
        assert elapsed < 1.0
        report["detail"] = (
            f"mean {float(stats.mean)}h sd {stats.sd:.4f}h in {elapsed * 1000:.1f}ms"
        )


def test_wheel_search_hits_requested_moments_through_cli(capsys):
    with announced(capsys, "calibration search") as report:
        started = time.monotonic()
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = run_cli([
                "calibrate-wheel", "--mean", "5.4", "--sd", "2.9", "--slots", "20",
            ])
        elapsed = time.monotonic() - started
        assert code == 0
        doc = json.loads(out.getvalue())
        slots = tuple((int(v), int(w)) for v, w in doc["slots"])
        stats = wheel_stats(WheelConfig(slots=slots))
        assert abs(float(stats.mean) - 5.4) <= 0.05
        assert abs(stats.sd - 2.9) <= 0.05
        values = {v for v, _ in slots}
        assert 0 in values and 24 in values, "hour values 0 and 12 must appear"
        assert sum(w for _, w in slots) == 20
        assert elapsed < 10.0
        report["detail"] = (
            f"mean {float(stats.mean):.4f}h sd {stats.sd:.4f}h in {elapsed:.2f}s"
        )


def test_fuzzed_sessions_replay_and_export_identically(capsys):
    with announced(capsys, "determinism and replay") as report:
        rng = random.Random(20260814)
        started = time.monotonic()
        for _ in range(100):
            config = random_config(rng, sprint_length_days=10, sprint_count=1)
            run = scripted_play(config, random_script(rng))
            payloads = run.record_payloads()
            rebuilt = replay(config, payloads)
            final = state_canonical(run.state)
            assert state_canonical(rebuilt) == final

            def export(state, records):
                lines = [canonical_json(r) for r in records]
                return ("\n".join(lines) + "\n" + state_canonical(state)).encode()

            first = export(run.state, payloads)
            second = export(rebuilt, run.record_payloads())
            assert first == second
        elapsed = time.monotonic() - started
        assert elapsed < 60.0
        report["detail"] = f"100 sessions replayed byte-identically in {elapsed:.1f}s"


def test_every_team_receives_identical_draws_in_lockstep(capsys):
    with announced(capsys, "lockstep draws") as report:
        checked = 0
        for seed in range(50):
            config = default_config(seed=seed, team_count=8, team_size=6)
            run = SessionRun(config)
            while len(run.state.draw_history) < 10:
                run.advance()
            reference = {
                (d.day, m): v
                for d in run.state.draw_history
                for m, v in d.progress.items()
            }
            assert len(reference) == 10 * 6
            for team in run.state.teams.values():
                logged = {
                    (e.day, e.payload["member"]): e.payload["drawn"]
                    for e in team.decision_log
                    if e.kind is LogKind.PROGRESS
                    and e.payload is not None
                    and "member" in e.payload
                }
                assert logged == reference
                checked += len(logged)
        report["detail"] = f"{checked} (day, member) pairs identical across 8 teams"


def test_work_conservation_holds_across_ten_thousand_team_days(capsys):
    with announced(capsys, "work conservation") as report:
        rng = random.Random(7)
        team_days = 0
        member_days = 0
        while team_days < 10_000:
            config = random_config(rng)
            run = scripted_play(config, random_script(rng))
            for team in run.state.teams.values():
                entries = [
                    e for e in team.decision_log
                    if e.kind is LogKind.PROGRESS and e.payload is not None
                ]
                previous_end = None
                previous_day = None
                for entry in entries:
                    p = entry.payload
                    if "member" in p:
                        assert p["idle"] == p["effective"] - p["applied"]
                        assert p["idle"] >= 0
                        member_days += 1
                        continue
                    assert (
                        p["scope_end"]
                        == p["scope_start"] - p["applied"] + p["event_delta"]
                    )
                    if previous_end is not None and p["sprint_day"] != 1:
                        assert previous_day is not None
                        assert p["scope_start"] == previous_end
                    previous_end = p["scope_end"]
                    previous_day = p["sprint_day"]
                    team_days += 1
        report["detail"] = (
            f"{team_days} team-days and {member_days} member-days balanced exactly"
        )


def test_full_capacity_commitment_rarely_completes(capsys):
    with announced(capsys, "full-capacity completion odds") as report:
        config = default_config(backlog=flat_backlog())
        policy = BotPolicy()
        state = init_session(config)
        for command in plan_commands(policy, state, "T1"):
            state = submit_command(state, "T1", command)
        committed = state.team("T1").committed_remaining_ticks()
        assert committed == config.capacity_ticks() == 600

        started = time.monotonic()
        result = run_batch(config, policy, 1000, base_seed=1)
        elapsed = time.monotonic() - started
        assert elapsed < 30.0
        assert all(row.error is None for row in result.rows)
        fraction = sum(1 for row in result.rows if row.completed) / len(result.rows)
        assert fraction < 0.20
        report["detail"] = (
            f"completion fraction {fraction:.3f} over 1000 seeds in {elapsed:.1f}s"
        )


def _overtime_scenario(team_size, days, wheel, seed, overtime_ticks):
    total = team_size * days * 30
    board = (
        StoryDef(
            id="W", title="Measured work", kind=StoryKind.USER,
            points=8, priority=Priority.MUST,
            tasks=tuple(
                TaskDef(id=f"W-T{i + 1:03d}", estimate_ticks=1) for i in range(total)
            ),
        ),
    )
    config = default_config(
        seed=seed, backlog=board, team_size=team_size,
        sprint_length_days=days, progress_wheel=wheel, event_deck=QUIET_DECK,
    )
    state = init_session(config)
    state = submit_command(state, "T1", PlanCommit(story_ids=("W",)))
    for i, task_id in enumerate(sorted(state.team("T1").tasks)):
        state = submit_command(
            state, "T1", AssignTask(member=(i % team_size) + 1, task=task_id)
        )
    while state.phase is not Phase.SPRINT_CLOSED:
        if overtime_ticks:
            for member in range(1, team_size + 1):
                state = submit_command(
                    state, "T1", SetOvertime(member=member, ticks=overtime_ticks)
                )
        state = advance_day(state)
    return state


def test_overtime_lowers_efficiency_but_never_output(capsys):
    with announced(capsys, "overtime economics") as report:
        wheels = (
            WheelConfig(slots=((8, 1),)),
            WheelConfig(slots=((14, 1),)),
            WheelConfig(slots=((8, 1), (20, 1))),
            WheelConfig(slots=((0, 1), (12, 2), (24, 1))),
        )
        cap = default_config().policy.max_overtime_ticks
        scenarios = 0
        for team_size in (1, 2, 3):
            for days in (2, 3):
                for wheel_index, wheel in enumerate(wheels):
                    seed = 1000 + scenarios
                    base = _overtime_scenario(team_size, days, wheel, seed, 0)
                    boosted = _overtime_scenario(team_size, days, wheel, seed, cap)
                    again = _overtime_scenario(team_size, days, wheel, seed, cap)
                    assert state_canonical(boosted) == state_canonical(again)
                    assert base.draw_history == boosted.draw_history
                    team_base = base.team("T1")
                    team_boost = boosted.team("T1")
                    done_base = completed_estimate_ticks(team_base)
                    done_boost = completed_estimate_ticks(team_boost)
                    assert done_base > 0, "draws must apply some work"
                    assert done_boost >= done_base
                    eff_base = efficiency(team_base, base.config.policy)
                    eff_boost = efficiency(team_boost, boosted.config.policy)
                    assert eff_boost < eff_base
                    scenarios += 1
        assert scenarios >= 20
        report["detail"] = (
            f"{scenarios} paired scenarios: efficiency down, output never down"
        )


def test_role_restrictions_raise_idle_hours_without_raising_value(capsys):
    with announced(capsys, "specialist contention") as report:
        restricted, open_team = specialist_pair(seed=1)
        policy = BotPolicy()
        res_restricted = run_batch(restricted, policy, 500, base_seed=9000)
        res_open = run_batch(open_team, policy, 500, base_seed=9000)
        assert all(r.error is None for r in res_restricted.rows + res_open.rows)
        idle_restricted = statistics.fmean(
            float(r.idle_hours) for r in res_restricted.rows
        )
        idle_open = statistics.fmean(float(r.idle_hours) for r in res_open.rows)
        value_restricted = statistics.fmean(r.value for r in res_restricted.rows)
        value_open = statistics.fmean(r.value for r in res_open.rows)
        assert idle_restricted > idle_open
        assert value_restricted <= value_open
        report["detail"] = (
            f"idle {idle_restricted:.1f}h > {idle_open:.1f}h, "
            f"value {value_restricted:.1f} <= {value_open:.1f}"
        )


def test_unfinished_story_carries_remaining_hours_and_no_value(capsys):
    with announced(capsys, "carryover") as report:
        board = (
            StoryDef(
                id="FEAT", title="Feature", kind=StoryKind.USER,
                points=5, priority=Priority.MUST,
                tasks=(
                    TaskDef(id="FEAT-T1", estimate_ticks=24),
                    TaskDef(id="FEAT-T2", estimate_ticks=24),
                    TaskDef(id="FEAT-T3", estimate_ticks=12),
                ),
            ),
        )
        config = default_config(
            seed=3, backlog=board, team_size=1, sprint_length_days=5,
            sprint_count=2, progress_wheel=WheelConfig(slots=((12, 1),)),
            event_deck=QUIET_DECK,
        )
        run = SessionRun(config)
        run.command("T1", PlanCommit(story_ids=("FEAT",)))
        run.command("T1", AssignTask(member=1, task="FEAT-T1"))
        run.command("T1", AssignTask(member=1, task="FEAT-T2"))
        for _ in range(5):
            run.advance()

        team = run.state.team("T1")
        assert run.state.phase is Phase.SPRINT_CLOSED
        assert team.stories["FEAT"].status is StoryStatus.COMMITTED
        assert team.burndown_actual[-1] == (5, 12), "48 of 60 ticks done is 80%"
        assert value_delivered(team, config.policy) == 0

        run.close_sprint()
        team = run.state.team("T1")
        assert team.stories["FEAT"].status is StoryStatus.BACKLOG
        assert team.release_actual == ((0, 5, 0), (1, 5, 0))
        assert value_delivered(team, config.policy) == 0

        run.command("T1", PlanCommit(story_ids=("FEAT",)))
        team = run.state.team("T1")
        assert team.committed_remaining_ticks() == 12, "exactly 6h carried over"
        run.command("T1", AssignTask(member=1, task="FEAT-T3"))
        run.advance()
        team = run.state.team("T1")
        assert team.tasks["FEAT-T3"].status is TaskStatus.DONE
        assert team.stories["FEAT"].status is StoryStatus.COMMITTED
        assert value_delivered(team, config.policy) == 0, "no credit before review"
        for _ in range(4):
            run.advance()
        run.close_sprint()
        team = run.state.team("T1")
        assert run.state.phase is Phase.FINISHED
        assert team.stories["FEAT"].status is StoryStatus.DONE
        assert value_delivered(team, config.policy) == 15
        assert team.release_actual == ((0, 5, 0), (1, 5, 0), (2, 0, 0))
        report["detail"] = "12 ticks carried, value 0 before acceptance, 15 after"


def _drive_service_days(session, first_day, last_day):
    for day in range(first_day, last_day + 1):
        if day == 1:
            session.submit(
                "T1", PlanCommit(story_ids=("US01", "US02")), actor="team"
            )
            session.submit(
                "T2", PlanCommit(story_ids=("US04", "US06")), actor="team"
            )
            for team_id, tasks in (
                ("T1", ("US01-T1", "US01-T2", "US02-T1")),
                ("T2", ("US04-T1", "US06-T1", "US06-T2")),
            ):
                for index, task in enumerate(tasks):
                    session.submit(
                        team_id,
                        AssignTask(member=index % 3 + 1, task=task),
                        actor="team",
                    )
        if day == 4:
            session.submit("T1", SetOvertime(member=1, ticks=2), actor="team")
        if day == 8:
            session.submit("T2", SetOvertime(member=2, ticks=4), actor="team")
        session.spin(expected_day=day)


def test_service_recovers_from_crash_and_flags_tampering(capsys, tmp_path):
    with announced(capsys, "service crash recovery") as report:
        doc = config_to_jsonable(default_config(seed=42, team_count=2, team_size=3))

        store_full = SessionStore(tmp_path / "full")
        uninterrupted = store_full.create(doc)
        _drive_service_days(uninterrupted, 1, 10)
        uninterrupted.close_sprint()

        store_before = SessionStore(tmp_path / "crashed")
        victim = store_before.create(doc)
        _drive_service_days(victim, 1, 6)
        session_id = victim.session_id
        assert list((victim.root / "snapshots").glob("snap-*.json"))
        del victim, store_before

        store_after = SessionStore(tmp_path / "crashed")
        recovered = store_after.get(session_id)
        _drive_service_days(recovered, 7, 10)
        recovered.close_sprint()
        assert state_canonical(recovered.state) == state_canonical(
            uninterrupted.state
        )

        log_path = recovered.root / "log.jsonl"
        lines = log_path.read_text(encoding="utf-8").splitlines()
        tampered = json.loads(lines[8])
        tampered["day"] = 99
        lines[8] = canonical_json(tampered)
        log_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        store_after.drop_cache()
        with pytest.raises(EngineError) as err:
            store_after.get(session_id)
        assert err.value.code == INTEGRITY_ERROR
        assert "record 9" in str(err.value)
        report["detail"] = (
            "post-crash state equals uninterrupted run; mutated record flagged"
        )
