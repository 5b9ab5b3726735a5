"""Command line front end.

Subcommands: new (create a stored session), run (policy batch),
calibrate-wheel, replay (rebuild from a log), report (render files from
a log), serve (HTTP service). Exit codes: 0 on success, 2 for invalid
input, 3 for a log that fails integrity checks.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .batch import outcomes_csv, run_batch, summarize, summary_csv
from .bots import OVERTIME_RULES, POLICY_NAMES, BotPolicy
from .chance import CalibrationError, calibrate_wheel, wheel_stats
from .defaults import default_config
from .engine import EngineError, INTEGRITY_ERROR, replay
from .metrics import leaderboard
from .model import SessionConfig, hours, validate_config
from .serialize import (
    canonical_json,
    config_to_jsonable,
    load_config_document,
    state_canonical,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INTEGRITY = 3


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_INVALID):
        super().__init__(message)
        self.exit_code = exit_code


def _load_config(path: str | None, seed: int | None) -> SessionConfig:
    if path is None:
        config = default_config(seed=1 if seed is None else seed)
    else:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}")
        except json.JSONDecodeError as exc:
            raise CliError(f"config is not JSON: {exc}")
        try:
            config = load_config_document(doc)
        except ValueError as exc:
            raise CliError(f"invalid config: {exc}")
        if seed is not None:
            from dataclasses import replace

            config = replace(config, seed=seed)
            problems = validate_config(config)
            if problems:
                raise CliError(f"invalid config: {'; '.join(problems)}")
    return config


def _read_records(path: str) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read log: {exc}")
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CliError(
                f"log line {lineno} is not JSON: {exc}", EXIT_INTEGRITY
            )
    return records


def _cmd_new(args) -> int:
    from .service.store import SessionStore

    config = _load_config(args.config, args.seed)
    store = SessionStore(args.data)
    session = store.create(config_to_jsonable(config))
    print(json.dumps({
        "session_id": session.session_id,
        "facilitator_token": session.meta["facilitator_token"],
        "team_token": session.meta["team_token"],
        "data": str(store.root),
    }, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_run(args) -> int:
    config = _load_config(args.config, args.seed)
    policy = BotPolicy(name=args.policy, overtime_rule=args.overtime_rule)
    result = run_batch(config, policy, runs=args.runs, base_seed=args.seed)
    if args.out:
        Path(args.out).write_text(outcomes_csv(result), encoding="utf-8")
    if args.report_dir:
        from .report import write_batch_report

        for path in write_batch_report(result, args.report_dir):
            print(f"wrote {path}")
    stats = summarize(result)
    print(f"runs {stats['runs']}, errors {stats['errors']}, "
          f"completion rate {stats['completion_rate']:.3f}")
    for name in ("value", "cost_hours", "efficiency", "effectiveness", "idle_hours"):
        entry = stats[name]
        if entry is None:
            continue
        print(f"{name}: mean {entry['mean']:.3f} sd {entry['sd']:.3f} "
              f"p10 {entry['p10']:.3f} p50 {entry['p50']:.3f} p90 {entry['p90']:.3f}")
    if not args.out and not args.report_dir:
        sys.stdout.write(summary_csv(result))
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    try:
        values = None
        if args.values:
            values = []
            for part in args.values.split(","):
                part = part.strip()
                if ".." in part:
                    lo, hi = part.split("..")
                    values.extend(range(int(lo), int(hi) + 1))
                else:
                    values.append(int(part))
        wheel = calibrate_wheel(
            args.mean, args.sd, slot_count=args.slots,
            value_set=values, tolerance=args.tolerance,
        )
    except CalibrationError as exc:
        print(
            f"no wheel hits mean {args.mean} sd {args.sd} within "
            f"{args.tolerance}; nearest reachable mean {exc.nearest_mean:.4f} "
            f"sd {exc.nearest_sd:.4f}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    except ValueError as exc:
        raise CliError(str(exc))
    stats = wheel_stats(wheel)
    doc = {
        "slots": [[v, w] for v, w in wheel.slots],
        "mean_hours": float(stats.mean),
        "sd_hours": float(stats.sd),
    }
    text = canonical_json(doc)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def _cmd_replay(args) -> int:
    config = _load_config(args.config, None)
    records = _read_records(args.log)
    if args.session_id and any("integrity" in r for r in records):
        from .service.store import verify_chain

        try:
            verify_chain(args.session_id, config_to_jsonable(config), records)
        except EngineError as exc:
            print(f"integrity failure: {exc}", file=sys.stderr)
            return EXIT_INTEGRITY
    try:
        state = replay(config, records)
    except EngineError as exc:
        if exc.code == INTEGRITY_ERROR:
            print(f"integrity failure: {exc}", file=sys.stderr)
            return EXIT_INTEGRITY
        raise CliError(str(exc))
    import hashlib

    digest = hashlib.sha256(state_canonical(state).encode("utf-8")).hexdigest()
    print(f"replayed {len(records)} records to day {state.absolute_day} "
          f"({state.phase.value}); state sha256 {digest}")
    for row in leaderboard(state.teams.values(), config.policy):
        print(f"  {row.team_id}: value {row.value}, "
              f"cost {float(row.cost_hours):.1f}h")
    return EXIT_OK


def _cmd_report(args) -> int:
    config = _load_config(args.config, None)
    records = _read_records(args.log)
    try:
        state = replay(config, records)
    except EngineError as exc:
        if exc.code == INTEGRITY_ERROR:
            print(f"integrity failure: {exc}", file=sys.stderr)
            return EXIT_INTEGRITY
        raise CliError(str(exc))
    from .report import write_session_report

    for path in write_session_report(state, args.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.api import create_app
    from .service.store import SessionStore

    app = create_app(SessionStore(args.data))
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sprintsim",
        description="Deterministic scrum sprint simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    new = sub.add_parser("new", help="create a stored session and print its tokens")
    new.add_argument("--config", help="config document (JSON); omit for the demo board")
    new.add_argument("--seed", type=int, help="override the config seed")
    new.add_argument("--data", default="./sessions", help="session data directory")
    new.set_defaults(fn=_cmd_new)

    run = sub.add_parser("run", help="run a policy bot over many seeds")
    run.add_argument("--config", help="config document (JSON); omit for the demo board")
    run.add_argument("--policy", default="greedy-value", choices=POLICY_NAMES)
    run.add_argument("--overtime-rule", default="never", choices=OVERTIME_RULES)
    run.add_argument("--runs", type=int, default=100)
    run.add_argument("--seed", type=int, help="base seed (runs use seed..seed+runs-1)")
    run.add_argument("--out", help="write per-run outcomes CSV here")
    run.add_argument("--report-dir", help="also render CSVs and figures here")
    run.set_defaults(fn=_cmd_run)

    cal = sub.add_parser("calibrate-wheel", help="find a wheel for a target mean and sd")
    cal.add_argument("--mean", required=True, help="target mean hours per member day")
    cal.add_argument("--sd", required=True, help="target standard deviation in hours")
    cal.add_argument("--slots", type=int, default=20, help="total slot weight")
    cal.add_argument("--values", help="allowed hour values, e.g. '0..12' or '0,2,4,8'")
    cal.add_argument("--tolerance", default="0.05")
    cal.add_argument("--out", help="also write the wheel JSON here")
    cal.set_defaults(fn=_cmd_calibrate)

    rep = sub.add_parser("replay", help="rebuild a session from its record log")
    rep.add_argument("--config", required=True, help="config document (JSON)")
    rep.add_argument("--log", required=True, help="record log (JSON lines)")
    rep.add_argument("--session-id", help="verify the hash chain of a service log")
    rep.set_defaults(fn=_cmd_replay)

    report = sub.add_parser("report", help="render CSVs and figures from a log")
    report.add_argument("--config", required=True, help="config document (JSON)")
    report.add_argument("--log", required=True, help="record log (JSON lines)")
    report.add_argument("--out-dir", required=True, help="where to write the files")
    report.set_defaults(fn=_cmd_report)

    serve = sub.add_parser("serve", help="serve live sessions over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--data", default="./sessions", help="session data directory")
    serve.set_defaults(fn=_cmd_serve)

    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


def main() -> None:
    sys.exit(run_cli())
