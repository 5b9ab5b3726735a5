"""Durable session storage: a hash-chained record log plus snapshots.

Each session lives in its own directory: meta.json (identity, tokens,
config), log.jsonl (one replayable record per line, every line carrying
a sha256 link to the previous one), and snapshots/ (full state after
each day of draws). Restart recovery loads the newest snapshot and
replays the log suffix; a corrupted or reordered line is detected by
the chain before anything is applied.
"""
from __future__ import annotations

import json
import os
import secrets
import threading
import time
from hashlib import sha256
from pathlib import Path
from typing import Any, Mapping

from ..engine import (
    CLOSE_SPRINT_OP,
    INTEGRITY_ERROR,
    SESSION_SCOPE,
    Command,
    EngineError,
    SessionState,
    advance_day,
    apply_record,
    close_sprint,
    command_to_payload,
    init_session,
    submit_command,
)
from ..model import SessionConfig
from ..serialize import (
    canonical_json,
    load_config_document,
    state_from_jsonable,
    state_to_jsonable,
)

VERSION_CONFLICT = "VERSION_CONFLICT"
UNKNOWN_SESSION = "UNKNOWN_SESSION"


class StoreError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def chain_seed(session_id: str, config_doc: Mapping[str, Any]) -> str:
    return sha256(
        f"{session_id}\n{canonical_json(config_doc)}".encode("utf-8")
    ).hexdigest()


def record_digest(prev_hex: str, record: Mapping[str, Any]) -> str:
    body = {k: v for k, v in record.items() if k != "integrity"}
    return sha256((prev_hex + canonical_json(body)).encode("utf-8")).hexdigest()


def verify_chain(
    session_id: str, config_doc: Mapping[str, Any], records: list[dict[str, Any]]
) -> None:
    prev = chain_seed(session_id, config_doc)
    for index, record in enumerate(records, start=1):
        if record.get("seq") != index:
            raise EngineError(
                INTEGRITY_ERROR, f"expected record seq {index}, found {record.get('seq')}"
            )
        if record.get("integrity") != record_digest(prev, record):
            raise EngineError(
                INTEGRITY_ERROR, f"record {index}: integrity hash mismatch"
            )
        prev = record["integrity"]


class LiveSession:
    """One open session: engine state, its record log, and the files."""

    def __init__(
        self,
        root: Path,
        meta: Mapping[str, Any],
        config: SessionConfig,
        state: SessionState,
        records: list[dict[str, Any]],
    ):
        self.root = root
        self.meta = dict(meta)
        self.config = config
        self.state = state
        self.records = records
        self.lock = threading.RLock()

    @property
    def session_id(self) -> str:
        return self.meta["session_id"]

    @property
    def version(self) -> int:
        return len(self.records)

    def role_for(self, token: str | None) -> str | None:
        if token and token == self.meta["facilitator_token"]:
            return "facilitator"
        if token and token == self.meta["team_token"]:
            return "team"
        return None

    def _append(
        self, day: int, team: str, kind: str, payload: Mapping[str, Any], actor: str
    ) -> dict[str, Any]:
        prev = (
            self.records[-1]["integrity"]
            if self.records
            else chain_seed(self.session_id, self.meta["config"])
        )
        record = {
            "seq": len(self.records) + 1,
            "wall_ms": int(time.time() * 1000),
            "day": day,
            "team": team,
            "kind": kind,
            "actor": actor,
            "payload": dict(payload),
        }
        record["integrity"] = record_digest(prev, record)
        with open(self.root / "log.jsonl", "a", encoding="utf-8") as handle:
            handle.write(canonical_json(record) + "\n")
            handle.flush()
            os.fsync(handle.fileno())
        self.records.append(record)
        return record

    def _snapshot(self) -> None:
        snapdir = self.root / "snapshots"
        snapdir.mkdir(exist_ok=True)
        doc = {
            "watermark": len(self.records),
            "state": state_to_jsonable(self.state),
        }
        path = snapdir / f"snap-{len(self.records):08d}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(doc), encoding="utf-8")
        os.replace(tmp, path)

    def _check_version(self, expected_version: int | None) -> None:
        if expected_version is not None and expected_version != self.version:
            raise StoreError(
                VERSION_CONFLICT,
                f"expected version {expected_version}, session is at {self.version}",
            )

    def submit(
        self,
        team_id: str,
        command: Command,
        actor: str,
        expected_version: int | None = None,
    ) -> dict[str, Any]:
        with self.lock:
            self._check_version(expected_version)
            day = self.state.pending_day()
            self.state = submit_command(self.state, team_id, command)
            return self._append(
                day, team_id, "command", command_to_payload(command), actor
            )

    def spin(
        self, expected_day: int | None = None, expected_version: int | None = None
    ) -> tuple[dict[str, Any], Mapping[str, Any]]:
        with self.lock:
            self._check_version(expected_version)
            day = self.state.pending_day()
            if expected_day is not None and expected_day != day:
                raise EngineError(
                    "PHASE_ERROR",
                    f"expected to spin day {expected_day}, the next day is {day}",
                )
            self.state = advance_day(self.state)
            draws = self.state.draw_history[-1].to_payload()
            record = self._append(day, SESSION_SCOPE, "draws", draws, "facilitator")
            self._snapshot()
            return record, draws

    def close_sprint(self, expected_version: int | None = None) -> dict[str, Any]:
        with self.lock:
            self._check_version(expected_version)
            day = self.state.absolute_day
            self.state = close_sprint(self.state)
            record = self._append(
                day, SESSION_SCOPE, "command", {"op": CLOSE_SPRINT_OP}, "facilitator"
            )
            self._snapshot()
            return record


class SessionStore:
    """Creates, opens, and caches sessions under one data directory."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._open: dict[str, LiveSession] = {}

    def create(self, config_doc: Mapping[str, Any]) -> LiveSession:
        config = load_config_document(config_doc)
        session_id = secrets.token_hex(8)
        meta = {
            "session_id": session_id,
            "created_ms": int(time.time() * 1000),
            "facilitator_token": f"fac_{secrets.token_hex(16)}",
            "team_token": f"team_{secrets.token_hex(16)}",
            "config": dict(config_doc),
        }
        root = self.root / session_id
        root.mkdir()
        (root / "snapshots").mkdir()
        (root / "meta.json").write_text(canonical_json(meta), encoding="utf-8")
        (root / "log.jsonl").touch()
        session = LiveSession(root, meta, config, init_session(config), [])
        with self._lock:
            self._open[session_id] = session
        return session

    def get(self, session_id: str) -> LiveSession:
        with self._lock:
            if session_id in self._open:
                return self._open[session_id]
        session = self._load(session_id)
        with self._lock:
            return self._open.setdefault(session_id, session)

    def session_ids(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "meta.json").exists()
        )

    def drop_cache(self) -> None:
        """Forget open sessions; the next get() recovers from disk."""
        with self._lock:
            self._open.clear()

    def _load(self, session_id: str) -> LiveSession:
        root = self.root / session_id
        meta_path = root / "meta.json"
        if not meta_path.exists():
            raise StoreError(UNKNOWN_SESSION, f"no session {session_id}")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        config = load_config_document(meta["config"])
        records = [
            json.loads(line)
            for line in (root / "log.jsonl").read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        verify_chain(session_id, meta["config"], records)
        state, start = self._latest_snapshot(root, len(records))
        if state is None:
            state = init_session(config)
            start = 0
        for raw in records[start:]:
            state = apply_record(state, raw)
        return LiveSession(root, meta, config, state, records)

    @staticmethod
    def _latest_snapshot(
        root: Path, record_count: int
    ) -> tuple[SessionState | None, int]:
        snapdir = root / "snapshots"
        if not snapdir.is_dir():
            return None, 0
        best: tuple[int, Path] | None = None
        for path in snapdir.glob("snap-*.json"):
            try:
                watermark = int(path.stem.split("-")[1])
            except (IndexError, ValueError):
                continue
            if watermark <= record_count and (best is None or watermark > best[0]):
                best = (watermark, path)
        if best is None:
            return None, 0
        doc = json.loads(best[1].read_text(encoding="utf-8"))
        return state_from_jsonable(doc["state"]), int(doc["watermark"])
