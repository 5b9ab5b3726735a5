#!/usr/bin/env python3
"""Record a scripted facilitated session against a live service.

Talks plain HTTP to a running session service and writes every exchange
(request and response, in order) to a JSON fixture the UI tests replay.
The script never imports the service; the wire is the only contract.

Usage:
    sprintsim serve --host 127.0.0.1 --port 8765 &
    python3 tools/record_fixture.py --base http://127.0.0.1:8765 \
        --config tests/fixtures/config.json --out tests/fixtures/session.json
"""
from __future__ import annotations

import argparse
import json
import urllib.error
import urllib.request

EXCHANGES: list[dict] = []


def call(method: str, base: str, path: str, token: str | None = None,
         body: dict | None = None, label: str = "") -> dict:
    url = base + path
    headers = {}
    data = None
    if token is not None:
        headers["Authorization"] = f"Bearer {token}"
    if body is not None:
        headers["Content-Type"] = "application/json"
        data = json.dumps(body).encode()
    request = urllib.request.Request(url, data=data, headers=headers, method=method)
    try:
        with urllib.request.urlopen(request) as response:
            status = response.status
            text = response.read().decode()
    except urllib.error.HTTPError as error:
        status = error.code
        text = error.read().decode()
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError:
        parsed = text
    EXCHANGES.append({
        "label": label,
        "request": {"method": method, "path": path, "token": token, "body": body},
        "response": {"status": status, "body": parsed},
    })
    print(f"{label or method + ' ' + path}: {status}")
    return parsed


# Valid placement on the specialist board: task Tn of each story requires
# (db, ui, api, -, -) and members 1..5 are (db, ui, api, generalist x2).
def role_assignments(stories: list[str]) -> list[tuple[int, str]]:
    pairs = []
    for sid in stories:
        for i in range(1, 6):
            pairs.append((i, f"{sid}-T{i}"))
    return pairs


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--base", default="http://127.0.0.1:8765")
    parser.add_argument("--config", default="tests/fixtures/config.json")
    parser.add_argument("--out", default="tests/fixtures/session.json")
    args = parser.parse_args()
    base = args.base.rstrip("/")

    with open(args.config) as fh:
        config = json.load(fh)

    created = call("POST", base, "/sessions", body={"config": config}, label="create")
    sid = created["session_id"]
    facilitator = created["facilitator_token"]
    team = created["team_token"]

    call("GET", base, f"/sessions/{sid}", label="initial-view")

    def command(team_id: str, payload: dict, token: str, label: str) -> dict:
        return call("POST", base, f"/sessions/{sid}/teams/{team_id}/commands",
                    token=token, body={"command": payload}, label=label)

    def spin(expected_day: int, label: str) -> dict:
        return call("POST", base, f"/sessions/{sid}/spin", token=facilitator,
                    body={"expected_day": expected_day}, label=label)

    t1_stories = ["B01", "B02", "B03", "B04"]
    t2_stories = ["B01", "B02", "B03"]
    command("T1", {"op": "plan-commit", "story_ids": t1_stories}, team, "t1-plan")
    command("T2", {"op": "plan-commit", "story_ids": t2_stories}, team, "t2-plan")

    # Deliberate wrong-role drop: a ui task onto the db specialist.
    command("T1", {"op": "assign-task", "member": 1, "task": "B01-T2",
                   "position": None}, team, "t1-mismatch")

    for member, task in role_assignments(t1_stories):
        command("T1", {"op": "assign-task", "member": member, "task": task,
                       "position": None}, team, f"t1-assign-{task}")
    for member, task in role_assignments(t2_stories):
        command("T2", {"op": "assign-task", "member": member, "task": task,
                       "position": None}, team, f"t2-assign-{task}")

    spin(1, "spin-day-1")
    spin(1, "spin-day-1-duplicate")

    for day in range(2, 11):
        if day == 3:
            command("T1", {"op": "set-overtime", "member": 4, "ticks": 4},
                    team, "t1-overtime")
        if day == 5:
            command("T2", {"op": "facilitator-note",
                           "text": "gate override: proceeding before T2 reported ready"},
                    facilitator, "gate-override")
        spin(day, f"spin-day-{day}")

    # Burndown still live here; after close-sprint it moves into history.
    call("GET", base, f"/sessions/{sid}/metrics", label="metrics-day-10")
    call("POST", base, f"/sessions/{sid}/close-sprint", token=facilitator,
         body={}, label="close-sprint")
    call("GET", base, f"/sessions/{sid}/metrics", label="metrics")

    url = f"{base}/sessions/{sid}/export?what=log&format=jsonl"
    with urllib.request.urlopen(url) as response:
        log_lines = response.read().decode()
    records = [json.loads(line) for line in log_lines.splitlines() if line.strip()]
    EXCHANGES.append({
        "label": "export-log",
        "request": {"method": "GET",
                    "path": f"/sessions/{sid}/export?what=log&format=jsonl",
                    "token": None, "body": None},
        "response": {"status": 200, "text": log_lines},
    })

    fixture = {
        "recorded_with": "tools/record_fixture.py",
        "session_id": sid,
        "facilitator_token": facilitator,
        "team_token": team,
        "exchanges": EXCHANGES,
        "log_records": records,
    }
    with open(args.out, "w") as fh:
        json.dump(fixture, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out} with {len(EXCHANGES)} exchanges")


if __name__ == "__main__":
    main()
