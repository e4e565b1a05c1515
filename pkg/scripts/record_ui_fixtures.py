#!/usr/bin/env python3
"""Record service responses as JSON fixtures for the web UI tests.

Drives the HTTP/WS API with an in-process test client and saves every
payload the frontend consumes: snapshots after each step, the event deltas
streamed over the websocket, and final reports. The UI test suite replays
these files instead of talking to a live service.

Scenarios:
  s1     two machines (fast/slow), three tasks, mct - all complete
  mixed  same machines, met + cancellation - one missed, one cancelled

Usage:
    python3 scripts/record_ui_fixtures.py [--out frontend/tests/fixtures]
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from hetsim.service import create_app  # noqa: E402

S1_CONFIG = json.loads((ROOT / "fixtures" / "s1_config.json").read_text())
S1_EET = (ROOT / "fixtures" / "s1_eet.csv").read_bytes()
S1_TRACE = (ROOT / "fixtures" / "s1_trace.csv").read_bytes()

MIXED_CONFIG = dict(S1_CONFIG, scheduler_policy="met", cancellation_enabled=True)
MIXED_TRACE = (
    b"task_id,task_type,arrival,deadline\n"
    b"t1,A,0,10\n"
    b"t2,B,0,12\n"
    b"t3,A,1,6\n"   # met packs the fast machine; t3 starts at its deadline
    b"t4,B,1,4\n"   # hopeless everywhere at t=1: cancelled up front
)


def record_scenario(client: TestClient, out: Path, name: str,
                    config: dict, eet: bytes, trace: bytes) -> None:
    sid = client.post("/sessions", json=config).json()["id"]
    write(out, f"{name}_config.json", config)
    write(out, f"{name}_fresh_snapshot.json",
          client.get(f"/sessions/{sid}/snapshot").json())

    r = client.put(f"/sessions/{sid}/workload",
                   files={"eet": ("eet.csv", eet), "trace": ("trace.csv", trace)})
    r.raise_for_status()
    write(out, f"{name}_ready_snapshot.json",
          client.get(f"/sessions/{sid}/snapshot").json())

    deltas: list[dict] = []
    snapshots: list[dict] = []
    with client.websocket_connect(f"/sessions/{sid}/events") as ws:
        while True:
            r = client.post(f"/sessions/{sid}/control", json={"action": "step"})
            r.raise_for_status()
            deltas.append(json.loads(ws.receive_text()))
            snap = client.get(f"/sessions/{sid}/snapshot").json()
            snapshots.append(snap)
            if snap["status"] == "finished":
                break
    write(out, f"{name}_deltas.json", deltas)
    write(out, f"{name}_step_snapshots.json", snapshots)
    write(out, f"{name}_report.json",
          json.loads(client.get(f"/sessions/{sid}/report").content))
    print(f"{name}: {len(deltas)} events recorded")


def write(out: Path, filename: str, payload) -> None:
    (out / filename).write_text(json.dumps(payload, indent=1, sort_keys=False) + "\n")


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=ROOT / "frontend" / "tests" / "fixtures")
    args = p.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    with TestClient(create_app()) as client:
        record_scenario(client, args.out, "s1", S1_CONFIG, S1_EET, S1_TRACE)
        record_scenario(client, args.out, "mixed", MIXED_CONFIG, S1_EET, MIXED_TRACE)
    print(f"fixtures in {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
