import json
import time

import pytest
from fastapi.testclient import TestClient

from hetsim.service import SessionManager, UnknownSession, create_app

from conftest import FIXTURES

S1_CONFIG = json.loads((FIXTURES / "s1_config.json").read_text())


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


def make_session(client, config=None) -> str:
    r = client.post("/sessions", json=config or S1_CONFIG)
    assert r.status_code == 201
    return r.json()["id"]


def load_s1(client, sid, eet_bytes, trace_bytes):
    r = client.put(
        f"/sessions/{sid}/workload",
        files={"eet": ("eet.csv", eet_bytes), "trace": ("trace.csv", trace_bytes)},
    )
    assert r.status_code == 200, r.text
    return r


def wait_for_status(client, sid, wanted, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/sessions/{sid}/snapshot").json()["status"]
        if status == wanted:
            return status
        time.sleep(0.01)
    raise AssertionError(f"session never reached {wanted!r}")


class TestCreate:
    def test_fresh_session_snapshot(self, client):
        sid = make_session(client)
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["status"] == "configuring"
        assert snap["now"] == 0.0
        assert snap["batch_queue"] == []
        assert [m["id"] for m in snap["machines"]] == ["fast", "slow"]
        assert snap["counters"]["arrived"] == 0

    def test_two_creates_distinct_ids(self, client):
        assert make_session(client) != make_session(client)

    def test_unknown_policy_rejected(self, client):
        bad = dict(S1_CONFIG, scheduler_policy="random")
        r = client.post("/sessions", json=bad)
        assert r.status_code == 400
        assert r.json()["error"] == "InvalidConfig"

    def test_batch_policy_needs_queue_size(self, client):
        bad = dict(S1_CONFIG, scheduler_policy="min_min", machine_queue_size=None)
        r = client.post("/sessions", json=bad)
        assert r.status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/snapshot").status_code == 404
        assert client.get("/sessions/nope/report").status_code == 404
        assert client.post("/sessions/nope/control",
                           json={"action": "step"}).status_code == 404


class TestLoadWorkload:
    def test_load_s1_reaches_ready(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        r = load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        assert r.json() == {"status": "ready"}
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["status"] == "ready"
        assert snap["now"] == 0.0

    def test_validation_failure_keeps_session(self, client, s1_eet_bytes):
        sid = make_session(client)
        bad_trace = b"task_id,task_type,arrival,deadline\nt,C,0,10\n"
        r = client.put(
            f"/sessions/{sid}/workload",
            files={"eet": ("eet.csv", s1_eet_bytes), "trace": ("trace.csv", bad_trace)},
        )
        assert r.status_code == 400
        assert r.json()["error"] == "ValidationFailed"
        assert r.json()["issues"][0]["code"] == "UnknownTaskType"
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["status"] == "configuring"

    def test_load_while_running_409(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "run", "speed": 5})
        r = client.put(
            f"/sessions/{sid}/workload",
            files={"eet": ("eet.csv", s1_eet_bytes), "trace": ("trace.csv", s1_trace_bytes)},
        )
        assert r.status_code == 409
        client.post(f"/sessions/{sid}/control", json={"action": "pause"})

    def test_reload_before_first_step_allowed(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)  # still at t=0


class TestControl:
    def test_step_processes_one_event(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = client.post(f"/sessions/{sid}/control", json={"action": "step"})
        assert r.status_code == 200
        assert r.json() == {"status": "paused", "event_no": 1}
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["counters"]["arrived"] == 1
        assert snap["batch_queue"] == ["t1"]

    def test_three_steps_match_reference_snapshot(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        for _ in range(3):
            client.post(f"/sessions/{sid}/control", json={"action": "step"})
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["batch_queue"] == []
        fast = snap["machines"][0]
        assert fast["running"] == {"task": "t1", "started": 0.0, "remaining": 2.0}
        assert fast["local_queue"] == ["t2"]

    def test_run_max_finishes_with_full_bins(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = client.post(f"/sessions/{sid}/control", json={"action": "run", "speed": "max"})
        assert r.json() == {"status": "finished"}
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        bins = snap["bins"]
        done = [b["id"] for b in bins["completed"]]
        assert sorted(done) == ["t1", "t2", "t3"]
        assert snap["report"]["totals"]["completed"] == 3

    def test_pause_on_paused_409(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "step"})
        r = client.post(f"/sessions/{sid}/control", json={"action": "pause"})
        assert r.status_code == 409

    def test_step_after_finished_409(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "run"})
        r = client.post(f"/sessions/{sid}/control", json={"action": "step"})
        assert r.status_code == 409

    def test_unknown_action_400(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = client.post(f"/sessions/{sid}/control", json={"action": "rewind"})
        assert r.status_code == 400
        assert r.json()["error"] == "UnknownAction"

    def test_reset_in_configuring_409(self, client):
        sid = make_session(client)
        r = client.post(f"/sessions/{sid}/control", json={"action": "reset"})
        assert r.status_code == 409

    def test_reset_after_finish_reruns_identically(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "run"})
        first = client.get(f"/sessions/{sid}/report").content
        r = client.post(f"/sessions/{sid}/control", json={"action": "reset"})
        assert r.json() == {"status": "ready"}
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["now"] == 0.0 and snap["counters"]["arrived"] == 0
        client.post(f"/sessions/{sid}/control", json={"action": "run"})
        assert client.get(f"/sessions/{sid}/report").content == first

    def test_paced_run_reaches_finished(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = client.post(f"/sessions/{sid}/control", json={"action": "run", "speed": 500})
        assert r.json() == {"status": "running"}
        wait_for_status(client, sid, "finished")

    def test_pause_interrupts_paced_run(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "run", "speed": 2})
        r = client.post(f"/sessions/{sid}/control", json={"action": "pause"})
        assert r.json() == {"status": "paused"}
        snap = client.get(f"/sessions/{sid}/snapshot").json()
        assert snap["status"] == "paused"
        assert snap["counters"]["arrived"] <= 3

    def test_bad_speed_400(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = client.post(f"/sessions/{sid}/control", json={"action": "run", "speed": -4})
        assert r.status_code == 400


class TestEetPatch:
    def patch(self, client, sid, **body):
        return client.patch(f"/sessions/{sid}/eet", json=body)

    def test_edit_changes_downstream_run(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = self.patch(client, sid, task_type="A", machine_type="slow", value=3)
        assert r.status_code == 200
        client.post(f"/sessions/{sid}/control", json={"action": "run"})
        report = client.get(f"/sessions/{sid}/report").json()
        t3 = next(row for row in report["per_task"] if row["id"] == "t3")
        assert (t3["start"], t3["end"], t3["machine"]) == (1.0, 4.0, "slow")

    def test_edit_after_step_409(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "step"})
        r = self.patch(client, sid, task_type="A", machine_type="slow", value=3)
        assert r.status_code == 409

    def test_edit_before_load_409(self, client):
        sid = make_session(client)
        r = self.patch(client, sid, task_type="A", machine_type="slow", value=3)
        assert r.status_code == 409

    def test_zero_value_400(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = self.patch(client, sid, task_type="A", machine_type="slow", value=0)
        assert r.status_code == 400
        assert r.json()["error"] == "NonPositiveCell"

    def test_unknown_cell_400(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        r = self.patch(client, sid, task_type="Z", machine_type="slow", value=3)
        assert r.status_code == 400


class TestReport:
    def test_report_before_load_409(self, client):
        sid = make_session(client)
        assert client.get(f"/sessions/{sid}/report").status_code == 409

    def test_report_bytes_are_stable_json(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        client.post(f"/sessions/{sid}/control", json={"action": "run"})
        raw = client.get(f"/sessions/{sid}/report").content
        assert raw == client.get(f"/sessions/{sid}/report").content
        payload = json.loads(raw)
        assert payload["totals"]["completed"] == 3
        assert payload["makespan"] == 6.0


class TestEvents:
    def test_deltas_one_per_step_in_order(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        with client.websocket_connect(f"/sessions/{sid}/events") as ws:
            for _ in range(3):
                client.post(f"/sessions/{sid}/control", json={"action": "step"})
            first = ws.receive_json()
            second = ws.receive_json()
            third = ws.receive_json()
        assert first == {
            "event_no": 1, "time": 0.0, "kind": "arrival", "task": "t1",
            "counters": {"arrived": 1, "completed": 0, "missed": 0,
                         "cancelled": 0, "in_system": 1},
        }
        assert second["kind"] == "arrival" and second["task"] == "t2"
        assert third["kind"] == "scheduler_invoke"
        assert [first["event_no"], second["event_no"], third["event_no"]] == [1, 2, 3]

    def test_full_run_streams_every_event(self, client, s1_eet_bytes, s1_trace_bytes):
        sid = make_session(client)
        load_s1(client, sid, s1_eet_bytes, s1_trace_bytes)
        with client.websocket_connect(f"/sessions/{sid}/events") as ws:
            client.post(f"/sessions/{sid}/control", json={"action": "run"})
            deltas = [ws.receive_json() for _ in range(11)]
        assert [d["event_no"] for d in deltas] == list(range(1, 12))
        kinds = [d["kind"] for d in deltas]
        assert kinds.count("completion") == 3
        assert deltas[-1]["counters"]["in_system"] == 0

    def test_unknown_session_ws_closes(self, client):
        from starlette.websockets import WebSocketDisconnect

        with pytest.raises(WebSocketDisconnect) as err:
            with client.websocket_connect("/sessions/nope/events"):
                pass
        assert err.value.code == 4404


class TestIdleExpiry:
    def test_stale_sessions_vanish(self):
        manager = SessionManager(ttl_seconds=0.05)
        sid = manager.create(S1_CONFIG)
        assert manager.snapshot(sid)["status"] == "configuring"
        time.sleep(0.12)
        with pytest.raises(UnknownSession):
            manager.snapshot(sid)

    def test_touch_keeps_session_alive(self):
        manager = SessionManager(ttl_seconds=0.2)
        sid = manager.create(S1_CONFIG)
        for _ in range(4):
            time.sleep(0.08)
            manager.snapshot(sid)  # refreshes last_touch
        assert manager.snapshot(sid)["status"] == "configuring"
