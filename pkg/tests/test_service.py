"""HTTP session service behavior over the in-process test client."""
import json

import pytest
from fastapi.testclient import TestClient

from flowtest import problems as pb
from flowtest import simulate as si
from flowtest.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def problem(name):
    return json.loads(pb.fixture_path(name).read_text())


@pytest.fixture(scope="module")
def order_session(client):
    r = client.post("/sessions", json={"problem":
                                       problem("order_2x3_reactive")})
    assert r.status_code == 201
    return r.json()["id"]


def test_fixture_endpoints(client):
    r = client.get("/fixtures")
    assert "order_2x3_reactive" in r.json()["fixtures"]
    assert client.get("/fixtures/order_2x3_reactive").status_code == 200
    assert client.get("/fixtures/nope").status_code == 404


def test_create_rejects_bad_schema(client):
    r = client.post("/sessions", json={"problem": {"grid": {}}})
    assert r.status_code == 422
    assert r.json()["detail"]["violations"]


def test_create_reports_inconsistent_problem(client):
    r = client.post("/sessions", json={"problem":
                                       problem("case1_blocked_goal")})
    assert r.status_code == 409
    assert r.json()["report"]["status"] == "case1_no_path"


def test_initial_payload(client, order_session):
    r = client.get(f"/sessions/{order_session}")
    body = r.json()
    assert body["status"] == "running"
    assert body["system"] == [1, 0]
    assert body["mode"] == "reactive"
    assert body["trace"] == [[1, 0]]
    assert set(body["available_moves"]) | set(body["restrictions"]) \
        == {a for a in body["available_moves"] + body["restrictions"]}
    for p in body["restriction_provenance"]:
        assert "history_state" in p and "edge" in p


def test_restricted_move_409_with_provenance(client, order_session):
    client.post(f"/sessions/{order_session}/reset")
    body = client.get(f"/sessions/{order_session}").json()
    for _ in range(20):
        if body["restrictions"] or body["status"] != "running":
            break
        body = client.post(f"/sessions/{order_session}/move",
                           json={"action": body["available_moves"][0]}).json()
    assert body["restrictions"], "no restricted state found on this walk"
    bad = body["restrictions"][0]
    r = client.post(f"/sessions/{order_session}/move",
                    json={"action": bad})
    assert r.status_code == 409
    detail = r.json()["detail"]
    assert detail["error"] == "action restricted"
    assert detail["provenance"]
    assert detail["provenance"][0]["edge"][0] == body["system"]
    # the committed state did not change
    assert client.get(f"/sessions/{order_session}").json()["trace"] \
        == body["trace"]


def test_unknown_action_422(client, order_session):
    client.post(f"/sessions/{order_session}/reset")
    r = client.post(f"/sessions/{order_session}/move",
                    json={"action": "teleport"})
    assert r.status_code == 422


def test_whatif_is_pure(client, order_session):
    client.post(f"/sessions/{order_session}/reset")
    before = client.get(f"/sessions/{order_session}").json()
    act = before["available_moves"][0]
    a = client.get(f"/sessions/{order_session}/whatif",
                   params={"action": act}).json()
    b = client.get(f"/sessions/{order_session}/whatif",
                   params={"action": act}).json()
    assert a == b
    assert len(a["trace"]) == len(before["trace"]) + 1
    after = client.get(f"/sessions/{order_session}").json()
    assert after == before


def play_greedy(client, sid, limit=60):
    """Drive the session with the same ranking the greedy simulator uses."""
    body = client.get(f"/sessions/{sid}").json()
    while body["status"] == "running" and limit > 0:
        limit -= 1
        best = None
        for act in sorted(body["available_moves"]):
            peek = client.get(f"/sessions/{sid}/whatif",
                              params={"action": act}).json()
            key = (0 if peek["status"] != "running" else 1, act)
            if best is None or key < best[0]:
                best = (key, act)
        body = client.post(f"/sessions/{sid}/move",
                           json={"action": best[1]}).json()
    return body


def test_full_game_matches_simulation(client):
    pf = pb.load_problem(pb.fixture_path("order_2x3_reactive"))
    _, _, _, rep, strategy = pb.run_synthesis(pf)
    inst = pb.build_instance(pf)
    trace = si.simulate(inst["t"], strategy, rep.artifacts["b_sys"],
                        rep.artifacts["b_test"], policy=si.GREEDY, depth=60)
    r = client.post("/sessions", json={"problem":
                                       problem("order_2x3_reactive")})
    sid = r.json()["id"]
    body = r.json()
    for step in trace.steps:
        assert body["system"] == pb.jsonable(step["system"])
        assert body["restrictions"] == step["restrictions"]
        if "action" not in step:
            break
        body = client.post(f"/sessions/{sid}/move",
                           json={"action": step["action"]}).json()
    assert body["status"] == "done-success"
    assert body["verdicts"] == {"system": True, "test": True}
    r = client.post(f"/sessions/{sid}/move", json={"action": "N"})
    assert r.status_code == 409
    assert r.json()["detail"]["error"] == "session finished"


def test_agent_session_play_through(client):
    r = client.post("/sessions", json={"problem":
                                       problem("corridor_maze_agent")})
    assert r.status_code == 201
    body = r.json()
    sid = body["id"]
    assert body["mode"] == "agent"
    assert body["agent"] is not None
    body = play_greedy(client, sid, limit=80)
    assert body["status"] == "done-success"
    assert body["verdicts"]["test"] is True


def test_reset_terminate_delete(client):
    r = client.post("/sessions", json={"problem":
                                       problem("order_2x3_reactive")})
    sid = r.json()["id"]
    first = r.json()
    act = first["available_moves"][0]
    client.post(f"/sessions/{sid}/move", json={"action": act})
    reset = client.post(f"/sessions/{sid}/reset").json()
    assert reset["trace"] == first["trace"]
    term = client.post(f"/sessions/{sid}/terminate").json()
    assert term["status"] == "terminated"
    assert client.delete(f"/sessions/{sid}").status_code == 204
    assert client.get(f"/sessions/{sid}").status_code == 404
