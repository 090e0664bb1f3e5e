"""HTTP session service: play the system under test against a synthesized
strategy over a JSON API. Sessions are in-memory; every legality decision
comes from the synthesized strategy, so clients need no game logic."""
from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import agent as ag
from . import problems as pb
from . import simulate as si
from . import strategy as st


class CreateSession(BaseModel):
    problem: dict
    mode: str = None


class Move(BaseModel):
    action: str


@dataclass
class Session:
    id: str
    pf: pb.ProblemFile
    inst: dict
    rep: object
    strategy: object
    prefix: list
    game_state: object = None      # agent mode position in the turn game
    status: str = "running"
    lock: threading.Lock = field(default_factory=threading.Lock)


def _action_to_target(t, s, action):
    for a, s2 in t.successors(s):
        if a == action:
            return s2
    return None


def _session_payload(sess: Session) -> dict:
    t = sess.inst["t"]
    pf = sess.pf
    s = sess.prefix[-1]
    strategy = sess.strategy
    if pf.mode == "agent":
        gs = sess.game_state
        game = strategy.game
        req = game.required.get((gs.x_sys, gs.q_hist), set())
        restricted = sorted(
            a for a, s2 in t.successors(s)
            if s2 != s and (s2 == gs.x_ta or (s, s2) in strategy.obs))
        provenance = [{"history_state": pb.jsonable(gs.q_hist),
                       "edge": [pb.jsonable(s), pb.jsonable(s2)]}
                      for s2 in sorted(req, key=repr)]
        obstacles = sorted(([pb.jsonable(a), pb.jsonable(b)]
                            for (a, b) in strategy.obs), key=repr)
        history = pb.jsonable(gs.q_hist)
        agent_cell = pb.jsonable(gs.x_ta)
    else:
        qs = st._replay(strategy, sess.prefix)
        restricted = sorted(st.restrictions_at(strategy, sess.prefix))
        provenance = [
            {"history_state": pb.jsonable(qs[-1]),
             "edge": [pb.jsonable(a), pb.jsonable(b)]}
            for (a, b) in sorted(
                st._restricted_transitions(strategy, s, qs[-1]), key=repr)]
        obstacles = sorted(
            ([pb.jsonable(a), pb.jsonable(b)]
             for (a, b) in {(s1, _action_to_target(t, s1, act))
                            for (s1, act) in
                            st.active_obstacles(strategy, sess.prefix)}),
            key=repr)
        history = pb.jsonable(qs[-1])
        agent_cell = None
    b_sys = sess.rep.artifacts["b_sys"]
    b_test = sess.rep.artifacts["b_test"]
    verdicts = si.check_trace(t, b_sys, b_test, sess.prefix)
    if s in t.terminal:
        status = "done-success" if verdicts["system"] else "done-failure"
    else:
        status = sess.status
    moves = sorted(a for a, s2 in t.successors(s)
                   if s2 != s and a not in restricted)
    return {
        "id": sess.id,
        "status": status,
        "grid": pf.grid,
        "labels": pf.labels,
        "mode": pf.mode,
        "system": pb.jsonable(s),
        "agent": agent_cell,
        "history_state": history,
        "trace": [pb.jsonable(x) for x in sess.prefix],
        "restrictions": restricted,
        "restriction_provenance": provenance,
        "available_moves": moves,
        "obstacles": obstacles,
        "verdicts": verdicts,
    }


def _advance(sess: Session, action: str, commit: bool):
    """One system action (and the agent's reply, if present). Returns the
    payload after the move; raises 409 details for restricted actions."""
    t = sess.inst["t"]
    s = sess.prefix[-1]
    payload = _session_payload(sess)
    if payload["status"] != "running":
        raise HTTPException(status_code=409,
                            detail={"error": "session finished"})
    if action in payload["restrictions"]:
        prov = [p for p in payload["restriction_provenance"]
                if _action_to_target(t, s, action) is not None
                and p["edge"][1] == pb.jsonable(
                    _action_to_target(t, s, action))]
        raise HTTPException(
            status_code=409,
            detail={"error": "action restricted", "action": action,
                    "provenance": prov or payload["restriction_provenance"]})
    s2 = _action_to_target(t, s, action)
    if s2 is None:
        raise HTTPException(status_code=422,
                            detail={"error": f"unknown action {action}"})
    new_prefix = sess.prefix + [s2]
    new_gs = None
    if sess.pf.mode == "agent":
        game = sess.strategy.game
        gs = sess.game_state
        succ = [n for n in game.moves.get(gs, []) if n.x_sys == s2]
        if not succ:
            raise HTTPException(
                status_code=409,
                detail={"error": "action restricted", "action": action,
                        "provenance": [{
                            "history_state": pb.jsonable(gs.q_hist),
                            "edge": [pb.jsonable(s), pb.jsonable(s2)]}]})
        new_gs = succ[0]
        if new_gs.turn == ag.AGENT_TURN and new_gs.x_sys not in t.terminal:
            target = sess.strategy.table.get(new_gs)
            reply = [n for n in game.moves.get(new_gs, [])
                     if n.x_ta == target]
            if reply:
                new_gs = reply[0]
    if commit:
        sess.prefix = new_prefix
        sess.game_state = new_gs
        return _session_payload(sess)
    old_prefix, old_gs = sess.prefix, sess.game_state
    sess.prefix, sess.game_state = new_prefix, new_gs
    try:
        return _session_payload(sess)
    finally:
        sess.prefix, sess.game_state = old_prefix, old_gs


def create_app() -> FastAPI:
    app = FastAPI(title="reactive test environment sessions")
    sessions: dict[str, Session] = {}

    def get_session(sid) -> Session:
        sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(status_code=404,
                                detail={"error": "unknown session"})
        return sess

    @app.get("/fixtures")
    def fixtures():
        from importlib import resources
        base = resources.files("flowtest") / "fixtures"
        return {"fixtures": sorted(f.name.removesuffix(".json")
                                   for f in base.iterdir())}

    @app.get("/fixtures/{name}")
    def fixture(name: str):
        import json
        try:
            return json.loads(pb.fixture_path(name).read_text())
        except FileNotFoundError:
            raise HTTPException(status_code=404,
                                detail={"error": "unknown fixture"})

    @app.post("/sessions", status_code=201)
    def create(body: CreateSession):
        import json
        try:
            pf = pb.parse_problem(json.dumps(body.problem))
        except pb.ProblemError as exc:
            raise HTTPException(status_code=422,
                                detail={"error": "schema",
                                        "violations": exc.violations})
        if body.mode:
            pf.mode = body.mode
        report, files, code, rep, strategy = pb.run_synthesis(pf)
        if code != 0:
            return JSONResponse(
                status_code=409,
                content={"error": "synthesis failed", "report":
                         pb.jsonable(report)})
        sid = uuid.uuid4().hex[:12]
        inst = pb.build_instance(pf)
        sess = Session(id=sid, pf=pf, inst=inst, rep=rep,
                       strategy=strategy, prefix=[inst["t"].initial])
        if pf.mode == "agent":
            game = strategy.game
            gs = game.initial
            if gs.turn == ag.AGENT_TURN:
                target = strategy.table.get(gs)
                reply = [n for n in game.moves.get(gs, [])
                         if n.x_ta == target]
                gs = reply[0] if reply else gs
            sess.game_state = gs
        sessions[sid] = sess
        return _session_payload(sess)

    @app.get("/sessions/{sid}")
    def read(sid: str):
        return _session_payload(get_session(sid))

    @app.post("/sessions/{sid}/move")
    def move(sid: str, body: Move):
        sess = get_session(sid)
        with sess.lock:
            return _advance(sess, body.action, commit=True)

    @app.get("/sessions/{sid}/whatif")
    def whatif(sid: str, action: str):
        sess = get_session(sid)
        with sess.lock:
            return _advance(sess, action, commit=False)

    @app.post("/sessions/{sid}/reset")
    def reset(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.prefix = [sess.inst["t"].initial]
            sess.status = "running"
            if sess.pf.mode == "agent":
                game = sess.strategy.game
                gs = game.initial
                if gs.turn == ag.AGENT_TURN:
                    target = sess.strategy.table.get(gs)
                    reply = [n for n in game.moves.get(gs, [])
                             if n.x_ta == target]
                    gs = reply[0] if reply else gs
                sess.game_state = gs
            return _session_payload(sess)

    @app.post("/sessions/{sid}/terminate")
    def terminate(sid: str):
        sess = get_session(sid)
        with sess.lock:
            sess.status = "terminated"
            return _session_payload(sess)

    @app.delete("/sessions/{sid}", status_code=204)
    def delete(sid: str):
        get_session(sid)
        del sessions[sid]

    return app
