"""Trace simulation against a synthesized strategy: scripted system
policies, turn alternation with a dynamic agent, trace checking, and
exhaustive verdict aggregation over every system behavior."""
from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .automata import ValidationError, accepts_finite_trace
from .system import TransitionSystem
from . import agent as ag
from . import strategy as st

GREEDY = "greedy"
RANDOM = "random"
STAY = "stay"

DONE_SUCCESS = "done-success"
DONE_FAILURE = "done-failure"
TERMINATED = "terminated"


@dataclass
class TraceRecord:
    steps: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    status: str = TERMINATED


def default_depth(artifacts) -> int:
    return 4 * len(artifacts["G"].nodes)


def check_trace(t: TransitionSystem, b_sys, b_test, states) -> dict:
    """Acceptance verdicts for a state trace; rejects illegal steps."""
    if not states or states[0] != t.initial:
        raise ValidationError("trace must start at the initial state")
    edge_set = set(t.edges)
    for i, (a, b) in enumerate(zip(states, states[1:])):
        if a != b and (a, b) not in edge_set:
            raise ValidationError(f"illegal transition at step {i}")
    word = [t.label(s) for s in states]
    return {"system": accepts_finite_trace(b_sys, word),
            "test": accepts_finite_trace(b_test, word)}


def _distances_to_goal(t: TransitionSystem):
    preds = {}
    for (u, v) in t.edges:
        preds.setdefault(v, []).append(u)
    dist = {s: 0 for s in t.terminal}
    queue = deque(t.terminal)
    while queue:
        u = queue.popleft()
        for w in preds.get(u, ()):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _allowed_moves(strategy: st.TestStrategy, t, prefix):
    blocked = st.restrictions_at(strategy, prefix)
    s = prefix[-1]
    return [(a, s2) for a, s2 in sorted(t.successors(s), key=repr)
            if s2 != s and a not in blocked]


def _config_distances(t: TransitionSystem, strategy: st.TestStrategy):
    """Distance to goal over (state, history) configurations under the
    strategy's restrictions; the greedy policy plans with these so it
    routes around obstacles instead of oscillating against them."""
    d = strategy.automaton
    preds = {}
    q0 = d.step(d.initial, t.label(t.initial))
    start = (t.initial, q0)
    seen = {start}
    stack = [start]
    while stack:
        s, q = stack.pop()
        blocked = {s2 for (s1, s2) in strategy.reactive_map.at(q) if s1 == s}
        blocked |= {s2 for (s1, s2) in strategy.static if s1 == s}
        for _a, s2 in t.successors(s):
            if s2 == s or s2 in blocked:
                continue
            nxt = (s2, d.step(q, t.label(s2)))
            preds.setdefault(nxt, []).append((s, q))
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    goals = [v for v in seen if v[0] in t.terminal]
    dist = {v: 0 for v in goals}
    queue = deque(goals)
    while queue:
        v = queue.popleft()
        for w in preds.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def simulate(t: TransitionSystem, strategy: st.TestStrategy, b_sys, b_test,
             policy: str = GREEDY, seed: int = 0,
             depth: int = 200) -> TraceRecord:
    """Run one system policy against an obstacle strategy."""
    rng = random.Random(seed)
    dist = _config_distances(t, strategy)
    inf = len(dist) + len(t.states) + 1
    d = strategy.automaton
    prefix = [t.initial]
    q = d.step(d.initial, t.label(t.initial))
    trace = TraceRecord()
    for _step in range(depth):
        s = prefix[-1]
        blocked = st.restrictions_at(strategy, prefix)
        obstacles = st.active_obstacles(strategy, prefix)
        moves = _allowed_moves(strategy, t, prefix)
        step = {"system": s, "restrictions": sorted(blocked),
                "obstacles": sorted(obstacles, key=repr)}
        if s in t.terminal:
            trace.steps.append(step)
            break
        if policy == GREEDY:
            ranked = sorted(
                moves, key=lambda m: (dist.get(
                    (m[1], d.step(q, t.label(m[1]))), inf), repr(m)))
            move = ranked[0] if ranked else None
        elif policy == STAY:
            move = None  # the system is free to make no progress at all
        else:
            move = rng.choice(moves) if moves else None
        if move is None:
            trace.steps.append(step)
            break
        step["action"] = move[0]
        trace.steps.append(step)
        prefix.append(move[1])
        q = d.step(q, t.label(move[1]))
    trace.verdicts = check_trace(t, b_sys, b_test, prefix)
    if prefix[-1] in t.terminal:
        trace.status = DONE_SUCCESS if trace.verdicts["system"] \
            else DONE_FAILURE
    else:
        trace.status = TERMINATED
    return trace


def _game_distances(strategy: ag.AgentStrategy, t: TransitionSystem):
    """Distance to a goal configuration over game states, with the agent
    pinned to its strategy table."""
    game = strategy.game
    preds = {}
    for gs in game.states:
        if gs.turn == ag.AGENT_TURN:
            succ = [n for n in game.moves.get(gs, [])
                    if n.x_ta == strategy.table.get(gs)]
        else:
            succ = game.moves.get(gs, [])
        for n in succ:
            preds.setdefault(n, []).append(gs)
    goals = [gs for gs in game.states if gs.x_sys in t.terminal]
    dist = {gs: 0 for gs in goals}
    queue = deque(goals)
    while queue:
        v = queue.popleft()
        for w in preds.get(v, ()):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _action_name(t: TransitionSystem, s, s2):
    for a, nxt in sorted(t.successors(s), key=repr):
        if nxt == s2:
            return a
    return None


def simulate_agent(t: TransitionSystem, strategy: ag.AgentStrategy,
                   b_sys, b_test, policy: str = GREEDY, seed: int = 0,
                   depth: int = 200) -> TraceRecord:
    """Run one system policy against the dynamic agent, alternating turns."""
    rng = random.Random(seed)
    dist = _game_distances(strategy, t)
    inf = len(strategy.game.states) + 1
    game = strategy.game
    gs = game.initial
    trace = TraceRecord()
    prefix = [gs.x_sys]
    for _step in range(depth):
        if gs.turn == ag.AGENT_TURN:
            target = strategy.table.get(gs)
            nxt = [n for n in game.moves.get(gs, []) if n.x_ta == target]
            if not nxt:
                break
            gs = nxt[0]
            continue
        moves = sorted(game.moves.get(gs, []), key=repr)
        real = [n for n in moves if n.x_sys != gs.x_sys]
        step = {"system": gs.x_sys, "agent": gs.x_ta,
                "history_state": gs.q_hist,
                "restrictions": sorted(
                    (s2 for s2 in game.required.get(
                        (gs.x_sys, gs.q_hist), set())), key=repr)}
        if gs.x_sys in t.terminal:
            trace.steps.append(step)
            break
        if policy == GREEDY:
            ranked = sorted(real, key=lambda n: (dist.get(n, inf), repr(n)))
            nxt = ranked[0] if ranked else None
        else:
            nxt = rng.choice(real) if real else None
        if nxt is None:
            nxt = [n for n in moves if n.x_sys == gs.x_sys][0]
        else:
            step["action"] = _action_name(t, gs.x_sys, nxt.x_sys)
            prefix.append(nxt.x_sys)
        trace.steps.append(step)
        gs = nxt
    trace.verdicts = check_trace(t, b_sys, b_test, prefix)
    if prefix[-1] in t.terminal:
        trace.status = DONE_SUCCESS if trace.verdicts["system"] \
            else DONE_FAILURE
    else:
        trace.status = TERMINATED
    return trace


@dataclass
class ExhaustiveReport:
    reachable: int
    goal_states: list
    goal_verdicts: list        # (state, history, system verdict, test verdict)
    violations: list           # goal-reaching behaviors failing the test
    histories_at_goal: set
    histories_seen: set = field(default_factory=set)


def _stutter_accepts(b, q, labels) -> bool:
    """Acceptance when the run sits at q and the label set repeats forever."""
    seen = []
    while q not in seen:
        seen.append(q)
        q = b.step(q, labels)
    cycle = seen[seen.index(q):]
    return any(x in b.accepting for x in cycle)


def exhaustive_verdicts(t: TransitionSystem, strategy: st.TestStrategy,
                        b_sys, b_test) -> ExhaustiveReport:
    """Aggregate verdicts over every system behavior at once.

    With instantaneous obstacles the restriction at a configuration depends
    only on (state, history), so the reachable configuration graph under
    the strategy covers every policy of every depth; a goal configuration
    whose label history fails the test objective is a counterexample."""
    d = strategy.automaton
    tags = d.component_tags
    if not tags:
        raise ValidationError("history automaton lacks component tags")
    q0 = d.step(d.initial, t.label(t.initial))
    start = (t.initial, q0)
    seen = {start}
    queue = deque([start])
    goal_verdicts = []
    violations = []
    while queue:
        s, q = queue.popleft()
        if s in t.terminal:
            q_sys, q_test = tags[q]
            sys_ok = _stutter_accepts(b_sys, q_sys, t.label(s))
            test_ok = _stutter_accepts(b_test, q_test, t.label(s))
            goal_verdicts.append((s, q, sys_ok, test_ok))
            if sys_ok and not test_ok:
                violations.append((s, q))
            continue
        blocked = {
            s2 for (s1, s2) in strategy.reactive_map.at(q) if s1 == s}
        blocked |= {s2 for (s1, s2) in strategy.static if s1 == s}
        for a, s2 in t.successors(s):
            if s2 == s or s2 in blocked:
                continue
            nxt = (s2, d.step(q, t.label(s2)))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return ExhaustiveReport(
        reachable=len(seen),
        goal_states=sorted({repr(s) for s, _, _, _ in goal_verdicts}),
        goal_verdicts=goal_verdicts,
        violations=violations,
        histories_at_goal={q for _, q, _, _ in goal_verdicts},
        histories_seen={q for _, q in seen})
