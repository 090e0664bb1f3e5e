"""Reactive maps, obstacle schedules, and the synthesis pipeline."""
import random

import pytest

from flowtest import automata as au
from flowtest import routing as rt
from flowtest import strategy as st
from flowtest import system as sm
from helpers import tiny_order, diamond, build_products


def synth(builder, variant="reactive", **kw):
    t, h, sys_obj, test_obj = builder()
    return st.find_test_strategy(t, h, sys_obj, test_obj, variant, **kw)


def test_reactive_map_from_tiny_cuts():
    rep = synth(tiny_order)
    assert rep.status == "ok"
    strat = rep.strategy
    assert strat.flow == 2
    assert len(strat.cuts) == 4
    rmap = strat.reactive_map
    assert len(rmap.histories()) == 3
    t_edges = set(strat.system.edges)
    for q in rmap.histories():
        for e in rmap.at(q):
            assert e in t_edges


def test_restrictions_legal_and_definitional():
    rep = synth(diamond)
    strat = rep.strategy
    t = strat.system
    acts = st.restrictions_at(strat, ["s0"])
    assert acts <= strat.harness.restrictable.get("s0", set())
    (u, v), = strat.cuts
    if u[0] == "s0":
        assert acts == {"to_s2"}
    else:
        assert acts == set()
        assert st.restrictions_at(strat, ["s0", "s2"]) == {"to_s3"}


def test_illegal_prefix_rejected():
    rep = synth(diamond)
    with pytest.raises(au.ValidationError):
        st.restrictions_at(rep.strategy, ["s1"])
    with pytest.raises(au.ValidationError):
        st.restrictions_at(rep.strategy, ["s0", "s3"])
    with pytest.raises(au.ValidationError):
        st.restrictions_at(rep.strategy, [])


def test_no_trap_states_on_tiny():
    rep = synth(tiny_order)
    assert st.unsafe_nodes(rep.problem, rep.strategy.cuts) == set()
    assert rep.rechecks == 0


def test_simulated_runs_satisfy_test_objective():
    # any compliant run that reaches the goal must have crossed a waypoint
    rep = synth(tiny_order)
    strat = rep.strategy
    t = strat.system
    b_test = rep.artifacts["b_test"]
    b_sys = rep.artifacts["b_sys"]
    rng = random.Random(13)
    wins = 0
    for _ in range(300):
        prefix = [t.initial]
        for _step in range(25):
            s = prefix[-1]
            blocked = st.restrictions_at(strat, prefix)
            moves = [s2 for a, s2 in t.successors(s)
                     if s2 != s and a not in blocked]
            if not moves:
                break
            prefix.append(rng.choice(moves))
        word = [t.label(s) for s in prefix]
        if au.accepts_finite_trace(b_sys, word):
            wins += 1
            assert au.accepts_finite_trace(b_test, word)
    assert wins > 50


def test_mode_equality_at_decision_time():
    rep = synth(tiny_order)
    inst = rep.strategy
    acc = st.TestStrategy(inst.reactive_map, st.ACCUMULATIVE, inst.static,
                          inst.system, inst.harness, inst.automaton,
                          cuts=inst.cuts, flow=inst.flow)
    t = inst.system
    rng = random.Random(4)
    for _ in range(100):
        prefix = [t.initial]
        for _step in range(rng.randint(0, 12)):
            s = prefix[-1]
            moves = [s2 for a, s2 in t.successors(s) if s2 != s]
            if not moves:
                break
            prefix.append(rng.choice(moves))
        s = prefix[-1]
        obs_i = {o for o in st.active_obstacles(inst, prefix) if o[0] == s}
        obs_a = {o for o in st.active_obstacles(acc, prefix) if o[0] == s}
        assert obs_i == obs_a
        assert st.restrictions_at(inst, prefix) == st.restrictions_at(acc, prefix)


def test_accumulative_persistence_and_reset():
    rep = synth(tiny_order)
    inst = rep.strategy
    acc = st.TestStrategy(inst.reactive_map, st.ACCUMULATIVE, inst.static,
                          inst.system, inst.harness, inst.automaton)
    t = inst.system
    d = inst.automaton

    def hist(prefix):
        q = d.step(d.initial, t.label(prefix[0]))
        for s in prefix[1:]:
            q = d.step(q, t.label(s))
        return q

    # walk toward the first waypoint without reaching it yet
    prefix = [(1, 0), (0, 0)]
    assert hist([(1, 0)]) != hist(prefix)  # waypoint reached, history moved
    placed = st.active_obstacles(acc, [(1, 0)])
    if placed:
        # obstacles placed at the start persist while the history is stable
        still = st.active_obstacles(acc, [(1, 0), (1, 1), (1, 0)])
        assert placed <= still
    # crossing the waypoint resets accumulation to the new history
    after = st.active_obstacles(acc, prefix)
    inst_after = {o for o in st.active_obstacles(inst, prefix)}
    assert after <= inst_after | {o for o in placed if o[0] == prefix[-1]}


def test_instantaneous_covers_all_current_history_cuts():
    rep = synth(tiny_order)
    strat = rep.strategy
    t = strat.system
    q0_edges = strat.reactive_map.at(
        strat.automaton.step(strat.automaton.initial, t.label(t.initial)))
    obs = st.active_obstacles(strat, [t.initial])
    states_with_cuts = {s1 for (s1, s2) in q0_edges}
    assert states_with_cuts == {o[0] for o in obs} or not q0_edges


def test_static_variant_strategy():
    rep = synth(tiny_order, variant="static")
    assert rep.status == "ok"
    strat = rep.strategy
    assert strat.static
    # every restriction the system ever sees maps to a declared obstacle
    t = strat.system
    for q in strat.reactive_map.histories():
        for (s1, s2) in strat.reactive_map.at(q):
            assert (s1, s2) in strat.static or (s1, s2) in set(t.edges)


def test_case1_report():
    spec = sm.GridWorldSpec(
        rows=1, cols=4, init_cell=(0, 0), terminal_cells={(0, 3)},
        blocked_cells={(0, 2)},
        label_map={"T": {(0, 3)}, "I": {(0, 1)}})
    t, h = sm.build_grid_world(spec)
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I"),))
    rep = st.find_test_strategy(t, h, sys_obj, test_obj, "reactive")
    assert rep.status == rt.CASE1_NO_PATH
    assert rep.strategy is None


def test_case2_report():
    # the waypoint sits on a dead-end spur, never on a route to the goal
    states = ["s0", "s1", "s3"]
    delta = {("s0", "stay"): "s0", ("s1", "stay"): "s1", ("s3", "stay"): "s3",
             ("s0", "to_s1"): "s1", ("s0", "to_s3"): "s3"}
    labels = {"s0": frozenset(), "s1": frozenset(["I"]),
              "s3": frozenset(["T"])}
    t = sm.TransitionSystem(states=states, actions=["stay", "to_s1", "to_s3"],
                            delta=delta, initial="s0",
                            ap=frozenset(["I", "T"]), labels=labels,
                            terminal=frozenset(["s3"]))
    h = sm.TestHarness({"s0": {"to_s1", "to_s3"}})
    h.validate(t)
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I"),))
    rep = st.find_test_strategy(t, h, sys_obj, test_obj, "reactive")
    assert rep.status == rt.CASE2_NO_PATH_THROUGH_I
