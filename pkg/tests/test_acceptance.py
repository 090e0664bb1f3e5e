"""End-to-end acceptance suite.

One test per shipped guarantee, each with its own wall-clock budget:
 1. conjoined history automaton sizes on the reference objectives
 2. randomized suite: the bypass around the waypoints is always severed
 3. randomized suite: every feasibility copy keeps a path to its goal
 4. solver optimum equals the exhaustive enumeration oracle
 5. satisfiability reduction round trip agrees with DPLL
 6. shipped two-waypoint fixture forces both visit orders
 7. dynamic-agent synthesis on the corridor maze with verified guarantees
 8. inconsistent problems are classified, not solved
 9. byte-identical artifacts across repeated runs
"""
import random
import time

import pytest

from flowtest import agent as ag
from flowtest import oracle as orc
from flowtest import problems as pb
from flowtest import routing as rt
from flowtest import simulate as si
from flowtest import solver as sv
from helpers import tiny_order, diamond, corridor_maze, build_products


def load_fixture(name):
    return pb.load_problem(pb.fixture_path(name))


def test_01_conjoined_history_automaton_sizes():
    t0 = time.monotonic()
    one = build_products(*diamond())           # reach goal / observe one cell
    two = build_products(*tiny_order())        # reach goal / observe two cells
    assert len(one["b_pi"].states) == 4
    assert len(two["b_pi"].states) == 8
    assert time.monotonic() - t0 < 1.0


@pytest.fixture(scope="module")
def random_suite_solutions():
    """200 seeded random 5x5 instances, all three objective families, solved
    in reactive mode with a per-instance time limit; returns
    (problem, solution) pairs plus the elapsed seconds."""
    t0 = time.monotonic()
    suite = orc.random_grid_suite(seed=2024, count=200, rows=5, cols=5)
    out = []
    for arts in suite:
        p = arts["problem"]
        sol = rt.solve_routing(rt.build_reactive_model(p),
                               sv.SolveOptions(time_limit=2.0))
        out.append((p, sol))
    return out, time.monotonic() - t0


def test_02_random_suite_bypass_always_severed(random_suite_solutions):
    pairs, elapsed = random_suite_solutions
    assert len(pairs) == 200
    returned = [(p, s) for p, s in pairs if s.status in ("optimal", "feasible")]
    assert len(returned) >= 120        # the suite must not be vacuous
    violations = [p for p, s in returned if rt.bypass_flow(p, s.cuts) != 0]
    assert violations == []
    assert elapsed < 600


def test_03_random_suite_goals_stay_feasible(random_suite_solutions):
    pairs, _ = random_suite_solutions
    returned = [(p, s) for p, s in pairs if s.status in ("optimal", "feasible")]
    violations = [p for p, s in returned if not rt.check_feasibility(p, s.cuts)]
    assert violations == []


def test_04_solver_matches_enumeration_oracle():
    t0 = time.monotonic()
    rng = random.Random(77)
    collected = []
    tries = 0
    while len(collected) < 100 and tries < 1000:
        tries += 1
        rows = 3 if tries % 2 else 4
        fam = orc.FAMILIES[tries % 3]
        try:
            arts = orc.random_grid_problem(rng.randrange(1 << 30), rows, rows,
                                           fam)
        except RuntimeError:
            continue
        p_re = arts["problem"]
        p_st = rt.cut_problem_from_products(arts, "static")
        if len(orc.reactive_decisions(p_re)) <= 22 \
                and len(orc.static_decisions(p_st)) <= 22:
            collected.append((p_re, p_st))
    assert len(collected) == 100
    mismatches = []
    for k, (p_re, p_st) in enumerate(collected):
        for variant, p, build in (("static", p_st, rt.build_static_model),
                                  ("reactive", p_re, rt.build_reactive_model)):
            res = orc.enumerate_optimal_cuts(p, variant=variant,
                                             max_decisions=22)
            sol = rt.solve_routing(build(p))
            o = (res.flow, min((len(c) for c in res.optimal_cuts),
                               default=None)) \
                if res.objective is not None else (None, None)
            s = (sol.flow, len(sol.cuts)) if sol.status == "optimal" \
                else (None, None)
            if o != s:
                mismatches.append((k, variant, o, s))
    assert mismatches == []
    assert time.monotonic() - t0 < 900


def test_05_sat_reduction_decisions_match_dpll():
    t0 = time.monotonic()
    rng = random.Random(4242)
    decided = 0
    for _ in range(50):
        n = rng.randint(2, 5)
        m = rng.randint(2, 6)
        clauses = [tuple(rng.choice([1, -1]) * v
                         for v in rng.sample(range(1, n + 1), min(3, n)))
                   for _ in range(m)]
        sat = orc.dpll_sat(clauses, n)
        for build_inst, build_model in (
                (orc.sat_to_static_instance, rt.build_static_model),
                (orc.sat_to_reactive_instance, rt.build_reactive_model)):
            inst = build_inst(clauses, n)
            model = build_model(inst.problem)
            rt.add_cut_budget(model, inst.budget)
            sol = rt.solve_routing(model)
            assert (sol.status == "optimal") == (sat is not None), clauses
            if sol.status == "optimal":
                assign = orc.decode_assignment(inst, sol.cuts)
                assert orc.check_assignment(clauses, assign), clauses
        decided += 1
    assert decided == 50
    assert time.monotonic() - t0 < 300


def test_06_order_fixture_forces_both_waypoint_orders():
    t0 = time.monotonic()
    report, files, code, rep, strategy = pb.run_synthesis(
        load_fixture("order_2x3_reactive"))
    assert code == 0
    assert report["flow"] == 2
    assert report["cut_count"] == 4
    t = rep.artifacts["t"]
    ex = si.exhaustive_verdicts(t, strategy, rep.artifacts["b_sys"],
                                rep.artifacts["b_test"])
    assert ex.violations == []
    assert ex.goal_verdicts                     # the goal stays reachable
    for (_s, _q, sys_ok, test_ok) in ex.goal_verdicts:
        assert not sys_ok or test_ok
    # both visit orders occur: all four observation histories are reachable
    tags = strategy.automaton.component_tags
    assert len({tags[q][1] for q in ex.histories_seen}) == 4
    assert time.monotonic() - t0 < 120


def test_07_agent_maze_synthesis_with_verified_guarantees():
    t0 = time.monotonic()
    t, h, sys_obj, test_obj, ta = corridor_maze()
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    assert rep.status == "ok"
    assert rep.iterations <= 20
    assert ag.verify_guarantees(rep.strategy, t) == []
    # at every reachable decision point the blocked transitions are exactly
    # the prescribed cuts plus the static obstacles
    strat = rep.strategy
    game = strat.game
    t_edges = set(t.edges)
    for gs in ag.reachable_under(strat):
        if gs.turn != ag.SYSTEM_TURN:
            continue
        blocked = {(gs.x_sys, s2) for s2 in [gs.x_ta]
                   if (gs.x_sys, s2) in t_edges} | {
            e for e in strat.obs if e[0] == gs.x_sys}
        prescribed = {(gs.x_sys, s2) for s2 in
                      game.required.get((gs.x_sys, gs.q_hist), set())} | {
            e for e in strat.obs if e[0] == gs.x_sys}
        assert blocked == prescribed, gs
    assert time.monotonic() - t0 < 600


def test_08_inconsistent_problems_classified():
    t0 = time.monotonic()
    report, _, code, _, _ = pb.run_synthesis(
        load_fixture("case1_blocked_goal"))
    assert code == pb.EXIT_INCONSISTENT
    assert report["status"] == rt.CASE1_NO_PATH
    report, _, code, _, _ = pb.run_synthesis(load_fixture("case2_pocket"))
    assert code == pb.EXIT_INCONSISTENT
    assert report["status"] == rt.CASE2_NO_PATH_THROUGH_I
    assert time.monotonic() - t0 < 5


def test_09_repeated_runs_byte_identical():
    files_a = pb.run_synthesis(load_fixture("order_2x3_reactive"))[1]
    files_b = pb.run_synthesis(load_fixture("order_2x3_reactive"))[1]
    assert files_a["cuts.json"] == files_b["cuts.json"]
    assert files_a["strategy.json"] == files_b["strategy.json"]
    assert files_a == files_b
