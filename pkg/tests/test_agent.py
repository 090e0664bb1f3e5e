"""Turn-based game construction, safety-game solving, and the
counterexample-guided agent synthesis loop."""
import pytest

from flowtest import agent as ag
from flowtest import automata as au
from flowtest import system as sm
from helpers import corridor_maze, build_products


def test_agent_model_validation():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    ta.validate(t)
    assert ta.park == {"P"}
    # no state outside the arena: no park
    with pytest.raises(au.ValidationError):
        ag.TesterAgentModel(states=[(0, 0)], edges=[], initial=(0, 0)).validate(t)
    # declared park inside the arena
    with pytest.raises(au.ValidationError):
        ag.TesterAgentModel(states=["P", (0, 0)], edges=[], initial="P",
                            park={(0, 0)}).validate(t)
    # edge leaving the model
    with pytest.raises(au.ValidationError):
        ag.TesterAgentModel(states=["P"], edges=[("P", "Q")],
                            initial="P").validate(t)


def test_static_area():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    area = ag.static_area(t, ta)
    # transitions into agent-reachable cells are dynamic, the rest static
    assert ((2, 0), (1, 0)) not in area
    assert ((2, 0), (2, 1)) in area
    assert all(v not in set(ta.states) for (u, v) in area)


def test_blocking_states():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    arts = build_products(t, h, sys_obj, test_obj)
    blocking = ag.blocking_states(t, ta, arts["G_sys"],
                                  arts["partition"].T_sys_nodes)
    # occupying the goal cell disconnects everything; the patrol corner
    # cells leave the bottom corridor intact
    assert blocking == {(0, 3)}


def test_maze_synthesis_with_exclusion_round():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    assert rep.status == "ok"
    # the first optimum demands occupancy the agent cannot reach in time
    assert rep.iterations == 2
    assert len(rep.excluded) == 1
    assert rep.strategy.flow >= 1
    assert set(rep.strategy.cuts) != {tuple(e) for e in rep.excluded[0]}
    assert ag.verify_guarantees(rep.strategy, t) == []


def test_synthesized_strategy_blocks_exactly_the_cuts():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    strat = rep.strategy
    game = strat.game
    t_edges = set(t.edges)
    for gs in ag.reachable_under(strat):
        if gs.turn != ag.SYSTEM_TURN:
            continue
        # blocked-by-occupancy plus obstacles equals the cut prescription
        blocked = {(gs.x_sys, s2) for s2 in [gs.x_ta]
                   if (gs.x_sys, s2) in t_edges} | {
            e for e in strat.obs if e[0] == gs.x_sys}
        prescribed = {(gs.x_sys, s2) for s2 in
                      game.required.get((gs.x_sys, gs.q_hist), set())} | {
            e for e in strat.obs if e[0] == gs.x_sys}
        assert blocked == prescribed


def test_park_and_stay_when_nothing_is_dynamic():
    t, h, sys_obj, test_obj, _ = corridor_maze()
    ta = ag.TesterAgentModel(states=["P"], edges=[("P", "P")], initial="P")
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    assert rep.status == "ok"
    assert rep.obs  # the bypass is severed by obstacles alone
    assert {gs.x_ta for gs in ag.reachable_under(rep.strategy)} == {"P"}
    assert ag.verify_guarantees(rep.strategy, t) == []


def test_occupancy_conflict_is_unrealizable():
    # one (state, history) demanding two distinct occupied cells
    t, h, sys_obj, test_obj, ta = corridor_maze()
    arts = build_products(t, h, sys_obj, test_obj)
    G = arts["G"]
    q0 = G.initial[0][1]
    R = {q0: {((2, 0), (1, 0)), ((2, 0), (0, 0))}}
    game = ag.build_game(t, ta, G, R, obs=set(), blocking=set())
    table, witness = ag.solve_game(game)
    assert table is None
    assert witness.turn == ag.AGENT_TURN


def test_cut_outside_agent_model_short_circuits():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    arts = build_products(t, h, sys_obj, test_obj)
    G = arts["G"]
    q0 = G.initial[0][1]
    with pytest.raises(ag.UnrealizableCuts):
        ag.build_game(t, ta, G, {q0: {((2, 0), (2, 1))}},
                      obs=set(), blocking=set())


def test_turn_alternation_everywhere():
    t, h, sys_obj, test_obj, ta = corridor_maze()
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    game = rep.strategy.game
    for gs, succ in game.moves.items():
        for n in succ:
            assert n.turn != gs.turn


def test_classification_shortcut():
    # unreachable goal: reported before any game is built
    spec = sm.GridWorldSpec(
        rows=1, cols=4, init_cell=(0, 0), terminal_cells={(0, 3)},
        blocked_cells={(0, 2)},
        label_map={"T": {(0, 3)}, "I": {(0, 1)}})
    t, h = sm.build_grid_world(spec)
    ta = ag.TesterAgentModel(states=["P", (0, 1)],
                             edges=[("P", (0, 1)), ((0, 1), "P")],
                             initial="P")
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I"),))
    rep = ag.synthesize_agent(t, ta, h, sys_obj, test_obj)
    assert rep.status == "case1_no_path"
    assert rep.strategy is None
