"""Shared instance builders for the test suite."""
from flowtest import automata as au
from flowtest import products as pr
from flowtest import system as sm


def tiny_order():
    """2x3 grid: start bottom-left, terminal goal bottom-right, two waypoint
    cells on the top corners that the test must observe in either order."""
    spec = sm.GridWorldSpec(
        rows=2, cols=3, init_cell=(1, 0),
        terminal_cells={(1, 2)},
        label_map={"T": {(1, 2)}, "I1": {(0, 0)}, "I2": {(0, 2)}},
    )
    t, h = sm.build_grid_world(spec)
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I1"), au.visit("I2")))
    return t, h, sys_obj, test_obj


def diamond():
    """Four states: s0 branches to s1 (labeled I) and s2, both into terminal
    s3 (labeled T); non-terminal edges bidirectional."""
    states = ["s0", "s1", "s2", "s3"]
    delta = {}
    for s in states:
        delta[(s, "stay")] = s
    for a, b in [("s0", "s1"), ("s0", "s2")]:
        delta[(a, "to_" + b)] = b
        delta[(b, "to_" + a)] = a
    delta[("s1", "to_s3")] = "s3"
    delta[("s2", "to_s3")] = "s3"
    labels = {"s0": frozenset(), "s1": frozenset(["I"]),
              "s2": frozenset(), "s3": frozenset(["T"])}
    t = sm.TransitionSystem(
        states=states, actions=["stay"] + [f"to_{s}" for s in states],
        delta=delta, initial="s0", ap=frozenset(["I", "T"]),
        labels=labels, terminal=frozenset(["s3"]))
    restrictable = {}
    for (s, a), s2 in delta.items():
        if s2 != s:
            restrictable.setdefault(s, set()).add(a)
    h = sm.TestHarness(restrictable)
    h.validate(t)
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I"),))
    return t, h, sys_obj, test_obj


def build_products(t, h, sys_obj, test_obj):
    """Full pipeline up to groupings; returns a dict of all artifacts."""
    return pr.build_artifacts(t, h, sys_obj, test_obj)


def corridor_maze():
    """3x4 maze with two corridors: the bottom one passes the waypoint on
    the way to the goal, the top one bypasses it. The test agent patrols
    the top-left corner plus a park cell; the doorway cell next to the
    goal is in its model but unreachable, so the first optimal cut set
    needs an exclusion round before a realizable one is found."""
    from flowtest import agent as ag
    spec = sm.GridWorldSpec(
        rows=3, cols=4, init_cell=(2, 0), terminal_cells={(0, 3)},
        blocked_cells={(1, 1), (1, 2)},
        label_map={"T": {(0, 3)}, "I": {(2, 3)}})
    t, h = sm.build_grid_world(spec)
    sys_obj = au.Objective(au.SYSTEM, (au.visit("T"),))
    test_obj = au.Objective(au.TEST, (au.visit("I"),))
    ta = ag.TesterAgentModel(
        states=["P", (0, 0), (1, 0), (0, 3)],
        edges=[("P", (0, 0)), ((0, 0), "P"),
               ((0, 0), (1, 0)), ((1, 0), (0, 0))],
        initial="P")
    return t, h, sys_obj, test_obj, ta
