"""Turning optimal cuts into an executable reactive test strategy:
per-history restriction maps, obstacle schedules, and the end-to-end
synthesis pipeline."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .automata import DBA, ValidationError, accepts_finite_trace
from .system import TransitionSystem, TestHarness
from . import products as pr
from . import routing as rt
from . import solver as sv

INSTANTANEOUS = "instantaneous"
ACCUMULATIVE = "accumulative"


@dataclass
class ReactiveMap:
    """Per history state: the set of system transitions to restrict."""
    restrictions: dict  # q -> set of (s, s')

    def at(self, q):
        return self.restrictions.get(q, frozenset())

    def histories(self):
        return [q for q, edges in self.restrictions.items() if edges]


def cuts_to_reactive_map(cuts) -> ReactiveMap:
    """C(q) = transitions cut while the history variable reads q."""
    restrictions = {}
    for (u, v) in cuts:
        restrictions.setdefault(u[1], set()).add((u[0], v[0]))
    return ReactiveMap(restrictions)


def static_obstacles(cuts, static_edges) -> set:
    """System transitions blocked permanently, deduplicated over histories."""
    static_edges = set(static_edges)
    return {(u[0], v[0]) for (u, v) in cuts if (u[0], v[0]) in static_edges}


@dataclass
class TestStrategy:
    reactive_map: ReactiveMap
    mode: str
    static: set
    system: TransitionSystem
    harness: TestHarness
    automaton: DBA              # tracks the history variable along prefixes
    cuts: list = field(default_factory=list)
    flow: int = 0
    objective: float = None

    def __post_init__(self):
        if self.mode not in (INSTANTANEOUS, ACCUMULATIVE):
            raise ValidationError(f"unknown strategy mode {self.mode!r}")


def _replay(strategy: TestStrategy, prefix):
    """Validate a state prefix and return the per-step history states."""
    t = strategy.system
    if not prefix:
        raise ValidationError("empty trace prefix")
    if prefix[0] != t.initial:
        raise ValidationError(f"prefix must start at {t.initial!r}")
    d = strategy.automaton
    q = d.step(d.initial, t.label(prefix[0]))
    qs = [q]
    for a, b in zip(prefix, prefix[1:]):
        if a != b and (a, b) not in set(t.edges):
            raise ValidationError(f"illegal transition {a!r} -> {b!r}")
        q = d.step(q, t.label(b))
        qs.append(q)
    return qs


def _restricted_transitions(strategy: TestStrategy, s, q):
    out = set()
    for (s1, s2) in strategy.reactive_map.at(q):
        if s1 == s:
            out.add((s1, s2))
    for (s1, s2) in strategy.static:
        if s1 == s:
            out.add((s1, s2))
    return out


def _transitions_to_actions(t: TransitionSystem, transitions):
    actions = set()
    for (s1, s2) in transitions:
        for a, s_next in t.successors(s1):
            if s_next == s2:
                actions.add(a)
    return actions


def restrictions_at(strategy: TestStrategy, prefix) -> set:
    """Actions withheld from the system at the end of the prefix."""
    qs = _replay(strategy, prefix)
    s, q = prefix[-1], qs[-1]
    trans = _restricted_transitions(strategy, s, q)
    actions = _transitions_to_actions(strategy.system, trans)
    allowed = strategy.harness.restrictable.get(s, set())
    return {a for a in actions if a in allowed}


def active_obstacles(strategy: TestStrategy, prefix) -> set:
    """Obstacles standing in the arena after the prefix, as (state, action)
    pairs. Instantaneous mode keys on the current history alone; accumulative
    mode keeps every obstacle placed since the history last changed."""
    qs = _replay(strategy, prefix)
    t = strategy.system
    if strategy.mode == INSTANTANEOUS:
        q = qs[-1]
        trans = set(strategy.reactive_map.at(q)) | set(strategy.static)
    else:
        trans = set()
        for s, q, prev_q in zip(prefix, qs, [None] + qs[:-1]):
            if prev_q is not None and q != prev_q:
                trans = set()
            trans |= _restricted_transitions(strategy, s, q)
        trans |= set(strategy.static)
    out = set()
    for (s1, s2) in trans:
        for a, s_next in t.successors(s1):
            if s_next == s2:
                out.add((s1, a))
    return out


# ---------------------------------------------------------------------------
# End-to-end synthesis

@dataclass
class SynthesisReport:
    status: str                 # ok | case1_no_path | case2_no_path_through_i
                                # | infeasible | timeout
    strategy: TestStrategy = None
    solution: rt.CutSolution = None
    artifacts: dict = None
    problem: rt.CutProblem = None
    rechecks: int = 0
    excluded: list = field(default_factory=list)


_MODEL_BUILDERS = {
    "static": rt.build_static_model,
    "reactive": rt.build_reactive_model,
    "mixed": rt.build_mixed_model,
}


def unsafe_nodes(p: rt.CutProblem, cuts) -> set:
    """Nodes the system can still reach under the cuts, from which it could
    reach the goal before the cuts but no longer can. Nonempty sets mean the
    tester may trap a correct system mid-history."""
    cuts = set(cuts)
    adj, adj_cut = {}, {}
    for e in p.edges:
        adj.setdefault(e[0], []).append(e[1])
        if e not in cuts:
            adj_cut.setdefault(e[0], []).append(e[1])

    def forward(starts, a):
        seen = set(starts)
        queue = deque(starts)
        while queue:
            u = queue.popleft()
            for v in a.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    preds, preds_cut = {}, {}
    for e in p.edges:
        preds.setdefault(e[1], []).append(e[0])
        if e not in cuts:
            preds_cut.setdefault(e[1], []).append(e[0])

    def backward(a):
        seen = set(p.T)
        queue = deque(p.T)
        while queue:
            u = queue.popleft()
            for v in a.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    reachable = forward(p.S, adj_cut)
    could_finish = backward(preds)
    can_finish = backward(preds_cut)
    return {v for v in reachable
            if v in could_finish and v not in can_finish}


def find_test_strategy(t: TransitionSystem, harness: TestHarness,
                       sys_obj, test_obj, variant: str = "reactive",
                       static_edges=None, mode: str = INSTANTANEOUS,
                       options: sv.SolveOptions = None,
                       bidirectional: bool = False,
                       recheck_limit: int = 20) -> SynthesisReport:
    """Full pipeline: automata, products, node identification, MILP solve,
    cut validation, and strategy assembly. Non-bidirectional inputs get a
    trap re-check; failing cut sets are excluded and the MILP re-solved."""
    if variant not in _MODEL_BUILDERS:
        raise ValidationError(f"unknown variant {variant!r}")
    arts = pr.build_artifacts(t, harness, sys_obj, test_obj)
    p = rt.cut_problem_from_products(arts, variant, static_edges=static_edges)
    verdict = rt.classify_problem_data(p)
    if verdict != rt.OK:
        return SynthesisReport(verdict, artifacts=arts, problem=p)
    excluded = []
    rechecks = 0
    while True:
        model = _MODEL_BUILDERS[variant](p)
        if bidirectional:
            p.bidirectional_pairs = rt.bidirectional_pairs_from_products(arts)
            rt.add_bidirectional_cut_constraints(model)
        rt.add_exclusions(model, excluded)
        sol = rt.solve_routing(model, options)
        if sol.status not in ("optimal", "feasible"):
            return SynthesisReport(sol.status, solution=sol, artifacts=arts,
                                   problem=p, rechecks=rechecks,
                                   excluded=excluded)
        if rt.bypass_flow(p, sol.cuts) != 0:
            raise RuntimeError("solution leaves a bypass path; solver bug")
        if not rt.check_feasibility(p, sol.cuts):
            raise RuntimeError("solution starves a system copy; solver bug")
        if bidirectional or not sol.cuts or not unsafe_nodes(p, sol.cuts):
            break
        if rechecks >= recheck_limit:
            return SynthesisReport("timeout", solution=sol, artifacts=arts,
                                   problem=p, rechecks=rechecks,
                                   excluded=excluded)
        excluded.append(list(sol.cuts))
        rechecks += 1
    static = set()
    if variant == "static":
        static = static_obstacles(sol.cuts, t.edges)
    elif static_edges:
        static = static_obstacles(sol.cuts, static_edges)
    strategy = TestStrategy(
        reactive_map=cuts_to_reactive_map(sol.cuts), mode=mode, static=static,
        system=t, harness=harness, automaton=arts["b_pi"],
        cuts=list(sol.cuts), flow=sol.flow, objective=sol.objective)
    return SynthesisReport("ok", strategy=strategy, solution=sol,
                           artifacts=arts, problem=p, rechecks=rechecks,
                           excluded=excluded)
