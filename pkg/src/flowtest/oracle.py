"""Independent ground truth: exhaustive enumeration of optimal cut sets,
a small SAT solver, and the SAT-to-routing reductions used to stress the
MILP models from the opposite direction."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import networkx as nx

from .automata import Objective, ValidationError, visit, safety, delayed_reaction
from .automata import SYSTEM, TEST
from . import products as pr
from . import system as sm
from .routing import CutProblem, FlowCopy

MAX_DECISIONS = 22


class OracleTooLarge(Exception):
    """Raised when an instance exceeds the exhaustive enumeration budget."""


# ---------------------------------------------------------------------------
# Graph primitives (networkx-backed, independent from the routing module)

def _digraph(nodes, edges):
    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    for e in edges:
        g.add_edge(e[0], e[1], capacity=1)
    return g


def _routed_flow(p: CutProblem, cuts) -> int:
    g = _digraph(p.nodes, [e for e in p.edges if e not in cuts])
    g.add_node("_src")
    g.add_node("_snk")
    for s in p.S:
        g.add_edge("_src", s, capacity=len(p.edges) + 1)
    for t in p.T:
        g.add_edge(t, "_snk", capacity=len(p.edges) + 1)
    value, _ = nx.maximum_flow(g, "_src", "_snk")
    return int(value)


def _bypass_value(p: CutProblem, cuts) -> int:
    ei = p.intermediate_edges()
    nodes = [v for v in p.nodes if v not in p.I]
    edges = [e for e in p.edges if e not in cuts and e not in ei]
    g = _digraph(nodes, edges)
    g.add_node("_src")
    g.add_node("_snk")
    for s in p.S:
        if s not in p.I:
            g.add_edge("_src", s, capacity=len(p.edges) + 1)
    for t in p.T:
        if t not in p.I:
            g.add_edge(t, "_snk", capacity=len(p.edges) + 1)
    value, _ = nx.maximum_flow(g, "_src", "_snk")
    return int(value)


def _copies_feasible(p: CutProblem, cuts) -> bool:
    for copy in p.copies:
        removed = set()
        for ge, images in copy.cut_map.items():
            if ge in cuts:
                removed.update(images)
        g = _digraph(copy.nodes, [e for e in copy.edges if e not in removed])
        if not any(nx.has_path(g, copy.source, t) for t in copy.sinks
                   if t in g):
            return False
    return True


# ---------------------------------------------------------------------------
# Decision construction per variant

def reactive_decisions(p: CutProblem):
    """One decision per restrictable edge."""
    return [frozenset([e]) for e in p.edges if e in p.cuttable]


def static_decisions(p: CutProblem):
    """One decision per equal-cut group; groups touching a non-restrictable
    edge can never be cut at all. Ungrouped restrictable edges stand alone."""
    grouped = set()
    decisions = []
    for group in p.static_groups:
        grouped.update(group)
        if all(e in p.cuttable for e in group):
            decisions.append(frozenset(group))
    for e in p.edges:
        if e in p.cuttable and e not in grouped:
            decisions.append(frozenset([e]))
    return decisions


# ---------------------------------------------------------------------------
# Exhaustive enumeration

def _bfs_connected(adj, sources, sinks, cuts):
    """Any path from sources to sinks avoiding the cut edges?"""
    sinks = set(sinks)
    seen = set(sources)
    if seen & sinks:
        return True
    stack = list(seen)
    while stack:
        u = stack.pop()
        for e in adj.get(u, ()):
            if e not in cuts and e[1] not in seen:
                if e[1] in sinks:
                    return True
                seen.add(e[1])
                stack.append(e[1])
    return False


@dataclass
class OracleResult:
    flow: int
    objective: float
    optimal_cuts: list          # list of frozensets, all achieving the optimum
    valid_count: int
    decisions: int


def enumerate_optimal_cuts(p: CutProblem, decisions=None, variant="reactive",
                           max_decisions: int = MAX_DECISIONS) -> OracleResult:
    """Search all cut-decision subsets for valid solutions and keep the best.

    A solution is valid when every source-to-sink path that skips the
    intermediate nodes is severed, the remaining flow is positive, and each
    feasibility copy keeps a path to its goal. The search prunes branches
    whose remaining decisions cannot sever the bypass, and branches whose
    chosen cuts already destroyed the flow or a copy path.
    """
    if decisions is None:
        decisions = (static_decisions(p) if variant == "static"
                     else reactive_decisions(p))
    if len(decisions) > max_decisions:
        raise OracleTooLarge(
            f"{len(decisions)} decisions exceed the enumeration budget {max_decisions}")
    n_e = p.regularizer_denominator()
    found = {}

    # adjacency lists for the cheap yes/no reachability checks; the exact
    # flow value is only computed at valid leaves
    ei = p.intermediate_edges()
    adj_all, adj_bypass = {}, {}
    for e in p.edges:
        adj_all.setdefault(e[0], []).append(e)
        if e not in ei and e[0] not in p.I and e[1] not in p.I:
            adj_bypass.setdefault(e[0], []).append(e)
    copy_adj = []
    for copy in p.copies:
        a = {}
        for e in copy.edges:
            a.setdefault(e[0], []).append(e)
        copy_adj.append(a)

    def has_bypass(cuts):
        return _bfs_connected(adj_bypass, p.S - p.I, p.T - p.I, cuts)

    def has_route(cuts):
        return _bfs_connected(adj_all, p.S, p.T, cuts)

    def copies_ok(cuts):
        for copy, a in zip(p.copies, copy_adj):
            removed = set()
            for ge, images in copy.cut_map.items():
                if ge in cuts:
                    removed.update(images)
            if not _bfs_connected(a, {copy.source}, copy.sinks, removed):
                return False
        return True

    suffix_union = [set() for _ in range(len(decisions) + 1)]
    for i in range(len(decisions) - 1, -1, -1):
        suffix_union[i] = suffix_union[i + 1] | decisions[i]

    def visit_state(idx, cuts):
        if not has_bypass(cuts):
            key = frozenset(cuts)
            if key not in found and copies_ok(cuts) and has_route(cuts):
                flow = _routed_flow(p, cuts)
                if flow >= 1:
                    found[key] = flow
            return
        if idx == len(decisions):
            return
        if has_bypass(cuts | suffix_union[idx]):
            return
        if not has_route(cuts) or not copies_ok(cuts):
            return
        visit_state(idx + 1, cuts)
        visit_state(idx + 1, cuts | decisions[idx])

    visit_state(0, set())
    if not found:
        return OracleResult(0, None, [], 0, len(decisions))
    best = max(found.items(),
               key=lambda kv: kv[1] - len(kv[0]) / n_e)
    best_obj = best[1] - len(best[0]) / n_e
    optimal = sorted((c for c, f in found.items()
                      if abs((f - len(c) / n_e) - best_obj) < 1e-12),
                     key=lambda c: sorted(map(repr, c)))
    return OracleResult(best[1], best_obj, optimal, len(found), len(decisions))


# ---------------------------------------------------------------------------
# SAT solving (DPLL with unit propagation)

def dpll_sat(clauses, n_vars: int):
    """Satisfiability of a CNF given as lists of signed 1-based literals.

    Returns a full assignment dict {var: bool} or None.
    """
    for clause in clauses:
        for lit in clause:
            if lit == 0 or abs(lit) > n_vars:
                raise ValidationError(f"literal {lit} out of range")

    def propagate(clauses, assign):
        clauses = [list(c) for c in clauses]
        changed = True
        while changed:
            changed = False
            next_clauses = []
            for clause in clauses:
                vals = []
                unassigned = []
                satisfied = False
                for lit in clause:
                    v = assign.get(abs(lit))
                    if v is None:
                        unassigned.append(lit)
                    elif v == (lit > 0):
                        satisfied = True
                        break
                if satisfied:
                    continue
                if not unassigned:
                    return None, None
                if len(unassigned) == 1:
                    lit = unassigned[0]
                    assign[abs(lit)] = lit > 0
                    changed = True
                else:
                    next_clauses.append(unassigned)
            clauses = next_clauses
        return clauses, assign

    def search(clauses, assign):
        clauses, assign = propagate(clauses, dict(assign))
        if clauses is None:
            return None
        if not clauses:
            return assign
        var = abs(clauses[0][0])
        for value in (True, False):
            assign[var] = value
            res = search(clauses, assign)
            if res is not None:
                return res
            del assign[var]
        return None

    result = search(clauses, {})
    if result is None:
        return None
    for v in range(1, n_vars + 1):
        result.setdefault(v, False)
    return result


# ---------------------------------------------------------------------------
# SAT <-> cut problem reductions

@dataclass
class SatInstance:
    problem: CutProblem
    decisions: list
    in_group: dict    # var -> frozenset of edges
    out_group: dict
    n_vars: int
    mode: str         # "static" or "reactive"
    budget: int = 0   # cut budget M for the decision-problem reading


def _sat_graph(clauses, n_vars):
    """Gadget chain: every clause gets a full row of variable nodes in
    parallel, so no bypass path survives unless every variable is decided,
    plus a detour through an observation node per literal occurrence."""
    nodes = ["s0"]
    edges = []
    I = set()
    in_group = {i: [] for i in range(1, n_vars + 1)}
    out_group = {i: [] for i in range(1, n_vars + 1)}
    for j, clause in enumerate(clauses, start=1):
        prev, cur = f"s{j - 1}", f"s{j}"
        for i in range(1, n_vars + 1):
            x = f"x{i}_{j}"
            nodes.append(x)
            e_in = (prev, x)
            e_out = (x, cur)
            edges.append(e_in)
            edges.append(e_out)
            in_group[i].append(e_in)
            out_group[i].append(e_out)
        nodes.append(cur)
        for lit in set(clause):
            i = abs(lit)
            if lit > 0:
                if f"iT_{j}" not in I:
                    nodes.append(f"iT_{j}")
                    I.add(f"iT_{j}")
                edges.append((f"x{i}_{j}", f"iT_{j}"))
                edges.append((f"iT_{j}", cur))
            else:
                if f"iF_{j}" not in I:
                    nodes.append(f"iF_{j}")
                    I.add(f"iF_{j}")
                edges.append((prev, f"iF_{j}"))
                edges.append((f"iF_{j}", f"x{i}_{j}"))
    # dedupe detour edges shared by duplicate literals
    seen = set()
    uniq = []
    for e in edges:
        if e not in seen:
            seen.add(e)
            uniq.append(e)
    cuttable = {e for g in in_group.values() for e in g}
    cuttable |= {e for g in out_group.values() for e in g}
    return nodes, uniq, I, cuttable, in_group, out_group, f"s{len(clauses)}"


def sat_to_static_instance(clauses, n_vars: int) -> SatInstance:
    """Cuts grouped per variable polarity; a valid optimal cut set exists
    iff the formula is satisfiable."""
    nodes, edges, I, cuttable, in_g, out_g, sink = _sat_graph(clauses, n_vars)
    groups = []
    for i in range(1, n_vars + 1):
        if in_g[i]:
            groups.append(list(in_g[i]))
            groups.append(list(out_g[i]))
    p = CutProblem(nodes=nodes, edges=edges, S={"s0"}, I=I, T={sink},
                   cuttable=cuttable, static_groups=groups)
    decisions = [frozenset(g) for g in groups]
    return SatInstance(p, decisions,
                       {i: frozenset(in_g[i]) for i in in_g},
                       {i: frozenset(out_g[i]) for i in out_g},
                       n_vars, "static", budget=len(clauses) * n_vars)


def sat_to_reactive_instance(clauses, n_vars: int) -> SatInstance:
    """Per-occurrence cuts on the main graph; one feasibility copy where
    cutting any group member removes the whole group, forcing the grouped
    reading of the assignment to satisfy every clause."""
    nodes, edges, I, cuttable, in_g, out_g, sink = _sat_graph(clauses, n_vars)
    cut_map = {}
    for i in range(1, n_vars + 1):
        for e in in_g[i]:
            cut_map[e] = list(in_g[i])
        for e in out_g[i]:
            cut_map[e] = list(out_g[i])
    copy = FlowCopy(name="grouped", nodes=list(nodes), edges=list(edges),
                    source="s0", sinks={sink}, cut_map=cut_map)
    p = CutProblem(nodes=nodes, edges=edges, S={"s0"}, I=I, T={sink},
                   cuttable=cuttable, copies=[copy])
    decisions = [frozenset([e]) for e in sorted(cuttable)]
    return SatInstance(p, decisions,
                       {i: frozenset(in_g[i]) for i in in_g},
                       {i: frozenset(out_g[i]) for i in out_g},
                       n_vars, "reactive", budget=n_vars)


def decode_assignment(inst: SatInstance, cuts) -> dict:
    """Read a variable assignment off a valid cut set: restricting a
    variable's exit edges encodes True, its entry edges False."""
    cuts = set(cuts)
    assign = {}
    for i in range(1, inst.n_vars + 1):
        out_cut = bool(inst.out_group.get(i, frozenset()) & cuts)
        in_cut = bool(inst.in_group.get(i, frozenset()) & cuts)
        if out_cut and in_cut:
            if inst.mode == "static":
                raise ValidationError(f"variable {i} cut in both polarities")
            assign[i] = False
        elif out_cut:
            assign[i] = True
        elif in_cut:
            assign[i] = False
        else:
            if inst.in_group.get(i):
                raise ValidationError(f"variable {i} left undecided by the cuts")
            assign[i] = False
    return assign


def check_assignment(clauses, assign) -> bool:
    return all(any(assign[abs(l)] == (l > 0) for l in c) for c in clauses)


# ---------------------------------------------------------------------------
# Seeded random grid instances for the three objective families

FAMILIES = ("reachability", "reach_safety", "reach_reaction")


def _default_ap(family):
    return {"reachability": 2, "reach_safety": 3, "reach_reaction": 3}[family]


def random_grid_problem(seed: int, rows: int, cols: int, family: str,
                        ap_count: int = 0):
    """One solvable random grid problem; retries sub-seeds until the
    generated layout admits a path through the intermediate nodes."""
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}")
    ap_count = ap_count or _default_ap(family)
    rng = random.Random(seed)
    for _ in range(200):
        built = _try_grid(rng, rows, cols, family, ap_count)
        if built is not None:
            return built
    raise RuntimeError(f"no solvable {family} grid for seed {seed}")


def _try_grid(rng, rows, cols, family, ap_count):
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    n_blocked = rng.randint(0, max(1, rows * cols // 6))
    blocked = set(rng.sample(cells, n_blocked))
    free = [c for c in cells if c not in blocked]
    if ap_count + 1 > len(free):
        return None
    special = rng.sample(free, ap_count + 1)
    init, goal = special[0], special[1]
    rest = special[2:]
    label_map = {"goal": {goal}}
    if family == "reachability":
        if ap_count < 2:
            raise ValidationError("reachability needs at least 2 propositions")
        wps = [f"wp{k}" for k in range(len(rest))]
        for name, cell in zip(wps, rest):
            label_map[name] = {cell}
        sys_obj = Objective(SYSTEM, (visit("goal"),))
        test_obj = Objective(TEST, tuple(visit(w) for w in wps))
    elif family == "reach_safety":
        if ap_count < 3:
            raise ValidationError("reach_safety needs at least 3 propositions")
        label_map["wp"] = {rest[0]}
        hazards = [f"hazard{k}" for k in range(len(rest) - 1)]
        for name, cell in zip(hazards, rest[1:]):
            label_map[name] = {cell}
        sys_obj = Objective(SYSTEM, (visit("goal"),)
                            + tuple(safety(hz) for hz in hazards))
        test_obj = Objective(TEST, (visit("wp"),))
    else:
        if ap_count < 3 or ap_count % 2 == 0:
            raise ValidationError(
                "reach_reaction needs an odd proposition count of at least 3")
        pairs = [(f"trigger{k}", f"response{k}")
                 for k in range(len(rest) // 2)]
        for (trig, resp), k in zip(pairs, range(len(pairs))):
            label_map[trig] = {rest[2 * k]}
            label_map[resp] = {rest[2 * k + 1]}
        sys_obj = Objective(SYSTEM, (visit("goal"),)
                            + tuple(delayed_reaction(t, r) for t, r in pairs))
        test_obj = Objective(TEST, tuple(visit(t) for t, _ in pairs))
    spec = sm.GridWorldSpec(rows=rows, cols=cols, init_cell=init,
                            terminal_cells={goal}, blocked_cells=blocked,
                            label_map=label_map)
    try:
        t, h = sm.build_grid_world(spec)
        arts = pr.build_artifacts(t, h, sys_obj, test_obj)
    except ValidationError:
        return None
    part, G = arts["partition"], arts["G"]
    if not part.I or not part.T:
        return None
    # the layout must let the system reach its goal and must let the tester
    # steer it through an intermediate node
    from .routing import cut_problem_from_products, classify_problem_data, OK
    p = cut_problem_from_products(arts, "reactive")
    if classify_problem_data(p) != OK:
        return None
    arts["problem"] = p
    arts["family"] = None
    return arts


def random_grid_suite(seed: int, count: int, rows: int, cols: int,
                      families=FAMILIES, ap_count: int = 0):
    """Deterministic list of solvable grid instances cycling the families."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        family = families[len(out) % len(families)]
        arts = random_grid_problem(rng.randrange(1 << 30), rows, cols,
                                   family, ap_count)
        arts["family"] = family
        out.append(arts)
    return out
