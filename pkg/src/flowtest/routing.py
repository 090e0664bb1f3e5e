"""Routing MILPs over the virtual product graph: static, reactive, mixed,
and agent variants, plus the independent solution validators."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .automata import ValidationError
from . import products as pr
from . import solver as sv


# ---------------------------------------------------------------------------
# Exact unit-capacity max flow (augmenting paths), used for validation only.

def max_flow(nodes, edges, sources, sinks) -> int:
    sources = set(sources)
    sinks = set(sinks)
    if not sources or not sinks:
        return 0
    cap = {}
    adj = {v: set() for v in nodes}
    src, snk = ("__src__",), ("__snk__",)
    adj[src] = set()
    adj[snk] = set()
    for u, v in edges:
        cap[(u, v)] = cap.get((u, v), 0) + 1
        adj[u].add(v)
        adj[v].add(u)
    for s in sources:
        cap[(src, s)] = len(edges) + 1
        adj[src].add(s)
        adj[s].add(src)
    for t in sinks:
        cap[(t, snk)] = len(edges) + 1
        adj[t].add(snk)
        adj[snk].add(t)
    flow = 0
    while True:
        parent = {src: None}
        queue = deque([src])
        while queue and snk not in parent:
            u = queue.popleft()
            for v in adj[u]:
                if v not in parent and cap.get((u, v), 0) > 0:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            return flow
        v = snk
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= 1
            cap[(v, u)] = cap.get((v, u), 0) + 1
            v = u
        flow += 1


# ---------------------------------------------------------------------------
# Variant-independent problem data

@dataclass
class FlowCopy:
    """One feasibility network: flow >= 1 must survive the mapped cuts."""
    name: str
    nodes: list
    edges: list
    source: object
    sinks: set
    cut_map: dict  # main-graph edge -> list of copy edges it suppresses


@dataclass
class CutProblem:
    """Everything the MILP builders need, decoupled from product graphs so
    reduction instances can reuse the same machinery."""
    nodes: list
    edges: list
    S: set
    I: set
    T: set
    cuttable: set
    static_groups: list = field(default_factory=list)   # lists of edges sharing d
    copies: list = field(default_factory=list)
    bidirectional_pairs: list = field(default_factory=list)  # lists of edges sharing d
    edge_names: dict = None
    # denominator for the cut regularizer; defaults to the edge count but the
    # product pipeline reports the larger stay-loop-inclusive count
    objective_denominator: int = 0

    def intermediate_edges(self):
        return {e for e in self.edges if e[0] in self.I or e[1] in self.I}

    def regularizer_denominator(self) -> int:
        return self.objective_denominator or max(len(self.edges), 1)


def cut_problem_from_products(arts: dict, variant: str,
                              static_edges=None) -> CutProblem:
    """Assemble the routing data from the product-graph artifacts dict
    (as produced by the pipeline: G, G_sys, partition, grouping)."""
    G = arts["G"]
    G_sys = arts["G_sys"]
    part = arts["partition"]
    grouping = arts["grouping"]
    t = arts["t"]
    cuttable = pr.cuttable_edges(G, part)
    copies = []
    if variant in ("reactive", "mixed", "agent"):
        for q in sorted(grouping.first_entry_Gsys, key=repr):
            group = grouping.edge_groups.get(q, [])
            cut_map_all = {}
            for e in group:
                if e not in cuttable:
                    continue
                (s1, _), (s2, _) = e
                images = [ge for ge in G_sys.edges
                          if ge[0][0] == s1 and ge[1][0] == s2]
                if images:
                    cut_map_all[e] = images
            for s in sorted(grouping.first_entry_Gsys[q], key=repr):
                if s in part.T_sys_nodes:
                    # goal already reached at first observation; nothing to check
                    continue
                copies.append(FlowCopy(
                    name=f"{q}|{s}", nodes=G_sys.nodes, edges=G_sys.edges,
                    source=s, sinks=part.T_sys_nodes, cut_map=cut_map_all))
    static_groups = []
    if variant == "static":
        static_edges = set(t.edges)
    ei = pr.intermediate_touching_edges(G, part)
    if static_edges:
        for se in sorted(static_edges, key=repr):
            group = grouping.static_groups.get(se)
            if not group:
                continue
            # copies adjacent to the intermediate nodes are exempt from the
            # obstacle: they stay uncut so the test objective stays reachable
            filtered = [e for e in group if e not in ei]
            if len(filtered) > 1:
                static_groups.append(filtered)
    return CutProblem(
        nodes=G.nodes, edges=G.edges, S=set(part.S), I=set(part.I),
        T=set(part.T), cuttable=cuttable, static_groups=static_groups,
        copies=copies, objective_denominator=G.reported_edge_count())


def bidirectional_pairs_from_products(arts: dict, base_of=None) -> list:
    """c14 groups: edges over a system transition and its reverse share d.

    With base_of (counter-augmented systems) the matching is on underlying
    states, so one obstacle covers every counter level of a transition.
    """
    G = arts["G"]

    def key(s):
        return base_of[s] if base_of else s

    groups = {}
    for (u, v) in G.edges:
        a, b = key(u[0]), key(v[0])
        groups.setdefault(frozenset((a, b)), []).append((u, v))
    return [g for g in groups.values() if len(g) > 1]


# ---------------------------------------------------------------------------
# Model construction

@dataclass
class RoutingModel:
    milp: sv.MilpInstance
    var_f: dict
    var_d: dict
    var_mu: dict
    var_dstate: dict
    problem: CutProblem
    variant: str


def _base_model(p: CutProblem, require_flow: bool = True):
    names = []
    var_f, var_d, var_mu = {}, {}, {}
    for i, e in enumerate(p.edges):
        var_f[e] = len(names)
        names.append(f"f_e{i}")
    for i, e in enumerate(p.edges):
        var_d[e] = len(names)
        names.append(f"d_e{i}")
    node_idx = {v: i for i, v in enumerate(p.nodes)}
    for v in p.nodes:
        if v not in p.I:
            var_mu[v] = len(names)
            names.append(f"mu_v{node_idx[v]}")
    lp = sv.LinearProgram(names=names,
                          lower=[0.0] * len(names),
                          upper=[1.0] * len(names))
    # c1: cuts binary, zero off the cuttable set (harness minus E(I))
    for e in p.edges:
        if e not in p.cuttable:
            lp.upper[var_d[e]] = 0.0
    # c2: conservation and direction constraints on the main network
    in_edges, out_edges = {}, {}
    for e in p.edges:
        out_edges.setdefault(e[0], []).append(e)
        in_edges.setdefault(e[1], []).append(e)
        if e[1] in p.S or e[0] in p.T:
            lp.upper[var_f[e]] = 0.0  # no flow into source or out of sink
    for v in p.nodes:
        if v in p.S or v in p.T:
            continue
        coeffs = {}
        for e in in_edges.get(v, []):
            coeffs[var_f[e]] = coeffs.get(var_f[e], 0.0) + 1.0
        for e in out_edges.get(v, []):
            coeffs[var_f[e]] = coeffs.get(var_f[e], 0.0) - 1.0
        if coeffs:
            lp.add_row(coeffs, sv.EQ, 0.0, f"conserve_{node_idx[v]}")
    # c3: a cut edge carries no flow
    for e in p.edges:
        if e in p.cuttable:
            lp.add_row({var_d[e]: 1.0, var_f[e]: 1.0}, sv.LE, 1.0)
    # c4: source and sink potentials separated (vacuous when either side
    # sits among the intermediate nodes, where no bypass path can start/end)
    for s in p.S:
        for t in p.T:
            if s in var_mu and t in var_mu:
                lp.add_row({var_mu[s]: 1.0, var_mu[t]: -1.0}, sv.GE, 1.0)
    # c5: cuts partition the bypass graph
    ei = p.intermediate_edges()
    for e in p.edges:
        if e in ei:
            continue
        u, v = e
        lp.add_row({var_d[e]: 1.0, var_mu[u]: -1.0, var_mu[v]: 1.0}, sv.GE, 0.0)
    source_out = [var_f[e] for s in p.S for e in out_edges.get(s, [])]
    if require_flow:
        lp.add_row({i: 1.0 for i in source_out}, sv.GE, 1.0, "flow_positive")
    lp.objective = {i: 1.0 for i in source_out}
    n_e = p.regularizer_denominator()
    for e in p.edges:
        if e in p.cuttable:
            lp.objective[var_d[e]] = -1.0 / n_e
    return lp, var_f, var_d, var_mu


def _add_copies(lp, p: CutProblem, var_d):
    for ci, copy in enumerate(p.copies):
        var_cf = {}
        for j, e in enumerate(copy.edges):
            var_cf[e] = len(lp.names)
            lp.names.append(f"fs_c{ci}_e{j}")
            lp.lower.append(0.0)
            lp.upper.append(1.0)
        in_e, out_e = {}, {}
        for e in copy.edges:
            out_e.setdefault(e[0], []).append(e)
            in_e.setdefault(e[1], []).append(e)
            # c6 direction: no inflow to the copy source, no outflow from sinks
            if e[1] == copy.source or e[0] in copy.sinks:
                lp.upper[var_cf[e]] = 0.0
        for v in copy.nodes:
            if v == copy.source or v in copy.sinks:
                continue
            coeffs = {}
            for e in in_e.get(v, []):
                coeffs[var_cf[e]] = coeffs.get(var_cf[e], 0.0) + 1.0
            for e in out_e.get(v, []):
                coeffs[var_cf[e]] = coeffs.get(var_cf[e], 0.0) - 1.0
            if coeffs:
                lp.add_row(coeffs, sv.EQ, 0.0)
        # c7: a cut suppresses the copy flow on matching system transitions
        for ge, images in copy.cut_map.items():
            for ce in images:
                lp.add_row({var_d[ge]: 1.0, var_cf[ce]: 1.0}, sv.LE, 1.0)
        # c8: the copy keeps a unit of flow from its source
        coeffs = {var_cf[e]: 1.0 for e in out_e.get(copy.source, [])}
        if not coeffs:
            raise ValidationError(f"feasibility copy {copy.name} has no source outflow")
        lp.add_row(coeffs, sv.GE, 1.0, f"c8_{ci}")


def _add_equal_groups(lp, var_d, groups, tag):
    for gi, group in enumerate(groups):
        first = group[0]
        for e in group[1:]:
            lp.add_row({var_d[first]: 1.0, var_d[e]: -1.0}, sv.EQ, 0.0,
                       f"{tag}{gi}_{lp.rows and len(lp.rows)}")


def build_static_model(p: CutProblem) -> RoutingModel:
    lp, var_f, var_d, var_mu = _base_model(p)
    _add_equal_groups(lp, var_d, p.static_groups, "c9_")
    binary = {var_d[e] for e in p.edges if e in p.cuttable}
    return RoutingModel(sv.MilpInstance(lp, binary), var_f, var_d, var_mu, {},
                        p, "static")


def build_reactive_model(p: CutProblem) -> RoutingModel:
    lp, var_f, var_d, var_mu = _base_model(p)
    _add_copies(lp, p, var_d)
    binary = {var_d[e] for e in p.edges if e in p.cuttable}
    return RoutingModel(sv.MilpInstance(lp, binary), var_f, var_d, var_mu, {},
                        p, "reactive")


def build_mixed_model(p: CutProblem) -> RoutingModel:
    lp, var_f, var_d, var_mu = _base_model(p)
    _add_copies(lp, p, var_d)
    _add_equal_groups(lp, var_d, p.static_groups, "c9_")
    binary = {var_d[e] for e in p.edges if e in p.cuttable}
    return RoutingModel(sv.MilpInstance(lp, binary), var_f, var_d, var_mu, {},
                        p, "mixed")


def build_agent_model(p: CutProblem, exclusions=(), plain_objective=False) -> RoutingModel:
    m = build_mixed_model(p)
    lp = m.milp.lp
    var_dstate = {}
    node_idx = {v: i for i, v in enumerate(p.nodes)}
    affected = {e[1] for e in p.edges if e in p.cuttable}
    for v in p.nodes:
        if v not in affected:
            continue
        var_dstate[v] = len(lp.names)
        lp.names.append(f"ds_v{node_idx[v]}")
        lp.lower.append(0.0)
        lp.upper.append(None)
    # c10: cutting an incoming edge marks the target state as blocked
    for e in p.edges:
        if e in p.cuttable:
            lp.add_row({m.var_d[e]: 1.0, var_dstate[e[1]]: -1.0}, sv.LE, 0.0)
    n_e = p.regularizer_denominator()
    if not plain_objective:
        for v, i in var_dstate.items():
            lp.objective[i] = -1.0 / n_e
        for e in p.edges:
            if e in p.cuttable:
                lp.objective[m.var_d[e]] = -1.0 / (n_e * n_e)
    add_exclusions(m, exclusions)
    m.var_dstate = var_dstate
    m.variant = "agent"
    return m


def add_exclusions(m: RoutingModel, exclusions):
    """c15 rows: forbid repeating any previously excluded cut set."""
    for C in exclusions:
        if not C:
            raise ValidationError("empty exclusion set")
        coeffs = {m.var_d[e]: 1.0 for e in C}
        m.milp.lp.add_row(coeffs, sv.LE, float(len(C) - 1))
    return m


def add_cut_budget(m: RoutingModel, budget: int) -> RoutingModel:
    """Cap the total number of cuts (decision-problem reading)."""
    coeffs = {m.var_d[e]: 1.0 for e in m.problem.edges
              if e in m.problem.cuttable}
    m.milp.lp.add_row(coeffs, sv.LE, float(budget), "cut_budget")
    return m


def add_bidirectional_cut_constraints(m: RoutingModel) -> RoutingModel:
    """c14: a cut blocks the underlying transition in both directions."""
    for group in m.problem.bidirectional_pairs:
        cuttable = [e for e in group if e in m.problem.cuttable]
        forced_zero = [e for e in group if e not in m.problem.cuttable]
        if forced_zero and cuttable:
            # one direction can never be cut; pairing pins the whole group
            for e in cuttable:
                m.milp.lp.upper[m.var_d[e]] = 0.0
        else:
            _add_equal_groups(m.milp.lp, m.var_d, [cuttable] if cuttable else [], "c14_")
    return m


# ---------------------------------------------------------------------------
# Solutions and validation

@dataclass
class CutSolution:
    cuts: list
    flow: int
    objective: float
    status: str
    stats: dict = field(default_factory=dict)


def extract_solution(m: RoutingModel, res: sv.MilpResult) -> CutSolution:
    if res.status in ("infeasible", "timeout") and res.values is None:
        return CutSolution([], 0, None, res.status,
                           {"nodes_explored": res.nodes_explored})
    cuts = [e for e in m.problem.edges
            if e in m.problem.cuttable and res.values[m.var_d[e]] > 0.5]
    flow = sum(res.values[m.var_f[e]]
               for e in m.problem.edges if e[0] in m.problem.S)
    status = "optimal" if res.status == "optimal" else "feasible"
    return CutSolution(cuts, int(round(flow)), res.objective, status,
                       {"nodes_explored": res.nodes_explored})


def solve_routing(m: RoutingModel, options: sv.SolveOptions = None) -> CutSolution:
    options = options or sv.SolveOptions()
    if options.obj_granularity is None:
        # every integral solution's objective sits on this lattice
        den = m.problem.regularizer_denominator()
        options = replace(options, obj_granularity=(
            1.0 / den ** 2 if m.variant == "agent" else 1.0 / den))
    res = sv.solve_milp(m.milp, options)
    sol = extract_solution(m, res)
    if sol.status in ("optimal", "feasible"):
        # recompute the flow with an independent augmenting-path method
        kept = [e for e in m.problem.edges if e not in set(sol.cuts)]
        check = max_flow(m.problem.nodes, kept, m.problem.S, m.problem.T)
        if check != sol.flow:
            raise RuntimeError(
                f"solver flow {sol.flow} disagrees with max-flow recomputation {check}")
    return sol


def bypass_flow(p: CutProblem, cuts) -> int:
    """Max flow from S to T avoiding I after the cuts; 0 for valid solutions."""
    drop = set(cuts) | p.intermediate_edges()
    nodes = [v for v in p.nodes if v not in p.I]
    edges = [e for e in p.edges if e not in drop]
    return max_flow(nodes, edges, p.S, p.T)


def check_feasibility(p: CutProblem, cuts) -> bool:
    """True iff every feasibility copy keeps a path source -> sinks once the
    mapped cuts are removed."""
    cuts = set(cuts)
    for copy in p.copies:
        removed = set()
        for ge, images in copy.cut_map.items():
            if ge in cuts:
                removed.update(images)
        adj = {}
        for e in copy.edges:
            if e not in removed:
                adj.setdefault(e[0], []).append(e[1])
        seen = {copy.source}
        queue = deque([copy.source])
        found = copy.source in copy.sinks
        while queue and not found:
            u = queue.popleft()
            for v in adj.get(u, []):
                if v not in seen:
                    if v in copy.sinks:
                        found = True
                        break
                    seen.add(v)
                    queue.append(v)
        if not found:
            return False
    return True


OK, CASE1_NO_PATH, CASE2_NO_PATH_THROUGH_I = "ok", "case1_no_path", "case2_no_path_through_i"


def classify_problem_data(p: CutProblem) -> str:
    if max_flow(p.nodes, p.edges, p.S, p.T) == 0:
        return CASE1_NO_PATH
    if bypass_flow(p, []) == 0:
        # every path already visits I; fine
        return OK
    # is there any path through I at all?
    reach_i = _reaches_through(p)
    if not reach_i:
        return CASE2_NO_PATH_THROUGH_I
    return OK


def _reaches_through(p: CutProblem) -> bool:
    """Does some S -> T path visit an I node?"""
    adj = {}
    for u, v in p.edges:
        adj.setdefault(u, []).append(v)

    def reach(srcs):
        seen = set(srcs)
        queue = deque(srcs)
        while queue:
            u = queue.popleft()
            for v in adj.get(u, []):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return seen

    fwd = reach(p.S)
    mid = [v for v in p.I if v in fwd]
    if not mid:
        return False
    return bool(reach(mid) & p.T)
