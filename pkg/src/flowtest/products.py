"""Virtual and system product graphs, node partitions, history groupings."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .automata import DBA, ValidationError
from .system import TransitionSystem, TestHarness


@dataclass
class ProductGraph:
    """Reachable product T_sys x B with dense BFS node/edge indices.

    Self-loop system transitions are never product edges; harness_edges is
    the restrictable subset E_H.
    """
    nodes: list
    index: dict
    edges: list
    edge_index: dict
    initial: list
    harness_edges: set
    automaton: DBA
    system: TransitionSystem

    def out_edges(self, v):
        return [e for e in self.edges if e[0] == v]

    def reported_edge_count(self) -> int:
        """Flow edges plus stay self-loops at non-terminal states.

        Table-style size metric only; self-loops never carry flow or cuts.
        """
        loops = sum(1 for (s, q) in self.nodes if s not in self.system.terminal)
        return len(self.edges) + loops


def synchronous_product(t: TransitionSystem, d: DBA,
                        harness: TestHarness | None = None) -> ProductGraph:
    missing = d.ap - t.ap
    if missing:
        raise ValidationError(f"automaton propositions absent from system: {sorted(missing)}")
    q0 = d.step(d.initial, t.label(t.initial))
    init = (t.initial, q0)
    nodes = [init]
    index = {init: 0}
    edges = []
    harness_edges = set()
    queue = deque([init])
    succ_cache = {}
    while queue:
        s, q = queue.popleft()
        if s not in succ_cache:
            succ_cache[s] = [(a, s2) for a, s2 in t.successors(s) if s2 != s]
        for a, s2 in succ_cache[s]:
            q2 = d.step(q, t.label(s2))
            v2 = (s2, q2)
            if v2 not in index:
                index[v2] = len(nodes)
                nodes.append(v2)
                queue.append(v2)
            e = ((s, q), v2)
            edges.append(e)
            if harness is not None and a in harness.restrictable.get(s, ()):
                harness_edges.add(e)
    # an edge can be produced once per action; dedupe keeping first occurrence
    seen = set()
    uniq = []
    for e in edges:
        if e not in seen:
            seen.add(e)
            uniq.append(e)
    edge_index = {e: i for i, e in enumerate(uniq)}
    return ProductGraph(nodes, index, uniq, edge_index, [init],
                        harness_edges, d, t)


@dataclass
class NodePartition:
    S: set
    I: set
    T: set
    T_sys_nodes: set


def identify_nodes(G: ProductGraph, G_sys: ProductGraph,
                   b_sys: DBA, b_test: DBA) -> NodePartition:
    tags = G.automaton.component_tags
    if not tags:
        raise ValidationError("virtual product automaton lacks component tags")
    S = set(G.initial)
    I, T = set(), set()
    for v in G.nodes:
        q_sys, q_test = tags[v[1]]
        if q_sys in b_sys.accepting:
            T.add(v)
        elif q_test in b_test.accepting:
            I.add(v)
    t_sys_nodes = {v for v in G_sys.nodes if v[1] in b_sys.accepting}
    return NodePartition(S, I, T, t_sys_nodes)


def project_to_gsys(G: ProductGraph, v):
    """(s, (q_sys, q_test)) -> (s, q_sys)."""
    q_sys, _ = G.automaton.component_tags[v[1]]
    return (v[0], q_sys)


def _reachable_to(G: ProductGraph, targets):
    """Nodes with a path into targets (reverse BFS)."""
    preds = {v: [] for v in G.nodes}
    for u, v in G.edges:
        preds[v].append(u)
    seen = set(targets)
    queue = deque(targets)
    while queue:
        v = queue.popleft()
        for u in preds[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def intermediate_touching_edges(G: ProductGraph, partition: NodePartition) -> set:
    """E(I): edges with an endpoint in I; these are never cut."""
    return {e for e in G.edges if e[0] in partition.I or e[1] in partition.I}


def cuttable_edges(G: ProductGraph, partition: NodePartition) -> set:
    ei = intermediate_touching_edges(G, partition)
    return {e for e in G.harness_edges if e not in ei}


@dataclass
class HistoryGrouping:
    first_entry_G: dict      # q -> set of G nodes
    first_entry_Gsys: dict   # q -> set of G_sys nodes
    edge_groups: dict        # q -> list of G edges
    static_groups: dict      # (s, s') -> list of G edges


def build_artifacts(t: TransitionSystem, harness: TestHarness,
                    sys_obj, test_obj) -> dict:
    """Full pipeline from system plus objectives to groupings."""
    from .automata import build_spec_automata
    b_sys, b_test, b_pi = build_spec_automata(sys_obj, test_obj)
    G = synchronous_product(t, b_pi, harness)
    G_sys = synchronous_product(t, b_sys, harness)
    partition = identify_nodes(G, G_sys, b_sys, b_test)
    grouping = history_groupings(G, G_sys, partition)
    return {
        "t": t, "h": harness,
        "sys_obj": sys_obj, "test_obj": test_obj,
        "b_sys": b_sys, "b_test": b_test, "b_pi": b_pi,
        "G": G, "G_sys": G_sys,
        "partition": partition, "grouping": grouping,
    }


def history_groupings(G: ProductGraph, G_sys: ProductGraph,
                      partition: NodePartition) -> HistoryGrouping:
    in_histories = {v: set() for v in G.nodes}
    for (u, v) in G.edges:
        in_histories[v].add(u[1])
    init_set = set(G.initial)
    first_entry_G = {}
    for v in G.nodes:
        q = v[1]
        # first observations: reachable via an edge that changes the history
        # variable (or execution start); a node may also have same-history
        # in-edges from later re-entry
        if v in init_set or any(qbar != q for qbar in in_histories[v]):
            first_entry_G.setdefault(q, set()).add(v)
    edge_groups = {}
    for e in G.edges:
        edge_groups.setdefault(e[0][1], []).append(e)
    # history classes matter for system feasibility only where a cut can land:
    # edges touching I are never cut, and non-harness edges cannot be cut
    cuttable = cuttable_edges(G, partition)
    cut_classes = {q for q, es in edge_groups.items()
                   if any(e in cuttable for e in es)}
    can_reach_goal = _reachable_to(G_sys, partition.T_sys_nodes)
    gsys_nodes = set(G_sys.nodes)
    first_entry_Gsys = {}
    for q, vs in first_entry_G.items():
        if q not in cut_classes:
            continue
        proj = {project_to_gsys(G, v) for v in vs}
        proj = {u for u in proj if u in gsys_nodes and u in can_reach_goal}
        if proj:
            first_entry_Gsys[q] = proj
    static_groups = {}
    for (u, v) in G.edges:
        static_groups.setdefault((u[0], v[0]), []).append((u, v))
    return HistoryGrouping(first_entry_G, first_entry_Gsys, edge_groups, static_groups)
