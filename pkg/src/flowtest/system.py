"""Finite transition systems, test harness, grid worlds, counter augmentation."""
from __future__ import annotations

from dataclasses import dataclass, field

from .automata import ValidationError


@dataclass
class TransitionSystem:
    """System under test.

    delta maps (state, action) to the unique successor.  Terminal states keep
    only their stay self-loop.  Every state has a stay self-loop.
    """
    states: list
    actions: list
    delta: dict
    initial: object
    ap: frozenset
    labels: dict
    terminal: frozenset

    def __post_init__(self):
        if self.initial not in set(self.states):
            raise ValidationError("initial state not in state set")
        for (s, a), s2 in self.delta.items():
            if s not in self.labels or s2 not in self.labels:
                raise ValidationError(f"unlabeled state on transition {(s, a)}")
        for t in self.terminal:
            for (s, a), s2 in self.delta.items():
                if s == t and s2 != t:
                    raise ValidationError(f"terminal state {t!r} has outgoing edge to {s2!r}")

    @property
    def edges(self):
        """Directed non-self-loop edges (s, s')."""
        out = []
        seen = set()
        for (s, a), s2 in self.delta.items():
            if s != s2 and (s, s2) not in seen:
                seen.add((s, s2))
                out.append((s, s2))
        return out

    def successors(self, s):
        out = []
        for (s0, a), s2 in self.delta.items():
            if s0 == s:
                out.append((a, s2))
        return out

    def label(self, s) -> frozenset:
        return self.labels[s]


@dataclass
class TestHarness:
    """Actions the test environment may restrict, per state."""
    restrictable: dict

    def validate(self, t: TransitionSystem):
        for s, acts in self.restrictable.items():
            for a in acts:
                if (s, a) not in t.delta:
                    raise ValidationError(f"harness action {(s, a)} not in delta")
                if t.delta[(s, a)] == s:
                    raise ValidationError(f"harness contains self-loop action {(s, a)}")

    def restrictable_edges(self, t: TransitionSystem):
        out = set()
        for s, acts in self.restrictable.items():
            for a in acts:
                out.add((s, t.delta[(s, a)]))
        return out


MOVES = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1)}


@dataclass
class GridWorldSpec:
    rows: int
    cols: int
    init_cell: tuple
    terminal_cells: set
    blocked_cells: set = field(default_factory=set)
    label_map: dict = field(default_factory=dict)


def build_grid_world(g: GridWorldSpec):
    """4-connected grid with stay self-loops and a full harness.

    One state per unblocked cell; bidirectional moves between adjacent
    unblocked cells except that terminal cells have no outgoing moves.
    The harness covers every non-self-loop action.
    """
    if g.rows < 1 or g.cols < 1:
        raise ValidationError("grid dimensions must be positive")
    if g.init_cell in g.blocked_cells:
        raise ValidationError("initial cell is blocked")

    def in_bounds(c):
        return 0 <= c[0] < g.rows and 0 <= c[1] < g.cols

    if not in_bounds(g.init_cell):
        raise ValidationError("initial cell out of bounds")
    cells = [(r, c) for r in range(g.rows) for c in range(g.cols)
             if (r, c) not in g.blocked_cells]
    cell_set = set(cells)
    for prop, labeled in g.label_map.items():
        for c in labeled:
            if not in_bounds(c):
                raise ValidationError(f"label {prop!r} on out-of-bounds cell {c}")
            if c in g.blocked_cells:
                raise ValidationError(f"label {prop!r} on blocked cell {c}")
    for c in g.terminal_cells:
        if c not in cell_set:
            raise ValidationError(f"terminal cell {c} blocked or out of bounds")

    labels = {}
    for c in cells:
        labels[c] = frozenset(p for p, cs in g.label_map.items() if c in cs)
    delta = {}
    for c in cells:
        delta[(c, "stay")] = c
        if c in g.terminal_cells:
            continue
        for name, (dr, dc) in MOVES.items():
            c2 = (c[0] + dr, c[1] + dc)
            if c2 in cell_set:
                delta[(c, name)] = c2
    t = TransitionSystem(
        states=cells,
        actions=list(MOVES) + ["stay"],
        delta=delta,
        initial=g.init_cell,
        ap=frozenset(g.label_map),
        labels=labels,
        terminal=frozenset(g.terminal_cells),
    )
    restrictable = {}
    for (s, a), s2 in delta.items():
        if s2 != s:
            restrictable.setdefault(s, set()).add(a)
    h = TestHarness(restrictable)
    h.validate(t)
    return t, h


def validate_assumptions(t: TransitionSystem):
    """List every non-terminal edge (s, s') without the reverse (s', s).

    An empty report means the bidirectionality assumption holds; violations
    are warnings (downstream per-cut reachability checks cover them).
    """
    edge_set = set(t.edges)
    report = []
    for (s, s2) in t.edges:
        if s2 in t.terminal:
            continue
        if (s2, s) not in edge_set:
            report.append((s, s2))
    return report


@dataclass
class CounterSpec:
    name: str
    max: int
    reset_states: set = field(default_factory=set)
    decrement: int = 1
    predicates: tuple = ()  # (prop_name, op in {"<", "<=", "==", ">", ">="}, value)


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "==": lambda a, b: a == b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def augment_state_counter(t: TransitionSystem, c: CounterSpec):
    """Product of t with a bounded decrementing counter (fuel-style).

    States become (s, f); every non-self move costs c.decrement; arriving at
    a reset state restores f = max; at f = 0 only the self-loop remains.
    Counter comparison predicates join the label alphabet.  base_of maps
    augmented states back to the underlying system state (used for cut
    quotients across counter values).
    """
    if c.max < 1:
        raise ValidationError("counter max must be >= 1")
    for name, op, val in c.predicates:
        if op not in _OPS:
            raise ValidationError(f"unknown counter comparison {op!r}")
        if name in t.ap:
            raise ValidationError(f"counter predicate {name!r} clashes with existing AP")

    def arrive(s, f):
        return (s, c.max) if s in c.reset_states else (s, f)

    init = arrive(t.initial, c.max)
    states = []
    seen = set()
    delta = {}
    stack = [init]
    seen.add(init)
    while stack:
        s, f = stack.pop()
        states.append((s, f))
        for a, s2 in t.successors(s):
            if s2 == s:
                nxt = (s, f)
            else:
                if f - c.decrement < 0:
                    continue
                nxt = arrive(s2, f - c.decrement)
            delta[((s, f), a)] = nxt
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    states.sort(key=lambda sf: (t.states.index(sf[0]), -sf[1]))
    labels = {}
    for (s, f) in states:
        lab = set(t.labels[s])
        for name, op, val in c.predicates:
            if _OPS[op](f, val):
                lab.add(name)
        labels[(s, f)] = frozenset(lab)
    terminal = frozenset((s, f) for (s, f) in states if s in t.terminal)
    ap = t.ap | frozenset(name for name, _, _ in c.predicates)
    out = TransitionSystem(states, t.actions, delta, init, ap, labels, terminal)
    out.base_of = {sf: sf[0] for sf in states}
    return out


def lift_harness(h: TestHarness, aug: TransitionSystem) -> TestHarness:
    """Harness for a counter-augmented system: same actions, per (s, f) state."""
    restrictable = {}
    for ((s, f), a), nxt in aug.delta.items():
        if nxt != (s, f) and a in h.restrictable.get(s, ()):
            restrictable.setdefault((s, f), set()).add(a)
    out = TestHarness(restrictable)
    out.validate(aug)
    return out
