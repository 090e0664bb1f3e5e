"""Deterministic Buchi automata for the five sub-task specification patterns.

Guards are Boolean predicates over atomic propositions, evaluated on label
sets; the alphabet 2^AP is never materialized.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Sequence


class ValidationError(ValueError):
    """Raised for malformed patterns, objectives, or automata inputs."""


# ---------------------------------------------------------------------------
# Guards

class Guard:
    def eval(self, labels: FrozenSet[str]) -> bool:
        raise NotImplementedError

    def atoms(self) -> frozenset:
        raise NotImplementedError

    def satisfiable(self) -> bool:
        names = sorted(self.atoms())
        for bits in itertools.product([False, True], repeat=len(names)):
            labels = frozenset(n for n, b in zip(names, bits) if b)
            if self.eval(labels):
                return True
        return not names and self.eval(frozenset())


@dataclass(frozen=True)
class GTrue(Guard):
    def eval(self, labels):
        return True

    def atoms(self):
        return frozenset()

    def __str__(self):
        return "1"


@dataclass(frozen=True)
class Atom(Guard):
    name: str

    def eval(self, labels):
        return self.name in labels

    def atoms(self):
        return frozenset([self.name])

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Not(Guard):
    arg: Guard

    def eval(self, labels):
        return not self.arg.eval(labels)

    def atoms(self):
        return self.arg.atoms()

    def __str__(self):
        return f"!{self.arg}"


@dataclass(frozen=True)
class And(Guard):
    args: tuple

    def eval(self, labels):
        return all(g.eval(labels) for g in self.args)

    def atoms(self):
        return frozenset().union(*(g.atoms() for g in self.args)) if self.args else frozenset()

    def __str__(self):
        return "(" + " & ".join(str(g) for g in self.args) + ")"


@dataclass(frozen=True)
class Or(Guard):
    args: tuple

    def eval(self, labels):
        return any(g.eval(labels) for g in self.args)

    def atoms(self):
        return frozenset().union(*(g.atoms() for g in self.args)) if self.args else frozenset()

    def __str__(self):
        return "(" + " | ".join(str(g) for g in self.args) + ")"


def g_and(*args: Guard) -> Guard:
    flat = []
    for g in args:
        if isinstance(g, GTrue):
            continue
        if isinstance(g, And):
            flat.extend(g.args)
        else:
            flat.append(g)
    if not flat:
        return GTrue()
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def g_or(*args: Guard) -> Guard:
    flat = []
    for g in args:
        if isinstance(g, Or):
            flat.extend(g.args)
        else:
            flat.append(g)
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


# ---------------------------------------------------------------------------
# Patterns and objectives

VISIT = "visit"
SEQ_VISIT = "seq_visit"
SAFETY = "safety"
INSTANT_REACTION = "instant_reaction"
DELAYED_REACTION = "delayed_reaction"

_PATTERN_KINDS = (VISIT, SEQ_VISIT, SAFETY, INSTANT_REACTION, DELAYED_REACTION)


@dataclass(frozen=True)
class Pattern:
    """One sub-task: visit, sequenced visit, safety, or a reaction."""
    kind: str
    props: tuple

    def __post_init__(self):
        if self.kind not in _PATTERN_KINDS:
            raise ValidationError(f"unknown pattern kind {self.kind!r}")
        if not self.props:
            raise ValidationError(f"{self.kind} pattern needs at least one proposition")
        if any(not p for p in self.props):
            raise ValidationError("empty proposition name")
        if self.kind == SAFETY and len(self.props) != 1:
            raise ValidationError("safety pattern takes exactly one proposition")
        if self.kind in (INSTANT_REACTION, DELAYED_REACTION):
            if len(self.props) != 2:
                raise ValidationError("reaction pattern takes (trigger, response)")
            if self.props[0] == self.props[1]:
                raise ValidationError("reaction trigger and response must differ")


def visit(*props: str) -> Pattern:
    return Pattern(VISIT, tuple(props))


def seq_visit(*props: str) -> Pattern:
    return Pattern(SEQ_VISIT, tuple(props))


def safety(prop: str) -> Pattern:
    return Pattern(SAFETY, (prop,))


def instant_reaction(trigger: str, response: str) -> Pattern:
    return Pattern(INSTANT_REACTION, (trigger, response))


def delayed_reaction(trigger: str, response: str) -> Pattern:
    return Pattern(DELAYED_REACTION, (trigger, response))


SYSTEM = "system"
TEST = "test"


@dataclass(frozen=True)
class Objective:
    role: str
    patterns: tuple

    def __post_init__(self):
        if self.role not in (SYSTEM, TEST):
            raise ValidationError(f"unknown objective role {self.role!r}")
        if not self.patterns:
            raise ValidationError("objective needs at least one pattern")
        kinds = [p.kind for p in self.patterns]
        if self.role == TEST:
            if any(k not in (VISIT, SEQ_VISIT) for k in kinds):
                raise ValidationError("test objective permits only visit / sequenced-visit sub-tasks")
        else:
            if not any(k in (VISIT, SEQ_VISIT) for k in kinds):
                raise ValidationError("system objective needs at least one visit sub-task")

    def final_visit_props(self) -> frozenset:
        """Final propositions of the visit sub-tasks (candidate terminal labels)."""
        out = set()
        for p in self.patterns:
            if p.kind in (VISIT, SEQ_VISIT):
                out.add(p.props[-1])
        return frozenset(out)


# ---------------------------------------------------------------------------
# DBA

@dataclass
class DBA:
    """Deterministic, complete Buchi automaton with guard-labeled transitions.

    transitions[q] is an ordered list of (guard, successor); for every label
    set exactly one guard holds.  component_tags maps product states to their
    (left, right) component pair.
    """
    states: list
    initial: object
    accepting: frozenset
    transitions: dict
    ap: frozenset
    component_tags: dict = field(default_factory=dict)

    def step(self, q, labels: FrozenSet[str]):
        for guard, succ in self.transitions[q]:
            if guard.eval(labels):
                return succ
        raise RuntimeError(f"incomplete automaton at state {q!r} on {set(labels)!r}")

    def run(self, word: Iterable[FrozenSet[str]]):
        q = self.initial
        out = [q]
        for labels in word:
            q = self.step(q, frozenset(labels))
            out.append(q)
        return out

    def edge_count(self) -> int:
        """Satisfiable guard/successor pairs after merging guards per successor."""
        total = 0
        for q in self.states:
            by_succ = {}
            for guard, succ in self.transitions[q]:
                by_succ.setdefault(succ, []).append(guard)
            for succ, guards in by_succ.items():
                if g_or(*guards).satisfiable():
                    total += 1
        return total


def accepts_finite_trace(d: DBA, word: Sequence[FrozenSet[str]]) -> bool:
    """Acceptance of the finite word extended by stuttering its last label.

    Runs the prefix, then detects the lasso induced by repeating the final
    label set; accepts iff the cycle contains an accepting state.
    """
    if not word:
        raise ValidationError("empty trace")
    word = [frozenset(w) for w in word]
    q = d.initial
    for labels in word:
        q = d.step(q, labels)
    last = word[-1]
    seen = {q: 0}
    seq = [q]
    while True:
        q = d.step(q, last)
        if q in seen:
            cycle = seq[seen[q]:]
            return any(c in d.accepting for c in cycle)
        seen[q] = len(seq)
        seq.append(q)


# ---------------------------------------------------------------------------
# Pattern templates

def _single_visit(prop: str) -> DBA:
    p = Atom(prop)
    return DBA(
        states=[0, 1],
        initial=0,
        accepting=frozenset([1]),
        transitions={0: [(p, 1), (Not(p), 0)], 1: [(GTrue(), 1)]},
        ap=frozenset([prop]),
    )


def _seq_visit(props) -> DBA:
    """Chain automaton for F(p0 & F(p1 & ... F(pm))).

    State i awaits props[i]; one label can discharge several consecutive
    stages at once (the eventualities are not strict-future).
    """
    m = len(props)
    states = list(range(m + 1))
    trans = {}
    for i in range(m):
        rows = []
        # advance as far as the label allows
        for j in range(m, i, -1):
            need = [Atom(p) for p in props[i:j]]
            if j < m:
                need.append(Not(Atom(props[j])))
            rows.append((g_and(*need), j))
        rows.append((Not(Atom(props[i])), i))
        trans[i] = rows
    trans[m] = [(GTrue(), m)]
    return DBA(states, 0, frozenset([m]), trans, frozenset(props))


def _safety(prop: str) -> DBA:
    p = Atom(prop)
    return DBA(
        states=[0, 1],
        initial=0,
        accepting=frozenset([0]),
        transitions={0: [(p, 1), (Not(p), 0)], 1: [(GTrue(), 1)]},
        ap=frozenset([prop]),
    )


def _instant_reaction(trigger: str, response: str) -> DBA:
    p, q = Atom(trigger), Atom(response)
    bad = g_and(p, Not(q))
    return DBA(
        states=[0, 1],
        initial=0,
        accepting=frozenset([0]),
        transitions={0: [(bad, 1), (Not(bad), 0)], 1: [(GTrue(), 1)]},
        ap=frozenset([trigger, response]),
    )


def _delayed_reaction(trigger: str, response: str) -> DBA:
    p, q = Atom(trigger), Atom(response)
    pending = g_and(p, Not(q))
    trans = {
        0: [(pending, 1), (Not(pending), 0)],
        1: [(q, 0), (Not(q), 1)],
    }
    return DBA([0, 1], 0, frozenset([0]), trans, frozenset([trigger, response]))


def compile_pattern(p: Pattern) -> DBA:
    if p.kind == VISIT:
        aut = _single_visit(p.props[0])
        for prop in p.props[1:]:
            aut = conjoin(aut, _single_visit(prop))
        return aut
    if p.kind == SEQ_VISIT:
        return _seq_visit(p.props)
    if p.kind == SAFETY:
        return _safety(p.props[0])
    if p.kind == INSTANT_REACTION:
        return _instant_reaction(*p.props)
    if p.kind == DELAYED_REACTION:
        return _delayed_reaction(*p.props)
    raise ValidationError(f"unknown pattern kind {p.kind!r}")


# ---------------------------------------------------------------------------
# Products

def conjoin(a: DBA, b: DBA) -> DBA:
    """Reachable product; accepting iff both components accepting.

    component_tags records the (a-state, b-state) pair for every product
    state.  Guards on product edges are conjunctions of component guards.
    """
    ap = a.ap | b.ap
    init = (a.initial, b.initial)
    order = [init]
    seen = {init}
    trans = {}
    i = 0
    while i < len(order):
        qa, qb = order[i]
        i += 1
        rows = []
        for ga, sa in a.transitions[qa]:
            for gb, sb in b.transitions[qb]:
                guard = g_and(ga, gb)
                succ = (sa, sb)
                rows.append((guard, succ))
                if succ not in seen and guard.satisfiable():
                    seen.add(succ)
                    order.append(succ)
        # drop rows to unreachable (unsatisfiable-guard) successors
        rows = [(g, s) for g, s in rows if s in seen]
        trans[(qa, qb)] = rows
    accepting = frozenset(q for q in order if q[0] in a.accepting and q[1] in b.accepting)
    tags = {q: q for q in order}
    return DBA(order, init, accepting, trans, ap, tags)


def merge_dead_states(d: DBA) -> DBA:
    """Collapse states that cannot reach an accepting state into one sink.

    Language-preserving; keeps pattern automata small when safety or reaction
    conjuncts share a common failure sink.
    """
    # predecessor relation over satisfiable edges
    preds = {q: set() for q in d.states}
    for q in d.states:
        for guard, succ in d.transitions[q]:
            if guard.satisfiable():
                preds[succ].add(q)
    alive = set(d.accepting)
    frontier = list(alive)
    while frontier:
        q = frontier.pop()
        for p in preds[q]:
            if p not in alive:
                alive.add(p)
                frontier.append(p)
    dead = [q for q in d.states if q not in alive]
    if len(dead) <= 1:
        return d
    sink = "dead"
    while sink in d.states:
        sink += "_"
    def rename(q):
        return sink if q not in alive else q
    states = [q for q in d.states if q in alive]
    if d.initial not in alive:
        states = [sink] + states
    else:
        states = states + [sink]
    trans = {}
    for q in states:
        if q == sink:
            trans[q] = [(GTrue(), sink)]
        else:
            trans[q] = [(g, rename(s)) for g, s in d.transitions[q]]
    tags = {rename(q): t for q, t in d.component_tags.items() if q in alive}
    return DBA(states, rename(d.initial), d.accepting, trans, d.ap, tags)


def compile_objective(obj: Objective) -> DBA:
    aut = compile_pattern(obj.patterns[0])
    for p in obj.patterns[1:]:
        aut = conjoin(aut, compile_pattern(p))
    return merge_dead_states(aut)


def build_spec_automata(sys_obj: Objective, test_obj: Objective):
    """Compile both objectives and their specification product B_pi.

    B_pi states are (q_sys, q_test) history variables (component_tags).
    """
    if sys_obj.role != SYSTEM or test_obj.role != TEST:
        raise ValidationError("expected a system objective and a test objective")
    b_sys = compile_objective(sys_obj)
    b_test = compile_objective(test_obj)
    b_pi = conjoin(b_sys, b_test)
    return b_sys, b_test, b_pi


def check_deterministic(d: DBA) -> bool:
    """Exhaustive determinism/completeness check; feasible for |AP| <= 10."""
    names = sorted(d.ap)
    if len(names) > 10:
        raise ValidationError("determinism check limited to |AP| <= 10")
    for q in d.states:
        for bits in itertools.product([False, True], repeat=len(names)):
            labels = frozenset(n for n, b in zip(names, bits) if b)
            hits = sum(1 for g, _ in d.transitions[q] if g.eval(labels))
            if hits != 1:
                return False
    return True
