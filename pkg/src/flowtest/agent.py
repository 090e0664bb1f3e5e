"""Dynamic test agents: turn-based game construction from the cut-derived
restrictions, safety-game synthesis, and the counterexample-guided loop
that excludes unrealizable cut sets."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .automata import ValidationError
from .system import TransitionSystem, TestHarness
from . import products as pr
from . import routing as rt
from . import solver as sv
from . import strategy as st

SYSTEM_TURN = "system"
AGENT_TURN = "agent"


@dataclass
class TesterAgentModel:
    """Where the physical test agent can be and how it moves."""
    states: list
    edges: list
    initial: object
    park: set = field(default_factory=set)

    def validate(self, t: TransitionSystem):
        state_set = set(self.states)
        if self.initial not in state_set:
            raise ValidationError("agent initial state unknown")
        if not self.park:
            self.park = {x for x in self.states if x not in set(t.states)}
        if not self.park:
            raise ValidationError("agent model needs a park state outside the arena")
        for x in self.park:
            if x not in state_set:
                raise ValidationError(f"park state {x!r} unknown")
            if x in set(t.states):
                raise ValidationError(f"park state {x!r} lies in the arena")
        for (a, b) in self.edges:
            if a not in state_set or b not in state_set:
                raise ValidationError(f"agent edge {(a, b)!r} leaves the model")
        return self

    def successors(self, x):
        out = {b for (a, b) in self.edges if a == x}
        out.add(x)  # waiting in place is always physically possible
        return out


def static_area(t: TransitionSystem, ta: TesterAgentModel) -> set:
    """Transitions the agent can never reach; only static obstacles apply."""
    reach = set(ta.states)
    return {(u, v) for (u, v) in t.edges if v not in reach}


def blocking_states(t: TransitionSystem, ta: TesterAgentModel,
                    G_sys: pr.ProductGraph, t_sys_nodes) -> set:
    """Agent positions whose occupancy would disconnect some reachable
    system configuration from the goal; only transient occupancy is safe."""
    adj = {}
    for (u, v) in G_sys.edges:
        adj.setdefault(u, []).append(v)
    reachable = set()
    queue = deque(G_sys.initial)
    reachable.update(G_sys.initial)
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v not in reachable:
                reachable.add(v)
                queue.append(v)

    def can_finish(excluded_cell):
        preds = {}
        for (u, v) in G_sys.edges:
            if u[0] == excluded_cell or v[0] == excluded_cell:
                continue
            preds.setdefault(v, []).append(u)
        seen = {v for v in t_sys_nodes if v[0] != excluded_cell}
        queue = deque(seen)
        while queue:
            u = queue.popleft()
            for w in preds.get(u, ()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen

    baseline = can_finish(None)
    blocking = set()
    for x in ta.states:
        if x not in set(t.states):
            continue
        ok = can_finish(x)
        for v in reachable:
            if v in baseline and v[0] != x and v not in ok:
                blocking.add(x)
                break
    return blocking


@dataclass(frozen=True)
class GameState:
    x_sys: object
    q_hist: object
    x_ta: object
    turn: str


@dataclass
class GameGraph:
    initial: GameState
    moves: dict          # GameState -> list of GameState
    states: list
    blocking: set
    required: dict       # (x_sys, q_hist) -> set of cells to occupy


class UnrealizableCuts(Exception):
    """The reactive map demands something no agent move can deliver."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def build_game(t: TransitionSystem, ta: TesterAgentModel,
               G: pr.ProductGraph, R: dict, obs: set,
               blocking: set) -> GameGraph:
    """Explicit turn-based arena. System turns follow the product edges not
    blocked statically or by the agent's body; agent turns follow the agent
    model, forced onto cells it must block and kept off every other cell
    adjacent to the system."""
    ta_states = set(ta.states)
    required = {}
    for q, edges in R.items():
        for (s, s2) in edges:
            required.setdefault((s, q), set()).add(s2)
            if s2 not in ta_states:
                raise UnrealizableCuts(
                    f"cut targets {s2!r}, unreachable for the agent",
                    witness=(s, q, s2))
    g_adj = {}
    for (u, v) in G.edges:
        g_adj.setdefault(u, []).append(v)
    d = G.automaton
    t_edges = set(t.edges)

    def system_moves(gs):
        v = (gs.x_sys, gs.q_hist)
        out = []
        for v2 in g_adj.get(v, ()):
            if (gs.x_sys, v2[0]) in obs:
                continue
            if v2[0] == gs.x_ta:
                continue  # moving onto the agent is never assumed
            out.append(GameState(v2[0], v2[1], gs.x_ta, AGENT_TURN))
        # waiting in place (with the history re-reading the same label)
        q_stay = d.step(gs.q_hist, t.label(gs.x_sys))
        out.append(GameState(gs.x_sys, q_stay, gs.x_ta, AGENT_TURN))
        return out

    def agent_moves(gs):
        req = required.get((gs.x_sys, gs.q_hist), set())
        out = []
        for x2 in sorted(ta.successors(gs.x_ta), key=repr):
            if x2 == gs.x_sys:
                continue  # g5: never move onto the system
            if req:
                if x2 not in req or len(req) > 1:
                    continue  # g6: occupy the one cell to block
            elif (gs.x_sys, x2) in t_edges and (gs.x_sys, x2) not in obs:
                continue  # g7: no blocking outside the reactive map
            if x2 == gs.x_ta and gs.x_ta in blocking:
                continue  # g8: blocking cells are occupied transiently only
            out.append(GameState(gs.x_sys, gs.q_hist, x2, SYSTEM_TURN))
        return out

    v0 = G.initial[0]
    init = GameState(v0[0], v0[1], ta.initial, AGENT_TURN)
    moves = {}
    states = [init]
    seen = {init}
    queue = deque([init])
    while queue:
        gs = queue.popleft()
        succ = agent_moves(gs) if gs.turn == AGENT_TURN else system_moves(gs)
        moves[gs] = succ
        for nxt in succ:
            if nxt not in seen:
                seen.add(nxt)
                states.append(nxt)
                queue.append(nxt)
    return GameGraph(init, moves, states, blocking, required)


@dataclass
class AgentStrategy:
    table: dict          # agent-turn GameState -> next agent position
    game: GameGraph
    obs: set
    cuts: list = field(default_factory=list)
    flow: int = 0


def solve_game(game: GameGraph):
    """Greatest fixpoint of the safety game: the agent must always have a
    guarantee-respecting move, whatever the system does. Returns the
    winning set and a memoryless strategy, or (None, witness) if the
    initial state is losing."""
    changed = True
    winning = set(game.states)
    while changed:
        changed = False
        for gs in game.states:
            if gs not in winning:
                continue
            succ = game.moves.get(gs, [])
            if gs.turn == AGENT_TURN:
                ok = any(n in winning for n in succ)
            else:
                ok = all(n in winning for n in succ)
            if not ok:
                winning.discard(gs)
                changed = True
    if game.initial not in winning:
        # find a reachable losing agent-turn dead end as the witness
        witness = game.initial
        for gs in game.states:
            if gs.turn == AGENT_TURN and not any(
                    n in winning for n in game.moves.get(gs, [])):
                witness = gs
                break
        return None, witness
    table = {}
    for gs in game.states:
        if gs.turn != AGENT_TURN or gs not in winning:
            continue
        for n in game.moves[gs]:
            if n in winning:
                table[gs] = n.x_ta
                break
    return table, None


@dataclass
class AgentSynthesisReport:
    status: str          # ok | infeasible | iteration_cap | case1... | case2...
    strategy: AgentStrategy = None
    obs: set = field(default_factory=set)
    solution: rt.CutSolution = None
    artifacts: dict = None
    problem: rt.CutProblem = None
    iterations: int = 0
    excluded: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


def synthesize_agent(t: TransitionSystem, ta: TesterAgentModel,
                     harness: TestHarness, sys_obj, test_obj,
                     options: sv.SolveOptions = None,
                     max_iterations: int = 100,
                     plain_objective: bool = False) -> AgentSynthesisReport:
    """Counterexample-guided synthesis: find optimal cuts, try to realize
    them with the agent, exclude cut sets that cannot be realized."""
    ta.validate(t)
    arts = pr.build_artifacts(t, harness, sys_obj, test_obj)
    area = static_area(t, ta)
    p = rt.cut_problem_from_products(arts, "agent", static_edges=area)
    verdict = rt.classify_problem_data(p)
    if verdict != rt.OK:
        return AgentSynthesisReport(verdict, artifacts=arts, problem=p)
    blocking = blocking_states(t, ta, arts["G_sys"],
                               arts["partition"].T_sys_nodes)
    excluded = []
    diagnostics = []
    for iteration in range(1, max_iterations + 1):
        model = rt.build_agent_model(p, exclusions=excluded,
                                     plain_objective=plain_objective)
        sol = rt.solve_routing(model, options)
        if sol.status not in ("optimal", "feasible"):
            return AgentSynthesisReport(
                "infeasible", artifacts=arts, problem=p, solution=sol,
                iterations=iteration, excluded=excluded,
                diagnostics=diagnostics)
        obs = st.static_obstacles(sol.cuts, area)
        rmap = st.cuts_to_reactive_map(sol.cuts)
        R = {}
        for q in rmap.histories():
            dyn = {e for e in rmap.at(q) if e not in area}
            if dyn:
                R[q] = dyn
        try:
            game = build_game(t, ta, arts["G"], R, obs, blocking)
            table, witness = solve_game(game)
        except UnrealizableCuts as exc:
            diagnostics.append({"cuts": list(sol.cuts),
                                "witness": exc.witness,
                                "reason": str(exc)})
            excluded.append(list(sol.cuts))
            continue
        if table is not None:
            strategy = AgentStrategy(table, game, obs,
                                     cuts=list(sol.cuts), flow=sol.flow)
            return AgentSynthesisReport(
                "ok", strategy=strategy, obs=obs, solution=sol,
                artifacts=arts, problem=p, iterations=iteration,
                excluded=excluded, diagnostics=diagnostics)
        diagnostics.append({"cuts": list(sol.cuts), "witness": witness,
                            "reason": "no winning agent strategy"})
        excluded.append(list(sol.cuts))
    return AgentSynthesisReport("iteration_cap", artifacts=arts, problem=p,
                                iterations=max_iterations, excluded=excluded,
                                diagnostics=diagnostics)


def verify_guarantees(strategy: AgentStrategy, t: TransitionSystem) -> list:
    """Exhaustive check of the synthesized strategy over every game state
    reachable when the agent follows its table: turn alternation, no
    collisions, forced occupancy, no over-blocking, transient occupancy of
    blocking cells, and the system's retained path to its goal. Returns a
    list of violation records; empty means all guarantees hold."""
    game = strategy.game
    reach = reachable_under(strategy)
    t_edges = set(t.edges)
    bad = []

    def moves_of(gs):
        if gs.turn == AGENT_TURN:
            return [n for n in game.moves.get(gs, [])
                    if n.x_ta == strategy.table.get(gs)]
        return game.moves.get(gs, [])

    for gs in reach:
        for n in moves_of(gs):
            if n.turn == gs.turn:
                bad.append(("turn_alternation", gs, n))
        if gs.x_sys == gs.x_ta:
            bad.append(("collision", gs))
        if gs.turn != SYSTEM_TURN:
            continue
        req = game.required.get((gs.x_sys, gs.q_hist), set())
        if req and gs.x_ta not in req:
            bad.append(("forced_occupancy", gs, req))
        if ((gs.x_sys, gs.x_ta) in t_edges
                and gs.x_ta not in req
                and (gs.x_sys, gs.x_ta) not in strategy.obs):
            bad.append(("over_blocking", gs))
    for gs in reach:
        if (gs.turn == AGENT_TURN and gs.x_ta in game.blocking
                and strategy.table.get(gs) == gs.x_ta):
            bad.append(("blocking_not_transient", gs))
    # the system can still reach its goal from every reachable state
    goals = {gs for gs in reach if gs.x_sys in t.terminal}
    preds = {}
    for gs in reach:
        for n in moves_of(gs):
            if n in reach:
                preds.setdefault(n, []).append(gs)
    ok = set(goals)
    queue = deque(goals)
    while queue:
        u = queue.popleft()
        for w in preds.get(u, ()):
            if w not in ok:
                ok.add(w)
                queue.append(w)
    for gs in reach:
        if gs not in ok:
            bad.append(("goal_unreachable", gs))
    return bad


def reachable_under(strategy: AgentStrategy):
    """Game states visited when the agent follows its table and the system
    does anything legal."""
    game = strategy.game
    seen = {game.initial}
    queue = deque([game.initial])
    while queue:
        gs = queue.popleft()
        if gs.turn == AGENT_TURN:
            nxt = [n for n in game.moves.get(gs, [])
                   if n.x_ta == strategy.table.get(gs)]
        else:
            nxt = game.moves.get(gs, [])
        for n in nxt:
            if n not in seen:
                seen.add(n)
                queue.append(n)
    return seen
