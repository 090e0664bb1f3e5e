"""Problem files: JSON schema, validation that reports every violation,
instance construction, and deterministic artifact serialization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema

from . import agent as ag
from . import automata as au
from . import routing as rt
from . import solver as sv
from . import strategy as st
from . import system as sm

MODES = ("static", "reactive", "mixed", "agent")

_CELL = {"type": "array", "items": {"type": "integer"}, "minItems": 2,
         "maxItems": 2}
_CELLS = {"type": "array", "items": _CELL}
_EDGE = {"type": "array", "items": _CELL, "minItems": 2, "maxItems": 2}
_PATTERN = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["visit", "seq_visit", "safety",
                          "instant_reaction", "delayed_reaction"]},
        "props": {"type": "array", "items": {"type": "string"},
                  "minItems": 1},
    },
    "required": ["kind", "props"],
    "additionalProperties": False,
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "grid": {
            "type": "object",
            "properties": {
                "rows": {"type": "integer", "minimum": 1},
                "cols": {"type": "integer", "minimum": 1},
                "init": _CELL,
                "terminal": _CELLS,
                "blocked": _CELLS,
            },
            "required": ["rows", "cols", "init", "terminal"],
            "additionalProperties": False,
        },
        "labels": {"type": "object",
                   "additionalProperties": _CELLS},
        "counters": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string"},
                    "max": {"type": "integer", "minimum": 1},
                    "reset": _CELLS,
                    "decrement": {"type": "integer", "minimum": 0},
                    "predicates": {
                        "type": "array",
                        "items": {"type": "array", "minItems": 3,
                                  "maxItems": 3}},
                },
                "required": ["name", "max"],
                "additionalProperties": False,
            },
        },
        "objectives": {
            "type": "object",
            "properties": {
                "system": {"type": "array", "items": _PATTERN,
                           "minItems": 1},
                "test": {"type": "array", "items": _PATTERN,
                         "minItems": 1},
            },
            "required": ["system", "test"],
            "additionalProperties": False,
        },
        "harness": {
            "oneOf": [
                {"const": "all"},
                {"type": "object",
                 "additionalProperties": {
                     "type": "array", "items": {"type": "string"}}},
            ],
        },
        "mode": {"enum": list(MODES)},
        "static_edges": {"type": "array", "items": _EDGE},
        "agent": {
            "type": "object",
            "properties": {
                "cells": _CELLS,
                "park": {"type": "array",
                         "items": {"type": "string"}, "minItems": 1},
                "init": {"oneOf": [{"type": "string"}, _CELL]},
                "edges": {"type": "array",
                          "items": {"type": "array", "minItems": 2,
                                    "maxItems": 2}},
            },
            "required": ["cells", "park", "init"],
            "additionalProperties": False,
        },
        "options": {
            "type": "object",
            "properties": {
                "bidirectional": {"type": "boolean"},
                "obstacle_mode": {"enum": [st.INSTANTANEOUS,
                                           st.ACCUMULATIVE]},
                "time_limit": {"type": "number"},
                "seed": {"type": "integer"},
                "deterministic": {"type": "boolean"},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "required": ["grid", "labels", "objectives", "mode"],
    "additionalProperties": False,
}


class ProblemError(Exception):
    """Carries every schema violation found, not just the first."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass
class ProblemFile:
    grid: dict
    labels: dict
    objectives: dict
    mode: str
    harness: object = "all"
    counters: list = field(default_factory=list)
    static_edges: list = field(default_factory=list)
    agent: dict = None
    options: dict = field(default_factory=dict)


def parse_problem(text: str) -> ProblemFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError([f"$: not valid JSON ({exc.msg})"])
    validator = jsonschema.Draft202012Validator(PROBLEM_SCHEMA)
    violations = []
    for err in sorted(validator.iter_errors(data), key=lambda e: e.json_path):
        violations.append(f"{err.json_path}: {err.message}")
    if not violations:
        if data["mode"] == "agent" and "agent" not in data:
            violations.append("$.agent: required when mode is 'agent'")
        if data["mode"] == "mixed" and not data.get("static_edges"):
            violations.append(
                "$.static_edges: required when mode is 'mixed'")
    if violations:
        raise ProblemError(violations)
    return ProblemFile(
        grid=data["grid"], labels=data["labels"],
        objectives=data["objectives"], mode=data["mode"],
        harness=data.get("harness", "all"),
        counters=data.get("counters", []),
        static_edges=data.get("static_edges", []),
        agent=data.get("agent"), options=data.get("options", {}))


def load_problem(path) -> ProblemFile:
    with open(path) as fh:
        return parse_problem(fh.read())


def fixture_path(name: str):
    """Path of a shipped problem fixture (e.g. 'order_2x3_reactive')."""
    from importlib import resources
    base = resources.files(__package__) / "fixtures"
    p = base / (name if name.endswith(".json") else name + ".json")
    if not p.is_file():
        known = sorted(f.name for f in base.iterdir())
        raise FileNotFoundError(f"no fixture {name!r}; shipped: {known}")
    return p


def _cell(c):
    return tuple(c)


def _parse_pattern(obj) -> au.Pattern:
    kind, props = obj["kind"], obj["props"]
    if kind == "visit":
        return au.visit(*props)
    if kind == "seq_visit":
        return au.seq_visit(*props)
    if kind == "safety":
        return au.safety(props[0])
    if kind == "instant_reaction":
        return au.instant_reaction(props[0], props[1])
    return au.delayed_reaction(props[0], props[1])


def build_instance(pf: ProblemFile) -> dict:
    """Problem file to concrete system, harness, objectives and options."""
    g = pf.grid
    spec = sm.GridWorldSpec(
        rows=g["rows"], cols=g["cols"], init_cell=_cell(g["init"]),
        terminal_cells={_cell(c) for c in g["terminal"]},
        blocked_cells={_cell(c) for c in g.get("blocked", [])},
        label_map={prop: {_cell(c) for c in cells}
                   for prop, cells in pf.labels.items()})
    t, h = sm.build_grid_world(spec)
    base_of = None
    for c in pf.counters:
        cs = sm.CounterSpec(
            name=c["name"], max=c["max"],
            reset_states={_cell(x) for x in c.get("reset", [])},
            decrement=c.get("decrement", 1),
            predicates=tuple((p[0], p[1], p[2])
                             for p in c.get("predicates", [])))
        t = sm.augment_state_counter(t, cs)
        h = sm.lift_harness(h, t)
        base_of = t.base_of
    if pf.harness != "all":
        restrictable = {}
        for key, actions in pf.harness.items():
            s = _state_from_json(json.loads(key)) if key.startswith("[") \
                else key
            restrictable[s] = set(actions)
        h = sm.TestHarness(restrictable)
        h.validate(t)
    sys_obj = au.Objective(
        au.SYSTEM, tuple(_parse_pattern(p)
                         for p in pf.objectives["system"]))
    test_obj = au.Objective(
        au.TEST, tuple(_parse_pattern(p) for p in pf.objectives["test"]))
    static_edges = {(_cell(a), _cell(b)) for a, b in pf.static_edges}
    ta = None
    if pf.agent:
        cells = [_cell(c) for c in pf.agent["cells"]]
        park = list(pf.agent["park"])
        states = cells + park
        if pf.agent.get("edges") is not None:
            edges = [(_agent_state(a), _agent_state(b))
                     for a, b in pf.agent["edges"]]
        else:
            edges = [(a, b) for a in cells for b in cells
                     if abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1]
        ta = ag.TesterAgentModel(
            states=states, edges=edges, initial=_agent_state(pf.agent["init"]),
            park=set(park))
    return {"t": t, "h": h, "sys_obj": sys_obj, "test_obj": test_obj,
            "static_edges": static_edges, "ta": ta, "mode": pf.mode,
            "base_of": base_of, "options": pf.options}


def _agent_state(v):
    return tuple(v) if isinstance(v, list) else v


def _state_from_json(v):
    if isinstance(v, list):
        return tuple(_state_from_json(x) for x in v)
    return v


def solve_options(pf: ProblemFile) -> sv.SolveOptions:
    o = pf.options
    return sv.SolveOptions(
        time_limit=o.get("time_limit"),
        deterministic=o.get("deterministic", True))


# ---------------------------------------------------------------------------
# Serialization

def jsonable(obj):
    """Recursive conversion of states/sets/tuples to stable JSON values."""
    if isinstance(obj, (tuple, list)):
        return [jsonable(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((jsonable(x) for x in obj), key=json.dumps)
    if isinstance(obj, dict):
        return {json.dumps(jsonable(k)) if not isinstance(k, str) else k:
                jsonable(v) for k, v in obj.items()}
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def cuts_to_json(cuts) -> list:
    out = []
    for (u, v) in cuts:
        out.append({"history_state": jsonable(u[1]),
                    "from": jsonable(u[0]), "to": jsonable(v[0])})
    out.sort(key=json.dumps)
    return out


def strategy_to_json(strategy: st.TestStrategy) -> dict:
    restrictions = {}
    for q in strategy.reactive_map.histories():
        restrictions[json.dumps(jsonable(q))] = sorted(
            ([jsonable(a), jsonable(b)]
             for (a, b) in strategy.reactive_map.at(q)), key=json.dumps)
    return {
        "mode": strategy.mode,
        "flow": strategy.flow,
        "objective": strategy.objective,
        "restrictions": restrictions,
        "static_obstacles": sorted(
            ([jsonable(a), jsonable(b)] for (a, b) in strategy.static),
            key=json.dumps),
    }


def agent_strategy_to_json(strategy: ag.AgentStrategy) -> dict:
    table = []
    for gs, x2 in strategy.table.items():
        table.append({"system": jsonable(gs.x_sys),
                      "history_state": jsonable(gs.q_hist),
                      "agent": jsonable(gs.x_ta),
                      "move_to": jsonable(x2)})
    table.sort(key=json.dumps)
    return {
        "flow": strategy.flow,
        "obstacles": sorted(([jsonable(a), jsonable(b)]
                             for (a, b) in strategy.obs), key=json.dumps),
        "moves": table,
    }


def graph_to_dot(G) -> str:
    """DOT rendering of a product graph with stable node ordering."""
    names = {}
    lines = ["digraph product {"]
    for i, v in enumerate(sorted(G.nodes, key=repr)):
        names[v] = f"n{i}"
        label = json.dumps(jsonable(v))
        lines.append(f'  n{i} [label={json.dumps(label)}];')
    for (u, v) in sorted(G.edges, key=repr):
        lines.append(f"  {names[u]} -> {names[v]};")
    lines.append("}")
    return "\n".join(lines) + "\n"


EXIT_OK = 0
EXIT_INCONSISTENT = 2
EXIT_INFEASIBLE = 3
EXIT_SCHEMA = 4

_INCONSISTENT = (rt.CASE1_NO_PATH, rt.CASE2_NO_PATH_THROUGH_I)


def run_synthesis(pf: ProblemFile):
    """Dispatch to the right pipeline; returns (report dict, files dict,
    exit code). Files map artifact names to deterministic text content."""
    inst = build_instance(pf)
    options = solve_options(pf)
    mode = inst["mode"]
    files = {}
    if mode == "agent":
        rep = ag.synthesize_agent(
            inst["t"], inst["ta"], inst["h"], inst["sys_obj"],
            inst["test_obj"], options=options,
            max_iterations=pf.options.get("max_iterations", 100))
        report = {
            "mode": mode, "status": rep.status,
            "iterations": rep.iterations,
            "excluded": [cuts_to_json(c) for c in rep.excluded],
        }
        if rep.status == "ok":
            report["flow"] = rep.solution.flow
            report["cut_count"] = len(rep.solution.cuts)
            files["cuts.json"] = dumps(cuts_to_json(rep.solution.cuts))
            files["agent_strategy.json"] = dumps(
                agent_strategy_to_json(rep.strategy))
        strategy = rep.strategy
    else:
        rep = st.find_test_strategy(
            inst["t"], inst["h"], inst["sys_obj"], inst["test_obj"],
            variant=mode,
            static_edges=inst["static_edges"] if mode == "mixed" else None,
            mode=pf.options.get("obstacle_mode", st.INSTANTANEOUS),
            options=options,
            bidirectional=pf.options.get("bidirectional", False))
        report = {
            "mode": mode, "status": rep.status,
            "rechecks": rep.rechecks,
        }
        if rep.status == "ok":
            report["flow"] = rep.solution.flow
            report["cut_count"] = len(rep.solution.cuts)
            report["objective"] = rep.solution.objective
            files["cuts.json"] = dumps(cuts_to_json(rep.solution.cuts))
            files["strategy.json"] = dumps(strategy_to_json(rep.strategy))
        strategy = rep.strategy
    if rep.artifacts:
        files["product.dot"] = graph_to_dot(rep.artifacts["G"])
    files["report.json"] = dumps(report)
    if rep.status == "ok":
        code = EXIT_OK
    elif rep.status in _INCONSISTENT:
        code = EXIT_INCONSISTENT
    else:
        code = EXIT_INFEASIBLE
    return report, files, code, rep, strategy


def lp_export(pf: ProblemFile) -> str:
    """The routing model for the problem, in LP text form."""
    from . import products as pr
    inst = build_instance(pf)
    arts = pr.build_artifacts(inst["t"], inst["h"], inst["sys_obj"],
                              inst["test_obj"])
    mode = inst["mode"]
    if mode == "agent":
        p = rt.cut_problem_from_products(
            arts, "agent", static_edges=ag.static_area(inst["t"], inst["ta"]))
        model = rt.build_agent_model(p)
    else:
        p = rt.cut_problem_from_products(
            arts, mode,
            static_edges=inst["static_edges"] if mode == "mixed" else None)
        builders = {"static": rt.build_static_model,
                    "reactive": rt.build_reactive_model,
                    "mixed": rt.build_mixed_model}
        model = builders[mode](p)
    return sv.export_lp_file(model.milp)
