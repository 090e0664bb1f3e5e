"""Command line interface: synthesis, simulation, trace checking, oracle
enumeration, benchmarking, reduction generation, and the session service."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import oracle as orc
from . import problems as pb
from . import products as pr
from . import routing as rt
from . import simulate as si
from . import solver as sv


def _load(path):
    try:
        return pb.load_problem(path)
    except pb.ProblemError as exc:
        for v in exc.violations:
            print(f"schema error: {v}", file=sys.stderr)
        sys.exit(pb.EXIT_SCHEMA)
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        sys.exit(pb.EXIT_SCHEMA)


def _apply_overrides(pf, args):
    if getattr(args, "mode", None):
        pf.mode = args.mode
    if getattr(args, "time_limit", None) is not None:
        pf.options["time_limit"] = args.time_limit
    if getattr(args, "deterministic", False):
        pf.options["deterministic"] = True
    if getattr(args, "seed", None) is not None:
        pf.options["seed"] = args.seed
    return pf


def _write_files(out_dir, files):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in sorted(files.items()):
        (out / name).write_text(text)
        print(f"wrote {out / name}")


def cmd_synth(args):
    pf = _apply_overrides(_load(args.problem), args)
    report, files, code, rep, strategy = pb.run_synthesis(pf)
    if args.lp_export:
        files["model.lp"] = pb.lp_export(pf)
    if args.external_solution:
        values = sv.parse_solution_file(Path(args.external_solution).read_text())
        files["external_solution.json"] = pb.dumps(
            {"values": values, "note": "imported solver values"})
    if args.out_dir:
        _write_files(args.out_dir, files)
    print(json.dumps(pb.jsonable(report), sort_keys=True))
    return code


def cmd_simulate(args):
    pf = _apply_overrides(_load(args.problem), args)
    report, files, code, rep, strategy = pb.run_synthesis(pf)
    if code != 0:
        print(json.dumps(pb.jsonable(report), sort_keys=True))
        return code
    inst = pb.build_instance(pf)
    b_sys = rep.artifacts["b_sys"]
    b_test = rep.artifacts["b_test"]
    t = inst["t"]
    depth = args.depth or si.default_depth(rep.artifacts)
    if pf.mode == "agent":
        trace = si.simulate_agent(t, strategy, b_sys, b_test,
                                  policy=args.policy, seed=args.seed or 0,
                                  depth=depth)
    elif args.policy == "exhaustive":
        ex = si.exhaustive_verdicts(t, strategy, b_sys, b_test)
        out = {"reachable": ex.reachable,
               "goal_states": ex.goal_states,
               "violations": [repr(v) for v in ex.violations]}
        print(json.dumps(out, sort_keys=True))
        return 0 if not ex.violations else 1
    else:
        trace = si.simulate(t, strategy, b_sys, b_test, policy=args.policy,
                            seed=args.seed or 0, depth=depth)
    record = {"status": trace.status, "verdicts": trace.verdicts,
              "steps": trace.steps}
    if args.out_dir:
        _write_files(args.out_dir, {"trace.json": pb.dumps(record)})
    print(json.dumps(pb.jsonable(record), sort_keys=True))
    return 0


def cmd_check(args):
    pf = _load(args.problem)
    inst = pb.build_instance(pf)
    arts = pr.build_artifacts(inst["t"], inst["h"], inst["sys_obj"],
                              inst["test_obj"])
    states = [pb._state_from_json(s)
              for s in json.loads(Path(args.trace).read_text())]
    verdicts = si.check_trace(inst["t"], arts["b_sys"], arts["b_test"],
                              states)
    print(json.dumps(verdicts, sort_keys=True))
    return 0


def cmd_oracle(args):
    pf = _load(args.problem)
    inst = pb.build_instance(pf)
    arts = pr.build_artifacts(inst["t"], inst["h"], inst["sys_obj"],
                              inst["test_obj"])
    variant = args.variant or ("static" if pf.mode == "static"
                               else "reactive")
    p = rt.cut_problem_from_products(arts, variant)
    try:
        res = orc.enumerate_optimal_cuts(p, variant=variant,
                                         max_decisions=args.max_decisions)
    except orc.OracleTooLarge as exc:
        print(str(exc), file=sys.stderr)
        return 3
    out = {"flow": res.flow,
           "optimal_cut_size": min((len(c) for c in res.optimal_cuts),
                                   default=None),
           "witnesses": len(res.optimal_cuts),
           "valid_sets": res.valid_count}
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_bench(args):
    import flowtest.strategy as st
    families = args.families.split(",") if args.families else list(orc.FAMILIES)
    print("family\tsize\tap\tseed\tstatus\tF\tcuts\tseconds")
    for family in families:
        for k in range(args.count):
            seed = args.seed + k
            t0 = time.time()
            arts = orc.random_grid_problem(seed, args.rows, args.cols, family,
                                           ap_count=args.ap_count)
            p = arts["problem"]
            sol = rt.solve_routing(
                rt.build_reactive_model(p),
                sv.SolveOptions(time_limit=args.time_limit))
            dt = time.time() - t0
            cuts = len(sol.cuts) if sol.status == "optimal" else ""
            flow = sol.flow if sol.status == "optimal" else ""
            print(f"{family}\t{args.rows}x{args.cols}\t{args.ap_count or '-'}"
                  f"\t{seed}\t{sol.status}\t{flow}\t{cuts}\t{dt:.2f}")
    return 0


def cmd_reduce_sat(args):
    import random
    rng = random.Random(args.seed)
    clauses = []
    for _ in range(args.clauses):
        clause = tuple(rng.choice([1, -1]) * rng.randint(1, args.vars)
                       for _ in range(3))
        clauses.append(clause)
    build = (orc.sat_to_static_instance if args.construction == "static"
             else orc.sat_to_reactive_instance)
    inst = build(clauses, args.vars)
    sat = orc.dpll_sat(clauses, args.vars)
    model = (rt.build_static_model(inst.problem)
             if args.construction == "static"
             else rt.build_reactive_model(inst.problem))
    rt.add_cut_budget(model, inst.budget)
    sol = rt.solve_routing(model)
    out = {"clauses": [list(c) for c in clauses], "vars": args.vars,
           "construction": args.construction, "budget": inst.budget,
           "dpll": sat is not None,
           "routing_decision": sol.status == "optimal"}
    if sol.status == "optimal":
        out["decoded"] = orc.decode_assignment(inst, sol.cuts)
    print(json.dumps(pb.jsonable(out), sort_keys=True))
    return 0


def cmd_serve(args):
    import uvicorn
    from .service import create_app
    host, _, port = args.bind.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="flowtest",
        description="Synthesize reactive test environments for "
                    "discrete decision-making systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, problem=True):
        if problem:
            p.add_argument("problem", help="problem file (JSON)")
        p.add_argument("--mode", choices=pb.MODES)
        p.add_argument("--out-dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--time-limit", type=float)
        p.add_argument("--deterministic", action="store_true")

    p = sub.add_parser("synth", help="synthesize a test strategy")
    common(p)
    p.add_argument("--lp-export", action="store_true")
    p.add_argument("--external-solution",
                   help="solver solution file to import")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run a system policy against the "
                                        "synthesized strategy")
    common(p)
    p.add_argument("--policy", default="greedy",
                   choices=["greedy", "random", "stay", "exhaustive"])
    p.add_argument("--depth", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="verdicts for a recorded trace")
    p.add_argument("problem")
    p.add_argument("trace", help="JSON list of states")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("oracle", help="exhaustive enumeration ground truth")
    p.add_argument("problem")
    p.add_argument("--variant", choices=["static", "reactive"])
    p.add_argument("--max-decisions", type=int, default=orc.MAX_DECISIONS)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="randomized grid benchmark table")
    p.add_argument("--families")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--rows", type=int, default=5)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--ap-count", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--time-limit", type=float)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("reduce-sat", help="3-SAT to routing reduction")
    p.add_argument("--vars", type=int, default=3)
    p.add_argument("--clauses", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--construction", choices=["static", "reactive"],
                   default="static")
    p.set_defaults(func=cmd_reduce_sat)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--bind",
                   default=os.environ.get("FLOWTEST_BIND", "127.0.0.1:8000"))
    p.set_defaults(func=cmd_serve)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
