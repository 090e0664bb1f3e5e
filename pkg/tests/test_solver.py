"""LP core, branch and bound, LP-file round trips."""
import random

import pytest

from flowtest import solver as sv
from flowtest.automata import ValidationError


def test_lp_box():
    lp = sv.LinearProgram(names=["x"])
    lp.objective = {0: 1.0}
    lp.add_row({0: 1.0}, sv.LE, 3.0)
    res = sv.solve_lp(lp)
    assert res.status == "optimal"
    assert abs(res.objective - 3.0) < 1e-8


def test_lp_infeasible():
    lp = sv.LinearProgram(names=["x"])
    lp.objective = {0: 1.0}
    lp.add_row({0: 1.0}, sv.LE, 0.0)
    lp.add_row({0: 1.0}, sv.GE, 1.0)
    assert sv.solve_lp(lp).status == "infeasible"


def test_lp_unbounded():
    lp = sv.LinearProgram(names=["x"], upper=[None])
    lp.objective = {0: 1.0}
    assert sv.solve_lp(lp).status == "unbounded"


def test_lp_equality_and_bounds():
    lp = sv.LinearProgram(names=["x", "y"], upper=[5.0, 5.0])
    lp.objective = {0: 1.0, 1: 2.0}
    lp.add_row({0: 1.0, 1: 1.0}, sv.EQ, 4.0)
    res = sv.solve_lp(lp)
    assert res.status == "optimal"
    assert abs(res.objective - 8.0) < 1e-8  # x=0, y=4


def test_milp_toy_knapsack():
    lp = sv.LinearProgram(names=["x1", "x2"], upper=[1.0, 1.0])
    lp.objective = {0: 1.0, 1: 1.0}
    lp.add_row({0: 1.0, 1: 1.0}, sv.LE, 1.0)
    res = sv.solve_milp(sv.MilpInstance(lp, {0, 1}))
    assert res.status == "optimal"
    assert abs(res.objective - 1.0) < 1e-9


def test_milp_needs_branching():
    # LP relaxation fractional: max x+y, x+y <= 1.5 binary -> 1
    lp = sv.LinearProgram(names=["x", "y"], upper=[1.0, 1.0])
    lp.objective = {0: 1.0, 1: 0.9}
    lp.add_row({0: 2.0, 1: 2.0}, sv.LE, 3.0)
    milp = sv.MilpInstance(lp, {0, 1})
    relax = sv.solve_lp(lp)
    res = sv.solve_milp(milp)
    assert res.status == "optimal"
    assert relax.objective >= res.objective - 1e-9
    assert abs(res.objective - 1.0) < 1e-9
    assert res.values[0] == 1 and res.values[1] == 0


def test_milp_infeasible():
    lp = sv.LinearProgram(names=["x"], upper=[1.0])
    lp.objective = {0: 1.0}
    lp.add_row({0: 2.0}, sv.EQ, 1.0)  # x = 0.5 impossible for binary
    res = sv.solve_milp(sv.MilpInstance(lp, {0}))
    assert res.status == "infeasible"


def test_milp_random_against_exhaustive():
    rng = random.Random(17)
    for trial in range(30):
        n = rng.randint(2, 6)
        lp = sv.LinearProgram(names=[f"b{i}" for i in range(n)],
                              upper=[1.0] * n)
        lp.objective = {i: rng.randint(-3, 5) for i in range(n)}
        for _ in range(rng.randint(1, 4)):
            coeffs = {i: rng.randint(-2, 3) for i in rng.sample(range(n), rng.randint(1, n))}
            rel = rng.choice([sv.LE, sv.GE])
            lp.add_row(coeffs, rel, rng.randint(0, 4))
        milp = sv.MilpInstance(lp, set(range(n)))
        res = sv.solve_milp(milp)
        best = None
        for mask in range(2 ** n):
            x = [(mask >> i) & 1 for i in range(n)]
            ok = True
            for coeffs, rel, rhs, _ in lp.rows:
                lhs = sum(c * x[i] for i, c in coeffs.items())
                if rel == sv.LE and lhs > rhs + 1e-9:
                    ok = False
                if rel == sv.GE and lhs < rhs - 1e-9:
                    ok = False
                if rel == sv.EQ and abs(lhs - rhs) > 1e-9:
                    ok = False
            if ok:
                val = sum(c * x[i] for i, c in lp.objective.items())
                if best is None or val > best:
                    best = val
        if best is None:
            assert res.status == "infeasible", trial
        else:
            assert res.status == "optimal", trial
            assert abs(res.objective - best) < 1e-7, trial


def test_milp_determinism():
    lp = sv.LinearProgram(names=["a", "b", "c"], upper=[1.0] * 3)
    lp.objective = {0: 1.0, 1: 1.0, 2: 1.0}
    lp.add_row({0: 1.0, 1: 1.0}, sv.LE, 1.0)
    lp.add_row({1: 1.0, 2: 1.0}, sv.LE, 1.0)
    milp = sv.MilpInstance(lp, {0, 1, 2})
    r1 = sv.solve_milp(milp)
    r2 = sv.solve_milp(milp)
    assert list(r1.values) == list(r2.values)


def test_lp_file_round_trip():
    lp = sv.LinearProgram(names=["f_e1", "d_e1", "mu_v1"], upper=[1.0, 1.0, 1.0])
    lp.objective = {0: 1.0, 1: -0.25}
    lp.add_row({0: 1.0, 1: 1.0}, sv.LE, 1.0, "cap")
    lp.add_row({2: 1.0, 1: -1.0}, sv.GE, 0.0, "cut")
    lp.add_row({0: 1.0}, sv.EQ, 1.0, "flow")
    milp = sv.MilpInstance(lp, {1})
    text = sv.export_lp_file(milp)
    back = sv.import_lp_file(text)
    assert back.lp.names == lp.names
    assert back.binary == {1}
    assert back.lp.objective == lp.objective
    assert len(back.lp.rows) == 3
    for (c1, r1, b1, _), (c2, r2, b2, _) in zip(lp.rows, back.lp.rows):
        assert c1 == c2 and r1 == r2 and b1 == b2
    # and the re-imported model solves to the same optimum
    res1 = sv.solve_milp(milp)
    res2 = sv.solve_milp(back)
    assert abs(res1.objective - res2.objective) < 1e-9


def test_parse_solution_file():
    sol = sv.parse_solution_file("d_e1 1\nf_e1 0.5  # comment\n\n")
    assert sol == {"d_e1": 1.0, "f_e1": 0.5}
    with pytest.raises(ValidationError):
        sv.parse_solution_file("oops 1 2")


def test_bounds_validation():
    with pytest.raises(ValidationError):
        sv.LinearProgram(names=["x"], lower=[2.0], upper=[1.0])
