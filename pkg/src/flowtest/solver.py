"""Desk-scale exact MILP solving: LP relaxations plus branch and bound on
binary variables, with textual LP-file interop."""
from __future__ import annotations

import heapq
import math
import re
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .automata import ValidationError

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LinearProgram:
    """Sparse maximization LP.  rows are (coeffs: {var: coef}, relation, rhs)."""
    names: list
    objective: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    lower: list = None
    upper: list = None

    def __post_init__(self):
        n = len(self.names)
        if self.lower is None:
            self.lower = [0.0] * n
        if self.upper is None:
            self.upper = [None] * n
        if len(self.lower) != n or len(self.upper) != n:
            raise ValidationError("bounds length mismatch")
        for lo, hi in zip(self.lower, self.upper):
            if hi is not None and lo is not None and lo > hi:
                raise ValidationError("inconsistent bounds")

    @property
    def num_vars(self):
        return len(self.names)

    def add_row(self, coeffs, rel, rhs, name=None):
        if rel not in (LE, EQ, GE):
            raise ValidationError(f"bad relation {rel!r}")
        self.rows.append((dict(coeffs), rel, rhs, name or f"c{len(self.rows) + 1}"))


@dataclass
class MilpInstance:
    lp: LinearProgram
    binary: set

    def __post_init__(self):
        for i in self.binary:
            if not 0 <= i < self.lp.num_vars:
                raise ValidationError("binary index out of range")


@dataclass
class SolveOptions:
    feas_tol: float = 1e-6
    int_tol: float = 1e-5
    time_limit: float = None
    node_limit: int = None
    deterministic: bool = True
    # spacing of the objective lattice when every integral solution's value
    # is a multiple of it; lets the search round bounds down before pruning
    obj_granularity: float = None


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded | error
    values: np.ndarray = None
    objective: float = None


def solve_lp(lp: LinearProgram, extra_bounds=None) -> LpResult:
    """LP relaxation via scipy's HiGHS backend (exact dual simplex)."""
    n = lp.num_vars
    c = np.zeros(n)
    for i, v in lp.objective.items():
        c[i] = -v  # linprog minimizes
    a_ub_rows, b_ub = [], []
    a_eq_rows, b_eq = [], []
    for coeffs, rel, rhs, _ in lp.rows:
        if rel == EQ:
            a_eq_rows.append(coeffs)
            b_eq.append(rhs)
        elif rel == LE:
            a_ub_rows.append(coeffs)
            b_ub.append(rhs)
        else:
            a_ub_rows.append({i: -v for i, v in coeffs.items()})
            b_ub.append(-rhs)

    def to_sparse(rows):
        data, ri, ci = [], [], []
        for r, coeffs in enumerate(rows):
            for i, v in coeffs.items():
                ri.append(r)
                ci.append(i)
                data.append(v)
        return csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    bounds = []
    for i in range(n):
        lo, hi = lp.lower[i], lp.upper[i]
        if extra_bounds and i in extra_bounds:
            elo, ehi = extra_bounds[i]
            lo = max(lo, elo) if lo is not None else elo
            hi = ehi if hi is None else (min(hi, ehi) if ehi is not None else hi)
            if hi is not None and lo is not None and lo > hi:
                return LpResult("infeasible")
        bounds.append((lo, hi))
    res = linprog(
        c,
        A_ub=to_sparse(a_ub_rows) if a_ub_rows else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=to_sparse(a_eq_rows) if a_eq_rows else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds, method="highs")
    if res.status == 0:
        return LpResult("optimal", np.asarray(res.x), -res.fun)
    if res.status == 2:
        return LpResult("infeasible")
    if res.status == 3:
        return LpResult("unbounded")
    return LpResult("error")


@dataclass
class MilpResult:
    status: str  # optimal | feasible | infeasible | timeout
    values: np.ndarray = None
    objective: float = None
    nodes_explored: int = 0


def _most_fractional(values, binaries, int_tol):
    frac_var, frac_dist = None, -1.0
    for i in binaries:
        dist = abs(values[i] - round(values[i]))
        if dist > int_tol and dist > frac_dist + 1e-12:
            frac_var, frac_dist = i, dist
    return frac_var


def _rounding_dive(m: MilpInstance, o: SolveOptions, binaries):
    """Fix fractional binaries to their rounded LP values one at a time to
    find an integral incumbent quickly; purely a warm start, the best-bound
    search below still proves optimality."""
    fixings = {}
    flipped = set()
    for _ in range(2 * len(binaries) + 1):
        res = solve_lp(m.lp, fixings)
        if res.status != "optimal":
            # undo the most recent fixing once, trying the other branch
            for var in reversed(list(fixings)):
                if var not in flipped:
                    flipped.add(var)
                    r = 1 - fixings[var][0]
                    fixings[var] = (r, r)
                    break
            else:
                return None, -math.inf
            continue
        var = _most_fractional(res.values, binaries, o.int_tol)
        if var is None:
            values = res.values.copy()
            for i in binaries:
                values[i] = round(values[i])
            return values, res.objective
        r = round(res.values[var])
        fixings[var] = (r, r)
    return None, -math.inf


def solve_milp(m: MilpInstance, o: SolveOptions = None) -> MilpResult:
    """Best-bound branch and bound over the binary variables.

    Branching picks the most fractional binary (lowest index on ties); the
    incumbent is replaced only on a > 1e-9 objective improvement so identical
    inputs yield identical solutions.
    """
    o = o or SolveOptions()
    start = time.monotonic()
    binaries = sorted(m.binary)
    root = solve_lp(m.lp)
    if root.status == "infeasible":
        return MilpResult("infeasible")
    if root.status != "optimal":
        return MilpResult(root.status if root.status == "timeout" else "infeasible")
    def tighten(bound):
        if o.obj_granularity:
            return math.floor(bound / o.obj_granularity + 1e-7) \
                * o.obj_granularity
        return bound

    counter = 0
    heap = [(-tighten(root.objective), 0, counter, {})]
    incumbent, inc_obj = _rounding_dive(m, o, binaries)
    if inc_obj == -math.inf:
        incumbent = None
    explored = 0
    hit_limit = False
    while heap:
        neg_bound, _, _, fixings = heapq.heappop(heap)
        if -neg_bound <= inc_obj + 1e-9:
            continue
        if o.time_limit is not None and time.monotonic() - start > o.time_limit:
            hit_limit = True
            break
        if o.node_limit is not None and explored >= o.node_limit:
            hit_limit = True
            break
        res = solve_lp(m.lp, fixings)
        explored += 1
        if res.status != "optimal":
            continue
        bound = tighten(res.objective)
        if bound <= inc_obj + 1e-9:
            continue
        frac_var = _most_fractional(res.values, binaries, o.int_tol)
        if frac_var is None:
            if res.objective > inc_obj + 1e-9:
                inc_obj = res.objective
                incumbent = res.values.copy()
                for i in binaries:
                    incumbent[i] = round(incumbent[i])
            continue
        for val in (0, 1):
            counter += 1
            child = dict(fixings)
            child[frac_var] = (val, val)
            # best bound first; deeper nodes break ties so the search can
            # reach integral leaves without sweeping a whole frontier
            heapq.heappush(heap, (-bound, -len(child), counter, child))
    if hit_limit:
        if incumbent is not None:
            return MilpResult("timeout", incumbent, inc_obj, explored)
        return MilpResult("timeout", nodes_explored=explored)
    if incumbent is None:
        return MilpResult("infeasible", nodes_explored=explored)
    return MilpResult("optimal", incumbent, inc_obj, explored)


# ---------------------------------------------------------------------------
# LP-file interop (CPLEX LP dialect)

def _fmt(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _term(coef, name, first):
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    body = name if mag == 1 else f"{_fmt(mag)} {name}"
    return f"{sign} {body}".strip() if not first else (f"{sign}{body}" if sign else body)


def _expr(coeffs, names):
    parts = []
    for i in sorted(coeffs):
        if coeffs[i] == 0:
            continue
        parts.append(_term(coeffs[i], names[i], not parts))
    return " ".join(parts) if parts else "0 " + names[0]


def export_lp_file(m: MilpInstance) -> str:
    lp = m.lp
    out = ["Maximize", f" obj: {_expr(lp.objective, lp.names)}", "Subject To"]
    for coeffs, rel, rhs, name in lp.rows:
        rel_s = rel if rel != EQ else "="
        out.append(f" {name}: {_expr(coeffs, lp.names)} {rel_s} {_fmt(rhs)}")
    out.append("Bounds")
    for i, name in enumerate(lp.names):
        lo, hi = lp.lower[i], lp.upper[i]
        if i in m.binary:
            continue
        if hi is None:
            out.append(f" {_fmt(lo)} <= {name} <= +inf" if lo else f" 0 <= {name} <= +inf")
        else:
            out.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    if m.binary:
        out.append("Binary")
        for i in sorted(m.binary):
            out.append(f" {lp.names[i]}")
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN = re.compile(r"([+-])|([A-Za-z_][A-Za-z0-9_()\[\],.@#]*)|(\d+\.?\d*(?:[eE][+-]?\d+)?)|(<=|>=|=)")


def _parse_expr(tokens, names_idx):
    coeffs = {}
    sign = 1.0
    pending = None
    for kind, val in tokens:
        if kind == "sign":
            sign = 1.0 if val == "+" else -1.0
            pending = None
        elif kind == "num":
            pending = float(val)
        elif kind == "var":
            coef = sign * (pending if pending is not None else 1.0)
            idx = names_idx[val]
            coeffs[idx] = coeffs.get(idx, 0.0) + coef
            sign, pending = 1.0, None
    return coeffs


def import_lp_file(text: str) -> MilpInstance:
    """Parse the subset of the CPLEX LP dialect that export_lp_file emits."""
    section = None
    obj_tokens = []
    rows = []
    bounds_lines = []
    binary_names = []
    for raw in text.splitlines():
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("maximize", "minimize", "subject to", "bounds", "binary",
                   "binaries", "general", "end", "st", "s.t."):
            section = low
            continue
        if section == "maximize":
            body = line.split(":", 1)[1] if ":" in line else line
            obj_tokens.append(body)
        elif section in ("subject to", "st", "s.t."):
            name = None
            body = line
            if ":" in line:
                name, body = line.split(":", 1)
                name = name.strip()
            rows.append((name, body.strip()))
        elif section == "bounds":
            bounds_lines.append(line)
        elif section in ("binary", "binaries"):
            binary_names.extend(line.split())
    # collect variable names in first-appearance order
    names = []
    seen = set()

    def scan(text_):
        for m_ in _TOKEN.finditer(text_):
            if m_.group(2) and m_.group(2).lower() not in ("inf",):
                if m_.group(2) not in seen:
                    seen.add(m_.group(2))
                    names.append(m_.group(2))

    scan(" ".join(obj_tokens))
    for _, body in rows:
        scan(body.split("<=")[0].split(">=")[0].split("=")[0])
    for b in bounds_lines:
        scan(b)
    for b in binary_names:
        if b not in seen:
            seen.add(b)
            names.append(b)
    names_idx = {n: i for i, n in enumerate(names)}

    def tokenize(text_):
        out = []
        for m_ in _TOKEN.finditer(text_):
            if m_.group(1):
                out.append(("sign", m_.group(1)))
            elif m_.group(2):
                out.append(("var", m_.group(2)))
            elif m_.group(3):
                out.append(("num", m_.group(3)))
        return out

    lp = LinearProgram(names=names)
    lp.objective = _parse_expr(tokenize(" ".join(obj_tokens)), names_idx)
    for name, body in rows:
        if LE in body:
            rel, sep = LE, LE
        elif GE in body:
            rel, sep = GE, GE
        elif "=" in body:
            rel, sep = EQ, "="
        else:
            raise ValidationError(f"constraint without relation: {body!r}")
        lhs, rhs = body.split(sep, 1)
        coeffs = _parse_expr(tokenize(lhs), names_idx)
        lp.add_row(coeffs, rel, float(rhs.strip()), name)
    binary = {names_idx[b] for b in binary_names}
    for b in bounds_lines:
        m_ = re.match(r"\s*(-?[\d.eE+]+|-inf)\s*<=\s*(\S+)\s*<=\s*(\+?inf|-?[\d.eE+]+)\s*$", b)
        if m_:
            lo_s, var, hi_s = m_.groups()
            i = names_idx[var]
            lp.lower[i] = float(lo_s) if "inf" not in lo_s else None
            lp.upper[i] = None if "inf" in hi_s else float(hi_s)
    for i in binary:
        lp.lower[i], lp.upper[i] = 0.0, 1.0
    return MilpInstance(lp, binary)


def parse_solution_file(text: str) -> dict:
    """One `name value` pair per line."""
    out = {}
    for line in text.splitlines():
        line = line.split("#")[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"bad solution line {line!r}")
        out[parts[0]] = float(parts[1])
    return out
