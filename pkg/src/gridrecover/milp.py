"""Solver-agnostic mixed-integer linear model with pluggable backends.

A backend receives the full model (variables, sparse constraint rows,
objective) and returns a Solution.  The LP-format export doubles as the
interchange format for out-of-process solvers.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "=", ">="


class ModelError(ValueError):
    pass


@dataclass(eq=False)
class Variable:
    index: int
    name: str
    kind: str
    lower: float
    upper: float


@dataclass
class Constraint:
    index: int
    name: str
    coeffs: dict[int, float]     # variable index -> coefficient
    sense: str
    rhs: float


@dataclass
class Solution:
    status: str                  # optimal | feasible | infeasible | unbounded | limit
    values: np.ndarray | None
    objective: float | None
    wall_time: float = 0.0
    node_count: int | None = None

    def value(self, var) -> float:
        return float(self.values[var.index])


class MilpModel:
    """Linear model with a single minimize objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}
        self.objective_offset = 0.0
        self._names: set[str] = set()

    def add_variable(self, name: str, kind: str = CONTINUOUS,
                     lower: float = 0.0, upper: float = math.inf) -> Variable:
        if name in self._names:
            raise ModelError(f"duplicate name {name!r}")
        if kind == BINARY:
            lower, upper = 0.0, 1.0
        elif kind != CONTINUOUS:
            raise ModelError(f"unknown variable kind {kind!r}")
        v = Variable(len(self.variables), name, kind, float(lower), float(upper))
        self.variables.append(v)
        self._names.add(name)
        return v

    def add_constraint(self, coeffs: dict, sense: str, rhs: float,
                       name: str | None = None) -> Constraint:
        if sense not in (LE, EQ, GE):
            raise ModelError(f"unknown sense {sense!r}")
        name = name or f"c{len(self.constraints)}"
        if name in self._names:
            raise ModelError(f"duplicate name {name!r}")
        row = {}
        for var, c in coeffs.items():
            idx = var.index if isinstance(var, Variable) else int(var)
            if not 0 <= idx < len(self.variables):
                raise ModelError(f"constraint {name!r} references undeclared variable {idx}")
            c = float(c)
            if not math.isfinite(c):
                raise ModelError(f"non-finite coefficient in {name!r}")
            if c != 0.0:
                row[idx] = row.get(idx, 0.0) + c
        if not math.isfinite(float(rhs)):
            raise ModelError(f"non-finite rhs in {name!r}")
        con = Constraint(len(self.constraints), name, row, sense, float(rhs))
        self.constraints.append(con)
        self._names.add(name)
        return con

    def set_objective(self, coeffs: dict, offset: float = 0.0):
        """Minimize the given linear expression (maximize by negating)."""
        obj = {}
        for var, c in coeffs.items():
            idx = var.index if isinstance(var, Variable) else int(var)
            if not math.isfinite(float(c)):
                raise ModelError("non-finite objective coefficient")
            if c != 0.0:
                obj[idx] = obj.get(idx, 0.0) + float(c)
        self.objective = obj
        self.objective_offset = float(offset)

    # -- verification -----------------------------------------------------

    def check_solution(self, values, tol: float = 1e-6) -> list[str]:
        """Independent feasibility check; returns violated constraint names."""
        x = np.asarray(values, float)
        bad = []
        for v in self.variables:
            if x[v.index] < v.lower - tol or x[v.index] > v.upper + tol:
                bad.append(f"bounds:{v.name}")
            if v.kind == BINARY and abs(x[v.index] - round(x[v.index])) > tol:
                bad.append(f"integrality:{v.name}")
        for c in self.constraints:
            lhs = sum(coef * x[i] for i, coef in c.coeffs.items())
            if c.sense == LE and lhs > c.rhs + tol:
                bad.append(c.name)
            elif c.sense == GE and lhs < c.rhs - tol:
                bad.append(c.name)
            elif c.sense == EQ and abs(lhs - c.rhs) > tol:
                bad.append(c.name)
        return bad

    def objective_value(self, values) -> float:
        x = np.asarray(values, float)
        return float(sum(c * x[i] for i, c in self.objective.items()) + self.objective_offset)


_NAME_RE = re.compile(r"[^A-Za-z0-9_.]")


def _lp_name(name: str) -> str:
    clean = _NAME_RE.sub("_", name)
    if not clean or clean[0].isdigit():
        clean = "v_" + clean
    return clean


def export_lp(model: MilpModel) -> str:
    """Model as LP-format text with deterministic ordering."""
    names = []
    seen = set()
    for v in model.variables:
        nm = _lp_name(v.name)
        while nm in seen:
            nm += "_"
        seen.add(nm)
        names.append(nm)

    def expr(coeffs: dict) -> str:
        terms = []
        for idx in sorted(coeffs):
            c = coeffs[idx]
            sign = "-" if c < 0 else "+"
            terms.append(f"{sign} {abs(c):.12g} {names[idx]}")
        if not terms:
            return "0"
        out = " ".join(terms)
        return out[2:] if out.startswith("+ ") else out

    lines = ["Minimize", f" obj: {expr(model.objective)}", "Subject To"]
    for c in model.constraints:
        op = {LE: "<=", GE: ">=", EQ: "="}[c.sense]
        lines.append(f" {_lp_name(c.name)}: {expr(c.coeffs)} {op} {c.rhs:.12g}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind == BINARY:
            continue
        lo = "-inf" if v.lower == -math.inf else f"{v.lower:.12g}"
        hi = "+inf" if v.upper == math.inf else f"{v.upper:.12g}"
        lines.append(f" {lo} <= {names[v.index]} <= {hi}")
    binaries = [names[v.index] for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        for nm in binaries:
            lines.append(f" {nm}")
    lines.append("End")
    return "\n".join(lines) + "\n"


# -- backends -------------------------------------------------------------

class HighsBackend:
    """Branch-and-bound via scipy's HiGHS bindings."""

    name = "highs"

    def solve(self, model: MilpModel, time_limit: float | None = None,
              gap: float | None = None) -> Solution:
        import time

        from scipy.optimize import Bounds, LinearConstraint, milp

        nv = len(model.variables)
        if nv == 0:
            return Solution("optimal", np.zeros(0), model.objective_offset)
        c = np.zeros(nv)
        for i, coef in model.objective.items():
            c[i] = coef
        integrality = np.array([1 if v.kind == BINARY else 0 for v in model.variables])
        bounds = Bounds(np.array([v.lower for v in model.variables]),
                        np.array([v.upper for v in model.variables]))
        constraints = []
        if model.constraints:
            rows, cols, vals = [], [], []
            lo = np.full(len(model.constraints), -np.inf)
            hi = np.full(len(model.constraints), np.inf)
            for k, con in enumerate(model.constraints):
                for i, coef in con.coeffs.items():
                    rows.append(k)
                    cols.append(i)
                    vals.append(coef)
                if con.sense in (GE, EQ):
                    lo[k] = con.rhs
                if con.sense in (LE, EQ):
                    hi[k] = con.rhs
            from scipy.sparse import csr_matrix
            a = csr_matrix((vals, (rows, cols)), shape=(len(model.constraints), nv))
            constraints = [LinearConstraint(a, lo, hi)]

        # solve to proven optimality unless the caller relaxes the gap;
        # oracle-equivalence checks rely on exact optima
        options = {"mip_rel_gap": float(gap) if gap is not None else 0.0}
        if time_limit is not None:
            options["time_limit"] = float(time_limit)
        t0 = time.perf_counter()
        res = milp(c=c, constraints=constraints, integrality=integrality,
                   bounds=bounds, options=options)
        wall = time.perf_counter() - t0

        if res.status == 0:
            status = "optimal"
        elif res.status == 2:
            status = "infeasible"
        elif res.status == 3:
            status = "unbounded"
        elif res.status == 1:
            status = "limit" if res.x is not None else "infeasible"
        else:
            status = "limit" if res.x is not None else "infeasible"
        values = None if res.x is None else np.asarray(res.x)
        obj = None
        if values is not None:
            obj = model.objective_value(values)
        return Solution(status, values, obj, wall_time=wall,
                        node_count=getattr(res, "mip_node_count", None))


BACKENDS = {"highs": HighsBackend}


def get_backend(name: str | None = None):
    name = name or os.environ.get("GRIDRECOVER_BACKEND", "highs")
    try:
        return BACKENDS[name]()
    except KeyError:
        raise ModelError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}") from None


def solve(model: MilpModel, backend=None, time_limit: float | None = None,
          gap: float | None = None) -> Solution:
    """Solve and independently re-check any claimed-optimal solution."""
    backend = backend if backend is not None else get_backend()
    if isinstance(backend, str):
        backend = get_backend(backend)
    sol = backend.solve(model, time_limit=time_limit, gap=gap)
    if sol.status in ("optimal", "feasible", "limit") and sol.values is not None:
        bad = model.check_solution(sol.values)
        if bad:
            raise ModelError(
                f"backend {backend.name} returned an infeasible point; "
                f"violated: {bad[:5]}{'...' if len(bad) > 5 else ''}")
    return sol
