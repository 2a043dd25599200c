"""Recovery planning: crew routing plus adaptive droop-gain wind-down.

The joint problem minimizes total droop gain usage (primary) while
rewarding early repairs (secondary), subject to routing constraints and
per-step linearized eigenvalue stability constraints.  The decoupled
benchmark solves routing first, then gains.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import milp
from .adversary import WorstCaseGains, all_worst_case_gains, unrepaired_buses
from .case import GridCase, droop_gain_bounds
from .milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel
from .network import assemble_system_matrix, build_admittance_blocks
from .sampling import SensitivityTable, generate_sensitivity_tables
from .spectral import spectral_abscissa

log = logging.getLogger(__name__)


class PlanInfeasible(RuntimeError):
    pass


@dataclass
class RcrVars:
    nodes: list[str]              # compromised buses (as strings) then st, en
    buses: list[int]
    x: dict                       # (i, j, crew) -> Variable
    y: dict                       # (node, crew) -> Variable
    at: dict                      # (node, crew) -> Variable
    f: dict                       # (bus, t) -> Variable
    z: dict                       # (bus, t) -> Variable


@dataclass
class DgasVars:
    gains: dict                   # (ibr bus, t) -> Variable
    s: dict                       # (scenario, t) -> Variable
    seg: dict                     # (ibr index, segment, t) -> Variable
    psi: dict                     # (combo, t) -> Variable


def emit_rcr(model: MilpModel, case: GridCase) -> RcrVars:
    """Crew flow, visit-once, arrival-time chain, repair and availability."""
    crews = case.crews
    buses = list(case.attack.buses)
    st, en = crews.start_depot, crews.end_depot
    nodes = [str(b) for b in buses] + [st, en]
    mid = [str(b) for b in buses]
    horizon = case.planner.horizon_steps
    big_m = case.planner.big_m
    eps = case.planner.epsilon
    if any(c.repair_times[b] + 1 > big_m for c in crews.crews for b in buses):
        log.warning("big_m %g is small relative to repair times", big_m)

    x, y, at = {}, {}, {}
    for c in crews.crews:
        for i in nodes:
            for j in nodes:
                if i == j or j == st or i == en:
                    continue  # no edge into start, out of end, or self-loop
                x[(i, j, c.id)] = model.add_variable(f"x_{i}_{j}_c{c.id}", BINARY)
        for i in mid:
            y[(i, c.id)] = model.add_variable(f"y_{i}_c{c.id}", BINARY)
        for i in mid + [st]:
            at[(i, c.id)] = model.add_variable(f"at_{i}_c{c.id}", CONTINUOUS, 0.0, big_m)

    for c in crews.crews:
        cid = c.id
        # leave the start depot once, arrive at the end depot once (the
        # direct st->en edge lets a crew sit a tour out)
        model.add_constraint({x[(st, j, cid)]: 1 for j in mid + [en]}, EQ, 1,
                             f"depart_{cid}")
        model.add_constraint({x[(i, en, cid)]: 1 for i in mid + [st]}, EQ, 1,
                             f"arrive_{cid}")
        for k in mid:
            # flow conservation at intermediate nodes
            row = {x[(i, k, cid)]: 1 for i in mid + [st] if i != k}
            for j in mid + [en]:
                if j != k:
                    row[x[(k, j, cid)]] = row.get(x[(k, j, cid)], 0) - 1
            model.add_constraint(row, EQ, 0, f"flow_{k}_c{cid}")
            # at most one departure per node per crew
            model.add_constraint({x[(k, j, cid)]: 1 for j in mid + [en] if j != k},
                                 LE, 1, f"deg_{k}_c{cid}")
        for a_idx, i in enumerate(mid):
            for j in mid[a_idx + 1:]:
                model.add_constraint({x[(i, j, cid)]: 1, x[(j, i, cid)]: 1}, LE, 1,
                                     f"twocycle_{i}_{j}_c{cid}")

    for i in mid:
        model.add_constraint(
            {x[(i, j, c.id)]: 1 for c in crews.crews for j in mid + [en] if j != i},
            EQ, 1, f"visit_{i}")
        for c in crews.crews:
            row = {x[(i, j, c.id)]: 1 for j in mid + [en] if j != i}
            row[y[(i, c.id)]] = row.get(y[(i, c.id)], 0) - 1
            model.add_constraint(row, EQ, 0, f"ydef_{i}_c{c.id}")

    for c in crews.crews:
        cid = c.id
        model.add_constraint({at[(st, cid)]: 1}, EQ, 0, f"atstart_{cid}")
        for i in mid:
            # unvisited buses keep arrival time zero
            model.add_constraint({at[(i, cid)]: 1, y[(i, cid)]: -big_m}, LE, 0,
                                 f"atcap_{i}_c{cid}")
        for i in mid + [st]:
            r_i = 0.0 if i == st else c.repair_times[int(i)]
            for j in mid:
                if i == j:
                    continue
                t_ij = c.travel_times[(i, j)]
                # AT_j = AT_i + R_i + T_ij when the crew takes edge i->j
                model.add_constraint(
                    {at[(i, cid)]: 1, at[(j, cid)]: -1, x[(i, j, cid)]: big_m},
                    LE, big_m - r_i - t_ij, f"chain_up_{i}_{j}_c{cid}")
                model.add_constraint(
                    {at[(i, cid)]: 1, at[(j, cid)]: -1, x[(i, j, cid)]: -big_m},
                    GE, -big_m - r_i - t_ij, f"chain_lo_{i}_{j}_c{cid}")

    f_var, z_var = {}, {}
    for b in buses:
        for t in range(horizon):
            f_var[(b, t)] = model.add_variable(f"f_{b}_t{t}", BINARY)
            z_var[(b, t)] = model.add_variable(f"z_{b}_t{t}", CONTINUOUS, 0.0, 1.0)
    for b in buses:
        i = str(b)
        model.add_constraint({f_var[(b, t)]: 1 for t in range(horizon)}, EQ, 1,
                             f"repair_once_{b}")
        # completion time sum_c (AT + R*Y) lands inside [t, t+1-eps) of the
        # flagged step
        comp = {}
        for c in crews.crews:
            comp[at[(i, c.id)]] = 1.0
            comp[y[(i, c.id)]] = c.repair_times[b]
        row = dict(comp)
        for t in range(horizon):
            row[f_var[(b, t)]] = row.get(f_var[(b, t)], 0) - float(t)
        model.add_constraint(row, LE, 0, f"fmin_{b}")
        row = dict(comp)
        for t in range(horizon):
            row[f_var[(b, t)]] = row.get(f_var[(b, t)], 0) - float(t)
        model.add_constraint(row, GE, -(1 - case.planner.epsilon), f"fmax_{b}")
        # availability is the prefix sum of repair flags, starting at 0
        model.add_constraint({z_var[(b, 0)]: 1}, EQ, 0, f"z0_{b}")
        for t in range(1, horizon):
            row = {z_var[(b, t)]: 1}
            for l in range(t):
                row[f_var[(b, l)]] = row.get(f_var[(b, l)], 0) - 1
            model.add_constraint(row, EQ, 0, f"zdef_{b}_t{t}")
    del eps
    return RcrVars(nodes, buses, x, y, at, f_var, z_var)


def stability_rows(case: GridCase, table: SensitivityTable,
                   rhs: float) -> dict[tuple[int, int], list]:
    """Potentially-binding stability cuts per (scenario, combination).

    Each entry is (re_lambda0, re_gradient, gains0).  Rows whose estimate
    stays below ``rhs`` everywhere in the combination's segment box are
    provably slack and dropped; duplicates (conjugate pairs, carried
    records) collapse to one row.
    """
    grid = table.grid
    order = table.order
    n_eigs = table.n_eigs
    out: dict[tuple[int, int], list] = {}
    for m in table.scenarios:
        for j in range(order.shape[1]):
            segs = order[:, j] - 1
            lo = grid.lower[np.arange(len(grid.buses)), segs]
            hi = grid.upper[np.arange(len(grid.buses)), segs]
            rows = []
            seen = set()
            for n in range(n_eigs):
                rec = table.record(m, n, j)
                re0 = rec.value.real
                g = rec.gradient.real
                worst = re0 + float(np.sum(np.maximum(g * (lo - rec.gains),
                                                      g * (hi - rec.gains))))
                if worst <= rhs - 1e-12:
                    continue
                key = (round(re0, 12), tuple(np.round(g, 12)),
                       tuple(np.round(rec.gains, 12)))
                if key in seen:
                    continue
                seen.add(key)
                rows.append((re0, g.copy(), rec.gains.copy()))
            if rows:
                out[(m, j)] = rows
    return out


def emit_dgas(model: MilpModel, case: GridCase, table: SensitivityTable,
              availability, horizon: int | None = None) -> DgasVars:
    """Scenario selection, segment/combination matching, stability cuts.

    ``availability`` maps (bus, t) to either a Variable (joint problem) or
    a fixed 0/1 value (decoupled second stage).
    """
    planner = case.planner
    horizon = horizon or planner.horizon_steps
    big_m = planner.big_m
    eps = planner.epsilon
    rhs = -(eps + planner.stability_margin)
    grid = table.grid
    order = table.order
    buses = case.attack.buses
    n_combo = order.shape[1]
    d = len(grid.buses)
    bounds = droop_gain_bounds(case)
    rows = stability_rows(case, table, rhs)

    gains, s_var, seg_var, psi = {}, {}, {}, {}
    for t in range(horizon):
        for i, b in enumerate(grid.buses):
            gains[(b, t)] = model.add_variable(f"k_{b}_t{t}", CONTINUOUS,
                                               bounds[b][0], bounds[b][1])
        for m in table.scenarios:
            s_var[(m, t)] = model.add_variable(f"s_{m}_t{t}", BINARY)
        for i in range(d):
            for l in range(grid.n):
                seg_var[(i, l, t)] = model.add_variable(f"seg_{i}_{l}_t{t}", BINARY)
        for j in range(n_combo):
            psi[(j, t)] = model.add_variable(f"psi_{j}_t{t}", BINARY)

    def avail_term(row, b, t, coef):
        a = availability[(b, t)]
        if isinstance(a, milp.Variable):
            row[a] = row.get(a, 0) + coef
            return 0.0
        return coef * float(a)

    # the scenario expression ranges over [0, 2^n - 1], so that is a valid
    # (and much tighter) activation constant than the configured Big-M
    sel_m = float((1 << len(buses)) - 1)
    for t in range(horizon):
        # scenario index sum_i (1 - Z_i) 2^i must equal m when S_m = 1
        for m in table.scenarios:
            const = 0.0
            row = {s_var[(m, t)]: sel_m}
            for i, b in enumerate(buses):
                const += 2 ** i
                const += avail_term(row, b, t, -(2 ** i))
            model.add_constraint(dict(row), LE, sel_m + m - const, f"sel_up_{m}_t{t}")
            row2 = {s_var[(m, t)]: -sel_m}
            const2 = 0.0
            for i, b in enumerate(buses):
                const2 += 2 ** i
                const2 += avail_term(row2, b, t, -(2 ** i))
            model.add_constraint(row2, GE, -sel_m + m - const2, f"sel_lo_{m}_t{t}")
        model.add_constraint({s_var[(m, t)]: 1 for m in table.scenarios}, EQ, 1,
                             f"sel_one_t{t}")

        # gain-to-segment matching: selected segment must contain the gain;
        # the activation constant only needs to span the gain range
        for i, b in enumerate(grid.buses):
            for l in range(grid.n):
                v = seg_var[(i, l, t)]
                m_lo = grid.lower[i, l] - bounds[b][0]
                m_hi = bounds[b][1] - grid.upper[i, l]
                model.add_constraint({gains[(b, t)]: 1, v: -m_lo}, GE,
                                     grid.lower[i, l] - m_lo, f"seglo_{i}_{l}_t{t}")
                model.add_constraint({gains[(b, t)]: 1, v: m_hi}, LE,
                                     grid.upper[i, l] + m_hi, f"seghi_{i}_{l}_t{t}")
            model.add_constraint({seg_var[(i, l, t)]: 1 for l in range(grid.n)},
                                 EQ, 1, f"seg_one_{i}_t{t}")

        # combination selector: logical AND of the per-coordinate segments
        for j in range(n_combo):
            and_row = {psi[(j, t)]: 1}
            for i in range(d):
                tv = seg_var[(i, order[i, j] - 1, t)]
                and_row[tv] = and_row.get(tv, 0) - 1
                model.add_constraint({psi[(j, t)]: 1, tv: -1}, LE, 0,
                                     f"psi_le_{j}_{i}_t{t}")
            model.add_constraint(and_row, GE, 1 - d, f"psi_ge_{j}_t{t}")
        model.add_constraint({psi[(j, t)]: 1 for j in range(n_combo)}, EQ, 1,
                             f"psi_one_t{t}")

        # stability: active when both the scenario and the combination match;
        # per-cut activation constant = worst estimate over the full gain box
        for (m, j), cuts in rows.items():
            for k, (re0, g, k0) in enumerate(cuts):
                lo = np.array([bounds[b][0] for b in grid.buses])
                hi = np.array([bounds[b][1] for b in grid.buses])
                worst_lhs = re0 + float(np.sum(np.maximum(g * (lo - k0),
                                                          g * (hi - k0))))
                cut_m = max(worst_lhs - rhs, 0.0)
                row = {gains[(grid.buses[i], t)]: g[i] for i in range(d)}
                row[psi[(j, t)]] = row.get(psi[(j, t)], 0) + cut_m
                row[s_var[(m, t)]] = row.get(s_var[(m, t)], 0) + cut_m
                model.add_constraint(
                    row, LE, rhs - re0 + float(g @ k0) + 2 * cut_m,
                    f"stab_{m}_{j}_{k}_t{t}")
    return DgasVars(gains, s_var, seg_var, psi)


def scenario_gain_lp(case: GridCase, table: SensitivityTable, m: int,
                     cuts) -> tuple[float, np.ndarray] | None:
    """Cheapest gain vector for scenario m under the linearized cuts.

    Minimizes the gain sum over each combination's segment box subject to
    that combination's active stability cuts; returns (sum, gains) of the
    best combination or None when every combination is infeasible.
    """
    from scipy.optimize import linprog

    grid = table.grid
    d = len(grid.buses)
    rhs = -(case.planner.epsilon + case.planner.stability_margin)
    best = None
    for j in range(table.order.shape[1]):
        segs = table.order[:, j] - 1
        lo = grid.lower[np.arange(d), segs]
        hi = grid.upper[np.arange(d), segs]
        rows = cuts.get((m, j), [])
        a_ub = np.array([g for _, g, _ in rows]).reshape(len(rows), d)
        b_ub = np.array([rhs - re0 + float(g @ k0) for re0, g, k0 in rows])
        res = linprog(np.ones(d), A_ub=a_ub if len(rows) else None,
                      b_ub=b_ub if len(rows) else None,
                      bounds=list(zip(lo, hi)), method="highs")
        if res.status == 0 and (best is None or res.fun < best[0] - 1e-12):
            best = (float(res.fun), np.asarray(res.x))
    return best


@dataclass
class RecoveryPlan:
    routes: dict                       # crew id -> node list (st ... en)
    arrival_times: dict                # crew id -> {node: time}
    repair_step: dict                  # bus -> flagged step
    availability: dict                 # bus -> list over t
    gains: dict                        # ibr bus -> list over t
    scenario: list                     # m(t)
    est_abscissa: list                 # max active estimated Re over t
    exact_abscissa: list               # recomputed dense abscissa over t
    objective: float
    gain_total: float                  # sum of gains over buses and steps
    status: str
    wall_time: float = 0.0
    method: str = "joint"

    def gain_reset_step(self, tol: float = 1e-6):
        """First step from which every droop gain stays at zero."""
        horizon = len(self.scenario)
        for t in range(horizon):
            if all(abs(g) <= tol for gs in self.gains.values() for g in gs[t:]):
                return t
        return None

    def full_repair_step(self):
        horizon = len(self.scenario)
        for t in range(horizon):
            if all(av[t] >= 0.5 for av in self.availability.values()):
                return t
        return None

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "status": self.status,
            "objective": self.objective,
            "gain_total": self.gain_total,
            "routes": {str(c): r for c, r in self.routes.items()},
            "arrival_times": {str(c): a for c, a in self.arrival_times.items()},
            "repair_step": {str(b): t for b, t in self.repair_step.items()},
            "availability": {str(b): v for b, v in self.availability.items()},
            "gains": {str(b): v for b, v in self.gains.items()},
            "scenario": self.scenario,
            "est_abscissa": self.est_abscissa,
            "exact_abscissa": self.exact_abscissa,
            "gain_reset_step": self.gain_reset_step(),
            "full_repair_step": self.full_repair_step(),
        }, indent=1, sort_keys=True)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out)
        ibrs = sorted(self.gains)
        w.writerow(["t", "scenario"] + [f"gain_{b}" for b in ibrs]
                   + ["est_abscissa", "exact_abscissa"]
                   + [f"avail_{b}" for b in sorted(self.availability)])
        for t in range(len(self.scenario)):
            w.writerow([t, self.scenario[t]]
                       + [f"{self.gains[b][t]:.6f}" for b in ibrs]
                       + [f"{self.est_abscissa[t]:.6f}", f"{self.exact_abscissa[t]:.6f}"]
                       + [self.availability[b][t] for b in sorted(self.availability)])
        return out.getvalue()


def _extract_routes(case: GridCase, rcr: RcrVars, sol) -> tuple[dict, dict]:
    st, en = case.crews.start_depot, case.crews.end_depot
    routes, arrivals = {}, {}
    for c in case.crews.crews:
        nxt = {}
        for (i, j, cid), v in rcr.x.items():
            if cid == c.id and sol.value(v) > 0.5:
                nxt[i] = j
        route = [st]
        while route[-1] != en:
            route.append(nxt[route[-1]])
        routes[c.id] = route
        arrivals[c.id] = {i: sol.value(rcr.at[(i, c.id)])
                          for i in route if i != en}
    return routes, arrivals


def _extract_plan(case: GridCase, table: SensitivityTable,
                  worst: dict[int, WorstCaseGains], sol,
                  rcr: RcrVars, dgas: DgasVars, method: str,
                  fixed_availability=None) -> RecoveryPlan:
    planner = case.planner
    horizon = planner.horizon_steps
    buses = case.attack.buses
    grid = table.grid
    if rcr is not None:
        routes, arrivals = _extract_routes(case, rcr, sol)
        availability = {b: [round(sol.value(rcr.z[(b, t)])) for t in range(horizon)]
                        for b in buses}
        repair_step = {b: next(t for t in range(horizon)
                               if sol.value(rcr.f[(b, t)]) > 0.5) for b in buses}
    else:
        routes, arrivals, repair_step = {}, {}, {}
        availability = {b: [int(fixed_availability[(b, t)]) for t in range(horizon)]
                        for b in buses}

    # re-price the gains per step with an exact LP: the MILP fixes the
    # integer structure, but its feasibility/gap tolerances leave the
    # continuous gains off by up to ~1e-6, which matters for audits
    cuts = stability_rows(case, table, -(planner.epsilon + planner.stability_margin))
    gain_of_scenario = {}
    gains = {b: [0.0] * horizon for b in grid.buses}
    scenario, est_abs, exact_abs = [], [], []
    blocks = build_admittance_blocks(case)
    for t in range(horizon):
        m = sum((1 - availability[b][t]) << i for i, b in enumerate(buses))
        scenario.append(m)
        if m not in gain_of_scenario:
            best = scenario_gain_lp(case, table, m, cuts)
            if best is None:      # cannot happen: the MILP found feasible gains
                best = (0.0, np.array([sol.value(dgas.gains[(b, t)])
                                       for b in grid.buses]))
            gain_of_scenario[m] = best[1]
        kvec = gain_of_scenario[m]
        for i, b in enumerate(grid.buses):
            gains[b][t] = float(kvec[i])
        j = table.combo_of_gains(kvec)
        est = max(table.record(m, n, j).estimate(kvec).real
                  for n in range(table.n_eigs))
        est_abs.append(float(est))
        sm = assemble_system_matrix(case, worst[m].gains,
                                    dict(zip(grid.buses, kvec)), blocks=blocks)
        exact_abs.append(spectral_abscissa(sm.matrix))

    gain_total = float(sum(sum(v) for v in gains.values()))
    beta_part = sum(planner.recovery_weights.get(b, 0.01) * availability[b][t]
                    for b in buses for t in range(horizon))
    return RecoveryPlan(routes, arrivals, repair_step, availability, gains,
                        scenario, est_abs, exact_abs,
                        objective=gain_total - beta_part, gain_total=gain_total,
                        status=sol.status, wall_time=sol.wall_time, method=method)


def _objective_rows(case: GridCase, rcr: RcrVars | None, dgas: DgasVars,
                    include_gains=True, include_recovery=True) -> dict:
    planner = case.planner
    row = {}
    if include_gains:
        for v in dgas.gains.values():
            row[v] = row.get(v, 0) + 1.0
    if include_recovery and rcr is not None:
        for (b, t), v in rcr.z.items():
            beta = planner.recovery_weights.get(b, 0.01)
            row[v] = row.get(v, 0) - beta
    return row


def prepare(case: GridCase, table: SensitivityTable | None = None,
            worst: dict[int, WorstCaseGains] | None = None):
    """Compute worst-case gains and sensitivity tables when not supplied."""
    if worst is None:
        worst = all_worst_case_gains(case)
    if table is None:
        table = generate_sensitivity_tables(
            case, {m: w.gains for m, w in worst.items()})
    return table, worst


def _trivial_plan(case: GridCase) -> RecoveryPlan:
    horizon = case.planner.horizon_steps
    blocks = build_admittance_blocks(case)
    sm = assemble_system_matrix(case, {}, {}, blocks=blocks)
    a = spectral_abscissa(sm.matrix)
    gains = {b: [0.0] * horizon for b in sorted(droop_gain_bounds(case))}
    return RecoveryPlan({}, {}, {}, {}, gains, [0] * horizon,
                        [a] * horizon, [a] * horizon, 0.0, 0.0, "optimal")


def solve_joint(case: GridCase, table: SensitivityTable | None = None,
                worst: dict[int, WorstCaseGains] | None = None,
                backend=None, time_limit: float | None = None) -> RecoveryPlan:
    """Jointly optimal routing and gain schedule."""
    if not case.attack.buses:
        return _trivial_plan(case)
    table, worst = prepare(case, table, worst)
    model = MilpModel("joint")
    rcr = emit_rcr(model, case)
    dgas = emit_dgas(model, case, table, rcr.z)
    model.set_objective(_objective_rows(case, rcr, dgas))
    sol = milp.solve(model, backend, time_limit or case.planner.solver_time_limit)
    if sol.status in ("infeasible", "unbounded") or sol.values is None:
        raise PlanInfeasible(f"joint problem {sol.status}")
    return _extract_plan(case, table, worst, sol, rcr, dgas, "joint")


def solve_decoupled(case: GridCase, table: SensitivityTable | None = None,
                    worst: dict[int, WorstCaseGains] | None = None,
                    backend=None, time_limit: float | None = None) -> RecoveryPlan:
    """Benchmark: routing first (earliest repairs), then gains."""
    if not case.attack.buses:
        return _trivial_plan(case)
    table, worst = prepare(case, table, worst)
    stage1 = MilpModel("routing")
    rcr = emit_rcr(stage1, case)
    stage1.set_objective(_objective_rows(case, rcr, DgasVars({}, {}, {}, {}),
                                         include_gains=False))
    sol1 = milp.solve(stage1, backend, time_limit or case.planner.solver_time_limit)
    if sol1.status in ("infeasible", "unbounded") or sol1.values is None:
        raise PlanInfeasible(f"routing stage {sol1.status}")
    horizon = case.planner.horizon_steps
    fixed = {(b, t): round(sol1.value(rcr.z[(b, t)]))
             for b in case.attack.buses for t in range(horizon)}

    stage2 = MilpModel("gains")
    dgas = emit_dgas(stage2, case, table, fixed)
    stage2.set_objective(_objective_rows(case, None, dgas))
    sol2 = milp.solve(stage2, backend, time_limit or case.planner.solver_time_limit)
    if sol2.status in ("infeasible", "unbounded") or sol2.values is None:
        raise PlanInfeasible(f"gain stage {sol2.status}")

    plan = _extract_plan(case, table, worst, sol2, None, dgas, "decoupled",
                         fixed_availability=fixed)
    plan.routes, plan.arrival_times = _extract_routes(case, rcr, sol1)
    plan.repair_step = {b: next(t for t in range(horizon)
                                if sol1.value(rcr.f[(b, t)]) > 0.5)
                        for b in case.attack.buses}
    return plan


def plan_report(plan: RecoveryPlan, case: GridCase,
                reference: RecoveryPlan | None = None) -> dict:
    """Droop operating cost and recovery milestones, optionally vs a reference."""
    rate = case.planner.droop_cost_rate
    report = {
        "method": plan.method,
        "objective": plan.objective,
        "gain_total": plan.gain_total,
        "droop_cost": rate * plan.gain_total,
        "gain_reset_step": plan.gain_reset_step(),
        "full_repair_step": plan.full_repair_step(),
        "max_exact_abscissa": max(plan.exact_abscissa),
    }
    if reference is not None:
        report["reference_method"] = reference.method
        report["reference_droop_cost"] = rate * reference.gain_total
        report["savings"] = rate * (reference.gain_total - plan.gain_total)
    return report
