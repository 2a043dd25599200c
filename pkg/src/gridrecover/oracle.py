"""Independent verification: brute-force planning oracle and a time-domain
simulator.

The oracle enumerates every crew routing, prices the gain schedule per
availability scenario with tiny LPs over the same linearized stability
cuts the MILP uses, and returns the exact optimum of that finite search
space.  The simulator integrates the closed-loop frequency dynamics to
confirm stability verdicts independently of eigenvalue analysis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .adversary import WorstCaseGains
from .case import GridCase, droop_gain_bounds
from .network import SystemMatrix, assemble_system_matrix, build_admittance_blocks
from .planner import prepare, scenario_gain_lp, stability_rows
from .sampling import SensitivityTable
from .spectral import spectral_abscissa

MAX_BUSES = 8
MAX_CREWS = 2


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class RoutePlan:
    routes: dict                 # crew id -> node list (st ... en)
    arrival_times: dict          # crew id -> {node: time}
    repair_step: dict            # bus -> flagged step, or None if past horizon
    availability: dict           # (bus, t) -> 0/1
    feasible: bool               # all repairs land within the horizon


def _repair_step(completion: float, horizon: int, eps: float) -> int | None:
    """Unique step t with completion <= t <= completion + 1 - eps, or None."""
    t = math.ceil(completion - 1e-9)
    if t > completion + 1 - eps + 1e-9:
        return None               # completion sits in the eps-wide dead band
    return t if t < horizon else None


def enumerate_route_plans(case: GridCase):
    """Every assignment of compromised buses to crews x every visit order.

    Timelines use the same travel/repair arithmetic and repair-step ceiling
    rule as the routing constraints, so each feasible plan satisfies them
    when substituted.
    """
    buses = list(case.attack.buses)
    crews = case.crews.crews
    if len(buses) > MAX_BUSES or len(crews) > MAX_CREWS:
        raise BudgetExceeded(
            f"{len(buses)} buses / {len(crews)} crews exceed the enumeration budget")
    st, en = case.crews.start_depot, case.crews.end_depot
    horizon = case.planner.horizon_steps
    eps = case.planner.epsilon

    for assign in itertools.product(range(len(crews)), repeat=len(buses)):
        groups = [[b for b, a in zip(buses, assign) if a == ci]
                  for ci in range(len(crews))]
        for orders in itertools.product(*(itertools.permutations(g) for g in groups)):
            routes, arrivals, completion = {}, {}, {}
            for crew, order in zip(crews, orders):
                route = [st] + [str(b) for b in order] + [en]
                at = {st: 0.0}
                clock, prev, prev_repair = 0.0, st, 0.0
                for b in order:
                    clock += prev_repair + crew.travel_times[(prev, str(b))]
                    at[str(b)] = clock
                    completion[b] = clock + crew.repair_times[b]
                    prev, prev_repair = str(b), crew.repair_times[b]
                routes[crew.id] = route
                arrivals[crew.id] = at
            steps = {b: _repair_step(completion[b], horizon, eps) for b in buses}
            avail = {(b, t): int(steps[b] is not None and t > steps[b])
                     for b in buses for t in range(horizon)}
            yield RoutePlan(routes, arrivals, steps, avail,
                            feasible=all(s is not None for s in steps.values()))


def oracle_optimum(case: GridCase, table: SensitivityTable | None = None,
                   worst: dict[int, WorstCaseGains] | None = None) -> dict:
    """Exact optimum of the joint planning problem by exhaustive search.

    Returns the best objective under the linearized stability cuts (the
    MILP's feasible set) plus, for gap measurement, the same plan priced
    with exact-eigenvalue minimal gains.
    """
    table, worst = prepare(case, table, worst)
    buses = list(case.attack.buses)
    horizon = case.planner.horizon_steps
    betas = case.planner.recovery_weights
    rhs = -(case.planner.epsilon + case.planner.stability_margin)
    cuts = stability_rows(case, table, rhs)

    gain_cost: dict[int, float] = {}
    gain_vec: dict[int, np.ndarray] = {}

    def scenario_cost(m: int) -> float | None:
        if m not in gain_cost:
            sol = scenario_gain_lp(case, table, m, cuts)
            gain_cost[m] = None if sol is None else sol[0]
            gain_vec[m] = None if sol is None else sol[1]
        return gain_cost[m]

    best = None
    for plan in enumerate_route_plans(case):
        if not plan.feasible:
            continue
        total, ok = 0.0, True
        scenario = []
        for t in range(horizon):
            m = sum((1 - plan.availability[(b, t)]) << i for i, b in enumerate(buses))
            scenario.append(m)
            cost = scenario_cost(m)
            if cost is None:
                ok = False
                break
            total += cost - sum(betas.get(b, 0.01) * plan.availability[(b, t)]
                                for b in buses)
        if ok and (best is None or total < best["objective"] - 1e-12):
            best = {"objective": total, "plan": plan, "scenario": scenario}
    if best is None:
        return {"objective": None, "plan": None, "scenario": None,
                "exact_gain_objective": None}

    # same routing priced with exact-eigenvalue minimal gains (gap report)
    exact_total = 0.0
    for m in set(best["scenario"]):
        gains = minimal_stabilizing_gains(case, m, worst=worst)
        exact_total += (0.0 if gains is None else float(sum(gains.values()))) \
            * best["scenario"].count(m)
    exact_total -= sum(betas.get(b, 0.01) * best["plan"].availability[(b, t)]
                       for b in buses for t in range(horizon))
    best["exact_gain_objective"] = exact_total
    best["gains_per_scenario"] = {m: (None if gain_vec[m] is None
                                      else dict(zip(table.grid.buses, gain_vec[m])))
                                  for m in set(best["scenario"])}
    return best


def minimal_stabilizing_gains(case: GridCase, m: int, resolution: int = 8,
                              worst: dict[int, WorstCaseGains] | None = None
                              ) -> dict[int, float] | None:
    """Smallest-sum droop gains with exact spectral abscissa < 0.

    Coarse lattice search over the gain box, then a x10 finer pass around
    the incumbent.  Returns None when no lattice point stabilizes.
    """
    from .adversary import worst_case_gains

    attack = (worst[m].gains if worst is not None and m in worst
              else worst_case_gains(case, m).gains)
    bounds = droop_gain_bounds(case)
    buses = sorted(bounds)
    blocks = build_admittance_blocks(case)

    def abscissa(x) -> float:
        sm = assemble_system_matrix(case, attack, dict(zip(buses, x)), blocks=blocks)
        return spectral_abscissa(sm.matrix)

    def search(lo, hi, n):
        axes = [np.linspace(lo[i], hi[i], n) for i in range(len(buses))]
        incumbent, val = None, np.inf
        for point in itertools.product(*axes):
            s = sum(point)
            if s >= val:
                continue
            if abscissa(point) < 0.0:
                incumbent, val = np.array(point), s
        return incumbent

    lo0 = np.array([bounds[b][0] for b in buses])
    hi0 = np.array([bounds[b][1] for b in buses])
    coarse = search(lo0, hi0, resolution)
    if coarse is None:
        return None
    step = (hi0 - lo0) / (resolution - 1)
    fine = search(np.maximum(lo0, coarse - step), np.minimum(hi0, coarse + step),
                  2 * resolution + 1)
    best = fine if fine is not None else coarse
    return dict(zip(buses, (float(g) for g in best)))


@dataclass
class Trajectory:
    times: np.ndarray            # (n+1,) seconds, strictly increasing
    states: np.ndarray           # (n+1, dim) rows [delta; theta; omega]
    diverged: bool
    max_omega: float

    def to_csv(self) -> str:
        import csv
        import io
        out = io.StringIO()
        w = csv.writer(out)
        w.writerow(["t"] + [f"x{i}" for i in range(self.states.shape[1])])
        for t, row in zip(self.times, self.states):
            w.writerow([f"{t:.6f}"] + [f"{v:.9g}" for v in row])
        return out.getvalue()


def simulate(system: SystemMatrix, x0, horizon: float = 30.0,
             step: float = 0.01, omega_count: int | None = None,
             omega_max: float | None = None) -> Trajectory:
    """Classical fixed-step 4th-order integration of dx/dt = Bx + zeta.

    Divergence is flagged when the state inf-norm exceeds 10x its initial
    value or, when the frequency block is identified via ``omega_count``
    (number of trailing frequency states), any |omega| exceeds
    ``omega_max``.
    """
    if step > 0.02:
        raise ValueError("step must be <= 0.02 s to resolve the fastest modes")
    a = system.matrix
    zeta = system.forcing
    x = np.asarray(x0, float).copy()
    if x.shape != (a.shape[0],):
        raise ValueError(f"x0 must have dimension {a.shape[0]}")
    # explicit RK4 is only stable while step * |eigenvalue| stays within
    # roughly 2.8; stiff angle dynamics can demand a much smaller step than
    # the caller's default, so treat ``step`` as an upper bound
    rho = float(np.max(np.abs(np.linalg.eigvals(a)))) if a.size else 0.0
    if rho > 0:
        step = min(step, 2.0 / rho)
    n = int(math.ceil(horizon / step - 1e-9))
    times = np.arange(n + 1) * step
    states = np.empty((n + 1, len(x)))
    states[0] = x
    limit = 10.0 * max(np.max(np.abs(x)), 1e-12)
    diverged = False

    def f(v):
        return a @ v + zeta

    for k in range(n):
        k1 = f(x)
        k2 = f(x + 0.5 * step * k1)
        k3 = f(x + 0.5 * step * k2)
        k4 = f(x + step * k3)
        x = x + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1] = x
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > limit:
            diverged = True
            states = states[:k + 2]
            times = times[:k + 2]
            break

    omega = states[:, -omega_count:] if omega_count else states
    max_omega = float(np.max(np.abs(omega))) if omega.size else 0.0
    if omega_count and omega_max is not None and max_omega > omega_max:
        diverged = True
    return Trajectory(times, states, diverged, max_omega)


def simulate_case(case: GridCase, attack_gains: dict, droop_gains: dict,
                  horizon: float = 30.0, step: float = 0.01,
                  x0: np.ndarray | None = None) -> Trajectory:
    """Simulate deviations after a 0.01 p.u. kick on one generator frequency.

    States are deviations from the forced equilibrium, so the stability
    verdict and the |omega| safety check do not depend on the operating
    point set by the forcing term.
    """
    sm = assemble_system_matrix(case, attack_gains, droop_gains,
                                check_bounds=False)
    deviation = SystemMatrix(sm.matrix, np.zeros(case.dimension),
                             sm.attack_gains, sm.droop_gains)
    n_gen = len(case.generators)
    if x0 is None:
        x0 = np.zeros(case.dimension)
        x0[case.dimension - n_gen] = 0.01
    return simulate(deviation, x0, horizon, step, omega_count=n_gen,
                    omega_max=case.attack.omega_max)
