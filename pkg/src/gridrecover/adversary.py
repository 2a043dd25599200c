"""Availability scenarios and worst-case attack gains.

Scenario m encodes which compromised buses are still under adversary
control: bit i-1 of m is 1 when the i-th compromised bus is unrepaired.
The adversary maximizes the spectral abscissa over the box of admissible
attack gains, assuming all droop gains are zero.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .case import GridCase, attack_gain_bounds
from .network import assemble_system_matrix, build_admittance_blocks, gain_direction
from .spectral import eigen_pairs, eigen_sensitivity, spectral_abscissa

log = logging.getLogger(__name__)


def scenario_index(availability) -> int:
    """Availability vector (1 = repaired) -> scenario index m."""
    return sum((1 - int(z)) << i for i, z in enumerate(availability))


def index_to_availability(m: int, n_buses: int) -> list[int]:
    if not 0 <= m < (1 << n_buses):
        raise ValueError(f"scenario {m} out of range for {n_buses} buses")
    return [0 if (m >> i) & 1 else 1 for i in range(n_buses)]


def unrepaired_buses(case: GridCase, m: int) -> list[int]:
    buses = case.attack.buses
    return [b for i, b in enumerate(buses) if (m >> i) & 1]


@dataclass(frozen=True)
class WorstCaseGains:
    scenario: int
    gains: dict[int, float]       # zero at repaired buses (omitted)
    abscissa: float               # spectral abscissa at these gains, zero droop
    converged: bool = True


def worst_case_gains(case: GridCase, m: int,
                     max_iter: int = 60, step0: float = 2.0) -> WorstCaseGains:
    """Most destabilizing attack gains for scenario m (droop gains zero).

    Projected gradient ascent on the spectral abscissa with exact
    eigenvalue re-evaluation each iterate, started from the best corners of
    the admissible box.
    """
    bounds = attack_gain_bounds(case)
    active = unrepaired_buses(case, m)
    blocks = build_admittance_blocks(case)
    if not active:
        sm = assemble_system_matrix(case, {}, {}, blocks=blocks)
        return WorstCaseGains(m, {}, spectral_abscissa(sm.matrix))

    ub = np.array([bounds[b] for b in active])
    dirs = [gain_direction(case, b, "attack") for b in active]

    def abscissa(x) -> float:
        sm = assemble_system_matrix(case, dict(zip(active, x)), {}, blocks=blocks)
        return spectral_abscissa(sm.matrix)

    def grad_at(x):
        sm = assemble_system_matrix(case, dict(zip(active, x)), {}, blocks=blocks)
        pairs = eigen_pairs(sm.matrix, residual_tol=case.planner.residual_tol)
        top = pairs[0]                     # canonical order: max real part first
        g = np.array([eigen_sensitivity(top, d).real for d in dirs])
        return top.value.real, g

    # rank corners to pick starting points (the full corner set is cheap
    # for the scenario sizes this planner targets)
    corners = [np.array(c) * ub for c in itertools.product([0.0, 1.0], repeat=len(active))]
    corners.sort(key=abscissa, reverse=True)
    starts = corners[:3] + [ub * 0.5]

    best_x, best_v = None, -np.inf
    converged = False
    for x0 in starts:
        x = x0.copy()
        val = abscissa(x)
        step = step0
        for _ in range(max_iter):
            _, g = grad_at(x)
            x_new = np.clip(x + step * g, 0.0, ub)
            v_new = abscissa(x_new)
            if v_new > val + 1e-12:
                x, val = x_new, v_new
                step = min(step * 1.5, 10.0)
            else:
                step *= 0.5
                if step < 1e-6:
                    converged = True
                    break
        if val > best_v:
            best_v, best_x = val, x
    if not converged:
        log.warning("worst-case gain search for scenario %d hit the iteration cap", m)
    return WorstCaseGains(m, dict(zip(active, best_x)), best_v, converged)


def corner_oracle(case: GridCase, m: int, max_active: int = 12) -> WorstCaseGains:
    """Best of all box corners plus the midpoint, by exact abscissa."""
    bounds = attack_gain_bounds(case)
    active = unrepaired_buses(case, m)
    if len(active) > max_active:
        raise ValueError(f"{len(active)} unrepaired buses exceed the corner budget")
    blocks = build_admittance_blocks(case)
    ub = np.array([bounds[b] for b in active])

    def abscissa(x) -> float:
        sm = assemble_system_matrix(case, dict(zip(active, x)), {}, blocks=blocks)
        return spectral_abscissa(sm.matrix)

    if not active:
        return WorstCaseGains(m, {}, abscissa(np.zeros(0)))
    cands = [np.array(c) * ub for c in itertools.product([0.0, 1.0], repeat=len(active))]
    cands.append(ub * 0.5)
    best = max(cands, key=abscissa)
    return WorstCaseGains(m, dict(zip(active, best)), abscissa(best))


def all_worst_case_gains(case: GridCase, scenarios=None) -> dict[int, WorstCaseGains]:
    n = len(case.attack.buses)
    scenarios = range(1 << n) if scenarios is None else scenarios
    return {m: worst_case_gains(case, m) for m in scenarios}
