"""Snake-ordered droop-gain sampling and sensitivity table generation.

The order matrix walks every combination of per-IBR sampling indices so
that consecutive combinations differ by one step in one coordinate; a
linearization record is carried along the walk and only refreshed when its
estimate drifts past the threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .case import GridCase, droop_gain_bounds
from .network import assemble_system_matrix, build_admittance_blocks, gain_direction
from .spectral import (DegeneratePair, EigenPair, SensitivityRecord, eigen_pairs,
                       eigen_sensitivity, finite_difference_sensitivity,
                       match_eigenvalues)

log = logging.getLogger(__name__)


def order_matrix(n: int, d: int) -> np.ndarray:
    """Snake traversal of the d-dimensional index lattice {1..n}^d.

    Shape (d, n**d); row i cycles with period n**i.  Columns enumerate every
    index combination exactly once and consecutive columns differ in exactly
    one row, by exactly one.
    """
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    total = n ** d
    if total > 50_000_000:
        raise OverflowError(f"{n}**{d} lattice exceeds memory budget")
    o = np.zeros((d, total), dtype=int)
    palindrome = np.concatenate([np.arange(1, n + 1), np.arange(n, 0, -1)])
    for i in range(1, d):            # rows 1..d-1 (1-based), fast to slow
        reps = np.repeat(palindrome, n ** (i - 1))       # length 2*n**i
        full = total // (2 * n ** i)
        b = 2 * n ** i * full
        o[i - 1, :b] = np.tile(reps, full)
        if total % (2 * n ** i):
            o[i - 1, b:] = np.repeat(np.arange(1, n + 1), n ** (i - 1))
    o[d - 1, :] = np.repeat(np.arange(1, n + 1), n ** (d - 1))
    return o


@dataclass(frozen=True)
class SegmentGrid:
    """Per-IBR sampling points and the segments that own them.

    Segment l covers [lower[l], upper[l]); the last segment is closed on
    the right.  Together the segments partition the gain range exactly.
    """

    buses: tuple[int, ...]            # IBR buses, ascending
    samples: np.ndarray               # (|D|, N) gain values
    lower: np.ndarray                 # (|D|, N)
    upper: np.ndarray                 # (|D|, N)

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def gains(self, column) -> np.ndarray:
        """Map one order-matrix column (1-based indices) to a gain vector."""
        col = np.asarray(column, dtype=int)
        return self.samples[np.arange(len(self.buses)), col - 1]

    def segment_of(self, i: int, value: float, tol: float = 1e-6) -> int:
        """0-based segment index owning ``value`` for IBR coordinate i."""
        n = self.n
        lo, hi = self.lower[i, 0], self.upper[i, -1]
        if lo - tol <= value <= hi + tol:
            value = min(max(value, lo), hi)   # absorb solver round-off
        for l in range(n):
            hi_ok = value <= self.upper[i, l] if l == n - 1 else value < self.upper[i, l]
            if self.lower[i, l] <= value and hi_ok:
                return l
        raise ValueError(f"gain {value} outside range of IBR {self.buses[i]}")


def segment_grid(case: GridCase, n: int | None = None) -> SegmentGrid:
    """Evenly sample each IBR droop gain range and cut it at midpoints."""
    n = n or case.planner.sampling_points
    if n < 2:
        raise ValueError("need at least 2 sampling points")
    bounds = droop_gain_bounds(case)
    buses = tuple(sorted(bounds))
    samples = np.zeros((len(buses), n))
    lower = np.zeros((len(buses), n))
    upper = np.zeros((len(buses), n))
    for i, b in enumerate(buses):
        lo, hi = bounds[b]
        xi = (hi - lo) / (n - 1)
        samples[i] = lo + np.arange(n) * xi
        lower[i, 0] = lo
        lower[i, 1:] = samples[i, 1:] - xi / 2
        upper[i, :-1] = samples[i, :-1] + xi / 2
        upper[i, -1] = hi
    return SegmentGrid(buses, samples, lower, upper)


def index_to_gains(column, grid: SegmentGrid) -> np.ndarray:
    return grid.gains(column)


@dataclass
class SensitivityTable:
    """Linearization records per (scenario, eigenvalue, combination)."""

    n_points: int                                  # N
    threshold: float
    order: np.ndarray                              # order matrix
    grid: SegmentGrid
    combo_gains: np.ndarray                        # (N^d, |D|) gains per combo
    records: dict                                  # (m, n, j) -> SensitivityRecord
    refresh_counts: dict                           # (m, n) -> distinct records
    scenarios: tuple[int, ...]
    max_est_error: float = 0.0                     # worst |estimate - exact| at combos

    @property
    def n_eigs(self) -> int:
        ms = self.scenarios[0]
        return max(n for (m, n, j) in self.records if m == ms) + 1

    def record(self, m: int, n: int, j: int) -> SensitivityRecord:
        return self.records[(m, n, j)]

    def combo_of_gains(self, gains) -> int:
        """Combination index whose segment box contains the gain vector."""
        segs = tuple(self.grid.segment_of(i, g) for i, g in enumerate(gains))
        cols = self.order - 1
        for j in range(cols.shape[1]):
            if tuple(cols[:, j]) == segs:
                return j
        raise ValueError("no combination matches the gain vector")

    def max_refresh(self) -> int:
        return max(self.refresh_counts.values())


def generate_sensitivity_tables(case: GridCase,
                                worst_gains: dict[int, dict[int, float]],
                                n: int | None = None,
                                threshold: float | None = None,
                                track: str = "all") -> SensitivityTable:
    """Walk the snake order per scenario, carrying records until they drift.

    ``worst_gains`` maps each scenario index to the attack-gain dict used
    while sampling.  ``track="dominant"`` limits records to eigenvalues
    whose real part can plausibly bind (all are kept by default).
    """
    planner = case.planner
    n = n or planner.sampling_points
    threshold = planner.estimation_threshold if threshold is None else threshold
    grid = segment_grid(case, n)
    d = len(grid.buses)
    order = order_matrix(n, d)
    total = order.shape[1]
    combo_gains = np.array([grid.gains(order[:, j]) for j in range(total)])
    blocks = build_admittance_blocks(case)
    directions = [gain_direction(case, b, "droop") for b in grid.buses]

    records: dict = {}
    refresh: dict = {}
    scenarios = tuple(sorted(worst_gains))
    max_err = 0.0

    for m in scenarios:
        attack = worst_gains[m]
        pairs = _pairs_at(case, attack, combo_gains[0], grid.buses, blocks, planner)
        n_eig = len(pairs)
        prev: list[SensitivityRecord] = []
        for ne in range(n_eig):
            rec = _fresh_record(case, pairs[ne], combo_gains[0], directions,
                                attack, grid.buses, blocks, planner)
            records[(m, ne, 0)] = rec
            refresh[(m, ne)] = 1
            prev.append(rec)
        prev_pairs = pairs
        for j in range(1, total):
            gains_j = combo_gains[j]
            pairs_j = _pairs_at(case, attack, gains_j, grid.buses, blocks, planner)
            perm = match_eigenvalues(prev_pairs, pairs_j)
            pairs_j = [pairs_j[perm[ne]] for ne in range(n_eig)]
            for ne in range(n_eig):
                exact = pairs_j[ne].value
                est = prev[ne].estimate(gains_j)
                if abs(est - exact) <= threshold:
                    records[(m, ne, j)] = prev[ne]
                    max_err = max(max_err, abs(est - exact))
                else:
                    rec = _fresh_record(case, pairs_j[ne], gains_j, directions,
                                        attack, grid.buses, blocks, planner)
                    records[(m, ne, j)] = rec
                    refresh[(m, ne)] += 1
                    prev[ne] = rec
            prev_pairs = pairs_j

    return SensitivityTable(n, threshold, order, grid, combo_gains,
                            records, refresh, scenarios, max_err)


def _pairs_at(case, attack, droop_vec, buses, blocks, planner) -> list[EigenPair]:
    droop = dict(zip(buses, droop_vec))
    sm = assemble_system_matrix(case, attack, droop, blocks=blocks)
    return eigen_pairs(sm.matrix, residual_tol=planner.residual_tol)


def _fresh_record(case, pair, gains_j, directions, attack, buses, blocks,
                  planner) -> SensitivityRecord:
    grad = np.zeros(len(directions), dtype=complex)
    for i, d_b in enumerate(directions):
        try:
            grad[i] = eigen_sensitivity(pair, d_b, planner.degeneracy_tol)
        except DegeneratePair:
            log.warning("degenerate eigenpair at %s; falling back to finite differences",
                        pair.value)

            def build(delta, _i=i):
                droop = dict(zip(buses, gains_j))
                droop[buses[_i]] = droop[buses[_i]] + delta
                return assemble_system_matrix(case, attack, droop, blocks=blocks,
                                              check_bounds=False).matrix

            grad[i] = finite_difference_sensitivity(build, pair.value)
    return SensitivityRecord(pair.value, np.array(gains_j, float), grad)
