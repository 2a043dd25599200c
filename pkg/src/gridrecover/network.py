"""DC power-flow admittance blocks and state-matrix assembly.

The state vector is [delta; theta; omega]: generator angles, load angles,
generator frequency deviations, giving dimension 2*|G| + |L|.  Buses are
ordered ascending by id inside each block so the matrix layout is
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .case import GridCase


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class SystemMatrix:
    """State matrix and forcing vector for one attack/droop gain setting."""

    matrix: np.ndarray            # (2|G|+|L|, 2|G|+|L|)
    forcing: np.ndarray           # zeta, same length
    attack_gains: dict            # bus -> gain actually applied
    droop_gains: dict             # bus -> gain actually applied

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def build_admittance_blocks(case: GridCase) -> dict[str, np.ndarray]:
    """Susceptance-Laplacian of the line graph, partitioned by (G, L).

    Returns H_GG, H_GL, H_LG, H_LL plus the full Laplacian under key "H".
    Parallel lines add susceptances.  Raises on a disconnected graph.
    """
    gen = sorted(case.generator_buses)
    load = sorted(case.load_buses)
    order = load + gen                      # row/col order of the full Laplacian
    idx = {b: k for k, b in enumerate(order)}
    n = len(order)
    lap = np.zeros((n, n))
    for ln in case.lines:
        b = 1.0 / ln.reactance
        i, j = idx[ln.from_bus], idx[ln.to_bus]
        lap[i, i] += b
        lap[j, j] += b
        lap[i, j] -= b
        lap[j, i] -= b
    _check_connected(case, order)
    li = [idx[b] for b in load]
    gi = [idx[b] for b in gen]
    return {
        "H": lap,
        "order": order,
        "H_GG": lap[np.ix_(gi, gi)],
        "H_GL": lap[np.ix_(gi, li)],
        "H_LG": lap[np.ix_(li, gi)],
        "H_LL": lap[np.ix_(li, li)],
    }


def _check_connected(case: GridCase, order):
    adj = {b: set() for b in order}
    for ln in case.lines:
        adj[ln.from_bus].add(ln.to_bus)
        adj[ln.to_bus].add(ln.from_bus)
    seen = {order[0]}
    stack = [order[0]]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    if len(seen) != len(order):
        missing = sorted(set(order) - seen)
        raise NetworkError(f"line graph is disconnected; unreachable buses {missing}")


def assemble_system_matrix(case: GridCase,
                           attack_gains: dict[int, float] | None = None,
                           droop_gains: dict[int, float] | None = None,
                           blocks: dict | None = None,
                           check_bounds: bool = True) -> SystemMatrix:
    """Assemble the state matrix for the given attack and droop gains.

    Row blocks are scaled by [I, -(D_L)^-1, -M^-1]; scaling the frequency
    block by -M instead of its inverse would be dimensionally inconsistent
    with the underlying swing equation.
    """
    from .case import attack_gain_bounds, droop_gain_bounds

    attack_gains = dict(attack_gains or {})
    droop_gains = dict(droop_gains or {})
    if check_bounds:
        ab = attack_gain_bounds(case)
        for b, v in attack_gains.items():
            if b not in ab:
                raise NetworkError(f"attack gain on non-compromised bus {b}")
            if not (-1e-9 <= v <= ab[b] + 1e-9):
                raise NetworkError(f"attack gain {v} on bus {b} outside [0, {ab[b]}]")
        db = droop_gain_bounds(case)
        for b, v in droop_gains.items():
            if b not in db:
                raise NetworkError(f"droop gain on non-IBR bus {b}")
            lo, hi = db[b]
            if not (lo - 1e-9 <= v <= hi + 1e-9):
                raise NetworkError(f"droop gain {v} on bus {b} outside [{lo}, {hi}]")

    blocks = blocks or build_admittance_blocks(case)
    gen = sorted(case.generator_buses)
    load = sorted(case.load_buses)
    n_g, n_l = len(gen), len(load)
    gpos = {b: k for k, b in enumerate(gen)}
    lpos = {b: k for k, b in enumerate(load)}

    m = np.array([case.generator(b).inertia for b in gen])
    d_g = np.array([case.generator(b).damping for b in gen])
    kp = np.array([case.generator(b).kp for b in gen])
    ki = np.array([case.generator(b).ki for b in gen])
    d_l = np.array([case.load(b).damping for b in load])

    k_lg = np.zeros((n_l, n_g))
    sensor_of = {c.bus: c.sensor for c in case.attack.compromised}
    for b, v in attack_gains.items():
        k_lg[lpos[b], gpos[sensor_of[b]]] += v
    kt_lg = np.zeros((n_l, n_g))
    ibr_sensor = {i.bus: i.sensor for i in case.ibr.ibrs}
    for b, v in droop_gains.items():
        kt_lg[lpos[b], gpos[ibr_sensor[b]]] += v

    dim = 2 * n_g + n_l
    mat = np.zeros((dim, dim))
    d = slice(0, n_g)
    th = slice(n_g, n_g + n_l)
    w = slice(n_g + n_l, dim)

    mat[d, w] = np.eye(n_g)
    mat[th, d] = -blocks["H_LG"] / d_l[:, None]
    mat[th, th] = -blocks["H_LL"] / d_l[:, None]
    mat[th, w] = -(-k_lg + kt_lg) / d_l[:, None]
    mat[w, d] = -(np.diag(ki) + blocks["H_GG"]) / m[:, None]
    mat[w, th] = -blocks["H_GL"] / m[:, None]
    mat[w, w] = -(np.diag(kp) + np.diag(d_g)) / m[:, None]

    p_ls = np.array([case.load(b).secure_load for b in load])
    p_cs = np.zeros(n_l)
    for i in case.ibr.ibrs:
        if i.power_reference is not None:
            p_cs[lpos[i.bus]] = i.power_reference
    zeta = np.zeros(dim)
    zeta[th] = (p_cs - p_ls) / d_l

    return SystemMatrix(mat, zeta, attack_gains, droop_gains)


def gain_direction(case: GridCase, bus: int, kind: str) -> np.ndarray:
    """d(matrix)/d(gain) for one attack ("attack") or droop ("droop") gain.

    A single entry in the theta-row of the gain's bus and the omega-column
    of its sensor: +1/D_L for an attack gain, -1/D_L for a droop gain.
    """
    gen = sorted(case.generator_buses)
    load = sorted(case.load_buses)
    n_g, n_l = len(gen), len(load)
    if kind == "attack":
        sensor = {c.bus: c.sensor for c in case.attack.compromised}[bus]
        sign = 1.0
    elif kind == "droop":
        sensor = {i.bus: i.sensor for i in case.ibr.ibrs}[bus]
        sign = -1.0
    else:
        raise ValueError(f"unknown gain kind {kind!r}")
    d_b = np.zeros((2 * n_g + n_l,) * 2)
    row = n_g + load.index(bus)
    col = n_g + n_l + gen.index(sensor)
    d_b[row, col] = sign / case.load(bus).damping
    return d_b
