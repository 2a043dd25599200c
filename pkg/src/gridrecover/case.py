"""Case ingestion and validation.

A case file is a JSON document with sections ``buses``, ``generators``,
``lines``, ``loads``, ``attack``, ``ibr``, ``crews``, and ``planner``.
All electrical quantities are per-unit on the system base declared in the
file; times are in planning steps unless noted otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class CaseError(ValueError):
    """Raised when a case document fails validation.

    ``path`` points at the offending field, e.g. ``loads[0].damping``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Generator:
    bus: int
    inertia: float          # M, p.u.*s
    damping: float          # D_G, p.u.
    kp: float               # proportional controller gain
    ki: float               # integral controller gain


@dataclass(frozen=True)
class Load:
    bus: int
    damping: float          # D_L, p.u. (inverted in the state matrix)
    secure_load: float      # P_LS, p.u.
    max_vulnerable_load: float = 0.0   # P_LV upper limit, p.u.


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float        # p.u.


@dataclass(frozen=True)
class CompromisedBus:
    bus: int
    sensor: int             # generator bus whose frequency feeds the attack
    gain_bound: float | None = None   # explicit override of the computed bound


@dataclass(frozen=True)
class AttackConfig:
    compromised: tuple[CompromisedBus, ...]   # order defines scenario bit positions
    omega_max: float        # generator-trip safety limit, p.u.
    alpha_max: float = 0.0  # load-shed limit; unused while load-sensor gains are zero

    @property
    def buses(self) -> tuple[int, ...]:
        return tuple(c.bus for c in self.compromised)


@dataclass(frozen=True)
class Ibr:
    bus: int
    sensor: int
    gain_range: tuple[float, float] | None = None  # explicit [lo, hi] override
    power_reference: float | None = None           # P_C*, p.u.
    power_cap: float | None = None                 # P_C,max, p.u.
    power_margin: float = 0.0                      # keeps P_C* - K*omega_max above this


@dataclass(frozen=True)
class IbrConfig:
    ibrs: tuple[Ibr, ...]

    @property
    def buses(self) -> tuple[int, ...]:
        return tuple(i.bus for i in self.ibrs)


@dataclass(frozen=True)
class Crew:
    id: int
    repair_times: dict[int, float]                 # bus -> steps
    travel_times: dict[tuple[str, str], float]     # (node, node) -> steps


@dataclass(frozen=True)
class CrewConfig:
    crews: tuple[Crew, ...]
    start_depot: str = "st"
    end_depot: str = "en"

    def nodes(self, compromised_buses) -> list[str]:
        """Route nodes: compromised buses first, then the two depots."""
        return [str(b) for b in compromised_buses] + [self.start_depot, self.end_depot]


@dataclass(frozen=True)
class PlannerConfig:
    horizon_steps: int = 20
    step_minutes: float = 30.0
    sampling_points: int = 4          # N
    big_m: float = 1e4
    epsilon: float = 1e-4
    stability_margin: float = 0.1     # added to epsilon in stability constraints
    estimation_threshold: float = 0.1  # table refresh threshold on |estimate - exact|
    recovery_weights: dict[int, float] = field(default_factory=dict)  # beta_i per bus
    droop_cost_rate: float = 254.0    # currency per unit gain per step
    residual_tol: float = 1e-8
    degeneracy_tol: float = 1e-12
    solver_time_limit: float | None = None


@dataclass(frozen=True)
class GridCase:
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    lines: tuple[Line, ...]
    attack: AttackConfig
    ibr: IbrConfig
    crews: CrewConfig
    planner: PlannerConfig
    name: str = ""

    @property
    def generator_buses(self) -> list[int]:
        return [g.bus for g in self.generators]

    @property
    def load_buses(self) -> list[int]:
        return [l.bus for l in self.loads]

    @property
    def dimension(self) -> int:
        """State dimension 2*|G| + |L|."""
        return 2 * len(self.generators) + len(self.loads)

    def generator(self, bus: int) -> Generator:
        return self._gen_map[bus]

    def load(self, bus: int) -> Load:
        return self._load_map[bus]

    def __post_init__(self):
        object.__setattr__(self, "_gen_map", {g.bus: g for g in self.generators})
        object.__setattr__(self, "_load_map", {l.bus: l for l in self.loads})


def _req(obj: dict, key: str, path: str):
    if key not in obj:
        raise CaseError(f"{path}.{key}", "missing required field")
    return obj[key]


def load_case(source) -> GridCase:
    """Load and validate a case document.

    ``source`` may be a path, a JSON string, or an already-parsed dict.
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            is_file = Path(str(source)).exists()
        except OSError:            # e.g. a JSON string too long for a filename
            is_file = False
        text = Path(source).read_text() if is_file else str(source)
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise CaseError("$", f"not valid JSON: {e}") from e
    return _validate(doc)


def _validate(doc: dict) -> GridCase:
    buses = _req(doc, "buses", "$")
    gen_buses = list(_req(buses, "generator", "buses"))
    load_buses = list(_req(buses, "load", "buses"))
    if set(gen_buses) & set(load_buses):
        raise CaseError("buses", "generator and load bus sets overlap")
    declared = set(gen_buses) | set(load_buses)

    gens = []
    for k, g in enumerate(_req(doc, "generators", "$")):
        path = f"generators[{k}]"
        bus = _req(g, "bus", path)
        if bus not in gen_buses:
            raise CaseError(f"{path}.bus", f"bus {bus} not declared as generator")
        m = float(_req(g, "inertia", path))
        if m <= 0:
            raise CaseError(f"{path}.inertia", "inertia must be positive")
        gens.append(Generator(bus, m, float(_req(g, "damping", path)),
                              float(_req(g, "kp", path)), float(_req(g, "ki", path))))
    if sorted(g.bus for g in gens) != sorted(gen_buses):
        raise CaseError("generators", "generator entries do not cover declared buses")

    loads = []
    for k, l in enumerate(_req(doc, "loads", "$")):
        path = f"loads[{k}]"
        bus = _req(l, "bus", path)
        if bus not in load_buses:
            raise CaseError(f"{path}.bus", f"bus {bus} not declared as load")
        d = float(_req(l, "damping", path))
        if d <= 0:
            raise CaseError(f"{path}.damping", "damping must be positive")
        loads.append(Load(bus, d, float(l.get("secure_load", 0.0)),
                          float(l.get("max_vulnerable_load", 0.0))))
    if sorted(l.bus for l in loads) != sorted(load_buses):
        raise CaseError("loads", "load entries do not cover declared buses")

    lines = []
    for k, ln in enumerate(_req(doc, "lines", "$")):
        path = f"lines[{k}]"
        f, t, x = ln
        if f not in declared:
            raise CaseError(f"{path}", f"from-bus {f} not declared")
        if t not in declared:
            raise CaseError(f"{path}", f"to-bus {t} not declared")
        if float(x) == 0:
            raise CaseError(f"{path}", "zero reactance line")
        lines.append(Line(int(f), int(t), float(x)))

    att = _req(doc, "attack", "$")
    comp = []
    for k, c in enumerate(_req(att, "compromised", "attack")):
        path = f"attack.compromised[{k}]"
        bus = _req(c, "bus", path)
        if bus not in load_buses:
            raise CaseError(f"{path}.bus", f"compromised bus {bus} is not a load bus")
        sensor = _req(c, "sensor", path)
        if sensor not in gen_buses:
            raise CaseError(f"{path}.sensor", f"sensor bus {sensor} is not a generator bus")
        bound = c.get("gain_bound")
        if bound is not None and float(bound) < 0:
            raise CaseError(f"{path}.gain_bound", "gain bound must be nonnegative")
        comp.append(CompromisedBus(bus, sensor, None if bound is None else float(bound)))
    omega_max = float(_req(att, "omega_max", "attack"))
    if omega_max <= 0:
        raise CaseError("attack.omega_max", "must be positive")
    attack = AttackConfig(tuple(comp), omega_max, float(att.get("alpha_max", 0.0)))

    ibrs = []
    for k, i in enumerate(_req(doc, "ibr", "$")):
        path = f"ibr[{k}]"
        bus = _req(i, "bus", path)
        if bus not in load_buses:
            raise CaseError(f"{path}.bus", f"IBR bus {bus} is not a load bus")
        sensor = _req(i, "sensor", path)
        if sensor not in gen_buses:
            raise CaseError(f"{path}.sensor", f"sensor bus {sensor} is not a generator bus")
        rng = i.get("gain_range")
        if rng is not None:
            lo, hi = float(rng[0]), float(rng[1])
            if lo < 0 or hi < lo:
                raise CaseError(f"{path}.gain_range", "need 0 <= lo <= hi")
            rng = (lo, hi)
        ibrs.append(Ibr(bus, sensor, rng,
                        i.get("power_reference"), i.get("power_cap"),
                        float(i.get("power_margin", 0.0))))
    ibr = IbrConfig(tuple(ibrs))

    cr = _req(doc, "crews", "$")
    depots = cr.get("depots", {})
    st = str(depots.get("start", "st"))
    en = str(depots.get("end", "en"))
    if st == en:
        raise CaseError("crews.depots", "start and end depots must differ")
    node_names = [str(c.bus) for c in comp] + [st, en]
    crews = []
    for k, c in enumerate(_req(cr, "crews", "crews")):
        path = f"crews.crews[{k}]"
        rep = {}
        for b, r in _req(c, "repair_times", path).items():
            if int(b) not in attack.buses:
                raise CaseError(f"{path}.repair_times.{b}", "not a compromised bus")
            if float(r) <= 0:
                raise CaseError(f"{path}.repair_times.{b}", "repair time must be positive")
            rep[int(b)] = float(r)
        if sorted(rep) != sorted(attack.buses):
            raise CaseError(f"{path}.repair_times", "must cover every compromised bus")
        trav = {}
        tt = _req(c, "travel_times", path)
        for a in node_names:
            for b in node_names:
                if a == b:
                    continue
                try:
                    v = float(tt[a][b])
                except KeyError:
                    raise CaseError(f"{path}.travel_times.{a}.{b}", "missing entry") from None
                if v < 0:
                    raise CaseError(f"{path}.travel_times.{a}.{b}", "travel time must be nonnegative")
                trav[(a, b)] = v
        crews.append(Crew(int(c.get("id", k + 1)), rep, trav))
    crew_cfg = CrewConfig(tuple(crews), st, en)

    pl = doc.get("planner", {})
    weights = {int(b): float(w) for b, w in pl.get("recovery_weights", {}).items()}
    for b in weights:
        if b not in attack.buses:
            raise CaseError(f"planner.recovery_weights.{b}", "not a compromised bus")
        if weights[b] <= 0:
            raise CaseError(f"planner.recovery_weights.{b}", "weight must be positive")
    planner = PlannerConfig(
        horizon_steps=int(pl.get("horizon_steps", 20)),
        step_minutes=float(pl.get("step_minutes", 30.0)),
        sampling_points=int(pl.get("sampling_points", 4)),
        big_m=float(pl.get("big_m", 1e4)),
        epsilon=float(pl.get("epsilon", 1e-4)),
        stability_margin=float(pl.get("stability_margin", 0.1)),
        estimation_threshold=float(pl.get("estimation_threshold", 0.1)),
        recovery_weights=weights,
        droop_cost_rate=float(pl.get("droop_cost_rate", 254.0)),
        residual_tol=float(pl.get("residual_tol", 1e-8)),
        degeneracy_tol=float(pl.get("degeneracy_tol", 1e-12)),
        solver_time_limit=pl.get("solver_time_limit"),
    )
    if weights and sum(weights.values()) * planner.horizon_steps >= 1.0:
        raise CaseError("planner.recovery_weights",
                        "sum(beta) * horizon must stay below 1 to keep objective priorities separated")

    return GridCase(tuple(gens), tuple(loads), tuple(lines), attack, ibr,
                    crew_cfg, planner, name=str(doc.get("name", "")))


def attack_gain_bounds(case: GridCase) -> dict[int, float]:
    """Per-compromised-bus upper bound on the attack control gain.

    Default is vulnerable-load headroom split between over- and
    under-frequency swings: 0.5 * P_LV_max / omega_max.  An explicit
    ``gain_bound`` in the attack section wins.
    """
    out = {}
    for c in case.attack.compromised:
        if c.gain_bound is not None:
            out[c.bus] = c.gain_bound
        else:
            out[c.bus] = 0.5 * case.load(c.bus).max_vulnerable_load / case.attack.omega_max
    return out


def droop_gain_bounds(case: GridCase) -> dict[int, tuple[float, float]]:
    """Per-IBR droop gain range.

    Computed from the power headroom (cap minus reference) and the reference
    minus margin, both divided by omega_max; an explicit ``gain_range``
    override wins.
    """
    out = {}
    for i in case.ibr.ibrs:
        if i.gain_range is not None:
            out[i.bus] = i.gain_range
            continue
        if i.power_reference is None or i.power_cap is None:
            raise CaseError(f"ibr bus {i.bus}", "need gain_range or power_reference/power_cap")
        pref, pmax = float(i.power_reference), float(i.power_cap)
        if not (pmax >= pref > 0):
            raise CaseError(f"ibr bus {i.bus}", "need power_cap >= power_reference > 0")
        hi = min((pmax - pref) / case.attack.omega_max,
                 (pref - i.power_margin) / case.attack.omega_max)
        if hi < 0:
            raise CaseError(f"ibr bus {i.bus}", "inverted droop gain range")
        out[i.bus] = (0.0, hi)
    return out
