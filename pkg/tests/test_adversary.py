import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridrecover.adversary import (corner_oracle, index_to_availability,
                                   scenario_index, unrepaired_buses,
                                   worst_case_gains)
from gridrecover.case import attack_gain_bounds, load_case
from gridrecover.network import assemble_system_matrix
from gridrecover.spectral import spectral_abscissa


def test_scenario_index_examples():
    assert scenario_index([1] * 6) == 0          # everything repaired
    assert scenario_index([0] * 6) == 63
    assert scenario_index([1, 0, 0, 0, 0, 0]) == 62


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=10))
def test_scenario_roundtrip(avail):
    m = scenario_index(avail)
    assert index_to_availability(m, len(avail)) == avail


def test_index_to_availability_range_check():
    with pytest.raises(ValueError):
        index_to_availability(8, 3)
    with pytest.raises(ValueError):
        index_to_availability(-1, 3)


def test_unrepaired_buses(mini3):
    assert unrepaired_buses(mini3, 0) == []
    assert unrepaired_buses(mini3, 7) == [1, 2, 3]
    assert unrepaired_buses(mini3, 5) == [1, 3]


def test_zero_scenario_has_zero_gains(mini3):
    w = worst_case_gains(mini3, 0)
    assert w.gains == {}
    assert w.abscissa == pytest.approx(
        spectral_abscissa(assemble_system_matrix(mini3, {}, {}).matrix))


def test_worst_gains_respect_bounds_and_scenario(mini3):
    bounds = attack_gain_bounds(mini3)
    for m in range(8):
        w = worst_case_gains(mini3, m)
        assert set(w.gains) == set(unrepaired_buses(mini3, m))
        for b, g in w.gains.items():
            assert 0.0 <= g <= bounds[b] + 1e-9
        sm = assemble_system_matrix(mini3, w.gains, {})
        assert spectral_abscissa(sm.matrix) == pytest.approx(w.abscissa, abs=1e-9)


def test_worst_beats_corner_certificate(mini3):
    for m in range(8):
        corner = corner_oracle(mini3, m)
        assert worst_case_gains(mini3, m).abscissa >= corner.abscissa - 1e-6


def two_bus_case(bound=10.0):
    return load_case({
        "buses": {"generator": [2], "load": [1]},
        "generators": [{"bus": 2, "inertia": 1.0, "damping": 1.0, "kp": 1.0, "ki": 1.0}],
        "loads": [{"bus": 1, "damping": 2.0, "secure_load": 0.0}],
        "lines": [[1, 2, 0.5]],
        "attack": {"compromised": [{"bus": 1, "sensor": 2, "gain_bound": bound}],
                   "omega_max": 0.04},
        "ibr": [],
        "crews": {"crews": []},
        "planner": {},
    })


def test_one_dimensional_sweep_cross_check():
    case = two_bus_case()
    grid = np.linspace(0.0, 10.0, 201)
    vals = [spectral_abscissa(assemble_system_matrix(case, {1: g}, {}).matrix)
            for g in grid]
    sweep_best = max(vals)
    found = worst_case_gains(case, 1)
    assert found.abscissa >= sweep_best - 1e-4
    assert 0.0 <= found.gains[1] <= 10.0
