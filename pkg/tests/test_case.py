import copy
import json

import pytest
from hypothesis import given, strategies as st

from gridrecover.case import (CaseError, attack_gain_bounds, droop_gain_bounds,
                              load_case)

from conftest import IEEE39


def test_fixture_dimensions(case39):
    assert len(case39.generators) == 10
    assert len(case39.loads) == 29
    assert case39.dimension == 49
    assert case39.generator_buses == list(range(30, 40))
    assert case39.load_buses == list(range(1, 30))


def test_load_from_path_string_and_dict_agree(mini3_doc):
    a = load_case(mini3_doc)
    b = load_case(json.dumps(mini3_doc))
    assert a.dimension == b.dimension
    assert a.attack == b.attack
    assert a.planner == b.planner


def test_zero_load_damping_rejected(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["loads"][0]["damping"] = 0.0
    with pytest.raises(CaseError, match=r"loads\[0\].damping.*positive"):
        load_case(doc)


def test_nonpositive_inertia_rejected(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["generators"][1]["inertia"] = -1.0
    with pytest.raises(CaseError, match=r"generators\[1\].inertia"):
        load_case(doc)


def test_line_to_undeclared_bus_rejected(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["lines"].append([1, 99, 0.1])
    with pytest.raises(CaseError, match="99 not declared"):
        load_case(doc)


def test_compromised_bus_must_be_load(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["attack"]["compromised"][0]["bus"] = 4
    with pytest.raises(CaseError, match="not a load bus"):
        load_case(doc)


def test_sensor_must_be_generator(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["ibr"][0]["sensor"] = 1
    with pytest.raises(CaseError, match="not a generator bus"):
        load_case(doc)


def test_missing_travel_entry_rejected(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    del doc["crews"]["crews"][0]["travel_times"]["st"]["1"]
    with pytest.raises(CaseError, match="travel_times.st.1"):
        load_case(doc)


def test_priority_separation_enforced(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    doc["planner"]["recovery_weights"] = {"1": 0.05, "2": 0.05, "3": 0.05}
    with pytest.raises(CaseError, match="below 1"):
        load_case(doc)


def test_invalid_json_reports_root_path():
    with pytest.raises(CaseError, match="not valid JSON"):
        load_case("{not json")


def test_attack_gain_bound_formula(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    del doc["attack"]["compromised"][0]["gain_bound"]
    doc["loads"][0]["max_vulnerable_load"] = 0.84
    doc["attack"]["omega_max"] = 2 / 50
    case = load_case(doc)
    assert attack_gain_bounds(case)[1] == pytest.approx(10.5)


def test_attack_gain_bound_zero_load(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    del doc["attack"]["compromised"][0]["gain_bound"]
    doc["loads"][0]["max_vulnerable_load"] = 0.0
    case = load_case(doc)
    assert attack_gain_bounds(case)[1] == 0.0


def test_fixture_overrides_accepted_verbatim(case39):
    assert attack_gain_bounds(case39) == {1: 11, 9: 9, 19: 14, 20: 10, 28: 12, 29: 9}


def test_droop_bound_formula(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    ib = doc["ibr"][0]
    del ib["gain_range"]
    ib.update(power_reference=0.8, power_cap=1.4, power_margin=0.2)
    doc["attack"]["omega_max"] = 0.04
    case = load_case(doc)
    lo, hi = droop_gain_bounds(case)[ib["bus"]]
    assert (lo, hi) == pytest.approx((0.0, 15.0))


def test_droop_bound_cap_equals_reference(mini3_doc):
    doc = copy.deepcopy(mini3_doc)
    ib = doc["ibr"][0]
    del ib["gain_range"]
    ib.update(power_reference=0.8, power_cap=0.8, power_margin=0.0)
    case = load_case(doc)
    assert droop_gain_bounds(case)[ib["bus"]][1] == 0.0


def test_fixture_droop_override(case39):
    assert droop_gain_bounds(case39) == {8: (0.0, 15.0), 29: (0.0, 15.0)}


@given(plv=st.floats(0.0, 10.0), omega=st.floats(0.001, 1.0))
def test_attack_bound_arithmetic_property(plv, omega):
    doc = json.loads(IEEE39.read_text())
    doc["attack"]["omega_max"] = omega
    doc["loads"][0]["max_vulnerable_load"] = plv
    del doc["attack"]["compromised"][0]["gain_bound"]
    case = load_case(doc)
    assert attack_gain_bounds(case)[1] == pytest.approx(0.5 * plv / omega)
