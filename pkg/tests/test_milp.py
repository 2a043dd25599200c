import math

import pytest

from gridrecover.milp import (BINARY, GE, LE, MilpModel, ModelError, export_lp,
                              get_backend, solve)


def test_empty_model():
    sol = solve(MilpModel())
    assert sol.status == "optimal"
    assert sol.objective == 0.0


def test_bounded_lp_maximize():
    m = MilpModel()
    x = m.add_variable("x", lower=0.0, upper=1.0)
    m.set_objective({x: -1.0})                   # maximize x by negating
    sol = solve(m)
    assert sol.status == "optimal"
    assert sol.value(x) == pytest.approx(1.0)
    assert sol.objective == pytest.approx(-1.0)


def test_knapsack():
    m = MilpModel("knapsack")
    values, weights = [6.0, 10.0, 12.0], [1.0, 2.0, 3.0]
    xs = [m.add_variable(f"x{i}", BINARY) for i in range(3)]
    m.add_constraint(dict(zip(xs, weights)), LE, 5.0, "capacity")
    m.set_objective({x: -v for x, v in zip(xs, values)})
    sol = solve(m)
    assert sol.status == "optimal"
    assert -sol.objective == pytest.approx(22.0)
    assert [round(sol.value(x)) for x in xs] == [0, 1, 1]


def test_infeasible_pair():
    m = MilpModel()
    x = m.add_variable("x")
    m.add_constraint({x: 1.0}, GE, 2.0)
    m.add_constraint({x: 1.0}, LE, 1.0)
    assert solve(m).status == "infeasible"


def test_duplicate_and_invalid_inputs():
    m = MilpModel()
    m.add_variable("x")
    with pytest.raises(ModelError, match="duplicate"):
        m.add_variable("x")
    x = m.add_variable("y")
    with pytest.raises(ModelError, match="non-finite"):
        m.add_constraint({x: math.nan}, LE, 1.0)
    with pytest.raises(ModelError, match="non-finite"):
        m.add_constraint({x: 1.0}, LE, math.inf)
    with pytest.raises(ModelError, match="sense"):
        m.add_constraint({x: 1.0}, "<", 1.0)
    with pytest.raises(ModelError, match="kind"):
        m.add_variable("z", kind="integer")


def test_export_lp_golden():
    m = MilpModel("knapsack")
    xs = [m.add_variable(f"x{i}", BINARY) for i in range(3)]
    y = m.add_variable("slack y", lower=-1.0, upper=4.0)
    m.add_constraint({xs[0]: 1.0, xs[1]: 2.0, xs[2]: 3.0, y: -1.0}, LE, 5.0,
                     "capacity")
    m.set_objective({xs[0]: -6.0, xs[1]: -10.0, xs[2]: -12.0})
    expected = "\n".join([
        "Minimize",
        " obj: - 6 x0 - 10 x1 - 12 x2",
        "Subject To",
        " capacity: 1 x0 + 2 x1 + 3 x2 - 1 slack_y <= 5",
        "Bounds",
        " -1 <= slack_y <= 4",
        "Binaries",
        " x0",
        " x1",
        " x2",
        "End",
    ]) + "\n"
    assert export_lp(m) == expected


def test_export_lp_sanitizes_leading_digit():
    m = MilpModel()
    m.add_variable("1bad")
    m.set_objective({})
    assert "v_1bad" in export_lp(m)


def test_check_solution_flags_violations():
    m = MilpModel()
    x = m.add_variable("x", BINARY)
    m.add_constraint({x: 1.0}, GE, 1.0, "force")
    assert m.check_solution([1.0]) == []
    assert "force" in m.check_solution([0.0])
    assert "integrality:x" in m.check_solution([0.5])
    assert "bounds:x" in m.check_solution([2.0])


def test_unknown_backend():
    with pytest.raises(ModelError, match="unknown backend"):
        get_backend("nope")
