import json
import time
from pathlib import Path

import pytest

from gridrecover import cache as cache_mod
from gridrecover.adversary import all_worst_case_gains
from gridrecover.case import load_case
from gridrecover.sampling import generate_sensitivity_tables

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
IEEE39 = FIXTURES / "ieee39.json"
MINI3 = FIXTURES / "mini3.json"
CACHE_DIR = FIXTURES / ".gridrecover-cache"


@pytest.fixture(scope="session")
def case39():
    return load_case(IEEE39)


@pytest.fixture(scope="session")
def mini3():
    return load_case(MINI3)


@pytest.fixture(scope="session")
def mini3_doc():
    return json.loads(MINI3.read_text())


def cached_prepare(case, case_path, n=None, threshold=None):
    """Session-level worst-gain/table artifacts, shared with the CLI cache."""
    h = cache_mod.case_hash(case_path)
    n = n or case.planner.sampling_points
    threshold = case.planner.estimation_threshold if threshold is None else threshold
    gp = cache_mod.gains_path(CACHE_DIR, h)
    worst = cache_mod.load_worst_gains(gp, h)
    if worst is None:
        worst = all_worst_case_gains(case)
        cache_mod.save_worst_gains(gp, h, worst)
    tp = cache_mod.table_path(CACHE_DIR, h, n, threshold)
    table = cache_mod.load_table(tp, h, case)
    if table is None:
        table = generate_sensitivity_tables(
            case, {m: w.gains for m, w in worst.items()}, n, threshold)
        cache_mod.save_table(tp, h, table)
    return table, worst


@pytest.fixture(scope="session")
def prep39(case39):
    return cached_prepare(case39, IEEE39)


@pytest.fixture(scope="session")
def prep_mini(mini3):
    return cached_prepare(mini3, MINI3)


@pytest.fixture(scope="session")
def joint39(case39, prep39):
    from gridrecover.planner import solve_joint
    table, worst = prep39
    t0 = time.perf_counter()
    plan = solve_joint(case39, table, worst)
    plan.wall_time = time.perf_counter() - t0
    return plan


@pytest.fixture(scope="session")
def decoupled39(case39, prep39):
    from gridrecover.planner import solve_decoupled
    table, worst = prep39
    return solve_decoupled(case39, table, worst)


@pytest.fixture(scope="session")
def joint_mini(mini3, prep_mini):
    from gridrecover.planner import solve_joint
    table, worst = prep_mini
    return solve_joint(mini3, table, worst)
