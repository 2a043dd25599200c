"""Command-line surface for the recovery planning toolkit.

Exit codes: 2 invalid input, 3 infeasible, 4 enumeration budget exceeded,
5 solver backend failure.  Solver timings and other machine-dependent
values go to the run manifest, keeping the plan artifacts byte-stable.
"""

from __future__ import annotations

import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from . import cache as cache_mod
from .adversary import all_worst_case_gains, worst_case_gains
from .case import CaseError, load_case
from .milp import MilpModel, ModelError, export_lp, get_backend
from .oracle import BudgetExceeded, oracle_optimum, simulate_case
from .planner import (PlanInfeasible, emit_dgas, emit_rcr, plan_report,
                      prepare, solve_decoupled, solve_joint, _objective_rows)
from .sampling import generate_sensitivity_tables

EXIT_PARSE, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_BACKEND = 2, 3, 4, 5

log = logging.getLogger(__name__)


@dataclass
class RunManifest:
    case_hash: str
    command: str
    parameters: dict
    artifacts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def write(self, path):
        Path(path).write_text(json.dumps({
            "case_hash": self.case_hash, "command": self.command,
            "parameters": self.parameters, "artifacts": self.artifacts,
            "timings": self.timings}, indent=1, sort_keys=True))


def _fail(code, msg):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load_case_or_exit(case_path):
    try:
        return load_case(case_path)
    except (CaseError, OSError, ValueError) as e:
        _fail(EXIT_PARSE, e)


def _cached_prepare(case, case_path, cache_dir, rebuild, n=None, threshold=None,
                    manifest=None):
    """Worst-case gains and sensitivity table, via the content-addressed cache."""
    h = cache_mod.case_hash(case_path)
    cache_dir = Path(cache_dir) if cache_dir else cache_mod.default_cache_dir(case_path)
    n = n or case.planner.sampling_points
    threshold = case.planner.estimation_threshold if threshold is None else threshold

    gp = cache_mod.gains_path(cache_dir, h)
    worst = None if rebuild else cache_mod.load_worst_gains(gp, h)
    t0 = time.perf_counter()
    if worst is None:
        worst = all_worst_case_gains(case)
        cache_mod.save_worst_gains(gp, h, worst)
    gains_time = time.perf_counter() - t0

    tp = cache_mod.table_path(cache_dir, h, n, threshold)
    table = None if rebuild else cache_mod.load_table(tp, h, case)
    t0 = time.perf_counter()
    if table is None:
        table = generate_sensitivity_tables(
            case, {m: w.gains for m, w in worst.items()}, n, threshold)
        cache_mod.save_table(tp, h, table)
    table_time = time.perf_counter() - t0

    if manifest is not None:
        manifest.case_hash = h
        manifest.artifacts += [str(gp), str(tp)]
        manifest.timings.update(attack_gains_s=round(gains_time, 3),
                                tables_s=round(table_time, 3))
    return table, worst, h


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="debug logging")
def main(verbose):
    """Cyber-recovery planning for load-altering attacks on power grids."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _common(f):
    f = click.argument("case_path", type=click.Path(exists=True, dir_okay=False))(f)
    f = click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
                     help="artifact cache directory")(f)
    f = click.option("--rebuild", is_flag=True, help="ignore cached artifacts")(f)
    return f


def _solve_and_write(case_path, cache_dir, rebuild, out, method):
    case = _load_case_or_exit(case_path)
    manifest = RunManifest("", method, {
        "n": case.planner.sampling_points,
        "threshold": case.planner.estimation_threshold,
        "big_m": case.planner.big_m, "epsilon": case.planner.epsilon,
        "stability_margin": case.planner.stability_margin,
        "time_limit": case.planner.solver_time_limit,
    })
    table, worst, h = _cached_prepare(case, case_path, cache_dir, rebuild,
                                      manifest=manifest)
    solver = solve_joint if method == "plan" else solve_decoupled
    t0 = time.perf_counter()
    try:
        plan = solver(case, table, worst)
    except PlanInfeasible as e:
        _fail(EXIT_INFEASIBLE, e)
    except ModelError as e:
        _fail(EXIT_BACKEND, e)
    manifest.timings["solve_s"] = round(time.perf_counter() - t0, 3)

    out = Path(out) if out else Path(case_path).with_suffix("") \
        .with_name(Path(case_path).stem + f"-{plan.method}")
    json_path, csv_path = Path(f"{out}.json"), Path(f"{out}.csv")
    json_path.write_text(plan.to_json())
    csv_path.write_text(plan.to_csv())
    manifest.artifacts += [str(json_path), str(csv_path)]
    manifest.write(f"{out}-manifest.json")
    return case, table, worst, plan, out


@main.command()
@_common
@click.option("--out", default=None, help="output path prefix")
def plan(case_path, cache_dir, rebuild, out):
    """Solve the joint routing + gain wind-down plan."""
    case, _, _, result, out = _solve_and_write(case_path, cache_dir, rebuild,
                                               out, "plan")
    rep = plan_report(result, case)
    click.echo(json.dumps(rep, indent=1, sort_keys=True))
    click.echo(f"wrote {out}.json / {out}.csv")


@main.command()
@_common
@click.option("--out", default=None, help="output path prefix")
def benchmark(case_path, cache_dir, rebuild, out):
    """Solve the decoupled benchmark and report savings of the joint plan."""
    case, table, worst, dec, out = _solve_and_write(case_path, cache_dir,
                                                    rebuild, out, "benchmark")
    try:
        joint = solve_joint(case, table, worst)
    except PlanInfeasible as e:
        _fail(EXIT_INFEASIBLE, e)
    rep = plan_report(joint, case, reference=dec)
    click.echo(json.dumps(rep, indent=1, sort_keys=True))
    click.echo(f"wrote {out}.json / {out}.csv")


@main.command("attack-gains")
@_common
@click.option("--scenario", type=int, default=None,
              help="single scenario index (default: all)")
def attack_gains(case_path, cache_dir, rebuild, scenario):
    """Worst-case attack gains per availability scenario."""
    case = _load_case_or_exit(case_path)
    if scenario is not None:
        n = len(case.attack.buses)
        if not 0 <= scenario < (1 << n):
            _fail(EXIT_PARSE, f"scenario {scenario} out of range for {n} buses")
        w = worst_case_gains(case, scenario)
        click.echo(json.dumps({"scenario": scenario, "gains": w.gains,
                               "abscissa": w.abscissa}, sort_keys=True))
        return
    h = cache_mod.case_hash(case_path)
    cache_dir = Path(cache_dir) if cache_dir else cache_mod.default_cache_dir(case_path)
    gp = cache_mod.gains_path(cache_dir, h)
    worst = None if rebuild else cache_mod.load_worst_gains(gp, h)
    if worst is None:
        worst = all_worst_case_gains(case)
        cache_mod.save_worst_gains(gp, h, worst)
    unstable = sum(1 for w in worst.values() if w.abscissa > 0)
    click.echo(f"cached {len(worst)} scenarios at {gp} "
               f"({unstable} unstable without droop support)")


@main.command()
@_common
@click.option("--n", type=int, default=None, help="sampling points per IBR")
@click.option("--threshold", type=float, default=None, help="refresh threshold")
def tables(case_path, cache_dir, rebuild, n, threshold):
    """Generate (or load) the eigenvalue sensitivity table."""
    case = _load_case_or_exit(case_path)
    manifest = RunManifest("", "tables", {"n": n, "threshold": threshold})
    table, _, h = _cached_prepare(case, case_path, cache_dir, rebuild,
                                  n=n, threshold=threshold, manifest=manifest)
    click.echo(f"{len(table.scenarios)}-scenario table, N={table.n_points}, "
               f"{len(table.records)} entries, max refresh {table.max_refresh()}, "
               f"max estimation error {table.max_est_error:.4f} "
               f"(threshold {table.threshold:g})")


@main.command()
@_common
@click.option("--gains", "gains_file", type=click.Path(exists=True), required=True,
              help='JSON {"attack": {bus: gain}, "droop": {bus: gain}}')
@click.option("--horizon", type=float, default=30.0, help="simulation length, s")
@click.option("--step", type=float, default=0.01, help="integration step, s")
@click.option("--out", default=None, help="trajectory CSV path")
def simulate(case_path, cache_dir, rebuild, gains_file, horizon, step, out):
    """Integrate the closed-loop dynamics under fixed gains."""
    case = _load_case_or_exit(case_path)
    try:
        spec = json.loads(Path(gains_file).read_text())
        attack = {int(b): float(g) for b, g in spec.get("attack", {}).items()}
        droop = {int(b): float(g) for b, g in spec.get("droop", {}).items()}
    except (ValueError, AttributeError) as e:
        _fail(EXIT_PARSE, f"bad gains file: {e}")
    traj = simulate_case(case, attack, droop, horizon=horizon, step=step)
    out = Path(out) if out else Path(case_path).with_name(
        Path(case_path).stem + "-trajectory.csv")
    out.write_text(traj.to_csv())
    click.echo(f"simulated {traj.times[-1]:.2f}s: "
               f"{'DIVERGED' if traj.diverged else 'bounded'}, "
               f"max |omega| {traj.max_omega:.5f}; wrote {out}")


@main.command("oracle-check")
@_common
@click.option("--tol", type=float, default=1e-6)
def oracle_check(case_path, cache_dir, rebuild, tol):
    """Compare the MILP optimum against exhaustive enumeration."""
    case = _load_case_or_exit(case_path)
    manifest = RunManifest("", "oracle-check", {"tol": tol})
    table, worst, h = _cached_prepare(case, case_path, cache_dir, rebuild,
                                      manifest=manifest)
    try:
        milp_plan = solve_joint(case, table, worst)
        best = oracle_optimum(case, table, worst)
    except BudgetExceeded as e:
        _fail(EXIT_BUDGET, e)
    except PlanInfeasible as e:
        _fail(EXIT_INFEASIBLE, e)
    if best["objective"] is None:
        _fail(EXIT_INFEASIBLE, "oracle found no feasible plan")
    gap = abs(best["objective"] - milp_plan.objective)
    verdict = "MATCH" if gap <= tol else "MISMATCH"
    click.echo(f"{verdict}: milp={milp_plan.objective:.9f} "
               f"oracle={best['objective']:.9f} gap={gap:.2e}")
    if verdict == "MISMATCH":
        sys.exit(1)


@main.command("export-lp")
@_common
@click.option("--stage", type=click.Choice(["joint", "benchmark"]), default="joint")
@click.option("--out", default=None, help="LP file path (default: stdout)")
def export_lp_cmd(case_path, cache_dir, rebuild, stage, out):
    """Emit the MILP in LP format for external solvers."""
    case = _load_case_or_exit(case_path)
    model = MilpModel(stage)
    if stage == "joint":
        table, worst, _ = _cached_prepare(case, case_path, cache_dir, rebuild)
        rcr = emit_rcr(model, case)
        dgas = emit_dgas(model, case, table, rcr.z)
        model.set_objective(_objective_rows(case, rcr, dgas))
    else:
        rcr = emit_rcr(model, case)
        model.set_objective({v: -case.planner.recovery_weights.get(b, 0.01)
                             for (b, t), v in rcr.z.items()})
    text = export_lp(model)
    if out:
        Path(out).write_text(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
