"""Content-addressed caching of worst-case attack gains and sensitivity tables.

Artifacts are versioned JSON files keyed by a hash of the case document,
so a case edit invalidates them automatically.  Carried sensitivity
records are stored once and referenced by index to keep tables small.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .adversary import WorstCaseGains
from .case import GridCase
from .sampling import SegmentGrid, SensitivityTable, order_matrix, segment_grid
from .spectral import SensitivityRecord

CACHE_VERSION = 1


class CacheError(RuntimeError):
    pass


def case_hash(source) -> str:
    """Stable content hash of a case document (path, JSON text, or dict)."""
    if isinstance(source, (str, Path)) and os.path.exists(source):
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = source
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def default_cache_dir(case_path) -> Path:
    return Path(case_path).resolve().parent / ".gridrecover-cache"


def gains_path(cache_dir, h: str) -> Path:
    return Path(cache_dir) / f"{h[:16]}-gains.json"


def table_path(cache_dir, h: str, n: int, threshold: float) -> Path:
    return Path(cache_dir) / f"{h[:16]}-table-n{n}-th{threshold:g}.json"


def save_worst_gains(path, h: str, worst: dict[int, WorstCaseGains]):
    doc = {
        "version": CACHE_VERSION,
        "case_hash": h,
        "scenarios": {
            str(m): {"gains": {str(b): g for b, g in w.gains.items()},
                     "abscissa": w.abscissa, "converged": w.converged}
            for m, w in worst.items()
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True))


def load_worst_gains(path, h: str) -> dict[int, WorstCaseGains] | None:
    path = Path(path)
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    if doc.get("version") != CACHE_VERSION or doc.get("case_hash") != h:
        return None
    return {int(m): WorstCaseGains(int(m),
                                   {int(b): g for b, g in w["gains"].items()},
                                   w["abscissa"], w["converged"])
            for m, w in doc["scenarios"].items()}


def save_table(path, h: str, table: SensitivityTable):
    uniq: dict[int, int] = {}
    records = []
    index = {}
    for key, rec in table.records.items():
        rid = uniq.get(id(rec))
        if rid is None:
            rid = len(records)
            uniq[id(rec)] = rid
            records.append({
                "value": [rec.value.real, rec.value.imag],
                "gains": list(map(float, rec.gains)),
                "gradient": [[g.real, g.imag] for g in rec.gradient],
            })
        index[f"{key[0]},{key[1]},{key[2]}"] = rid
    doc = {
        "version": CACHE_VERSION,
        "case_hash": h,
        "n_points": table.n_points,
        "threshold": table.threshold,
        "scenarios": list(table.scenarios),
        "max_est_error": table.max_est_error,
        "refresh_counts": {f"{m},{n}": c for (m, n), c in table.refresh_counts.items()},
        "records": records,
        "index": index,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True))


def load_table(path, h: str, case: GridCase) -> SensitivityTable | None:
    path = Path(path)
    if not path.exists():
        return None
    doc = json.loads(path.read_text())
    if doc.get("version") != CACHE_VERSION or doc.get("case_hash") != h:
        return None
    grid: SegmentGrid = segment_grid(case, doc["n_points"])
    order = order_matrix(doc["n_points"], len(grid.buses))
    combo_gains = np.array([grid.gains(order[:, j]) for j in range(order.shape[1])])
    records = [SensitivityRecord(complex(*r["value"]),
                                 np.array(r["gains"], float),
                                 np.array([complex(a, b) for a, b in r["gradient"]]))
               for r in doc["records"]]
    table_records = {}
    for key, rid in doc["index"].items():
        m, n, j = (int(v) for v in key.split(","))
        table_records[(m, n, j)] = records[rid]
    refresh = {tuple(int(v) for v in key.split(",")): c
               for key, c in doc["refresh_counts"].items()}
    return SensitivityTable(doc["n_points"], doc["threshold"], order, grid,
                            combo_gains, table_records, refresh,
                            tuple(doc["scenarios"]), doc.get("max_est_error", 0.0))
