"""CSV serialization of ensembles.

Floats are written with ``repr`` (shortest round-trip form) so files are
byte-stable; a missing recurrence time is an empty field.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .diversity import simpson_index
from .ensemble import Ensemble

RUN_COLUMNS = ("run_id", "seed", "gamma", "censored", "z1_final",
               "num_clones_generated", "num_clones_alive", "simpson")
CLONE_COLUMNS = ("run_id", "clone_id", "birth_time", "size")


def _f(x) -> str:
    return "" if x is None else repr(float(x))


def write_runs_csv(ensemble: Ensemble, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RUN_COLUMNS)
        for rid, o in zip(ensemble.run_ids, ensemble.outcomes):
            w.writerow([
                rid, ensemble.master_seed, _f(o.recurrence_time), int(o.censored), o.z1_final,
                o.num_clones, int((o.sizes > 0).sum()), _f(simpson_index(o.sizes)),
            ])


def write_clones_csv(ensemble: Ensemble, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CLONE_COLUMNS)
        for rid, o in zip(ensemble.run_ids, ensemble.outcomes):
            for cid, (b, s) in enumerate(zip(o.birth_times.tolist(), o.sizes.tolist())):
                w.writerow([rid, cid, repr(b), s])


def read_runs_csv(path: str | Path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "run_id": int(row["run_id"]),
                "seed": int(row["seed"]),
                "gamma": float(row["gamma"]) if row["gamma"] else None,
                "censored": bool(int(row["censored"])),
                "z1_final": int(row["z1_final"]),
                "num_clones_generated": int(row["num_clones_generated"]),
                "num_clones_alive": int(row["num_clones_alive"]),
                "simpson": float(row["simpson"]),
            })
    return rows
