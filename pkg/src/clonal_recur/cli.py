"""``clonal-recur``: batch front-end for simulation, analytics and estimation.

Every subcommand is a pure function of its resolved configuration and master
seed.  Data outputs and ``manifest.json`` are byte-stable across reruns and
``--threads`` values; wall-clock runtime and backend go to ``timing.json``.

Exit codes: 0 success, 1 configuration error, 2 numeric or simulation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Any, Optional

from . import BASE_PARAMS, FIG1_PARAMS, __version__, analytics
from .inference import (
    InadmissibleSampleError,
    Observation,
    bootstrap_observations_ci,
    estimate,
    estimation_experiment,
)
from .model import ModelParams, ParameterError, validate
from .numerics import NumericalError, Tolerances
from .simulate import (
    EarlyRecurrence,
    SimulationError,
    StopRule,
    clones_born_before,
    run_ensemble,
    write_clones_csv,
    write_runs_csv,
)
from .simulate.core import cached_zeta
from .simulate.kernel import BACKEND

log = logging.getLogger("clonal_recur")

TOP_KEYS = {"params", "master_seed", "output_dir", "tolerances",
            "simulate", "analyze", "estimate", "table1", "fig1", "fig2"}
BLOCK_KEYS = {
    "simulate": {"replicates", "stop", "condition", "max_attempts", "clone_csv", "windows"},
    "analyze": {"y", "windows"},
    "estimate": {"observations", "n", "resamples", "level"},
    "table1": {"M", "num_estimates", "resamples", "level", "noiseless"},
    "fig1": {"replicates", "y", "max_attempts"},
    "fig2": {"y", "windows"},
}


class ConfigError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


# ---------------------------------------------------------------- config


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(str(path), f"cannot read config: {err}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}", err.msg) from None
    if not isinstance(cfg, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    unknown = sorted(set(cfg) - TOP_KEYS)
    if unknown:
        raise ConfigError(str(path), f"unknown top-level key(s): {', '.join(unknown)}")
    for block, keys in BLOCK_KEYS.items():
        if block in cfg:
            if not isinstance(cfg[block], dict):
                raise ConfigError(block, "must be a JSON object")
            bad = sorted(set(cfg[block]) - keys)
            if bad:
                raise ConfigError(block, f"unknown key(s): {', '.join(bad)}")
    return cfg


def _params(cfg: dict, default: Optional[ModelParams] = None) -> ModelParams:
    if "params" not in cfg:
        if default is None:
            raise ConfigError("params", "missing")
        return default
    try:
        base = default.to_dict() if default is not None else {}
        base.update(cfg["params"])
        return validate(ModelParams.from_dict(base))
    except ParameterError as err:
        raise ConfigError("params", str(err)) from None
    except TypeError as err:
        raise ConfigError("params", str(err)) from None


def _tolerances(cfg: dict) -> Tolerances:
    try:
        return Tolerances(**cfg.get("tolerances", {}))
    except (TypeError, ValueError) as err:
        raise ConfigError("tolerances", str(err)) from None


def _seed(cfg: dict, override: Optional[int]) -> int:
    seed = override if override is not None else cfg.get("master_seed")
    if seed is None:
        raise ConfigError("master_seed", "missing (set it in the config or pass --seed)")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("master_seed", f"must be a nonnegative integer, got {seed!r}")
    return seed


def _int(block: dict, key: str, where: str, default=None, minimum: int = 0) -> int:
    v = block.get(key, default)
    if v is None:
        raise ConfigError(f"{where}.{key}", "missing")
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise ConfigError(f"{where}.{key}", f"must be an integer >= {minimum}, got {v!r}")
    return v


def _float(block: dict, key: str, where: str, default=None) -> float:
    v = block.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{where}.{key}", f"must be a number, got {v!r}")
    return float(v)


def _windows(block: dict, where: str) -> list:
    out = []
    for i, w in enumerate(block.get("windows", [])):
        if not (isinstance(w, list) and len(w) == 2 and all(isinstance(x, (int, float)) for x in w)):
            raise ConfigError(f"{where}.windows[{i}]", "must be a pair [t1, t2]")
        if not 0 <= w[0] < w[1]:
            raise ConfigError(f"{where}.windows[{i}]", "need 0 <= t1 < t2")
        out.append((float(w[0]), float(w[1])))
    return out


def _y_grid(block: dict, where: str) -> list:
    spec = block.get("y", [0.0])
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [float(spec)]
    if isinstance(spec, list):
        if not all(isinstance(v, (int, float)) and v >= 0 for v in spec):
            raise ConfigError(f"{where}.y", "values must be nonnegative numbers")
        return [float(v) for v in spec]
    if isinstance(spec, dict):
        start = _float(spec, "start", f"{where}.y", 0.0)
        stop = _float(spec, "stop", f"{where}.y")
        step = _float(spec, "step", f"{where}.y")
        if step <= 0 or stop < start or start < 0:
            raise ConfigError(f"{where}.y", "need 0 <= start <= stop and step > 0")
        count = int(round((stop - start) / step))
        return [round(start + k * step, 12) for k in range(count + 1)]
    raise ConfigError(f"{where}.y", "must be a number, a list or {start, stop, step}")


def _stop_rule(block: dict) -> StopRule:
    spec = block.get("stop", {"kind": "recurrence"})
    if not isinstance(spec, dict) or set(spec) - {"kind", "t"}:
        raise ConfigError("simulate.stop", "must be an object with keys 'kind' and optional 't'")
    try:
        return StopRule(spec.get("kind", "recurrence"), spec.get("t"))
    except (ValueError, TypeError) as err:
        raise ConfigError("simulate.stop", str(err)) from None


# ---------------------------------------------------------------- output


def _dump_json(obj: Any, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(out: Path, command: str, resolved: dict, extra: Optional[dict] = None) -> None:
    doc = {"artifact": "clonal-recur", "version": __version__, "command": command, "config": resolved}
    doc.update(extra or {})
    _dump_json(doc, out / "manifest.json")


def _timing(out: Path, started: float, threads: int) -> None:
    _dump_json({"wall_clock_seconds": round(time.perf_counter() - started, 3), "threads": threads,
                "backend": BACKEND}, out / "timing.json")


def _write_histogram(counts, path: Path) -> None:
    c = Counter(int(v) for v in counts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["num_clones", "count"])
        for k in sorted(c):
            w.writerow([k, c[k]])


# ---------------------------------------------------------------- commands


def cmd_simulate(cfg: dict, out: Path, seed: int, threads: int) -> dict:
    params = _params(cfg)
    block = cfg.get("simulate", {})
    replicates = _int(block, "replicates", "simulate")
    stop = _stop_rule(block)
    cond = block.get("condition")
    condition = None
    if cond is not None:
        if not isinstance(cond, dict) or set(cond) != {"y"}:
            raise ConfigError("simulate.condition", "must be {\"y\": <positive number>}")
        condition = EarlyRecurrence(_float(cond, "y", "simulate.condition"))
    max_attempts = _int(block, "max_attempts", "simulate", 10_000_000, minimum=1)
    windows = _windows(block, "simulate")
    try:
        ens = run_ensemble(params, stop, replicates, seed, condition, max_attempts, threads)
    except ValueError as err:
        raise ConfigError("simulate", str(err)) from None
    write_runs_csv(ens, out / "runs.csv")
    if block.get("clone_csv", False):
        write_clones_csv(ens, out / "clones.csv")
    if windows:
        with open(out / "windows.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run_id", "t1", "t2", "clones_in_window", "mass_in_window"])
            for rid, o in zip(ens.run_ids, ens.outcomes):
                for t1, t2 in windows:
                    inside = (o.birth_times > t1) & (o.birth_times < t2)
                    w.writerow([rid, repr(t1), repr(t2), int(inside.sum()), int(o.sizes[inside].sum())])
    resolved = {"params": params.to_dict(), "master_seed": seed,
                "simulate": {"replicates": replicates, "stop": {"kind": stop.kind, "t": stop.t},
                             "condition": None if condition is None else {"y": condition.y},
                             "max_attempts": max_attempts, "clone_csv": bool(block.get("clone_csv", False)),
                             "windows": [list(w) for w in windows]}}
    _manifest(out, "simulate", resolved, {
        "accepted": ens.accepted, "attempted": ens.attempted,
        "acceptance_rate": ens.acceptance_rate, "censored": ens.censored, "exhausted": ens.exhausted,
    })
    return {"accepted": ens.accepted, "attempted": ens.attempted}


def _analyze(params: ModelParams, ys: list, windows: list, tol: Tolerances, out: Path,
             curve_name: str, command: str, seed: Optional[int]) -> dict:
    reports = []
    for y in ys:
        reports.append(analytics.analytic_report(params, y, windows, tol).to_dict())
    _dump_json({"params": params.to_dict(), "reports": reports}, out / "report.json")
    with open(out / curve_name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "simpson_cond_limit", "clones_cond_limit", "theta_star", "ld_rate"])
        for r in reports:
            w.writerow([repr(r["y"]), repr(r["simpson_cond_limit"]), repr(r["clones_cond_limit"]),
                        repr(r["theta_star"]), repr(r["ld_rate"])])
    resolved = {"params": params.to_dict(), "master_seed": seed, "tolerances": tol.__dict__,
                command: {"y": ys, "windows": [list(w) for w in windows]}}
    _manifest(out, command, resolved)
    return {"rows": len(reports)}


def cmd_analyze(cfg: dict, out: Path, seed: Optional[int], threads: int) -> dict:
    block = cfg.get("analyze", {})
    return _analyze(_params(cfg), _y_grid(block, "analyze"), _windows(block, "analyze"),
                    _tolerances(cfg), out, "curve.csv", "analyze", seed)


def cmd_fig2(cfg: dict, out: Path, seed: Optional[int], threads: int) -> dict:
    block = dict(cfg.get("fig2", {}))
    block.setdefault("y", {"start": 0.0, "stop": 3.0, "step": 0.05})
    return _analyze(_params(cfg, BASE_PARAMS), _y_grid(block, "fig2"), _windows(block, "fig2"),
                    _tolerances(cfg), out, "fig2_curve.csv", "fig2", seed)


def read_observations(path: str | Path) -> list:
    obs = []
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise ConfigError("estimate.observations", f"cannot read {path}: {err}") from None
    with fh:
        reader = csv.DictReader(fh)
        need = {"clone_count", "simpson", "gamma"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ConfigError(str(path), f"CSV needs columns {sorted(need)}")
        for line, row in enumerate(reader, start=2):
            try:
                obs.append(Observation(float(row["clone_count"]), float(row["simpson"]), float(row["gamma"])))
            except ValueError as err:
                raise ConfigError(f"{path}:{line}", str(err)) from None
    if not obs:
        raise ConfigError(str(path), "no observations")
    return obs


def cmd_estimate(cfg: dict, out: Path, seed: Optional[int], threads: int,
                 observations: Optional[str] = None) -> dict:
    block = cfg.get("estimate", {})
    path = observations or block.get("observations")
    if path is None:
        raise ConfigError("estimate.observations", "missing (config or --observations)")
    if "n" in block:
        n = _float(block, "n", "estimate")
    elif "params" in cfg:
        n = float(_params(cfg).n)
    else:
        raise ConfigError("estimate.n", "missing")
    obs = read_observations(path)
    resamples = _int(block, "resamples", "estimate", 100, minimum=1)
    level = _float(block, "level", "estimate", 0.95)
    if not 0 < level < 1:
        raise ConfigError("estimate.level", "must lie in (0, 1)")
    est = estimate(obs, n)
    ci, dropped = bootstrap_observations_ci(obs, n, resamples, level, 0 if seed is None else seed)
    doc = {
        "estimates": {"mu_eff": est.mu_eff, "lambda0": est.lambda0_hat, "lambda1": est.lambda1_hat},
        "ci": {k: list(v) for k, v in ci.items()},
        "ci_method": "percentile bootstrap over observations",
        "inadmissible_resamples": dropped,
        "level": level, "n": n, "M": len(obs),
    }
    _dump_json(doc, out / "estimate.json")
    return doc


def cmd_table1(cfg: dict, out: Path, seed: int, threads: int) -> dict:
    default = BASE_PARAMS.replace(n=100_000)
    params = _params(cfg, default)
    block = cfg.get("table1", {})
    M = _int(block, "M", "table1", 100, minimum=1)
    num = _int(block, "num_estimates", "table1", 100, minimum=1)
    resamples = _int(block, "resamples", "table1", 100, minimum=1)
    level = _float(block, "level", "table1", 0.95)
    noiseless = bool(block.get("noiseless", False))
    table = estimation_experiment(params, M, num, seed, resamples, level, threads, noiseless)
    (out / "table1.txt").write_text(table.format())
    _dump_json(table.to_dict(), out / "table1.json")
    _manifest(out, "table1", {"params": params.to_dict(), "master_seed": seed,
                              "table1": {"M": M, "num_estimates": num, "resamples": resamples,
                                         "level": level, "noiseless": noiseless}})
    return table.to_dict()


def cmd_fig1(cfg: dict, out: Path, seed: int, threads: int) -> dict:
    params = _params(cfg, FIG1_PARAMS)
    block = cfg.get("fig1", {})
    replicates = _int(block, "replicates", "fig1", 10_000)
    y = _float(block, "y", "fig1", 1.0)
    max_attempts = _int(block, "max_attempts", "fig1", 10_000_000, minimum=1)
    uncond = run_ensemble(params, StopRule.recurrence(), replicates, seed, threads=threads)
    deadline = cached_zeta(params) - y
    # run on to the deadline so both I(gamma) and I(zeta - y) are observed
    cond = run_ensemble(params, StopRule.fixed(deadline), replicates, seed,
                        EarlyRecurrence(y), max_attempts, threads)
    _write_histogram([clones_born_before(o, o.recurrence_time) for o in uncond if o.recurrence_time is not None],
                     out / "fig1_unconditional.csv")
    _write_histogram([clones_born_before(o, o.recurrence_time) for o in cond],
                     out / "fig1_conditional.csv")
    _write_histogram([o.num_clones for o in cond], out / "fig1_conditional_at_deadline.csv")
    _manifest(out, "fig1", {"params": params.to_dict(), "master_seed": seed,
                            "fig1": {"replicates": replicates, "y": y, "max_attempts": max_attempts}},
              {"acceptance_rate": cond.acceptance_rate, "attempted": cond.attempted,
               "censored_unconditional": uncond.censored, "exhausted": cond.exhausted})
    return {"acceptance_rate": cond.acceptance_rate}


COMMANDS = {
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "estimate": cmd_estimate,
    "table1": cmd_table1,
    "fig1": cmd_fig1,
    "fig2": cmd_fig2,
}
NEEDS_SEED = {"simulate", "table1", "fig1"}
PRESETS = {"fig1", "fig2", "table1"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clonal-recur", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name not in PRESETS, help="JSON experiment configuration")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir or .)")
        p.add_argument("--seed", type=int, default=None, help="master seed, overrides the config")
        p.add_argument("--threads", type=int, default=1, help="worker threads for simulation")
        if name == "estimate":
            p.add_argument("--observations", default=None, help="CSV with clone_count, simpson, gamma")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.command in PRESETS and args.seed is None and "master_seed" not in cfg:
            cfg["master_seed"] = 1
        seed = _seed(cfg, args.seed) if args.command in NEEDS_SEED else (
            args.seed if args.seed is not None else cfg.get("master_seed"))
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        out = Path(args.out or cfg.get("output_dir", "."))
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise ConfigError("--out", f"cannot create {out}: {err}") from None
        kwargs = {}
        if args.command == "estimate":
            kwargs["observations"] = args.observations
        COMMANDS[args.command](cfg, out, seed, args.threads, **kwargs)
        _timing(out, started, args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except (NumericalError, SimulationError, InadmissibleSampleError) as err:
        print(f"numeric failure: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
