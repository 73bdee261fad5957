"""Parameter sweeps with paired trials and CSV/JSON emission.

One sweep runs every requested scheme on the identical seeded scenario for
each (grid value, trial) cell, so scheme comparisons are paired.  Scenario
seeds derive from the master seed and the trial index only; sweeps over
power, rate threshold, or region size therefore reuse the same channel draws
across the grid.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .scenarios import ScenarioParams, generate_scenario, perturb_fri
from .schemes import RunResult, SchemeSpec, run_scheme
from .solver import SolverConfig

SWEEP_PARAMS = ("P_t_dbm", "N", "L", "A_I", "Gamma", "mu", "nu")

CSV_COLUMNS = ("sweep_param", "sweep_value", "trial", "scheme", "sum_rate_bpshz",
               "min_user_rate", "max_constraint_violation", "feasible",
               "outer_iters", "inner_iters_total", "final_rho", "wall_ms", "seed")


@dataclass(frozen=True)
class SweepConfig:
    param: str
    grid: tuple
    trials: int = 1
    schemes: tuple = ()
    base: ScenarioParams = ScenarioParams()
    solver: SolverConfig = SolverConfig()
    seed: int = 0
    mu: float = 0.0   # baseline angle error when not the swept parameter
    nu: float = 0.0   # baseline response error when not the swept parameter

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ValueError(f"unknown sweep parameter '{self.param}'; "
                             f"known: {', '.join(SWEEP_PARAMS)}")
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.schemes) == 0:
            raise ValueError("at least one scheme is required")


def trial_seed(master_seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1)[0])


def apply_sweep_value(base: ScenarioParams, param: str, value, mu: float, nu: float):
    """Resolve one grid value into scenario params plus error magnitudes."""
    if param == "P_t_dbm":
        return replace(base, P_t_dbm=float(value)), mu, nu
    if param == "N":
        return replace(base, N=int(value)), mu, nu
    if param == "L":
        return replace(base, L=int(value)), mu, nu
    if param == "A_I":
        return replace(base, A_I=float(value)), mu, nu
    if param == "Gamma":
        return replace(base, Gamma=float(value)), mu, nu
    if param == "mu":
        return base, float(value), nu
    if param == "nu":
        return base, mu, float(value)
    raise ValueError(f"unknown sweep parameter '{param}'")


def run_single(params: ScenarioParams, spec: SchemeSpec, cfg: SolverConfig,
               seed: int, mu: float = 0.0, nu: float = 0.0) -> RunResult:
    """One seeded scenario, one scheme; optionally with an estimated field response."""
    scen = generate_scenario(seed, params)
    if mu > 0 or nu > 0:
        est_fri = perturb_fri(scen.fri, mu, nu, trial_seed(seed, 104729))
        est_scen = replace(scen, fri=est_fri)
        return run_scheme(est_scen, spec, cfg, true_fri=scen.fri)
    return run_scheme(scen, spec, cfg)


@dataclass
class SweepTable:
    config: SweepConfig
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def aggregates(self):
        """Mean and standard error of the sum-rate per (value, scheme) cell."""
        cells = {}
        for row in self.rows:
            key = (row["sweep_value"], row["scheme"])
            cells.setdefault(key, []).append(row["sum_rate_bpshz"])
        out = {}
        for key, vals in cells.items():
            arr = np.asarray(vals, float)
            arr = arr[np.isfinite(arr)]
            if arr.size == 0:
                out[key] = (np.nan, np.nan)
                continue
            stderr = arr.std(ddof=1) / np.sqrt(arr.size) if arr.size > 1 else 0.0
            out[key] = (float(arr.mean()), float(stderr))
        return out


def _result_row(param: str, value, trial: int, result: RunResult, seed: int) -> dict:
    return {
        "sweep_param": param,
        "sweep_value": value,
        "trial": trial,
        "scheme": result.scheme,
        "sum_rate_bpshz": result.sum_rate,
        "min_user_rate": result.min_rate,
        "max_constraint_violation": result.max_h,
        "feasible": bool(result.feasible),
        "outer_iters": result.outer_iters,
        "inner_iters_total": result.inner_iters_total,
        "final_rho": result.final_rho,
        "wall_ms": result.wall_ms,
        "seed": seed,
    }


def _error_row(param: str, value, trial: int, spec: SchemeSpec, seed: int) -> dict:
    return {
        "sweep_param": param,
        "sweep_value": value,
        "trial": trial,
        "scheme": spec.label,
        "sum_rate_bpshz": float("nan"),
        "min_user_rate": float("nan"),
        "max_constraint_violation": float("nan"),
        "feasible": False,
        "outer_iters": 0,
        "inner_iters_total": 0,
        "final_rho": float("nan"),
        "wall_ms": float("nan"),
        "seed": seed,
    }


def run_sweep(cfg: SweepConfig, progress=None) -> SweepTable:
    """Run the full grid; per-cell failures are recorded and the sweep continues."""
    table = SweepTable(config=cfg)
    for value in cfg.grid:
        params, mu, nu = apply_sweep_value(cfg.base, cfg.param, value, cfg.mu, cfg.nu)
        for trial in range(cfg.trials):
            seed = trial_seed(cfg.seed, trial)
            for spec in cfg.schemes:
                try:
                    result = run_single(params, spec, cfg.solver, seed, mu, nu)
                    row = _result_row(cfg.param, value, trial, result, seed)
                except Exception as exc:  # noqa: BLE001 - sweep must survive bad cells
                    row = _error_row(cfg.param, value, trial, spec, seed)
                    table.errors.append(
                        {"sweep_value": value, "trial": trial,
                         "scheme": spec.label, "error": repr(exc)})
                table.rows.append(row)
                if progress is not None:
                    progress(row)
    table.rows.sort(key=lambda r: (str(r["sweep_value"]), r["trial"], r["scheme"]))
    return table


def csv_bytes(table: SweepTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.rows:
        writer.writerow([row[c] for c in CSV_COLUMNS])
    return buf.getvalue().encode()


def write_csv(table: SweepTable, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(csv_bytes(table))


def rows_as_json(table: SweepTable) -> str:
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return None
        return v
    payload = [{c: clean(row[c]) for c in CSV_COLUMNS} for row in table.rows]
    return json.dumps(payload, indent=2)


def write_json(table: SweepTable, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(rows_as_json(table))
