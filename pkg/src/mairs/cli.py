"""Command-line interface: single runs, sweeps, gradient checks, gain maps.

Every scenario and solver knob is a flag; ``--config`` points at a JSON file
holding the same keys, with flags taking precedence over the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from .gradcheck import finite_difference_gradient, max_relative_error
from .initializers import initialize_variables
from .landscape import gain_landscape, write_landscape
from .manifold import retract, zero_direction_like
from .objective import PenaltyState, constraint_set, riemannian_gradient
from .scenarios import ScenarioParams, generate_scenario
from .schemes import run_scheme, scheme
from .solver import SolverConfig, export_trace
from .sweep import (SweepConfig, run_single, run_sweep, write_csv, write_json)

SCENARIO_FIELDS = [f.name for f in dataclasses.fields(ScenarioParams)]
SOLVER_FIELDS = [f.name for f in dataclasses.fields(SolverConfig)]


def _add_scenario_flags(parser):
    group = parser.add_argument_group("scenario")
    group.add_argument("--m-bs", type=int, dest="M", help="BS antenna count")
    group.add_argument("--n-irs", type=int, dest="N", help="IRS element count")
    group.add_argument("--k-users", type=int, dest="K", help="user count")
    group.add_argument("--l-paths", type=int, dest="L", help="path count")
    group.add_argument("--pt-dbm", type=float, dest="P_t_dbm")
    group.add_argument("--noise-dbm", type=float, dest="sigma_n2_dbm")
    group.add_argument("--a-b", type=float, dest="A_B", help="BS region edge (wavelengths)")
    group.add_argument("--a-i", type=float, dest="A_I", help="IRS region edge (wavelengths)")
    group.add_argument("--gamma", type=float, dest="Gamma", help="min rate (bits/s/Hz)")
    group.add_argument("--carrier-hz", type=float, dest="carrier_hz")


def _add_solver_flags(parser):
    group = parser.add_argument_group("solver")
    group.add_argument("--memory", type=int, dest="memory_size")
    group.add_argument("--sigma-ls", type=float, dest="sigma_ls")
    group.add_argument("--gamma-ls", type=float, dest="gamma_ls")
    group.add_argument("--tau0", type=float, dest="tau0")
    group.add_argument("--max-inner", type=int, dest="max_inner_iters")
    group.add_argument("--max-outer", type=int, dest="max_outer_iters")
    group.add_argument("--rho0", type=float, dest="rho0")
    group.add_argument("--theta-rho", type=float, dest="theta_rho")
    group.add_argument("--u0", type=float, dest="u0")
    group.add_argument("--theta-u", type=float, dest="theta_u")
    group.add_argument("--u-min", type=float, dest="u_min")
    group.add_argument("--eps0", type=float, dest="eps0")
    group.add_argument("--theta-eps", type=float, dest="theta_eps")
    group.add_argument("--eps-min", type=float, dest="eps_min")
    group.add_argument("--tau-outer", type=float, dest="tau_outer")


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _build(cls, fields, file_cfg, args):
    """Dataclass from file values overridden by explicitly set flags."""
    values = {k: v for k, v in file_cfg.items() if k in fields}
    for name in fields:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return cls(**values)


def _scenario_params(args, file_cfg) -> ScenarioParams:
    return _build(ScenarioParams, SCENARIO_FIELDS, file_cfg.get("scenario", {}), args)


def _solver_config(args, file_cfg) -> SolverConfig:
    return _build(SolverConfig, SOLVER_FIELDS, file_cfg.get("solver", {}), args)


def _parse_schemes(text, kappa=None):
    specs = []
    for name in text.split(","):
        name = name.strip()
        if name.endswith("+dps"):
            specs.append(scheme(name[:-4], discrete_kappa=kappa or 16))
        else:
            specs.append(scheme(name))
    return tuple(specs)


def cmd_single(args):
    file_cfg = _load_config(args.config)
    params = _scenario_params(args, file_cfg)
    cfg = _solver_config(args, file_cfg)
    spec = scheme(args.scheme, discrete_kappa=args.kappa)
    result = run_single(params, spec, cfg, args.seed, mu=args.angle_err,
                        nu=args.frm_err)
    payload = {
        "scheme": result.scheme,
        "seed": args.seed,
        "sum_rate_bpshz": result.sum_rate,
        "per_user_rates": [float(r) for r in result.rates],
        "min_user_rate": result.min_rate,
        "max_constraint_violation": result.max_h,
        "feasible": result.feasible,
        "status": result.status,
        "outer_iters": result.outer_iters,
        "inner_iters_total": result.inner_iters_total,
        "final_rho": result.final_rho,
        "wall_ms": result.wall_ms,
        "bs_positions_m": [float(v) for v in result.t],
        "irs_positions_m": [[float(a), float(b)] for a, b in result.u],
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text)
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(export_trace(result.solve.history), fh, indent=2)
    return 0


def cmd_sweep(args):
    file_cfg = _load_config(args.config)
    params = _scenario_params(args, file_cfg)
    solver = _solver_config(args, file_cfg)
    sweep_cfg = file_cfg.get("sweep", {})
    grid_text = args.grid or sweep_cfg.get("grid")
    if grid_text is None:
        print("error: a sweep grid is required", file=sys.stderr)
        return 2
    if isinstance(grid_text, str):
        grid = tuple(float(v) for v in grid_text.split(","))
    else:
        grid = tuple(float(v) for v in grid_text)
    schemes_text = args.schemes or sweep_cfg.get("schemes", "proposed-OPS")
    cfg = SweepConfig(
        param=args.param or sweep_cfg.get("param", "P_t_dbm"),
        grid=grid,
        trials=args.trials if args.trials is not None else sweep_cfg.get("trials", 1),
        schemes=_parse_schemes(schemes_text, kappa=args.kappa),
        base=params,
        solver=solver,
        seed=args.seed,
        mu=args.angle_err,
        nu=args.frm_err,
    )
    progress = None
    if args.verbose:
        def progress(row):
            print(f"{row['sweep_param']}={row['sweep_value']} trial={row['trial']} "
                  f"{row['scheme']}: {row['sum_rate_bpshz']:.3f} bps/Hz",
                  file=sys.stderr)
    table = run_sweep(cfg, progress=progress)
    if args.format == "csv":
        write_csv(table, args.out)
    else:
        write_json(table, args.out)
    if table.errors:
        print(f"{len(table.errors)} cell(s) failed; see rows with NaN sum-rate",
              file=sys.stderr)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def cmd_gradcheck(args):
    file_cfg = _load_config(args.config)
    params = _scenario_params(args, file_cfg)
    worst = 0.0
    rng = np.random.default_rng(args.seed)
    for i in range(args.instances):
        scen = generate_scenario(int(rng.integers(2 ** 31)), params)
        x = initialize_variables(scen, rng=np.random.default_rng(args.seed + i))
        # move off the initializer so the check covers a generic point
        d = zero_direction_like(x)
        d.W = (rng.standard_normal(x.W.shape) + 1j * rng.standard_normal(x.W.shape))
        d.W *= 0.1 * np.linalg.norm(x.W) / max(np.linalg.norm(d.W), 1e-30)
        d.phi = 0.3 * (rng.standard_normal(x.phi.shape)
                       + 1j * rng.standard_normal(x.phi.shape))
        d.o = 0.2 * rng.standard_normal(x.o.shape)
        d.p = 0.2 * rng.standard_normal(x.p.shape)
        x = retract(x, d, 1.0)
        pen = PenaltyState(rho=args.rho, u=args.u, eps=1e-6)
        cs = constraint_set(scen)
        analytic = riemannian_gradient(x, scen, pen, cs)
        fd = finite_difference_gradient(x, scen, pen, cs, step=args.step)
        err = max_relative_error(analytic, fd)
        worst = max(worst, err)
        print(f"instance {i}: max relative error {err:.3e}")
    ok = worst <= args.tol
    print(f"worst over {args.instances} instances: {worst:.3e} "
          f"({'PASS' if ok else 'FAIL'} at tol {args.tol:g})")
    return 0 if ok else 1


def cmd_landscape(args):
    file_cfg = _load_config(args.config)
    params = _scenario_params(args, file_cfg)
    scen = generate_scenario(args.seed, params)
    x = initialize_variables(scen, rng=np.random.default_rng(args.seed))
    gains, xs, _ = gain_landscape(scen, x, args.user, args.resolution,
                                  element=args.element)
    write_landscape(args.out, gains, extent=float(xs[-1]), resolution=args.resolution)
    print(f"wrote {args.resolution}x{args.resolution} gain map to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mairs",
        description="Movable-antenna IRS downlink: joint precoder, phase, and "
                    "antenna-position optimization")
    parser.add_argument("--config", help="JSON config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p_single = sub.add_parser("single", help="run one scheme on one seeded scenario")
    p_single.add_argument("--scheme", default="proposed-OPS")
    p_single.add_argument("--kappa", type=int, help="discrete phase levels")
    p_single.add_argument("--seed", type=int, default=0)
    p_single.add_argument("--angle-err", type=float, default=0.0)
    p_single.add_argument("--frm-err", type=float, default=0.0)
    p_single.add_argument("--out", help="write the result record here (JSON)")
    p_single.add_argument("--trace", help="write the iteration trace here (JSON)")
    _add_scenario_flags(p_single)
    _add_solver_flags(p_single)
    p_single.set_defaults(func=cmd_single)

    p_sweep = sub.add_parser("sweep", help="grid sweep with paired trials")
    p_sweep.add_argument("--param", choices=("P_t_dbm", "N", "L", "A_I", "Gamma",
                                             "mu", "nu"))
    p_sweep.add_argument("--grid", help="comma-separated grid values")
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--schemes", help="comma-separated scheme names")
    p_sweep.add_argument("--kappa", type=int)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--angle-err", type=float, default=0.0)
    p_sweep.add_argument("--frm-err", type=float, default=0.0)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--verbose", action="store_true")
    _add_scenario_flags(p_sweep)
    _add_solver_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_grad = sub.add_parser("gradcheck", help="compare analytic and numeric gradients")
    p_grad.add_argument("--instances", type=int, default=20)
    p_grad.add_argument("--step", type=float, default=1e-6)
    p_grad.add_argument("--tol", type=float, default=1e-5)
    p_grad.add_argument("--rho", type=float, default=7.0)
    p_grad.add_argument("--u", type=float, default=0.37)
    p_grad.add_argument("--seed", type=int, default=0)
    _add_scenario_flags(p_grad)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_land = sub.add_parser("landscape", help="channel power gain over one element")
    p_land.add_argument("--seed", type=int, default=0)
    p_land.add_argument("--user", type=int, default=0)
    p_land.add_argument("--element", type=int, default=0)
    p_land.add_argument("--resolution", type=int, default=41)
    p_land.add_argument("--out", required=True)
    _add_scenario_flags(p_land)
    p_land.set_defaults(func=cmd_landscape)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
