"""Scheme catalog and the single-run driver.

A scheme fixes which blocks of the variable move: the precoder is always
optimized; phase shifts are optimized, held at their initial value, drawn at
random, or optimized continuously and then snapped to a discrete set; the
transmit antennas and reflecting elements are movable or frozen.  The dense
uniform-array baseline replaces the element count with a half-wavelength grid
filling the same region.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .channel import Scenario, rate_and_sum, all_effective_channels
from .initializers import dense_grid_count, initialize_variables
from .manifold import OptimizationPoint
from .objective import constraint_set, evaluate
from .scenarios import perturb_fri
from .solver import FactorMask, RepResult, SolverConfig, rep_outer_solve

SCHEME_NAMES = ("proposed-OPS", "proposed-FPS", "FPA", "FPA-MA-OPS",
                "FPA-MA-FPS", "MA-FPA", "RPS", "URA")


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    phase_mode: str   # continuous | fixed | random | discrete
    bs_mode: str      # movable | fixed
    irs_mode: str     # movable | fixed | dense-grid
    kappa: int | None = None   # discrete phase levels, when phase_mode == "discrete"

    def __post_init__(self):
        if self.name not in SCHEME_NAMES:
            raise ValueError(f"unknown scheme '{self.name}'")
        if self.phase_mode not in ("continuous", "fixed", "random", "discrete"):
            raise ValueError(f"unknown phase mode '{self.phase_mode}'")
        if self.bs_mode not in ("movable", "fixed"):
            raise ValueError(f"unknown BS mode '{self.bs_mode}'")
        if self.irs_mode not in ("movable", "fixed", "dense-grid"):
            raise ValueError(f"unknown IRS mode '{self.irs_mode}'")
        if self.phase_mode == "discrete" and (self.kappa is None or self.kappa < 2):
            raise ValueError("discrete phase mode needs kappa >= 2")
        if self.name == "URA" and self.irs_mode != "dense-grid":
            raise ValueError("the URA baseline requires the dense-grid layout")
        if self.irs_mode == "dense-grid" and self.name != "URA":
            raise ValueError("dense-grid layout is reserved for the URA baseline")

    @property
    def label(self) -> str:
        if self.phase_mode == "discrete":
            return f"{self.name}+dps{self.kappa}"
        return self.name


_CATALOG = {
    "proposed-OPS": SchemeSpec("proposed-OPS", "continuous", "movable", "movable"),
    "proposed-FPS": SchemeSpec("proposed-FPS", "fixed", "movable", "movable"),
    "FPA": SchemeSpec("FPA", "continuous", "fixed", "fixed"),
    "FPA-MA-OPS": SchemeSpec("FPA-MA-OPS", "continuous", "fixed", "movable"),
    "FPA-MA-FPS": SchemeSpec("FPA-MA-FPS", "fixed", "fixed", "movable"),
    "MA-FPA": SchemeSpec("MA-FPA", "continuous", "movable", "fixed"),
    "RPS": SchemeSpec("RPS", "random", "fixed", "fixed"),
    "URA": SchemeSpec("URA", "continuous", "fixed", "dense-grid"),
}


def scheme(name: str, discrete_kappa: int | None = None) -> SchemeSpec:
    """Look up a scheme; ``discrete_kappa`` snaps its optimized phases."""
    try:
        spec = _CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown scheme '{name}'; known: {', '.join(SCHEME_NAMES)}")
    if discrete_kappa is not None:
        if spec.phase_mode != "continuous":
            raise ValueError(f"scheme '{name}' does not optimize phase shifts; "
                             "discrete projection does not apply")
        spec = replace(spec, phase_mode="discrete", kappa=discrete_kappa)
    return spec


def factor_mask(spec: SchemeSpec) -> FactorMask:
    return FactorMask(
        W=True,
        phi=spec.phase_mode in ("continuous", "discrete"),
        o=spec.bs_mode == "movable",
        p=spec.irs_mode == "movable",
    )


def quantize_phases(phi: np.ndarray, kappa: int) -> np.ndarray:
    """Snap each entry to the nearest of kappa evenly spaced phases.

    Wraparound-aware; exact midpoints round toward the lower grid point.  The
    grid is closed under conjugation, so snapping the stored entries equals
    snapping the physical phase shifts.
    """
    if kappa < 2:
        raise ValueError("kappa must be at least 2")
    step = 2 * np.pi / kappa
    theta = np.angle(phi) % (2 * np.pi)
    idx = np.ceil(theta / step - 0.5).astype(int) % kappa
    return np.exp(1j * idx * step)


def effective_scenario(scenario: Scenario, spec: SchemeSpec) -> Scenario:
    """The scenario a scheme actually runs on; URA swaps in the dense grid count."""
    if spec.irs_mode == "dense-grid":
        n_dense = dense_grid_count(scenario.A_I)
        return replace(scenario, N=n_dense)
    return scenario


@dataclass
class RunResult:
    scheme: str
    seed: int | None
    sum_rate: float
    rates: np.ndarray
    max_h: float
    feasible: bool
    status: str
    outer_iters: int
    inner_iters_total: int
    final_rho: float
    wall_ms: float
    point: OptimizationPoint
    t: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    solve: RepResult

    @property
    def min_rate(self) -> float:
        return float(self.rates.min())


def _rng_for(scenario: Scenario, tag: int) -> np.random.Generator:
    seed = scenario.seed if scenario.seed is not None else 0
    return np.random.default_rng(np.random.SeedSequence([seed, tag]))


def run_scheme(scenario: Scenario, spec: SchemeSpec,
               cfg: SolverConfig | None = None,
               true_fri=None) -> RunResult:
    """Optimize one scheme on one scenario.

    When ``true_fri`` is given, ``scenario`` carries the estimated field
    response the optimizer works with, and the reported rates are re-evaluated
    against the true response at the final configuration.
    """
    cfg = cfg or SolverConfig()
    scen = effective_scenario(scenario, spec)
    rng = _rng_for(scen, tag=71)
    layout = "dense-grid" if spec.irs_mode == "dense-grid" else "packed"
    x0 = initialize_variables(scen, phase_mode=spec.phase_mode,
                              irs_layout=layout, rng=rng)
    cs = constraint_set(scen)
    mask = factor_mask(spec)

    start = time.perf_counter()
    rep = rep_outer_solve(x0, scen, cs, cfg, mask)
    wall_ms = (time.perf_counter() - start) * 1e3

    point = rep.point
    feasible = rep.feasible
    max_h = rep.max_h
    if spec.phase_mode == "discrete":
        point = OptimizationPoint(point.W.copy(),
                                  quantize_phases(point.phi, spec.kappa),
                                  point.o.copy(), point.p.copy())
        ev_q = evaluate(point, scen, cs)
        max_h = ev_q.max_h
        feasible = feasible and max_h <= cfg.feasibility_tol

    # reported rates: true field response when the optimizer only saw an estimate
    if true_fri is not None:
        report_scen = replace(scen, fri=true_fri)
    else:
        report_scen = scen
    ev = evaluate(point, report_scen, cs)

    return RunResult(scheme=spec.label, seed=scenario.seed,
                     sum_rate=ev.sum_rate, rates=ev.rates,
                     max_h=max_h, feasible=feasible, status=rep.status,
                     outer_iters=rep.outer_iters,
                     inner_iters_total=rep.inner_iters_total,
                     final_rho=rep.final_rho, wall_ms=wall_ms,
                     point=point, t=rep.t, u=rep.u_pos,
                     phi=point.phi, solve=rep)
