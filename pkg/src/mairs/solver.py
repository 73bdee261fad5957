"""Limited-memory Riemannian BFGS inner solver and exact-penalty outer loop.

The inner solver minimizes the smoothed penalized objective for fixed penalty
weight and smoothing parameter.  Curvature pairs are kept in a bounded memory,
re-projected into the current tangent space every iteration, and gated by a
cautious positivity test.  The outer loop raises the penalty weight whenever
the inner solution violates a constraint and anneals the smoothing parameter
and inner threshold toward their floors until a feasible stationary point is
reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Scenario
from .manifold import (DegenerateRetractionError, FlatTransport,
                       OptimizationPoint, TangentDirection, flatten_direction,
                       inner_product, norm, point_distance, retract, transport,
                       unflatten_direction, validate_point)
from .objective import (ConstraintSet, PenaltyState, constraint_set,
                        evaluate, objective_and_eval, positions_of,
                        riemannian_gradient)


class SolverAbortError(RuntimeError):
    """Raised when the solver encounters non-finite numbers it cannot recover from."""


@dataclass(frozen=True)
class FactorMask:
    """Which blocks of the variable are optimized; frozen blocks never move."""

    W: bool = True
    phi: bool = True
    o: bool = True
    p: bool = True

    def apply(self, d: TangentDirection) -> TangentDirection:
        return TangentDirection(
            d.W if self.W else np.zeros_like(d.W),
            d.phi if self.phi else np.zeros_like(d.phi),
            d.o if self.o else np.zeros_like(d.o),
            d.p if self.p else np.zeros_like(d.p),
        )


@dataclass
class MemoryEntry:
    """One curvature pair; s and y are normalized by the step norm at creation."""

    s: TangentDirection
    y: TangentDirection
    delta: float  # 1 / <s, y>, positive for stored entries


@dataclass(frozen=True)
class SolverConfig:
    memory_size: int = 10
    sigma_ls: float = 1e-4        # Armijo sufficient-decrease parameter
    gamma_ls: float = 0.5         # backtracking contraction factor
    tau0: float = 1.0             # initial trial step
    max_backtracks: int = 60
    max_inner_iters: int = 500
    rho0: float = 10.0
    theta_rho: float = 10.0
    u0: float = 1.0
    theta_u: float = 0.5
    u_min: float = 1e-6
    eps0: float = 1e-3
    theta_eps: float = 0.5
    eps_min: float = 1e-8
    tau_outer: float = 1e-6
    max_outer_iters: int = 30
    feasibility_tol: float = 1e-9
    cautious_factor: float = 1e-4

    def __post_init__(self):
        if self.memory_size < 1:
            raise ValueError("memory_size must be >= 1")
        if not 0 < self.sigma_ls < 1 or not 0 < self.gamma_ls < 1:
            raise ValueError("line-search parameters must lie in (0, 1)")
        if self.tau0 <= 0:
            raise ValueError("initial trial step must be positive")
        if self.theta_rho <= 1:
            raise ValueError("theta_rho must exceed 1")
        if not 0 < self.theta_u < 1 or not 0 < self.theta_eps < 1:
            raise ValueError("annealing factors must lie in (0, 1)")
        if min(self.u_min, self.eps_min, self.tau_outer) <= 0:
            raise ValueError("floors and outer threshold must be positive")


@dataclass
class InnerIterRecord:
    iteration: int
    g: float
    sum_rate: float
    max_h: float
    rho: float
    u: float
    eps: float
    step_size: float
    grad_norm: float
    movement: float
    power_residual: float
    max_modulus_residual: float


@dataclass
class OuterPhaseRecord:
    outer_iteration: int
    rho: float                      # penalty weight used in this phase
    u: float
    eps: float
    reverted: bool
    movement: float
    max_h: float                    # after the accept/revert decision
    g: float
    sum_rate: float
    inner_records: list = field(default_factory=list)

    @property
    def inner_iters(self) -> int:
        # the leading record is the phase's starting state
        return max(len(self.inner_records) - 1, 0)


@dataclass
class RepResult:
    point: OptimizationPoint
    feasible: bool
    status: str                     # "converged" or "outer-cap"
    history: list
    final_rho: float
    final_u: float
    final_eps: float
    rates: np.ndarray
    sum_rate: float
    max_h: float
    t: np.ndarray                   # (M,) BS positions, meters
    u_pos: np.ndarray               # (N, 2) IRS positions, meters

    @property
    def outer_iters(self) -> int:
        return len(self.history)

    @property
    def inner_iters_total(self) -> int:
        return sum(ph.inner_iters for ph in self.history)


def _two_loop_flat(grad_flat: np.ndarray, s_list: list, y_list: list,
                   deltas: list) -> np.ndarray:
    d = grad_flat.copy()
    m = len(s_list)
    coeffs = np.empty(m)
    for i in range(m - 1, -1, -1):
        rho_i = deltas[i] * float(s_list[i] @ d)
        if not math.isfinite(rho_i):
            raise SolverAbortError("non-finite inner product in two-loop recursion")
        coeffs[i] = rho_i
        d -= rho_i * y_list[i]
    yy = float(y_list[-1] @ y_list[-1])
    if yy <= 0 or not math.isfinite(yy):
        raise SolverAbortError("degenerate curvature pair in two-loop recursion")
    d *= float(s_list[-1] @ y_list[-1]) / yy
    for i in range(m):
        beta = deltas[i] * float(y_list[i] @ d)
        if not math.isfinite(beta):
            raise SolverAbortError("non-finite inner product in two-loop recursion")
        d += (coeffs[i] - beta) * s_list[i]
    return -d


def two_loop_direction(grad: TangentDirection, memory: list) -> TangentDirection:
    """Quasi-Newton direction from the stored curvature pairs.

    With empty memory this is plain steepest descent.  Entries must already
    live in the current tangent space.
    """
    if not memory:
        return -grad
    flat = _two_loop_flat(flatten_direction(grad),
                          [flatten_direction(e.s) for e in memory],
                          [flatten_direction(e.y) for e in memory],
                          [e.delta for e in memory])
    return unflatten_direction(flat, grad)


def armijo_search(objective, x: OptimizationPoint, d: TangentDirection,
                  g_at_x: float, grad: TangentDirection, cfg: SolverConfig):
    """Backtracking line search with the sufficient-decrease rule.

    ``objective(point) -> (value, aux)``.  Returns (alpha, x_next, g_next,
    aux_next, stagnated); stagnation means the backtrack cap was hit and is
    treated by callers as a zero-size converged step.
    """
    slope = inner_product(grad, d)
    for n in range(cfg.max_backtracks + 1):
        alpha = cfg.tau0 * cfg.gamma_ls ** n
        try:
            x_trial = retract(x, d, alpha)
        except DegenerateRetractionError:
            continue
        g_trial, aux = objective(x_trial)
        if g_trial <= g_at_x + cfg.sigma_ls * alpha * slope:
            return alpha, x_trial, g_trial, aux, False
    return 0.0, x, g_at_x, None, True


def rbfgs_minimize(x0: OptimizationPoint, objective, gradient, eps: float,
                   cfg: SolverConfig, pen_stamp=(np.nan, np.nan, np.nan)):
    """Core limited-memory quasi-Newton loop over the product manifold.

    ``objective(x) -> (g, aux)`` where aux either is an Evaluation or None;
    ``gradient(x, aux) -> TangentDirection`` already projected (and masked),
    reusing the point's evaluation when one is passed.
    Stops when one accepted step moves the iterate by at most ``eps``.
    """
    rho_v, u_v, eps_v = pen_stamp
    p_t = np.vdot(x0.W, x0.W).real  # power level the retraction preserves

    def record(it, g, aux, pt, step, grad_norm, movement):
        diag = validate_point(pt, p_t)
        return InnerIterRecord(
            iteration=it, g=g,
            sum_rate=aux.sum_rate if aux is not None else np.nan,
            max_h=aux.max_h if aux is not None else np.nan,
            rho=rho_v, u=u_v, eps=eps_v, step_size=step,
            grad_norm=grad_norm, movement=movement,
            power_residual=diag.power_residual,
            max_modulus_residual=diag.max_modulus_residual)

    x = x0
    g, aux = objective(x)
    if not math.isfinite(g):
        raise SolverAbortError(f"objective is not finite at the starting point: {g}")
    grad = gradient(x, aux)
    grad_flat = flatten_direction(grad)
    grad_norm = float(np.linalg.norm(grad_flat))
    # memory kept in realified coordinates; the product metric is the plain
    # dot product there and whole memories transport as one matrix op
    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    deltas: list[float] = []
    records = [record(0, g, aux, x, 0.0, grad_norm, 0.0)]

    for it in range(cfg.max_inner_iters):
        if s_list:
            d_flat = _two_loop_flat(grad_flat, s_list, y_list, deltas)
        else:
            d_flat = -grad_flat
        slope = float(grad_flat @ d_flat)
        if not slope < 0:
            # transported memory can lose curvature validity; restart from
            # steepest descent
            s_list, y_list, deltas = [], [], []
            d_flat = -grad_flat
        d = unflatten_direction(d_flat, grad)
        alpha, x_next, g_next, aux_next, stagnated = armijo_search(
            objective, x, d, g, grad, cfg)
        if stagnated:
            records.append(record(it + 1, g, aux, x, 0.0, grad_norm, 0.0))
            break
        if not math.isfinite(g_next):
            raise SolverAbortError(f"objective became non-finite: {g_next}")
        movement = point_distance(x_next, x)
        grad_next = gradient(x_next, aux_next)
        grad_next_flat = flatten_direction(grad_next)
        grad_next_norm = float(np.linalg.norm(grad_next_flat))
        records.append(record(it + 1, g_next, aux_next, x_next, alpha,
                              grad_next_norm, movement))
        if movement <= eps:
            x = x_next
            break

        # curvature pair for the accepted step, in the new tangent space
        project = FlatTransport(x_next)
        s_flat = project.apply(alpha * d_flat)
        y_flat = grad_next_flat - project.apply(grad_flat)
        s_norm = float(np.linalg.norm(s_flat))
        store = False
        if s_norm > 0:
            s_flat /= s_norm
            y_flat /= s_norm
            sy = float(s_flat @ y_flat)
            store = math.isfinite(sy) and sy >= cfg.cautious_factor * grad_norm
        if s_list:
            stacked = project.apply(np.vstack(s_list + y_list))
            m = len(s_list)
            s_list = list(stacked[:m])
            y_list = list(stacked[m:])
        if store:
            if len(s_list) == cfg.memory_size:
                s_list.pop(0)
                y_list.pop(0)
                deltas.pop(0)
            s_list.append(s_flat)
            y_list.append(y_flat)
            deltas.append(1.0 / sy)

        x, g, grad = x_next, g_next, grad_next
        grad_flat, grad_norm = grad_next_flat, grad_next_norm
    return x, records


def rbfgs_inner_solve(x0: OptimizationPoint, scenario: Scenario, pen: PenaltyState,
                      cs: ConstraintSet, cfg: SolverConfig,
                      mask: FactorMask | None = None):
    """Minimize the smoothed penalized objective at fixed penalty parameters."""
    mask = mask or FactorMask()

    def objective(x):
        return objective_and_eval(x, scenario, pen, cs)

    def gradient(x, aux=None):
        return mask.apply(riemannian_gradient(x, scenario, pen, cs, ev=aux))

    return rbfgs_minimize(x0, objective, gradient, pen.eps, cfg,
                          pen_stamp=(pen.rho, pen.u, pen.eps))


def rep_outer_solve(x0: OptimizationPoint, scenario: Scenario,
                    cs: ConstraintSet | None = None,
                    cfg: SolverConfig | None = None,
                    mask: FactorMask | None = None) -> RepResult:
    """Exact-penalty outer loop around the quasi-Newton inner solver.

    Warm-starts every phase at the previous iterate.  An infeasible inner
    solution is rejected: the penalty weight grows and the iterate reverts.
    Terminates once the iterate stops moving, all constraints hold, and the
    smoothing parameter and inner threshold sit at their floors; otherwise
    runs to the outer cap and reports infeasibility explicitly.
    """
    cfg = cfg or SolverConfig()
    if cs is None:
        cs = constraint_set(scenario)
    tol = cfg.feasibility_tol

    x = x0
    ev = evaluate(x, scenario, cs)
    rho, u, eps = cfg.rho0, cfg.u0, cfg.eps0
    history: list[OuterPhaseRecord] = []
    status = "outer-cap"

    for outer in range(1, cfg.max_outer_iters + 1):
        pen = PenaltyState(rho=rho, u=u, eps=eps)
        x_cand, inner_records = rbfgs_inner_solve(x, scenario, pen, cs, cfg, mask)
        ev_cand = evaluate(x_cand, scenario, cs)
        if ev_cand.max_h > tol:
            rho = cfg.theta_rho * rho
            x_next, ev_next, reverted = x, ev, True
        else:
            x_next, ev_next, reverted = x_cand, ev_cand, False
        movement = point_distance(x_next, x)
        history.append(OuterPhaseRecord(
            outer_iteration=outer, rho=pen.rho, u=pen.u, eps=pen.eps,
            reverted=reverted, movement=movement, max_h=ev_next.max_h,
            g=inner_records[-1].g, sum_rate=ev_next.sum_rate,
            inner_records=inner_records))
        x, ev = x_next, ev_next
        u = max(cfg.u_min, cfg.theta_u * u)
        eps = max(cfg.eps_min, cfg.theta_eps * eps)
        if (movement < cfg.tau_outer and ev.max_h <= tol
                and u <= cfg.u_min and eps <= cfg.eps_min):
            status = "converged"
            break

    t, u_pos = positions_of(x, scenario)
    return RepResult(point=x, feasible=bool(ev.max_h <= tol), status=status,
                     history=history, final_rho=rho, final_u=u, final_eps=eps,
                     rates=ev.rates, sum_rate=ev.sum_rate, max_h=ev.max_h,
                     t=t, u_pos=u_pos)


def export_trace(history: list) -> list:
    """Flatten a solve history into plain per-iteration records."""
    rows = []
    for phase in history:
        for rec in phase.inner_records:
            rows.append({
                "iteration": len(rows),
                "g": rec.g,
                "sum_rate": rec.sum_rate,
                "max_h": rec.max_h,
                "rho": rec.rho,
                "u": rec.u,
                "eps": rec.eps,
                "step_size": rec.step_size,
            })
    return rows
