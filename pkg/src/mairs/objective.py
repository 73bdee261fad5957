"""Penalized smoothed objective and its analytic gradients.

The constrained sum-rate problem is folded into a single smooth objective

    g(X) = -sum_k r_k(X) + rho * sum_i u*log(1 + exp(h_i(X)/u))

where the h_i are the inequality constraints (pairwise antenna spacing and
per-user minimum rate) and the log-sum-exp term smoothes max(0, h_i).
Rates are base-2 throughout, so every rate derivative carries a 1/ln(2)
factor on top of the conjugate-coordinate doubling.

Gradient conventions: complex blocks return the ambient Euclidean gradient
2 * d/dconj(z), which pairs with the real-part inner product; real blocks are
plain gradients.  The Riemannian gradient is the tangent projection of the
assembled Euclidean gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (FieldResponseInfo, Scenario, all_effective_channels,
                      bs_path_cosines, irs_path_directions)
from .manifold import OptimizationPoint, TangentDirection, transport

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class PenaltyState:
    """Penalty weight, smoothing parameter, and inner convergence threshold."""

    rho: float
    u: float
    eps: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError("penalty weight must be nonnegative")
        if self.u <= 0:
            raise ValueError("smoothing parameter must be positive")
        if self.eps <= 0:
            raise ValueError("convergence threshold must be positive")


@dataclass(frozen=True)
class ConstraintSet:
    """Index bookkeeping for the inequality constraints.

    Constraint vector layout: BS spacing pairs, then IRS spacing pairs, then
    the K minimum-rate constraints.
    """

    bs_pairs: tuple          # (i_idx, j_idx) arrays over BS antennas, i < j
    irs_pairs: tuple         # (i_idx, j_idx) arrays over IRS elements, i < j
    n_rate: int
    d_min: float             # minimum spacing, meters

    @property
    def n_bs(self) -> int:
        return self.bs_pairs[0].shape[0]

    @property
    def n_irs(self) -> int:
        return self.irs_pairs[0].shape[0]

    @property
    def n_total(self) -> int:
        return self.n_bs + self.n_irs + self.n_rate

    @property
    def bs_slice(self) -> slice:
        return slice(0, self.n_bs)

    @property
    def irs_slice(self) -> slice:
        return slice(self.n_bs, self.n_bs + self.n_irs)

    @property
    def rate_slice(self) -> slice:
        return slice(self.n_bs + self.n_irs, self.n_total)


def constraint_set(scenario: Scenario) -> ConstraintSet:
    bs_i, bs_j = np.triu_indices(scenario.M, k=1)
    irs_i, irs_j = np.triu_indices(scenario.N, k=1)
    return ConstraintSet(bs_pairs=(bs_i, bs_j), irs_pairs=(irs_i, irs_j),
                         n_rate=scenario.K, d_min=scenario.wavelength / 2.0)


def position_projection(v: np.ndarray, edge: float) -> np.ndarray:
    """Map unconstrained values into the open interval (-edge/2, edge/2)."""
    return (edge / 2.0) * np.tanh(v)


def positions_of(x: OptimizationPoint, scenario: Scenario):
    """Physical antenna positions (t in meters, u as (N, 2) meters) of a point."""
    t = position_projection(x.o, scenario.bs_region_m)
    u = position_projection(x.p, scenario.irs_region_m).reshape(-1, 2)
    return t, u


def lse_weights(h: np.ndarray, u: float) -> np.ndarray:
    """Logistic weights exp(h/u) / (1 + exp(h/u)), computed overflow-safely."""
    z = np.asarray(h, float) / u
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def lse_penalty_terms(h: np.ndarray, u: float) -> np.ndarray:
    """Smoothed hinge u*log(1 + exp(h/u)) per constraint, overflow-safe."""
    h = np.asarray(h, float)
    return np.maximum(h, 0.0) + u * np.log1p(np.exp(-np.abs(h) / u))


@dataclass
class Evaluation:
    """Channels, rates, and constraint values of one point."""

    t: np.ndarray        # (M,) BS positions, meters
    u: np.ndarray        # (N, 2) IRS positions, meters
    G: np.ndarray        # (N, M)
    f: np.ndarray        # (K, N)
    H: np.ndarray        # (M, K) per-user cascaded channels as columns
    C: np.ndarray        # (K, K), C[k, j] = h_k^H w_j
    D: np.ndarray        # (K,) interference-plus-noise powers
    gammas: np.ndarray   # (K,)
    rates: np.ndarray    # (K,)
    sum_rate: float
    h: np.ndarray        # constraint values over the full index set
    exp_r: np.ndarray    # (L, N) per-path element phase factors
    exp_t: np.ndarray    # (L, M) per-path BS phase factors

    @property
    def max_h(self) -> float:
        return float(self.h.max()) if self.h.size else -np.inf


def _channel_phases(t: np.ndarray, u: np.ndarray, fri: FieldResponseInfo):
    k0 = 2 * np.pi / fri.wavelength
    phase_t = np.outer(bs_path_cosines(fri), t)          # (L, M)
    phase_r = irs_path_directions(fri) @ u.T             # (L, N)
    return k0, phase_t, phase_r


def _phase_factors(t: np.ndarray, u: np.ndarray, fri: FieldResponseInfo):
    k0, phase_t, phase_r = _channel_phases(t, u, fri)
    return np.exp(1j * k0 * phase_r), np.exp(1j * k0 * phase_t)


def _assemble_channels(t: np.ndarray, u: np.ndarray, fri: FieldResponseInfo):
    """G (N, M) and the stacked user channels f (K, N) in one pass."""
    e_r, e_t = _phase_factors(t, u, fri)
    G = (fri.sigma_g[:, None] * e_r.conj()).T @ e_t      # (N, M)
    f = fri.sigma_f @ e_r                                # (K, N)
    return G, f


def evaluate(x: OptimizationPoint, scenario: Scenario,
             cs: ConstraintSet | None = None) -> Evaluation:
    if cs is None:
        cs = constraint_set(scenario)
    t, u = positions_of(x, scenario)
    e_r, e_t = _phase_factors(t, u, scenario.fri)
    fri = scenario.fri
    G = (fri.sigma_g[:, None] * e_r.conj()).T @ e_t
    f = fri.sigma_f @ e_r
    H = all_effective_channels(x.phi, f, G)
    C = H.conj().T @ x.W
    powers = np.abs(C) ** 2
    sig = np.diagonal(powers).copy()
    D = powers.sum(axis=1) - sig + scenario.sigma_n2
    gammas = sig / D
    rates = np.log2(1.0 + gammas)

    h = np.empty(cs.n_total)
    bi, bj = cs.bs_pairs
    h[cs.bs_slice] = cs.d_min - np.abs(t[bi] - t[bj])
    ii, ij = cs.irs_pairs
    diff = u[ii] - u[ij]
    h[cs.irs_slice] = cs.d_min - np.sqrt((diff * diff).sum(axis=1))
    h[cs.rate_slice] = scenario.Gamma - rates
    return Evaluation(t=t, u=u, G=G, f=f, H=H, C=C, D=D, gammas=gammas,
                      rates=rates, sum_rate=float(rates.sum()), h=h,
                      exp_r=e_r, exp_t=e_t)


def constraint_values(x: OptimizationPoint, scenario: Scenario,
                      cs: ConstraintSet | None = None) -> np.ndarray:
    """Inequality constraint values; feasible iff all entries are <= 0."""
    return evaluate(x, scenario, cs).h


def objective_from_eval(ev: Evaluation, pen: PenaltyState) -> float:
    penalty = pen.rho * lse_penalty_terms(ev.h, pen.u).sum()
    return float(-ev.sum_rate + penalty)


def smoothed_objective(x: OptimizationPoint, scenario: Scenario, pen: PenaltyState,
                       cs: ConstraintSet | None = None) -> float:
    return objective_from_eval(evaluate(x, scenario, cs), pen)


def objective_and_eval(x: OptimizationPoint, scenario: Scenario, pen: PenaltyState,
                       cs: ConstraintSet):
    ev = evaluate(x, scenario, cs)
    return objective_from_eval(ev, pen), ev


# ---------------------------------------------------------------------------
# rate gradients
# ---------------------------------------------------------------------------

def grad_rate_W(H: np.ndarray, W: np.ndarray, k: int, sigma_n2: float) -> np.ndarray:
    """Euclidean gradient of r_k with respect to W, shape (M, K)."""
    c = H[:, k].conj() @ W
    powers = np.abs(c) ** 2
    D = powers.sum() - powers[k] + sigma_n2
    gamma = powers[k] / D
    row = -gamma * c
    row[k] = c[k]
    scale = 2.0 / (LN2 * (1.0 + gamma) * D)
    return scale * np.outer(H[:, k], row)


def grad_rate_phi(H: np.ndarray, W: np.ndarray, G: np.ndarray, f_k: np.ndarray,
                  k: int, sigma_n2: float) -> np.ndarray:
    """Euclidean gradient of r_k with respect to phi, shape (N,)."""
    c = H[:, k].conj() @ W
    powers = np.abs(c) ** 2
    D = powers.sum() - powers[k] + sigma_n2
    gamma = powers[k] / D
    coeff = -gamma * c.conj()
    coeff[k] = c[k].conj()
    dgam_dh_conj = (W @ coeff) / D
    return (2.0 / (LN2 * (1.0 + gamma))) * f_k.conj() * (G @ dgam_dh_conj)


def _user_coefficient_matrix(C: np.ndarray, gammas: np.ndarray) -> np.ndarray:
    """Stacked column coefficients of the rank-one rate derivatives, (K, K)."""
    rows = -gammas[:, None] * C
    idx = np.arange(C.shape[0])
    rows[idx, idx] = C[idx, idx]
    return rows


def _rate_position_grads(t: np.ndarray, u: np.ndarray, phi: np.ndarray,
                         W: np.ndarray, fri: FieldResponseInfo, sigma_n2: float):
    """Derivatives of every user rate with respect to the physical positions.

    Returns (dr_dt (K, M), dr_du (K, N, 2)) plus the evaluation intermediates
    so callers can avoid recomputing channels.
    """
    k0, phase_t, phase_r = _channel_phases(t, u, fri)
    e_r = np.exp(1j * k0 * phase_r)                       # (L, N)
    e_t = np.exp(1j * k0 * phase_t)                       # (L, M)
    # per-path contributions to G and to the user channels
    E = (fri.sigma_g[:, None] * e_r.conj())[:, :, None] * e_t[:, None, :]  # (L, N, M)
    F = fri.sigma_f[:, :, None] * e_r[None, :, :]                          # (K, L, N)
    G = E.sum(axis=0)
    f = F.sum(axis=1)

    rho_t = bs_path_cosines(fri)
    rho_r = irs_path_directions(fri)
    Ec = E.conj()
    dGc_dt = -1j * k0 * np.einsum("lnm,l->nm", Ec, rho_t)        # (N, M)
    dGc_du = 1j * k0 * np.einsum("lnm,ld->nmd", Ec, rho_r)       # (N, M, 2)
    dfc_du = -1j * k0 * np.einsum("kln,ld->knd", F.conj(), rho_r)  # (K, N, 2)

    H = all_effective_channels(phi, f, G)
    C = H.conj().T @ W
    powers = np.abs(C) ** 2
    sig = np.diagonal(powers).copy()
    D = powers.sum(axis=1) - sig + sigma_n2
    gammas = sig / D

    rows = _user_coefficient_matrix(C, gammas)            # (K, K)
    Z = rows @ W.T.conj()                                 # (K, M), user-k row = z_k
    scale = 1.0 / (LN2 * (1.0 + gammas) * D)              # (K,)
    Q = f * phi[None, :]                                  # (K, N), user-k row = q_k
    # d r_k / d conj(G) factors as scale_k * outer(q_k, z_k)
    dr_dt = 2.0 * (scale[:, None] * Z * (Q @ dGc_dt)).real
    S = scale[:, None] * phi.conj()[None, :] * (Z.conj() @ G.T)   # (K, N)
    TM = np.einsum("nmd,km->knd", dGc_du, Z)
    dr_du = 2.0 * (scale[:, None, None] * Q[:, :, None] * TM
                   + S[:, :, None] * dfc_du).real
    return dr_dt, dr_du, (G, f, H, C, D, gammas)


def grad_rate_positions(x: OptimizationPoint, scenario: Scenario, k: int):
    """Derivatives of r_k with respect to t (M,) and u flattened (2N,)."""
    t, u = positions_of(x, scenario)
    dr_dt, dr_du, _ = _rate_position_grads(t, u, x.phi, x.W, scenario.fri,
                                           scenario.sigma_n2)
    return dr_dt[k], dr_du[k].reshape(-1)


def grad_constraints_positions(x: OptimizationPoint, scenario: Scenario,
                               cs: ConstraintSet):
    """Full Jacobians of the spacing constraints with respect to o and p.

    Returns (dh_do (n_bs, M), dh_dp (n_irs, 2N)); zero-distance IRS pairs get
    a zero subgradient.  Intended for diagnostics and tests; the assembled
    gradient path accumulates these contributions without building Jacobians.
    """
    t, u = positions_of(x, scenario)
    chain_o = (scenario.bs_region_m / 2.0) * (1.0 - np.tanh(x.o) ** 2)
    chain_p = (scenario.irs_region_m / 2.0) * (1.0 - np.tanh(x.p) ** 2)

    bi, bj = cs.bs_pairs
    dh_do = np.zeros((cs.n_bs, t.shape[0]))
    s = np.sign(t[bi] - t[bj])
    dh_do[np.arange(cs.n_bs), bi] = -s
    dh_do[np.arange(cs.n_bs), bj] = s
    dh_do *= chain_o[None, :]

    ii, ij = cs.irs_pairs
    dh_dp = np.zeros((cs.n_irs, u.size))
    diff = u[ii] - u[ij]
    dist = np.linalg.norm(diff, axis=1)
    direction = np.divide(diff, dist[:, None], out=np.zeros_like(diff),
                          where=dist[:, None] > 0)
    for r in range(cs.n_irs):
        dh_dp[r, 2 * ii[r]:2 * ii[r] + 2] = -direction[r]
        dh_dp[r, 2 * ij[r]:2 * ij[r] + 2] = direction[r]
    dh_dp *= chain_p[None, :]
    return dh_do, dh_dp


def euclidean_gradient(x: OptimizationPoint, scenario: Scenario, pen: PenaltyState,
                       cs: ConstraintSet | None = None,
                       ev: Evaluation | None = None) -> TangentDirection:
    """Ambient Euclidean gradient of the penalized objective.

    Passing the point's Evaluation avoids recomputing channels.
    """
    if cs is None:
        cs = constraint_set(scenario)
    if ev is None:
        ev = evaluate(x, scenario, cs)
    fri = scenario.fri
    t, u = ev.t, ev.u
    G, f, H, C, D, gammas = ev.G, ev.f, ev.H, ev.C, ev.D, ev.gammas
    lam = lse_weights(ev.h, pen.u)

    # rate terms: the objective weight on r_k is -(1 + rho*lam_k)
    omega = 1.0 + pen.rho * lam[cs.rate_slice]
    rows = _user_coefficient_matrix(C, gammas)
    scale = 2.0 / (LN2 * (1.0 + gammas))
    g_w = -H @ ((omega * scale / D)[:, None] * rows)
    # per-user phase gradient: scale_k * conj(f_k) * (G @ W @ conj(row_k)) / D_k
    dgam = (x.W @ rows.conj().T) / D[None, :]             # (M, K)
    g_phi = -(f.conj().T * (G @ dgam)) @ (omega * scale)

    # position derivatives through the per-path contributions
    k0 = 2 * np.pi / fri.wavelength
    E = (fri.sigma_g[:, None] * ev.exp_r.conj())[:, :, None] * ev.exp_t[:, None, :]
    F = fri.sigma_f[:, :, None] * ev.exp_r[None, :, :]
    Ec = E.conj()
    dGc_dt = -1j * k0 * np.einsum("lnm,l->nm", Ec, fri.path_cosines)
    dGc_du = 1j * k0 * np.einsum("lnm,ld->nmd", Ec, fri.path_directions)
    dfc_du = -1j * k0 * np.einsum("kln,ld->knd", F.conj(), fri.path_directions)

    Z = rows @ x.W.T.conj()                               # (K, M)
    pos_scale = 0.5 * scale / D                           # 1/(ln2 (1+gamma) D)
    Q = f * x.phi[None, :]                                # (K, N)
    dr_dt = 2.0 * (pos_scale[:, None] * Z * (Q @ dGc_dt)).real
    S = pos_scale[:, None] * x.phi.conj()[None, :] * (Z.conj() @ G.T)
    TM = np.einsum("nmd,km->knd", dGc_du, Z)
    dr_du = 2.0 * (pos_scale[:, None, None] * Q[:, :, None] * TM
                   + S[:, :, None] * dfc_du).real

    g_t = -(omega[:, None] * dr_dt).sum(axis=0)
    g_u = -(omega[:, None, None] * dr_du).sum(axis=0)

    # spacing penalties
    bi, bj = cs.bs_pairs
    ii, ij = cs.irs_pairs
    t_diff = t[bi] - t[bj]
    u_diff = u[ii] - u[ij]
    u_dist = np.sqrt((u_diff * u_diff).sum(axis=1))
    w_bs = pen.rho * lam[cs.bs_slice]
    s = np.sign(t_diff)
    np.add.at(g_t, bi, -s * w_bs)
    np.add.at(g_t, bj, s * w_bs)
    w_irs = pen.rho * lam[cs.irs_slice]
    direction = np.divide(u_diff, u_dist[:, None], out=np.zeros_like(u_diff),
                          where=u_dist[:, None] > 0)
    np.add.at(g_u, ii, -direction * w_irs[:, None])
    np.add.at(g_u, ij, direction * w_irs[:, None])

    g_o = g_t * (scenario.bs_region_m / 2.0) * (1.0 - np.tanh(x.o) ** 2)
    g_p = g_u.reshape(-1) * (scenario.irs_region_m / 2.0) * (1.0 - np.tanh(x.p) ** 2)
    return TangentDirection(g_w, g_phi, g_o, g_p)


def riemannian_gradient(x: OptimizationPoint, scenario: Scenario, pen: PenaltyState,
                        cs: ConstraintSet | None = None,
                        ev: Evaluation | None = None) -> TangentDirection:
    """Tangent projection of the Euclidean gradient at ``x``."""
    return transport(x, euclidean_gradient(x, scenario, pen, cs, ev))
