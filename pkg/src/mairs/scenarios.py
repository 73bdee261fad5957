"""Seeded scenario generation and field-response perturbation.

Geometry defaults: the base station sits at the origin, the reflecting
surface at (10, 0, 30) m, and users fall uniformly in a 20 m square centered
at (0, -10, 30) in the x-z plane.  Free-space path loss follows
-46 - 20*log10(d) dB at 5 GHz; per-path complex responses are circular
Gaussian with total power equal to the link path loss.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import SPEED_OF_LIGHT, FieldResponseInfo, Scenario, dbm_to_watt


@dataclass(frozen=True)
class ScenarioParams:
    M: int = 4
    N: int = 8
    K: int = 3
    L: int = 6
    P_t_dbm: float = 30.0
    sigma_n2_dbm: float = -120.0
    A_B: float = 4.0             # BS region edge, wavelengths
    A_I: float = 6.0             # IRS region edge, wavelengths
    Gamma: float = 1.0           # bits/s/Hz
    carrier_hz: float = 5e9
    bs_position: tuple = (0.0, 0.0, 0.0)
    irs_position: tuple = (10.0, 0.0, 30.0)
    ue_center: tuple = (0.0, -10.0, 30.0)
    ue_edge: float = 20.0        # user square edge length, meters (x-z plane)


def path_loss_db(distance_m: float) -> float:
    return -46.0 - 20.0 * np.log10(distance_m)


def path_loss_linear(distance_m: float) -> float:
    return 10.0 ** (path_loss_db(distance_m) / 10.0)


def _complex_normal(rng: np.random.Generator, variance, size) -> np.ndarray:
    scale = np.sqrt(np.asarray(variance, float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def generate_scenario(seed: int, params: ScenarioParams | None = None) -> Scenario:
    """Draw a complete scenario; fully determined by ``seed`` and ``params``."""
    params = params or ScenarioParams()
    rng = np.random.default_rng(seed)
    wavelength = SPEED_OF_LIGHT / params.carrier_hz

    bs = np.asarray(params.bs_position, float)
    irs = np.asarray(params.irs_position, float)
    center = np.asarray(params.ue_center, float)
    offsets = rng.uniform(-params.ue_edge / 2, params.ue_edge / 2, (params.K, 2))
    ue = np.column_stack([center[0] + offsets[:, 0],
                          np.full(params.K, center[1]),
                          center[2] + offsets[:, 1]])

    phi_t = rng.uniform(0.0, np.pi, params.L)
    theta_r = rng.uniform(0.0, np.pi, params.L)
    phi_r = rng.uniform(0.0, np.pi, params.L)

    mu_g = path_loss_linear(np.linalg.norm(irs - bs))
    mu_k = np.array([path_loss_linear(np.linalg.norm(ue[k] - irs))
                     for k in range(params.K)])
    sigma_g = _complex_normal(rng, mu_g / params.L, params.L)
    sigma_f = np.stack([_complex_normal(rng, mu_k[k] / params.L, params.L)
                        for k in range(params.K)])

    fri = FieldResponseInfo(phi_t=phi_t, theta_r=theta_r, phi_r=phi_r,
                            sigma_g=sigma_g, sigma_f=sigma_f,
                            wavelength=wavelength)
    return Scenario(fri=fri, M=params.M, N=params.N, K=params.K,
                    P_t=dbm_to_watt(params.P_t_dbm),
                    sigma_n2=dbm_to_watt(params.sigma_n2_dbm),
                    A_B=params.A_B, A_I=params.A_I, Gamma=params.Gamma,
                    bs_position=bs, irs_position=irs, ue_positions=ue,
                    mu_g=mu_g, mu_k=mu_k, seed=seed)


def perturb_fri(fri: FieldResponseInfo, mu: float, nu: float,
                seed: int) -> FieldResponseInfo:
    """Estimated field response: angle errors uniform in [-mu/2, mu/2], clamped
    to [0, pi]; complex responses scaled by 1/(1 - e) with e circular Gaussian
    of variance nu (the error is defined relative to the estimate)."""
    if mu < 0 or nu < 0:
        raise ValueError("error magnitudes must be nonnegative")
    rng = np.random.default_rng(seed)
    L, K = fri.L, fri.K
    phi_t = np.clip(fri.phi_t + rng.uniform(-mu / 2, mu / 2, L), 0.0, np.pi)
    theta_r = np.clip(fri.theta_r + rng.uniform(-mu / 2, mu / 2, L), 0.0, np.pi)
    phi_r = np.clip(fri.phi_r + rng.uniform(-mu / 2, mu / 2, L), 0.0, np.pi)
    e_g = _complex_normal(rng, nu, L)
    e_f = _complex_normal(rng, nu, (K, L))
    denom_g = np.where(np.abs(1.0 - e_g) < 1e-12, 1e-12, 1.0 - e_g)
    denom_f = np.where(np.abs(1.0 - e_f) < 1e-12, 1e-12, 1.0 - e_f)
    return replace(fri, phi_t=phi_t, theta_r=theta_r, phi_r=phi_r,
                   sigma_g=fri.sigma_g / denom_g, sigma_f=fri.sigma_f / denom_f)
