"""Geometric multipath channel model for the movable-antenna IRS downlink.

Channels follow a far-field, plane-wave path model.  Every transmit antenna
position contributes one phase factor per departure path, every reflecting
element one phase factor per arrival path; complex per-path responses weight
the sums.  The cascaded base-station -> IRS -> user channel is then a
deterministic function of the antenna positions, which is what the position
optimizer exploits.

Convention for the phase vector: the stored complex vector ``phi`` has unit
modulus entries and the effective channel is ``h_k^H = phi^H diag(f_k^H) G``.
With ``phi_n = exp(-1j * shift_n)`` this matches the cascaded form
``f_k^H diag(exp(1j*shift)) G``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SPEED_OF_LIGHT = 299792458.0


@dataclass(frozen=True)
class FieldResponseInfo:
    """Path angles and complex responses characterizing both hops.

    The transmit and receive sides share the same number of paths ``L``.
    """

    phi_t: np.ndarray    # (L,) departure angles at the BS, radians in [0, pi]
    theta_r: np.ndarray  # (L,) elevation arrival angles at the IRS
    phi_r: np.ndarray    # (L,) azimuth arrival angles at the IRS
    sigma_g: np.ndarray  # (L,) complex responses of the BS-IRS paths
    sigma_f: np.ndarray  # (K, L) complex responses of the IRS-user paths
    wavelength: float    # carrier wavelength, meters

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("at least one path is required")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        for name in ("phi_t", "theta_r", "phi_r"):
            ang = getattr(self, name)
            if ang.shape != (self.L,):
                raise ValueError(f"{name} must have shape (L,)")
            if np.any(ang < 0) or np.any(ang > np.pi):
                raise ValueError(f"{name} angles must lie in [0, pi]")
        if self.sigma_f.ndim != 2 or self.sigma_f.shape[1] != self.L:
            raise ValueError("sigma_f must have shape (K, L)")

    @property
    def L(self) -> int:
        return self.phi_t.shape[0]

    @property
    def K(self) -> int:
        return self.sigma_f.shape[0]

    @cached_property
    def path_cosines(self) -> np.ndarray:
        """Projection of each departure path onto the (linear) BS axis, shape (L,)."""
        return np.cos(self.phi_t)

    @cached_property
    def path_directions(self) -> np.ndarray:
        """Projection of each arrival path onto the IRS plane, shape (L, 2)."""
        return np.stack([np.sin(self.theta_r) * np.cos(self.phi_r),
                         np.cos(self.theta_r)], axis=1)


def bs_path_cosines(fri: FieldResponseInfo) -> np.ndarray:
    return fri.path_cosines


def irs_path_directions(fri: FieldResponseInfo) -> np.ndarray:
    return fri.path_directions


def bs_frv(t_i: float, fri: FieldResponseInfo) -> np.ndarray:
    """Field response vector of one BS antenna at scalar position ``t_i``."""
    k0 = 2 * np.pi / fri.wavelength
    return np.exp(1j * k0 * bs_path_cosines(fri) * t_i)


def irs_arrival_frv(u_i: np.ndarray, fri: FieldResponseInfo) -> np.ndarray:
    """Field response vector of one reflecting element at 2-D position ``u_i``."""
    k0 = 2 * np.pi / fri.wavelength
    return np.exp(1j * k0 * irs_path_directions(fri) @ np.asarray(u_i, float))


def irs_departure_frv(u_i: np.ndarray, fri: FieldResponseInfo) -> np.ndarray:
    """Departure-side counterpart; supplementary angles make it the conjugate."""
    return irs_arrival_frv(u_i, fri).conj()


def assemble_G(t: np.ndarray, u: np.ndarray, fri: FieldResponseInfo) -> np.ndarray:
    """BS -> IRS channel matrix, shape (N, M).

    ``t`` holds the M scalar BS positions, ``u`` the element positions as a
    flat (2N,) vector or an (N, 2) array.  G[n, m] sums the per-path terms
    sigma_g,l * exp(j*k0*(rho_t,l * t_m - rho_r,l . u_n)).
    """
    u = np.asarray(u, float).reshape(-1, 2)
    k0 = 2 * np.pi / fri.wavelength
    phase_t = np.outer(bs_path_cosines(fri), np.asarray(t, float))  # (L, M)
    phase_r = irs_path_directions(fri) @ u.T                        # (L, N)
    # (L, N, M) per-path contributions, summed over paths
    terms = fri.sigma_g[:, None, None] * np.exp(
        1j * k0 * (phase_t[:, None, :] - phase_r[:, :, None]))
    return terms.sum(axis=0)


def assemble_f(u: np.ndarray, fri: FieldResponseInfo, k: int) -> np.ndarray:
    """IRS -> user-k channel vector, shape (N,)."""
    if not 0 <= k < fri.K:
        raise IndexError(f"user index {k} out of range for K={fri.K}")
    u = np.asarray(u, float).reshape(-1, 2)
    k0 = 2 * np.pi / fri.wavelength
    phase_r = irs_path_directions(fri) @ u.T  # (L, N)
    return (fri.sigma_f[k][:, None] * np.exp(1j * k0 * phase_r)).sum(axis=0)


def effective_channel(phi: np.ndarray, f_k: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Cascaded BS -> user channel h_k, shape (M,), from h_k^H = phi^H diag(f_k^H) G."""
    return G.conj().T @ (f_k * phi)


def all_effective_channels(phi: np.ndarray, f: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Stack of the per-user channels as columns, shape (M, K); ``f`` is (K, N)."""
    return G.conj().T @ (f * phi[None, :]).T


def sinr(H: np.ndarray, W: np.ndarray, k: int, sigma_n2: float) -> float:
    """Signal-to-interference-plus-noise ratio of user ``k``.

    ``H`` holds the per-user channels as columns (M, K); ``W`` the precoders.
    """
    c = H[:, k].conj() @ W  # (K,) entries h_k^H w_j
    powers = np.abs(c) ** 2
    interference = powers.sum() - powers[k]
    return float(powers[k] / (interference + sigma_n2))


def rate_and_sum(H: np.ndarray, W: np.ndarray, sigma_n2: float):
    """Per-user rates log2(1 + SINR_k) and their sum, in bits/s/Hz."""
    C = H.conj().T @ W                 # (K, K), C[k, j] = h_k^H w_j
    powers = np.abs(C) ** 2
    sig = np.diag(powers)
    interference = powers.sum(axis=1) - sig
    gammas = sig / (interference + sigma_n2)
    rates = np.log2(1.0 + gammas)
    return rates, float(rates.sum())


def channel_power_gain(phi: np.ndarray, f_k: np.ndarray, G: np.ndarray) -> float:
    """Squared norm of the cascaded channel for one user."""
    h = effective_channel(phi, f_k, G)
    return float(np.vdot(h, h).real)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def watt_to_dbm(watt: float) -> float:
    return 10.0 * np.log10(watt * 1e3)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to evaluate channels, rates, and constraints."""

    fri: FieldResponseInfo
    M: int                     # number of BS antennas
    N: int                     # number of reflecting elements
    K: int                     # number of users
    P_t: float                 # transmit power budget, watts
    sigma_n2: float            # noise power, watts
    A_B: float                 # BS region edge length, in wavelengths
    A_I: float                 # IRS region edge length, in wavelengths
    Gamma: float               # per-user minimum rate, bits/s/Hz
    bs_position: np.ndarray    # (3,) meters
    irs_position: np.ndarray   # (3,) meters
    ue_positions: np.ndarray   # (K, 3) meters
    mu_g: float                # BS-IRS path loss (linear)
    mu_k: np.ndarray           # (K,) IRS-user path losses (linear)
    seed: int | None = None

    def __post_init__(self):
        if min(self.M, self.N, self.K) < 1:
            raise ValueError("M, N, K must be positive")
        if self.P_t <= 0 or self.sigma_n2 <= 0:
            raise ValueError("P_t and sigma_n2 must be positive")
        if self.Gamma < 0:
            raise ValueError("Gamma must be nonnegative")
        if self.A_B <= 0 or self.A_I <= 0:
            raise ValueError("region edges must be positive")
        if self.fri.K != self.K:
            raise ValueError("sigma_f rows must match K")

    @property
    def wavelength(self) -> float:
        return self.fri.wavelength

    @property
    def bs_region_m(self) -> float:
        """BS region edge length in meters."""
        return self.A_B * self.wavelength

    @property
    def irs_region_m(self) -> float:
        """IRS region edge length in meters."""
        return self.A_I * self.wavelength
