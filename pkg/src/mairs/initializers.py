"""Starting layouts and the zero-forcing precoder initializer.

Base-station antennas start on a half-wavelength line centered in their
region.  Reflecting elements start on a precomputed maximin layout of the
unit square (N <= 20), scaled into the region with a small boundary inset so
the tanh pre-images stay in the responsive range; a jittered grid is the
fallback when the table layout cannot honor the spacing floor.
"""

from __future__ import annotations

import numpy as np

from .channel import Scenario, all_effective_channels
from .manifold import OptimizationPoint
from .objective import _assemble_channels

# Maximin point layouts in the unit square, keyed by point count.  Regenerate
# with scripts/regen_packing_table.py.
LAYOUTS = {
    1: [(0.5, 0.5)],
    2: [(0.0, 1.0), (1.0, 0.0)],
    3: [(0.0, 0.0), (0.267985, 1.0), (1.0, 0.267805)],
    4: [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)],
    5: [(0.0, 0.0), (0.0, 1.0), (0.492407, 0.5), (1.0, 0.0), (1.0, 1.0)],
    6: [(0.0, 0.435525), (0.188969, 1.0), (0.404851, 0.0), (0.593578, 0.564568),
        (1.0, 0.0), (1.0, 1.0)],
    7: [(0.0, 0.270808), (0.0, 1.0), (0.462611, 0.0), (0.465423, 0.534879),
        (0.731980, 1.0), (1.0, 0.0), (1.0, 0.535071)],
    8: [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.5, 1.0),
        (1.0, 0.0), (1.0, 0.5)],
    9: [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 0.0), (0.5, 0.5), (0.5, 1.0),
        (1.0, 0.0), (1.0, 0.5), (1.0, 1.0)],
    10: [(0.0, 0.0), (0.0, 0.580676), (0.0, 1.0), (0.350082, 0.347757),
         (0.421398, 1.0), (0.579711, 0.0), (0.649124, 0.643380), (1.0, 0.0),
         (1.0, 0.418337), (1.0, 1.0)],
    11: [(0.0, 0.0), (0.0, 0.433626), (0.0, 1.0), (0.277654, 0.717490),
         (0.382897, 0.332742), (0.555959, 1.0), (0.600746, 0.0),
         (0.667450, 0.616238), (1.0, 0.0), (1.0, 0.399301), (1.0, 1.0)],
    12: [(0.0, 0.0), (0.0, 0.515012), (0.0, 1.0), (0.276165, 0.257907),
         (0.361024, 0.629774), (0.430732, 1.0), (0.561872, 0.0),
         (0.638049, 0.371928), (0.721983, 0.743247), (1.0, 0.0),
         (1.0, 0.477175), (1.0, 1.0)],
    13: [(0.0, 0.0), (0.0, 0.372647), (0.0, 1.0), (0.186562, 0.688764),
         (0.366888, 0.0), (0.371488, 0.372268), (0.376934, 1.0),
         (0.631889, 0.640529), (0.685392, 0.183433), (0.746951, 1.0),
         (1.0, 0.0), (1.0, 0.370791), (1.0, 0.736603)],
    14: [(0.0, 0.0), (0.0, 1.0 / 3), (0.0, 2.0 / 3), (0.0, 1.0),
         (1.0 / 3, 0.0), (1.0 / 3, 1.0 / 3), (1.0 / 3, 2.0 / 3), (1.0 / 3, 1.0),
         (2.0 / 3, 0.0), (2.0 / 3, 1.0 / 3), (2.0 / 3, 2.0 / 3), (2.0 / 3, 1.0),
         (1.0, 0.0), (1.0, 1.0 / 3)],
    15: [(0.0, 0.0), (0.0, 1.0 / 3), (0.0, 2.0 / 3), (0.0, 1.0),
         (1.0 / 3, 0.0), (1.0 / 3, 1.0 / 3), (1.0 / 3, 2.0 / 3), (1.0 / 3, 1.0),
         (2.0 / 3, 0.0), (2.0 / 3, 1.0 / 3), (2.0 / 3, 2.0 / 3), (2.0 / 3, 1.0),
         (1.0, 0.0), (1.0, 1.0 / 3), (1.0, 2.0 / 3)],
    16: [(0.0, 0.0), (0.0, 1.0 / 3), (0.0, 2.0 / 3), (0.0, 1.0),
         (1.0 / 3, 0.0), (1.0 / 3, 1.0 / 3), (1.0 / 3, 2.0 / 3), (1.0 / 3, 1.0),
         (2.0 / 3, 0.0), (2.0 / 3, 1.0 / 3), (2.0 / 3, 2.0 / 3), (2.0 / 3, 1.0),
         (1.0, 0.0), (1.0, 1.0 / 3), (1.0, 2.0 / 3), (1.0, 1.0)],
    17: [(0.0, 0.0), (0.0, 0.512036), (0.0, 1.0), (0.181675, 0.242365),
         (0.192247, 0.759776), (0.343068, 0.499958), (0.368271, 0.0),
         (0.377449, 1.0), (0.540210, 0.729827), (0.542286, 0.265214),
         (0.690000, 0.0), (0.695795, 1.0), (0.748226, 0.506874), (1.0, 0.0),
         (1.0, 0.305784), (1.0, 0.683071), (1.0, 1.0)],
    18: [(0.0, 0.0), (0.0, 0.406221), (0.0, 0.705348), (0.0, 1.0),
         (0.250923, 0.246040), (0.253007, 0.555552), (0.297807, 1.0),
         (0.401738, 0.0), (0.500602, 0.721775), (0.552904, 0.260387),
         (0.592368, 1.0), (0.696463, 0.0), (0.717105, 0.505379),
         (0.792052, 0.791329), (1.0, 0.0), (1.0, 0.288267), (1.0, 0.588388),
         (1.0, 1.0)],
    19: [(0.0, 0.0), (0.0, 0.405370), (0.0, 0.701614), (0.0, 1.0),
         (0.240240, 0.851591), (0.243936, 0.262907), (0.246632, 0.563469),
         (0.378226, 0.0), (0.498880, 1.0), (0.501010, 0.400509),
         (0.508699, 0.710333), (0.667830, 0.0), (0.750106, 0.865575),
         (0.753968, 0.560763), (0.754687, 0.269050), (1.0, 0.0),
         (1.0, 0.409871), (1.0, 0.709360), (1.0, 1.0)],
    20: [(0.0, 0.0), (0.0, 0.290678), (0.0, 0.575223), (0.0, 1.0),
         (0.241356, 0.430448), (0.248990, 0.716180), (0.250162, 0.124167),
         (0.279086, 1.0), (0.489801, 0.278314), (0.498179, 0.554396),
         (0.498358, 0.832733), (0.507021, 0.0), (0.723242, 1.0),
         (0.750275, 0.133900), (0.753218, 0.430573), (0.757107, 0.709424),
         (1.0, 0.0), (1.0, 0.290086), (1.0, 0.574116), (1.0, 1.0)],
}

BOUNDARY_INSET = 0.92   # fraction of the region edge used by initial layouts
PREIMAGE_CLIP = 1e-9    # keeps arctanh arguments strictly inside (-1, 1)


def min_pairwise_distance(points: np.ndarray) -> float:
    pts = np.asarray(points, float)
    if len(pts) < 2:
        return np.inf
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    return float(dist[np.triu_indices(len(pts), k=1)].min())


def bs_linear_positions(m: int, wavelength: float, region_m: float) -> np.ndarray:
    """Half-wavelength spaced line centered in the region."""
    t = (np.arange(m) - (m - 1) / 2.0) * (wavelength / 2.0)
    if m > 1 and (m - 1) * wavelength / 2.0 >= region_m:
        raise ValueError(
            f"{m} antennas at half-wavelength spacing do not fit a "
            f"{region_m:.4f} m region")
    return t


def _jittered_grid(n: int, region_m: float, d_min: float,
                   rng: np.random.Generator) -> np.ndarray:
    side = int(np.ceil(np.sqrt(n)))
    span = region_m * BOUNDARY_INSET
    pitch = span / max(side - 1, 1)
    if pitch < d_min:
        raise ValueError(
            f"cannot place {n} elements with {d_min:.4f} m spacing in a "
            f"{region_m:.4f} m region")
    coords = (np.arange(side) - (side - 1) / 2.0) * pitch
    xx, yy = np.meshgrid(coords, coords)
    pts = np.column_stack([xx.ravel(), yy.ravel()])[:n]
    amp = 0.45 * (pitch - d_min)
    if amp > 0:
        pts = pts + rng.uniform(-amp / 2, amp / 2, pts.shape)
    return pts


def packed_irs_positions(n: int, region_m: float, d_min: float,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Well-separated starting layout for ``n`` elements, shape (n, 2) meters."""
    if n in LAYOUTS:
        pts = (np.asarray(LAYOUTS[n], float) - 0.5) * region_m * BOUNDARY_INSET
        if min_pairwise_distance(pts) >= d_min:
            return pts
    rng = rng or np.random.default_rng(0)
    return _jittered_grid(n, region_m, d_min, rng)


def dense_grid_positions(a_i_wl: float, wavelength: float) -> np.ndarray:
    """Half-wavelength rectangular grid filling the region, shape (N, 2)."""
    side = int(np.floor(2 * a_i_wl)) + 1
    coords = (np.arange(side) - (side - 1) / 2.0) * (wavelength / 2.0)
    xx, yy = np.meshgrid(coords, coords)
    return np.column_stack([xx.ravel(), yy.ravel()])


def dense_grid_count(a_i_wl: float) -> int:
    return (int(np.floor(2 * a_i_wl)) + 1) ** 2


def tanh_preimage(x: np.ndarray, edge: float) -> np.ndarray:
    """Inverse of the region projection, with boundary clipping."""
    ratio = np.clip(2.0 * np.asarray(x, float) / edge,
                    -1.0 + PREIMAGE_CLIP, 1.0 - PREIMAGE_CLIP)
    return np.arctanh(ratio)


def zf_precoder(H: np.ndarray, p_t: float) -> np.ndarray:
    """Zero-forcing precoder scaled to the full power budget.

    Falls back to a ridge-regularized Gram inverse when the channel matrix is
    rank deficient; the ridge is relative to the Gram trace because cascaded
    channel magnitudes are many orders below unity.
    """
    m, k = H.shape
    gram = H.conj().T @ H
    eye = np.eye(k)
    try:
        inv = np.linalg.solve(gram, eye)
        if not np.isfinite(inv).all():
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        ridge = 1e-10 * max(np.trace(gram).real / k, np.finfo(float).tiny)
        inv = np.linalg.solve(gram + ridge * eye, eye)
    W = H @ inv
    power = np.vdot(W, W).real
    return np.sqrt(p_t / power) * W


def initialize_variables(scenario: Scenario, phase_mode: str = "continuous",
                         irs_layout: str = "packed",
                         rng: np.random.Generator | None = None) -> OptimizationPoint:
    """Starting point: spaced antennas, phase vector per mode, ZF precoder."""
    lam = scenario.wavelength
    t0 = bs_linear_positions(scenario.M, lam, scenario.bs_region_m)
    if irs_layout == "dense-grid":
        u0 = dense_grid_positions(scenario.A_I, lam)
        if len(u0) != scenario.N:
            raise ValueError("dense grid size does not match scenario.N")
    elif irs_layout == "packed":
        u0 = packed_irs_positions(scenario.N, scenario.irs_region_m, lam / 2.0, rng)
    else:
        raise ValueError(f"unknown irs layout '{irs_layout}'")

    if phase_mode == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        phi0 = np.exp(1j * rng.uniform(0.0, 2 * np.pi, scenario.N))
    elif phase_mode in ("continuous", "fixed", "discrete"):
        phi0 = np.ones(scenario.N, dtype=complex)
    else:
        raise ValueError(f"unknown phase mode '{phase_mode}'")

    G, f = _assemble_channels(t0, u0, scenario.fri)
    H = all_effective_channels(phi0, f, G)
    W0 = zf_precoder(H, scenario.P_t)

    o0 = tanh_preimage(t0, scenario.bs_region_m)
    p0 = tanh_preimage(u0.reshape(-1), scenario.irs_region_m)
    return OptimizationPoint(W=W0, phi=phi0, o=o0, p=p0)
