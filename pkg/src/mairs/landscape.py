"""Channel power gain landscapes over candidate element positions."""

from __future__ import annotations

import numpy as np

from .channel import Scenario, channel_power_gain
from .manifold import OptimizationPoint
from .objective import _assemble_channels, positions_of


def gain_landscape(scenario: Scenario, x: OptimizationPoint, k: int,
                   resolution: int, element: int = 0):
    """Channel power gain for user ``k`` as one element scans its region.

    The chosen element moves over a resolution x resolution grid spanning the
    region while every other element and the BS antennas stay put.  Returns
    (gains, xs, ys) with gains[i, j] evaluated at (xs[j], ys[i]).
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if not 0 <= element < scenario.N:
        raise IndexError("element index out of range")
    if not 0 <= k < scenario.K:
        raise IndexError("user index out of range")
    t, u = positions_of(x, scenario)
    half = scenario.irs_region_m / 2.0
    xs = np.linspace(-half, half, resolution)
    ys = np.linspace(-half, half, resolution)
    gains = np.empty((resolution, resolution))
    u_work = u.copy()
    for i, yv in enumerate(ys):
        for j, xv in enumerate(xs):
            u_work[element] = (xv, yv)
            G, f = _assemble_channels(t, u_work, scenario.fri)
            gains[i, j] = channel_power_gain(x.phi, f[k], G)
    return gains, xs, ys


def write_landscape(path: str, gains: np.ndarray, extent: float, resolution: int) -> None:
    """Plain matrix file with a two-line header: grid extent and resolution."""
    header = f"extent: {-extent} {extent}\nresolution: {resolution}"
    np.savetxt(path, gains, header=header)


def count_local_maxima(gains: np.ndarray) -> int:
    """Interior cells strictly greater than all eight neighbors."""
    g = np.asarray(gains)
    core = g[1:-1, 1:-1]
    mask = np.ones_like(core, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            rows = slice(1 + di, g.shape[0] - 1 + di)
            cols = slice(1 + dj, g.shape[1] - 1 + dj)
            mask &= core > g[rows, cols]
    return int(mask.sum())
