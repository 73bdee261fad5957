"""Finite-difference gradient oracle for the penalized objective.

Central differences along every ambient real coordinate (real and imaginary
parts of the complex blocks, plus the real position pre-images), followed by
tangent projection.  Used by tests and the ``gradcheck`` CLI command; never on
the optimization path.
"""

from __future__ import annotations

import numpy as np

from .channel import Scenario
from .manifold import OptimizationPoint, TangentDirection, transport
from .objective import ConstraintSet, PenaltyState, smoothed_objective


def point_to_ambient(x: OptimizationPoint) -> np.ndarray:
    """Flatten a point into a real coordinate vector."""
    return np.concatenate([x.W.real.ravel(), x.W.imag.ravel(),
                           x.phi.real, x.phi.imag, x.o, x.p])


def ambient_to_point(vec: np.ndarray, template: OptimizationPoint) -> OptimizationPoint:
    m, k = template.W.shape
    n = template.phi.shape[0]
    sizes = [m * k, m * k, n, n, template.o.shape[0], template.p.shape[0]]
    parts = np.split(vec, np.cumsum(sizes)[:-1])
    return OptimizationPoint(
        W=(parts[0] + 1j * parts[1]).reshape(m, k),
        phi=parts[2] + 1j * parts[3],
        o=parts[4].copy(), p=parts[5].copy())


def ambient_to_direction(vec: np.ndarray, template: OptimizationPoint) -> TangentDirection:
    pt = ambient_to_point(vec, template)
    return TangentDirection(pt.W, pt.phi, pt.o, pt.p)


def finite_difference(func, x: OptimizationPoint, step: float) -> TangentDirection:
    """Central-difference ambient gradient of a scalar function of a point."""
    base = point_to_ambient(x)
    grad = np.empty_like(base)
    for i in range(base.size):
        forward = base.copy()
        forward[i] += step
        backward = base.copy()
        backward[i] -= step
        grad[i] = (func(ambient_to_point(forward, x))
                   - func(ambient_to_point(backward, x))) / (2.0 * step)
    return ambient_to_direction(grad, x)


def finite_difference_gradient(x: OptimizationPoint, scenario: Scenario,
                               pen: PenaltyState, cs: ConstraintSet | None = None,
                               step: float = 1e-6) -> TangentDirection:
    """Tangent-projected central-difference gradient of the penalized objective."""
    if step <= 0:
        raise ValueError("step must be positive")
    ambient = finite_difference(
        lambda pt: smoothed_objective(pt, scenario, pen, cs), x, step)
    return transport(x, ambient)


def direction_to_ambient(d: TangentDirection) -> np.ndarray:
    return np.concatenate([d.W.real.ravel(), d.W.imag.ravel(),
                           d.phi.real, d.phi.imag, d.o, d.p])


def max_relative_error(analytic: TangentDirection, reference: TangentDirection,
                       floor_frac: float = 1e-2) -> float:
    """Worst entrywise relative error with a mixed absolute floor.

    Entries far below the largest gradient entry are dominated by
    finite-difference roundoff, so the denominator never drops below
    ``floor_frac`` times the largest reference entry.
    """
    a = direction_to_ambient(analytic)
    r = direction_to_ambient(reference)
    floor = floor_frac * max(np.abs(r).max(), np.finfo(float).tiny)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(r)), floor)
    return float((np.abs(a - r) / denom).max())
