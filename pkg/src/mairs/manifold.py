"""Product-manifold primitives for the joint beamforming / antenna-position variable.

The optimization variable bundles four factors:

* ``W``   -- complex precoding matrix on the sphere ``Tr(W W^H) = P_t``,
* ``phi`` -- complex IRS phase vector with unit-modulus entries,
* ``o``   -- unconstrained pre-images of the transmitter antenna positions,
* ``p``   -- unconstrained pre-images of the reflecting-element positions.

Tangent vectors carry the same four blocks.  The metric is the Euclidean one:
real part of the complex inner products plus plain dot products on the real
blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POWER_RTOL = 1e-9
MODULUS_TOL = 1e-12


class DegenerateRetractionError(ArithmeticError):
    """Raised when a retraction would normalize a zero vector; shrink the step."""


def _check_shapes(a, b, what: str):
    for name in ("W", "phi", "o", "p"):
        if getattr(a, name).shape != getattr(b, name).shape:
            raise ValueError(
                f"{what}: factor '{name}' shape mismatch "
                f"{getattr(a, name).shape} vs {getattr(b, name).shape}"
            )


@dataclass
class OptimizationPoint:
    """A point X = (W, phi, o, p) on the product manifold."""

    W: np.ndarray    # (M, K) complex
    phi: np.ndarray  # (N,) complex, unit modulus
    o: np.ndarray    # (M,) real
    p: np.ndarray    # (2N,) real

    def copy(self) -> "OptimizationPoint":
        return OptimizationPoint(self.W.copy(), self.phi.copy(), self.o.copy(), self.p.copy())


@dataclass
class TangentDirection:
    """An ambient or tangent direction with the same block structure as a point."""

    W: np.ndarray
    phi: np.ndarray
    o: np.ndarray
    p: np.ndarray

    def copy(self) -> "TangentDirection":
        return TangentDirection(self.W.copy(), self.phi.copy(), self.o.copy(), self.p.copy())

    def __add__(self, other: "TangentDirection") -> "TangentDirection":
        return TangentDirection(self.W + other.W, self.phi + other.phi,
                                self.o + other.o, self.p + other.p)

    def __sub__(self, other: "TangentDirection") -> "TangentDirection":
        return TangentDirection(self.W - other.W, self.phi - other.phi,
                                self.o - other.o, self.p - other.p)

    def __mul__(self, c: float) -> "TangentDirection":
        return TangentDirection(c * self.W, c * self.phi, c * self.o, c * self.p)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentDirection":
        return self * (-1.0)


def zero_direction_like(x) -> TangentDirection:
    return TangentDirection(np.zeros_like(x.W), np.zeros_like(x.phi),
                            np.zeros_like(x.o), np.zeros_like(x.p))


def flatten_direction(d: TangentDirection) -> np.ndarray:
    """Realified coordinates; the product metric becomes the plain dot product."""
    return np.concatenate([d.W.real.ravel(), d.W.imag.ravel(),
                           d.phi.real, d.phi.imag, d.o, d.p])


def unflatten_direction(vec: np.ndarray, template) -> TangentDirection:
    m, k = template.W.shape
    n = template.phi.shape[0]
    mk = m * k
    w = (vec[:mk] + 1j * vec[mk:2 * mk]).reshape(m, k)
    phi = vec[2 * mk:2 * mk + n] + 1j * vec[2 * mk + n:2 * mk + 2 * n]
    o = vec[2 * mk + 2 * n:2 * mk + 2 * n + template.o.shape[0]].copy()
    p = vec[2 * mk + 2 * n + template.o.shape[0]:].copy()
    return TangentDirection(w, phi, o, p)


class FlatTransport:
    """Tangent projection at a fixed point, acting on realified batches.

    Precomputes the radial directions of the sphere and circle blocks so a
    whole memory of vectors can be re-projected with a handful of matrix
    operations.  Rows of a (batch, dim) array are treated independently.
    """

    def __init__(self, x: OptimizationPoint):
        m, k = x.W.shape
        self.mk = m * k
        self.n = x.phi.shape[0]
        w_flat = np.concatenate([x.W.real.ravel(), x.W.imag.ravel()])
        self.w_unit = w_flat / np.linalg.norm(w_flat)
        self.phi_re = x.phi.real
        self.phi_im = x.phi.imag

    def apply(self, vecs: np.ndarray) -> np.ndarray:
        if vecs.ndim == 1:
            return self.apply_vec(vecs)
        arr = vecs.copy()
        mk, n = self.mk, self.n
        w = arr[:, :2 * mk]
        w -= np.outer(w @ self.w_unit, self.w_unit)
        re = arr[:, 2 * mk:2 * mk + n]
        im = arr[:, 2 * mk + n:2 * mk + 2 * n]
        radial = re * self.phi_re + im * self.phi_im
        re -= radial * self.phi_re
        im -= radial * self.phi_im
        return arr

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        arr = vec.copy()
        mk, n = self.mk, self.n
        w = arr[:2 * mk]
        w -= (w @ self.w_unit) * self.w_unit
        re = arr[2 * mk:2 * mk + n]
        im = arr[2 * mk + n:2 * mk + 2 * n]
        radial = re * self.phi_re + im * self.phi_im
        re -= radial * self.phi_re
        im -= radial * self.phi_im
        return arr


def inner_product(a: TangentDirection, b: TangentDirection) -> float:
    """Product metric: Re(Tr(a_W^H b_W) + a_phi^H b_phi) + a_o.b_o + a_p.b_p."""
    _check_shapes(a, b, "inner_product")
    val = (np.vdot(a.W, b.W).real + np.vdot(a.phi, b.phi).real
           + a.o @ b.o + a.p @ b.p)
    return float(val)


def norm(a: TangentDirection) -> float:
    return float(np.sqrt(max(inner_product(a, a), 0.0)))


def transport(x: OptimizationPoint, d: TangentDirection) -> TangentDirection:
    """Project an ambient direction onto the tangent space at ``x``.

    Sphere block: remove the radial component, scaled by Tr(W W^H) so that
    tangency holds for arbitrary transmit power.  Circle block: remove the
    entrywise radial components.  Real blocks pass through.
    """
    _check_shapes(x, d, "transport")
    ww = np.vdot(x.W, x.W).real
    radial = np.vdot(x.W, d.W).real / ww
    d_w = d.W - radial * x.W
    d_phi = d.phi - (d.phi.conj() * x.phi).real * x.phi
    return TangentDirection(d_w, d_phi, d.o.copy(), d.p.copy())


def retract(x: OptimizationPoint, d: TangentDirection, alpha: float) -> OptimizationPoint:
    """Step from ``x`` along ``d`` with step size ``alpha`` and renormalize.

    Raises DegenerateRetractionError when the stepped W or any phi entry has
    zero norm; the line search is expected to shrink ``alpha`` in that case.
    """
    _check_shapes(x, d, "retract")
    if alpha < 0:
        raise ValueError("retract: step size must be nonnegative")
    w_new = x.W + alpha * d.W
    w_norm2 = np.vdot(w_new, w_new).real
    if w_norm2 <= 0.0:
        raise DegenerateRetractionError("stepped precoder has zero norm")
    p_t = np.vdot(x.W, x.W).real
    w_new = np.sqrt(p_t / w_norm2) * w_new

    phi_new = x.phi + alpha * d.phi
    mods = np.abs(phi_new)
    if np.any(mods == 0.0):
        raise DegenerateRetractionError("stepped phase vector has a zero entry")
    phi_new = phi_new / mods

    return OptimizationPoint(w_new, phi_new, x.o + alpha * d.o, x.p + alpha * d.p)


def point_distance(a: OptimizationPoint, b: OptimizationPoint) -> float:
    """Ambient Frobenius/Euclidean distance over all four blocks."""
    return float(np.sqrt(
        np.linalg.norm(a.W - b.W) ** 2
        + np.linalg.norm(a.phi - b.phi) ** 2
        + np.linalg.norm(a.o - b.o) ** 2
        + np.linalg.norm(a.p - b.p) ** 2
    ))


@dataclass
class PointDiagnostics:
    power_residual: float          # |Tr(W W^H) - P_t| / P_t
    modulus_residuals: np.ndarray  # per-entry | |phi_n| - 1 |
    finite_W: bool
    finite_phi: bool
    finite_o: bool
    finite_p: bool

    @property
    def max_modulus_residual(self) -> float:
        return float(self.modulus_residuals.max()) if self.modulus_residuals.size else 0.0

    @property
    def all_finite(self) -> bool:
        return self.finite_W and self.finite_phi and self.finite_o and self.finite_p

    @property
    def ok(self) -> bool:
        return (self.all_finite and self.power_residual <= POWER_RTOL
                and self.max_modulus_residual <= MODULUS_TOL)


def validate_point(x: OptimizationPoint, p_t: float) -> PointDiagnostics:
    """Report constraint residuals and finiteness; never raises."""
    power = np.vdot(x.W, x.W).real
    return PointDiagnostics(
        power_residual=float(abs(power - p_t) / p_t),
        modulus_residuals=np.abs(np.abs(x.phi) - 1.0),
        finite_W=bool(np.isfinite(x.W).all()),
        finite_phi=bool(np.isfinite(x.phi).all()),
        finite_o=bool(np.isfinite(x.o).all()),
        finite_p=bool(np.isfinite(x.p).all()),
    )
