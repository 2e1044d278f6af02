"""External magnetic field B = curl A for axisymmetric pinch configurations.

The vector potential A maps R^2 -> R^3 and depends on x = (x1, x2) only.
For axisymmetric fields with vanishing radial component:

* theta-pinch: A = A_phi(r) e_phi gives B = B_z(r) e_z with
  B_z = (1/r) d/dr (r A_phi); the removable singularity at r = 0 is the
  limit 2 A_phi'(0).
* z-pinch: A = A_3(r) e_z gives B = B_phi(r) e_phi with B_phi = -A_3'(r).

A_phi(0) = 0 and A_3(0) = 0 are required so that B is classical on the axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

_FD_EPS = 1e-6

THETA_PINCH = "theta_pinch"
Z_PINCH = "z_pinch"
GENERAL = "general"


def _fd_derivative(f: Callable, r: np.ndarray) -> np.ndarray:
    eps = _FD_EPS * np.maximum(1.0, np.abs(r))
    lo = np.maximum(r - eps, 0.0)
    return (np.asarray(f(r + eps)) - np.asarray(f(lo))) / (r + eps - lo)


@dataclass(frozen=True)
class ExternalField:
    """Evaluators for the vector potential A(x) and B = curl A."""

    kind: str
    a_phi: Optional[Callable] = None
    a_phi_prime: Optional[Callable] = None
    a3: Optional[Callable] = None
    a3_prime: Optional[Callable] = None
    a_general: Optional[Callable] = None
    b_general: Optional[Callable] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in (THETA_PINCH, Z_PINCH, GENERAL):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == THETA_PINCH:
            if self.a_phi is None:
                raise ValueError("theta_pinch requires a_phi")
            if abs(float(self.a_phi(np.array([0.0]))[0])) > 1e-12:
                raise ValueError("A_phi(0) must vanish (regularity on the axis)")
        if self.kind == Z_PINCH:
            if self.a3 is None:
                raise ValueError("z_pinch requires a3")
            if abs(float(self.a3(np.array([0.0]))[0])) > 1e-12:
                raise ValueError("A_3(0) must vanish (normalization on the axis)")
        if self.kind == GENERAL and self.a_general is None:
            raise ValueError("general field requires a_general")

    # ------------------------------------------------------------------
    # constructors
    # ------------------------------------------------------------------
    @classmethod
    def theta_pinch(cls, a_phi, a_phi_prime=None, label="") -> "ExternalField":
        return cls(kind=THETA_PINCH, a_phi=a_phi, a_phi_prime=a_phi_prime, label=label)

    @classmethod
    def z_pinch(cls, a3, a3_prime=None, label="") -> "ExternalField":
        return cls(kind=Z_PINCH, a3=a3, a3_prime=a3_prime, label=label)

    @classmethod
    def general(cls, a_func, b_func=None, label="") -> "ExternalField":
        return cls(kind=GENERAL, a_general=a_func, b_general=b_func, label=label)

    @classmethod
    def linear_theta_pinch(cls, slope: float, label="") -> "ExternalField":
        """A_phi = slope * r, giving the uniform axial field B_z = 2 slope."""
        return cls.theta_pinch(
            a_phi=lambda r: slope * np.asarray(r, dtype=float),
            a_phi_prime=lambda r: slope * np.ones_like(np.asarray(r, dtype=float)),
            label=label or f"linear theta-pinch slope={slope:g}",
        )

    @classmethod
    def none(cls) -> "ExternalField":
        """Zero field (B = 0, A = 0)."""
        zero3 = lambda x: np.zeros(np.shape(np.asarray(x))[:-1] + (3,))
        return cls(kind=GENERAL, a_general=zero3, b_general=zero3, label="zero field")

    # ------------------------------------------------------------------
    # radial component accessors (vanish when absent)
    # ------------------------------------------------------------------
    def a_phi_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.a_phi is None:
            return np.zeros_like(r)
        return np.asarray(self.a_phi(r), dtype=float)

    def a3_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.a3 is None:
            return np.zeros_like(r)
        return np.asarray(self.a3(r), dtype=float)

    def a_phi_prime_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.a_phi is None:
            return np.zeros_like(r)
        if self.a_phi_prime is not None:
            return np.asarray(self.a_phi_prime(r), dtype=float)
        return _fd_derivative(self.a_phi, r)

    def a3_prime_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.a3 is None:
            return np.zeros_like(r)
        if self.a3_prime is not None:
            return np.asarray(self.a3_prime(r), dtype=float)
        return _fd_derivative(self.a3, r)

    # ------------------------------------------------------------------
    # field evaluation at points of shape (..., 2)
    # ------------------------------------------------------------------
    def A(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == GENERAL:
            return np.asarray(self.a_general(points), dtype=float)
        x, y = points[..., 0], points[..., 1]
        r = np.hypot(x, y)
        out = np.zeros(points.shape[:-1] + (3,))
        safe = np.where(r > 0, r, 1.0)
        if self.a_phi is not None:
            aphi = self.a_phi_at(r)
            # e_phi = (-y/r, x/r); A_phi(0) = 0 keeps the origin regular
            out[..., 0] = np.where(r > 0, -aphi * y / safe, 0.0)
            out[..., 1] = np.where(r > 0, aphi * x / safe, 0.0)
        if self.a3 is not None:
            out[..., 2] = self.a3_at(r)
        return out

    def B(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.kind == GENERAL:
            if self.b_general is not None:
                return np.asarray(self.b_general(points), dtype=float)
            return self._curl_fd(points)
        x, y = points[..., 0], points[..., 1]
        r = np.hypot(x, y)
        out = np.zeros(points.shape[:-1] + (3,))
        safe = np.where(r > 0, r, 1.0)
        if self.a_phi is not None:
            aprime = self.a_phi_prime_at(r)
            bz = np.where(
                r > 0,
                aprime + self.a_phi_at(r) / safe,
                2.0 * self.a_phi_prime_at(np.zeros_like(r)),
            )
            out[..., 2] = bz
        if self.a3 is not None:
            a3p = self.a3_prime_at(r)
            # B = -A_3'(r) e_phi
            out[..., 0] = np.where(r > 0, a3p * y / safe, 0.0)
            out[..., 1] = np.where(r > 0, -a3p * x / safe, 0.0)
        return out

    def _curl_fd(self, points: np.ndarray) -> np.ndarray:
        """Central-difference curl for general A(x1, x2)."""
        eps = _FD_EPS
        dx = np.zeros_like(points)
        dx[..., 0] = eps
        dy = np.zeros_like(points)
        dy[..., 1] = eps
        dA_dx = (self.A(points + dx) - self.A(points - dx)) / (2 * eps)
        dA_dy = (self.A(points + dy) - self.A(points - dy)) / (2 * eps)
        out = np.zeros(points.shape[:-1] + (3,))
        out[..., 0] = dA_dy[..., 2]
        out[..., 1] = -dA_dx[..., 2]
        out[..., 2] = dA_dx[..., 1] - dA_dy[..., 0]
        return out

    def b_max_estimate(self, r_max: float, n: int = 256) -> float:
        """Sup of |B| on the disk of radius r_max (radial sampling)."""
        r = np.linspace(0.0, r_max, n)
        pts = np.column_stack([r, np.zeros_like(r)])
        return float(np.max(np.linalg.norm(self.B(pts), axis=-1)))
