"""Characteristic integration for both species and the flow invariants.

The characteristic system is

    dx/dt = (p1, p2),    dp/dt = s * (E(x) + p x B(x)),    s = +1 / -1,

with position in R^2 and momentum in R^3.  The one-step map is a Boris
scheme in position-Verlet form: half drift, half electric kick, exact-style
magnetic rotation, half kick, half drift.  The rotation never changes |p|,
so with E = 0 the momentum modulus is preserved to rounding, and every
factor of the map has unit Jacobian, so phase-space volume is preserved.

In static axisymmetric fields the particle energy, canonical angular
momentum and axial canonical momentum

    E = |p|^2/2 +- U0(r),  F = x1 p2 - x2 p1 +- r A_phi(r),  G = p3 +- A_3(r)

are invariants of the exact flow; the Boris map conserves them to O(dt^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .extfield import ExternalField
from .grid import Grid2D

Species = Literal["plus", "minus"]
SPECIES = ("plus", "minus")
SPECIES_SIGN = {"plus": 1.0, "minus": -1.0}


class FieldHistoryError(ValueError):
    """Raised when the stored field history does not cover a requested time."""


@dataclass
class PhasePoint:
    """A single phase-space point (x in R^2, p in R^3) of one species."""

    x: np.ndarray
    p: np.ndarray
    species: Species = "plus"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(2)
        self.p = np.asarray(self.p, dtype=float).reshape(3)
        if self.species not in SPECIES:
            raise ValueError(f"unknown species {self.species!r}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise ValueError("phase point components must be finite")

    @property
    def sign(self) -> float:
        return SPECIES_SIGN[self.species]


@dataclass(frozen=True)
class InvariantTriple:
    """Particle energy, canonical angular momentum, axial canonical momentum."""

    E: float
    F: float
    G: float


# ----------------------------------------------------------------------
# Boris step
# ----------------------------------------------------------------------
def boris_push(
    x: np.ndarray,
    p: np.ndarray,
    sign: float,
    e_eval: Callable[[np.ndarray], np.ndarray],
    b_eval: Callable[[np.ndarray], np.ndarray],
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Boris step for arrays x (N, 2), p (N, 3).

    e_eval maps positions (N, 2) to the planar electric field (N, 2);
    b_eval maps positions to the full magnetic field (N, 3).  dt may be
    negative (the map is time reversible).
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    x_half = x + 0.5 * dt * p[..., :2]

    E2 = np.asarray(e_eval(x_half), dtype=float)
    B = np.asarray(b_eval(x_half), dtype=float)
    if not (np.all(np.isfinite(E2)) and np.all(np.isfinite(B))):
        raise ValueError("non-finite field evaluation in boris_push")

    half_kick = np.zeros_like(p)
    half_kick[..., :2] = 0.5 * dt * sign * E2

    pm = p + half_kick
    t = 0.5 * dt * sign * B
    t2 = np.sum(t * t, axis=-1, keepdims=True)
    s = 2.0 * t / (1.0 + t2)
    p_prime = pm + np.cross(pm, t)
    p_plus = pm + np.cross(p_prime, s)
    p_new = p_plus + half_kick

    x_new = x_half + 0.5 * dt * p_new[..., :2]
    return x_new, p_new


def boris_step(
    point: PhasePoint,
    e_field: Callable[[np.ndarray], np.ndarray],
    b_field: Callable[[np.ndarray], np.ndarray],
    dt: float,
) -> PhasePoint:
    """One Boris step of a single phase point (dt > 0)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, p = boris_push(point.x[None, :], point.p[None, :], point.sign, e_field, b_field, dt)
    return PhasePoint(x=x[0], p=p[0], species=point.species)


# ----------------------------------------------------------------------
# flow invariants
# ----------------------------------------------------------------------
def invariant_arrays(
    x: np.ndarray,
    p: np.ndarray,
    sign: float,
    u0_at: Callable[[np.ndarray], np.ndarray],
    extfield: ExternalField,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(E, F, G) for arrays of phase points of one species.

    F = x1 p2 - x2 p1 +- r A_phi(r) avoids any division by r and extends
    continuously by 0 on the axis.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    E = 0.5 * np.sum(p * p, axis=-1) + sign * np.asarray(u0_at(r), dtype=float)
    F = x[..., 0] * p[..., 1] - x[..., 1] * p[..., 0] + sign * r * extfield.a_phi_at(r)
    G = p[..., 2] + sign * extfield.a3_at(r)
    return E, F, G


def invariants(
    point: PhasePoint,
    u0_at: Callable[[np.ndarray], np.ndarray],
    extfield: ExternalField,
) -> InvariantTriple:
    """Invariant triple of a single phase point."""
    E, F, G = invariant_arrays(point.x[None, :], point.p[None, :], point.sign, u0_at, extfield)
    return InvariantTriple(E=float(E[0]), F=float(F[0]), G=float(G[0]))


# ----------------------------------------------------------------------
# recorded field history and backward evaluation
# ----------------------------------------------------------------------
@dataclass
class FieldHistory:
    """Per-step snapshots of the self-consistent electric field.

    Between snapshots the field is interpolated linearly in time (matching
    the second-order stepping); bilinear interpolation is used in space.
    The external magnetic field is static.
    """

    grid_origin: tuple[float, float]
    grid_h: float
    grid_nx: int
    grid_ny: int
    extfield: ExternalField
    self_field: bool = True
    times: list = field(default_factory=list)
    ex: list = field(default_factory=list)
    ey: list = field(default_factory=list)

    @classmethod
    def for_grid(cls, grid: Grid2D, extfield: ExternalField, self_field: bool = True) -> "FieldHistory":
        return cls(
            grid_origin=grid.origin,
            grid_h=grid.h,
            grid_nx=grid.nx,
            grid_ny=grid.ny,
            extfield=extfield,
            self_field=self_field,
        )

    def record(self, t: float, grid: Grid2D) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("history times must be strictly increasing")
        self.times.append(float(t))
        self.ex.append(grid.Ex.copy())
        self.ey.append(grid.Ey.copy())

    @property
    def t_final(self) -> float:
        return self.times[-1] if self.times else 0.0

    def _frame(self) -> Grid2D:
        return Grid2D(origin=self.grid_origin, h=self.grid_h, nx=self.grid_nx, ny=self.grid_ny)

    def e_at(self, t: float, points: np.ndarray) -> np.ndarray:
        """Electric field at time t, linear in time, bilinear in space."""
        if not self.self_field or not self.times:
            return np.zeros(np.shape(points)[:-1] + (2,))
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
            raise FieldHistoryError(
                f"time {t} outside recorded history [{times[0]}, {times[-1]}]"
            )
        k = int(np.searchsorted(times, t, side="right")) - 1
        k = max(0, min(k, len(times) - 1))
        frame = self._frame()
        if k == len(times) - 1:
            frame.Ex, frame.Ey = self.ex[k], self.ey[k]
            return frame.e_at(points)
        w = (t - times[k]) / (times[k + 1] - times[k])
        frame.Ex = (1.0 - w) * self.ex[k] + w * self.ex[k + 1]
        frame.Ey = (1.0 - w) * self.ey[k] + w * self.ey[k + 1]
        return frame.e_at(points)

    def b_at(self, t: float, points: np.ndarray) -> np.ndarray:
        return self.extfield.B(points)


def backward_map(
    history: FieldHistory,
    t: float,
    x: np.ndarray,
    p: np.ndarray,
    sign: float,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate characteristics backward from (t, x, p) to time 0.

    Steps have magnitude <= dt and are aligned so the last one lands on 0.
    Fields are sampled at the midpoint time of each backward substep.
    """
    if t < -1e-12:
        raise ValueError("t must be nonnegative")
    if history.self_field and history.times and t > history.t_final + 1e-9:
        raise FieldHistoryError(f"field history shorter than t={t}")
    x = np.array(x, dtype=float, copy=True)
    p = np.array(p, dtype=float, copy=True)
    if t <= 1e-15:
        return x, p
    n_steps = max(1, int(np.ceil(t / dt - 1e-12)))
    step = t / n_steps
    s = t
    for _ in range(n_steps):
        t_mid = s - 0.5 * step
        x, p = boris_push(
            x,
            p,
            sign,
            lambda pts: history.e_at(t_mid, pts),
            lambda pts: history.b_at(t_mid, pts),
            -step,
        )
        s -= step
    return x, p


def backward_evaluate(
    f0_sampler: Callable[[np.ndarray, np.ndarray, str], np.ndarray],
    history: FieldHistory,
    t: float,
    z: PhasePoint,
    dt: float = 1e-2,
) -> float:
    """f(t, z) = f0(Z(0, t, z)) for a single phase point.

    Exact-in-principle representation of the transported density: the
    initial datum is evaluated at the numerically backtracked foot point.
    """
    x0, p0 = backward_map(history, t, z.x[None, :], z.p[None, :], z.sign, dt)
    return float(f0_sampler(x0, p0, z.species)[0])


def backward_evaluate_batch(
    f0_sampler: Callable[[np.ndarray, np.ndarray, str], np.ndarray],
    history: FieldHistory,
    t: float,
    x: np.ndarray,
    p: np.ndarray,
    species: Species,
    dt: float = 1e-2,
) -> np.ndarray:
    """Vectorized backward evaluation on arrays of phase points."""
    x0, p0 = backward_map(history, t, x, p, SPECIES_SIGN[species], dt)
    return np.asarray(f0_sampler(x0, p0, species), dtype=float)
