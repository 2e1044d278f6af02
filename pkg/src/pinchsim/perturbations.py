"""Built-in perturbation library: admissible initial-data and field bumps.

Initial-data perturbations add a nonnegative C^1 phase-space bump to each
species.  The bumps sit at different radii (so the density difference
rho_f - rho_0 is a genuine dipole, not identically zero) and the minus
bump's amplitude is calibrated so both species gain the same charge;
calibration on the quadrature actually used for the admissibility check
makes the discrete total-charge mismatch vanish to rounding.

Field perturbations are C^2 compactly supported additions to A_phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .extfield import ExternalField
from .pusher import SPECIES_SIGN


def _c1_bump(s: np.ndarray) -> np.ndarray:
    """(1 - s^2)^2 on |s| < 1, zero outside (C^1)."""
    s2 = np.minimum(s * s, 1.0)
    return (1.0 - s2) ** 2


def _c2_bump(s: np.ndarray) -> np.ndarray:
    """(1 - s^2)^3 on |s| < 1, zero outside (C^2)."""
    s2 = np.minimum(s * s, 1.0)
    return (1.0 - s2) ** 3


@dataclass
class BumpPerturbation:
    """Charge-neutral pair of C^1 phase-space bumps (one per species).

    The per-species bump is

        bump(x, p) = eps * scale_sp * u((r - r_c)/r_w) * u(|p|/p_cut) * g(zeta)

    with zeta = sign * F(x, p) the signed canonical angular momentum and
    g(zeta) = zeta^2 / (zeta^2 + a^2) restricted to the requested side.
    g vanishes to second order at {F = 0}, keeping bump/psi bounded on the
    support side (admissibility) and suppressing region-membership flips
    of markers near that null set.  scale_minus is fixed by charge
    calibration; shapes are normalized so the plus bump has unit peak.
    """

    eps: float
    extfield: ExternalField
    r_center_plus: float = 0.30
    r_center_minus: float = 0.45
    r_width: float = 0.18
    p_cut: float = 0.8
    sigma_scale: float = 0.15
    side: str = "both"  # negative | positive | both
    peak: float = field(default=0.0)
    minus_scale: float = field(default=0.0)

    def __post_init__(self):
        if self.side not in ("negative", "positive", "both"):
            raise ValueError(f"unknown side {self.side!r}")
        for rc in (self.r_center_plus, self.r_center_minus):
            if rc <= self.r_width:
                raise ValueError("bump must stay away from the axis (r_center > r_width)")
        if self.peak == 0.0:
            self.peak = self._estimate_peak()
        if self.minus_scale == 0.0:
            X, P = self._reference_nodes()
            self.calibrate_charge(X, P)

    def _g(self, zeta: np.ndarray) -> np.ndarray:
        q = zeta ** 2 / (zeta ** 2 + self.sigma_scale ** 2)
        if self.side == "negative":
            return np.where(zeta < 0.0, q, 0.0)
        if self.side == "positive":
            return np.where(zeta > 0.0, q, 0.0)
        return q

    def _shape(self, x: np.ndarray, p: np.ndarray, species: str) -> np.ndarray:
        sign = SPECIES_SIGN[species]
        rc = self.r_center_plus if species == "plus" else self.r_center_minus
        r = np.hypot(x[..., 0], x[..., 1])
        pmag = np.sqrt(np.sum(p * p, axis=-1))
        F = x[..., 0] * p[..., 1] - x[..., 1] * p[..., 0] + sign * r * self.extfield.a_phi_at(r)
        zeta = sign * F
        return (
            _c1_bump((r - rc) / self.r_width)
            * _c1_bump(pmag / self.p_cut)
            * self._g(zeta)
        )

    def _reference_nodes(self, nx: int = 36, np_: int = 13) -> tuple[np.ndarray, np.ndarray]:
        r_hi = max(self.r_center_plus, self.r_center_minus) + self.r_width
        ax = np.linspace(-r_hi, r_hi, nx)
        ap = np.linspace(-self.p_cut, self.p_cut, np_)
        X1, X2 = np.meshgrid(ax, ax, indexing="ij")
        P1, P2, P3 = np.meshgrid(ap, ap, ap, indexing="ij")
        X = np.repeat(np.column_stack([X1.ravel(), X2.ravel()]), ap.size ** 3, axis=0)
        P = np.tile(np.column_stack([P1.ravel(), P2.ravel(), P3.ravel()]), (ax.size ** 2, 1))
        return X, P

    def _estimate_peak(self) -> float:
        X, P = self._reference_nodes()
        peak = float(np.max(self._shape(X, P, "plus")))
        if peak <= 0:
            raise ValueError("degenerate bump: zero peak on the probe lattice")
        return peak

    def calibrate_charge(
        self,
        x_plus: np.ndarray,
        p_plus: np.ndarray,
        x_minus: Optional[np.ndarray] = None,
        p_minus: Optional[np.ndarray] = None,
    ) -> None:
        """Fix minus_scale so both species gain equal charge on these nodes.

        Calibrating on the same quadrature nodes that later evaluate the
        admissibility check makes the discrete mismatch vanish to rounding.
        """
        if x_minus is None:
            x_minus, p_minus = x_plus, p_plus
        m_plus = float(np.sum(self._shape(x_plus, p_plus, "plus")))
        m_minus = float(np.sum(self._shape(x_minus, p_minus, "minus")))
        if m_minus <= 0 or m_plus <= 0:
            raise ValueError("bump mass calibration failed: empty support on nodes")
        self.minus_scale = m_plus / m_minus

    def value(self, x, p, species: str) -> np.ndarray:
        """Bump density added to the given species."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        scale = 1.0 if species == "plus" else self.minus_scale
        return self.eps * scale * self._shape(x, p, species) / self.peak


@dataclass
class PerturbedDatum:
    """Initial datum f0 + bump, exposed as an (x, p, species) sampler."""

    f0_sampler: Callable
    bump: Optional[BumpPerturbation] = None

    def __call__(self, x, p, species: str) -> np.ndarray:
        base = np.asarray(self.f0_sampler(x, p, species), dtype=float)
        if self.bump is None or self.bump.eps == 0.0:
            return base
        return base + self.bump.value(x, p, species)


@dataclass(frozen=True)
class FieldBump:
    """C^2 compactly supported addition to A_phi."""

    amplitude: float
    r_center: float = 0.5
    r_width: float = 0.35

    def __post_init__(self):
        if self.r_center <= self.r_width:
            raise ValueError("field bump must vanish near the axis")

    def delta_a_phi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.amplitude * _c2_bump((r - self.r_center) / self.r_width)

    def delta_a_phi_prime(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        s = (r - self.r_center) / self.r_width
        s2 = np.minimum(s * s, 1.0)
        return self.amplitude * (-6.0 * s * (1.0 - s2) ** 2) / self.r_width

    def delta_b_z(self, r) -> np.ndarray:
        """Axial field change (1/r) d/dr (r dA_phi)."""
        r = np.asarray(r, dtype=float)
        safe = np.where(r > 0, r, 1.0)
        return np.where(
            r > 0,
            self.delta_a_phi_prime(r) + self.delta_a_phi(r) / safe,
            2.0 * self.delta_a_phi_prime(np.zeros_like(r)),
        )


def perturbed_theta_pinch(base: ExternalField, bump: FieldBump) -> ExternalField:
    """theta-pinch field with A_phi replaced by A_phi + delta A_phi."""
    if base.kind != "theta_pinch":
        raise ValueError("field perturbations are defined for theta-pinch bases")
    a_phi = lambda r: base.a_phi_at(r) + bump.delta_a_phi(r)
    a_prime = lambda r: base.a_phi_prime_at(r) + bump.delta_a_phi_prime(r)
    return ExternalField.theta_pinch(
        a_phi, a_prime, label=f"{base.label} + bump(amp={bump.amplitude:g})"
    )


def calibrate_on_eval_lattice(bump: BumpPerturbation, lattice) -> BumpPerturbation:
    """Recalibrate charge matching on an EvalLattice's per-species nodes."""
    xp, pp = lattice.nodes("plus")
    xm, pm = lattice.nodes("minus")
    bump.calibrate_charge(xp, pp, xm, pm)
    return bump
