"""Ansatz profiles for separated steady states f0 = theta(E) * psi(F, G).

The built-in profiles are designed so the structural assumptions hold
verifiably:

* theta is C^1 on R, positive below the cutoff energy E_max, zero above it,
  strictly decreasing on every physically reachable energy interval, and
  integrable (a Gaussian turnover well below any reachable energy handles
  tau -> -infinity).  Its L^1 norm has closed form, which the confinement
  condition needs.
* psi(sigma, mu) is a C^1 bump in sigma on the correct sign with a Gaussian
  mu-profile; it is majorized by psi_star(mu) = exp(-mu^2 / (2 w^2)) with
  ||psi_star||_1 = w sqrt(2 pi).

The species sign convention: the plus species requires sigma < 0 (support
of psi+), the minus species sigma > 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

SPECIES_SIGN = {"plus": 1.0, "minus": -1.0}


@dataclass
class SpeciesProfile:
    """Profiles and derived constants of one species' ansatz."""

    theta: Callable[[np.ndarray], np.ndarray]
    theta_prime: Callable[[np.ndarray], np.ndarray]
    e_max: float
    theta_l1: float
    psi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    psi_star: Callable[[np.ndarray], np.ndarray]
    psi_star_l1: float
    psi_sup: float
    sign: float = 1.0
    g0: Optional[float] = None  # z-pinch axial momentum cutoff
    meta: dict = field(default_factory=dict)

    def eta(self, E, F, G) -> np.ndarray:
        """Ansatz value eta(E, F, G) = theta(E) psi(F, G)."""
        return np.asarray(self.theta(E)) * np.asarray(self.psi(F, G))

    @property
    def eta_star_l1(self) -> float:
        """||eta_*||_1 = ||theta||_1 ||psi_*||_1 for the separated ansatz."""
        return self.theta_l1 * self.psi_star_l1


@dataclass
class AnsatzPair:
    """Both species' profiles plus the pinch configuration."""

    plus: SpeciesProfile
    minus: SpeciesProfile
    pinch: str = "theta"  # "theta" or "z"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.pinch not in ("theta", "z"):
            raise ValueError(f"unknown pinch kind {self.pinch!r}")
        self.plus.sign = 1.0
        self.minus.sign = -1.0

    def species(self, name: str) -> SpeciesProfile:
        if name == "plus":
            return self.plus
        if name == "minus":
            return self.minus
        raise ValueError(f"unknown species {name!r}")

    @property
    def e_max_overall(self) -> float:
        return max(self.plus.e_max, self.minus.e_max)


# ----------------------------------------------------------------------
# energy profiles
# ----------------------------------------------------------------------
def _linear_shape(s, delta, turn, decay):
    """C^1 shape: quadratic cap near the cutoff, linear mid, Gaussian turnover."""
    s = np.asarray(s, dtype=float)
    v = turn - delta / 2.0
    u = s - turn
    out = np.where(
        s <= 0.0,
        0.0,
        np.where(
            s <= delta,
            s ** 2 / (2.0 * delta),
            np.where(s <= turn, s - delta / 2.0, (v + u) * np.exp(-((u / decay) ** 2))),
        ),
    )
    return out


def _linear_shape_prime(s, delta, turn, decay):
    s = np.asarray(s, dtype=float)
    v = turn - delta / 2.0
    u = s - turn
    tail = np.exp(-((u / decay) ** 2)) * (1.0 - 2.0 * u * (v + u) / decay ** 2)
    return np.where(
        s <= 0.0,
        0.0,
        np.where(s <= delta, s / delta, np.where(s <= turn, 1.0, tail)),
    )


def linear_cutoff_theta(kappa: float, e_max: float, *, smooth_delta: float = 0.05,
                        turn: float = 2.5, decay: float = 1.0):
    """C^1 linear-cutoff profile theta(E) ~ kappa (E_max - E)_+.

    Returns (theta, theta_prime, l1_norm).  smooth_delta is the width of
    the quadratic cap that makes the cutoff C^1; turn is the distance below
    E_max at which the Gaussian turnover begins (must stay below every
    reachable minimum energy so the profile is strictly decreasing there).
    """
    if min(kappa, e_max, smooth_delta, decay) <= 0 or turn <= smooth_delta:
        raise ValueError("profile parameters must be positive with turn > smooth_delta")
    v = turn - smooth_delta / 2.0
    l1 = kappa * (
        smooth_delta ** 2 / 6.0
        + 0.5 * v ** 2
        - smooth_delta ** 2 / 8.0
        + v * decay * math.sqrt(math.pi) / 2.0
        + decay ** 2 / 2.0
    )
    theta = lambda E: kappa * _linear_shape(e_max - np.asarray(E, dtype=float), smooth_delta, turn, decay)
    theta_prime = lambda E: -kappa * _linear_shape_prime(
        e_max - np.asarray(E, dtype=float), smooth_delta, turn, decay
    )
    return theta, theta_prime, l1


def _quadratic_shape(s, turn, decay):
    s = np.asarray(s, dtype=float)
    v = turn ** 2
    u = s - turn
    return np.where(
        s <= 0.0,
        0.0,
        np.where(s <= turn, s ** 2, (v + 2.0 * turn * u) * np.exp(-((u / decay) ** 2))),
    )


def _quadratic_shape_prime(s, turn, decay):
    s = np.asarray(s, dtype=float)
    v = turn ** 2
    u = s - turn
    tail = np.exp(-((u / decay) ** 2)) * (2.0 * turn - 2.0 * u * (v + 2.0 * turn * u) / decay ** 2)
    return np.where(s <= 0.0, 0.0, np.where(s <= turn, 2.0 * s, tail))


def quadratic_cutoff_theta(kappa: float, e_max: float, *, turn: float = 2.5, decay: float = 1.0):
    """C^1 quadratic-cutoff profile theta(E) ~ kappa (E_max - E)_+^2."""
    if min(kappa, e_max, turn, decay) <= 0:
        raise ValueError("profile parameters must be positive")
    l1 = kappa * (turn ** 3 / 3.0 + turn ** 2 * decay * math.sqrt(math.pi) / 2.0 + turn * decay ** 2)
    theta = lambda E: kappa * _quadratic_shape(e_max - np.asarray(E, dtype=float), turn, decay)
    theta_prime = lambda E: -kappa * _quadratic_shape_prime(e_max - np.asarray(E, dtype=float), turn, decay)
    return theta, theta_prime, l1


# ----------------------------------------------------------------------
# angular-momentum / axial-momentum profiles
# ----------------------------------------------------------------------
def sign_bump_psi(species_sign: float, *, sigma_scale: float = 0.2, mu_width: float = 0.3):
    """psi(sigma, mu) = q(sigma) exp(-mu^2/(2w^2)) supported on sign*sigma < 0.

    q(sigma) = sigma^2 / (sigma^2 + a^2) vanishes to second order at
    sigma = 0, so psi is C^1 across the support boundary.
    """
    a2 = sigma_scale ** 2
    w = mu_width

    def psi(sigma, mu):
        sigma = np.asarray(sigma, dtype=float)
        mu = np.asarray(mu, dtype=float)
        q = np.where(species_sign * sigma < 0.0, sigma ** 2 / (sigma ** 2 + a2), 0.0)
        return q * np.exp(-(mu ** 2) / (2.0 * w ** 2))

    psi_star = lambda mu: np.exp(-(np.asarray(mu, dtype=float) ** 2) / (2.0 * w ** 2))
    return psi, psi_star, w * math.sqrt(2.0 * math.pi), 1.0


def zpinch_psi(species_sign: float, g0: float, *, sigma_width: float = 0.5,
               mu_width: float = 0.5, g_scale: float = 0.2):
    """z-pinch profile vanishing for sign*mu >= sign*g0, Gaussian elsewhere."""
    if species_sign * g0 <= 0:
        raise ValueError("g0 must satisfy sign * g0 > 0")
    a2 = g_scale ** 2
    w = mu_width
    sw = sigma_width

    def psi(sigma, mu):
        sigma = np.asarray(sigma, dtype=float)
        mu = np.asarray(mu, dtype=float)
        d = species_sign * (g0 - mu)  # > 0 inside the support
        qz = np.where(d > 0.0, d ** 2 / (d ** 2 + a2), 0.0)
        return qz * np.exp(-(mu ** 2) / (2.0 * w ** 2)) * np.exp(-(sigma ** 2) / (2.0 * sw ** 2))

    psi_star = lambda mu: np.exp(-(np.asarray(mu, dtype=float) ** 2) / (2.0 * w ** 2))
    return psi, psi_star, w * math.sqrt(2.0 * math.pi), 1.0


# ----------------------------------------------------------------------
# assembled pairs
# ----------------------------------------------------------------------
def standard_ansatz(
    profile: str = "linear",
    *,
    kappa_plus: float = 0.15,
    kappa_minus: float = 0.09,
    e_max: float = 0.5,
    smooth_delta: float = 0.05,
    turn: float = 2.5,
    decay: float = 1.0,
    sigma_scale: float = 0.2,
    mu_width: float = 0.3,
    pinch: str = "theta",
    g0_plus: float = 0.6,
    g0_minus: float = -0.6,
) -> AnsatzPair:
    """Built-in ansatz pair used by the experiments and tests."""
    species = {}
    for name, kappa in (("plus", kappa_plus), ("minus", kappa_minus)):
        if kappa == 0.0:
            zero1 = lambda E: np.zeros_like(np.asarray(E, dtype=float))
            theta, theta_prime, l1 = zero1, zero1, 0.0
        elif profile == "linear":
            theta, theta_prime, l1 = linear_cutoff_theta(
                kappa, e_max, smooth_delta=smooth_delta, turn=turn, decay=decay
            )
        elif profile == "quadratic":
            theta, theta_prime, l1 = quadratic_cutoff_theta(kappa, e_max, turn=turn, decay=decay)
        else:
            raise ValueError(f"unknown profile {profile!r}")
        sgn = SPECIES_SIGN[name]
        if pinch == "theta":
            psi, psi_star, psi_l1, psi_sup = sign_bump_psi(
                sgn, sigma_scale=sigma_scale, mu_width=mu_width
            )
            g0 = None
        elif pinch == "z":
            g0 = g0_plus if name == "plus" else g0_minus
            psi, psi_star, psi_l1, psi_sup = zpinch_psi(sgn, g0, mu_width=mu_width)
        else:
            raise ValueError(f"unknown pinch {pinch!r}")
        species[name] = SpeciesProfile(
            theta=theta,
            theta_prime=theta_prime,
            e_max=e_max,
            theta_l1=l1,
            psi=psi,
            psi_star=psi_star,
            psi_star_l1=psi_l1,
            psi_sup=psi_sup,
            sign=sgn,
            g0=g0,
            meta={"profile": profile, "kappa": kappa},
        )
    meta = {
        "profile": profile,
        "kappa_plus": kappa_plus,
        "kappa_minus": kappa_minus,
        "e_max": e_max,
        "sigma_scale": sigma_scale,
        "mu_width": mu_width,
        "pinch": pinch,
    }
    return AnsatzPair(plus=species["plus"], minus=species["minus"], pinch=pinch, meta=meta)


def zero_ansatz(e_max: float = 0.5) -> AnsatzPair:
    """Trivial ansatz eta = 0 (useful for plumbing tests)."""
    zero1 = lambda E: np.zeros_like(np.asarray(E, dtype=float))
    zero2 = lambda F, G: np.zeros(np.broadcast(np.asarray(F), np.asarray(G)).shape)
    mk = lambda sgn: SpeciesProfile(
        theta=zero1,
        theta_prime=zero1,
        e_max=e_max,
        theta_l1=0.0,
        psi=zero2,
        psi_star=lambda mu: np.zeros_like(np.asarray(mu, dtype=float)),
        psi_star_l1=0.0,
        psi_sup=0.0,
        sign=sgn,
    )
    return AnsatzPair(plus=mk(1.0), minus=mk(-1.0), meta={"profile": "zero"})


def confining_theta_pinch_field(
    ansatz: AnsatzPair,
    r_tilde: float,
    *,
    margin: float = 0.1,
    shape: str = "linear",
    s1_fraction: float = 0.75,
):
    """A_phi satisfying the theta-pinch confinement bound for all r >= r_tilde.

    The bound is A_phi(r) >= max_pm sqrt(2 E_max + 4 pi^2 ||eta_*||_1 r^2).

    shape="linear": A_phi = slope * r with
    slope^2 >= 4 pi^2 max ||eta_*||_1 + 2 max E_max / r_tilde^2.

    shape="cubic": A_phi = s1 r + s3 r^3 with s1 = s1_fraction * sqrt(2 E_max)
    and s3 fixed by the bound at r_tilde.  The cubic stays weak in the bulk
    (so the constructed state is not squeezed onto the axis) while meeting
    the requirement at and beyond r_tilde; beyond r_tilde the cubic grows
    strictly faster than the sqrt bound since already A_phi(r_tilde) exceeds
    it and d/dr [s1 r + s3 r^3] >= A_phi(r)/r >= the bound's slope there.
    """
    from .extfield import ExternalField

    k2 = max(
        4.0 * math.pi ** 2 * ansatz.plus.eta_star_l1,
        4.0 * math.pi ** 2 * ansatz.minus.eta_star_l1,
    )
    e2max = 2.0 * ansatz.e_max_overall
    required_rt = math.sqrt(e2max + k2 * r_tilde ** 2)
    if shape == "linear":
        slope = (1.0 + margin) * math.sqrt(k2 + e2max / r_tilde ** 2)
        return ExternalField.linear_theta_pinch(
            slope, label=f"confining theta-pinch slope={slope:.4g}"
        )
    if shape != "cubic":
        raise ValueError(f"unknown field shape {shape!r}")
    s1 = s1_fraction * math.sqrt(e2max)
    s3 = max(((1.0 + margin) * required_rt - s1 * r_tilde) / r_tilde ** 3, 0.0)
    a_phi = lambda r: s1 * np.asarray(r, dtype=float) + s3 * np.asarray(r, dtype=float) ** 3
    a_phi_prime = lambda r: s1 + 3.0 * s3 * np.asarray(r, dtype=float) ** 2
    field_ = ExternalField.theta_pinch(
        a_phi, a_phi_prime, label=f"confining theta-pinch s1={s1:.4g} s3={s3:.4g}"
    )
    # certify the sufficient condition on a scan (the construction is
    # sufficient analytically, the scan guards parameter mistakes)
    rr = np.linspace(r_tilde, 10.0 * r_tilde, 2048)
    req = np.sqrt(e2max + k2 * rr ** 2)
    if np.any(field_.a_phi_at(rr) < req):
        raise ValueError("cubic field fails the confinement bound on the scan range")
    return field_
