"""Axisymmetric confined steady states via the fixed-point formulation.

A steady state of the separated form f0 = theta(E) psi(F, G) induces the
radial density

    rho0(r) = int dG int_{E0(G,r)}^{E_max} dE int_0^{2pi} dtheta
              theta(E) psi(r (u sin(theta) + s A_phi(r)), G),

    u = sqrt(2 (E - s U0(r)) - (G - s A_3(r))^2),
    E0 = (G - s A_3(r))^2 / 2 + s U0(r),      s = +1 / -1 per species,

obtained from the momentum integral by the change of variables to the
flow invariants.  Coupling the density back through the radial Poisson
integral with the normalization U0(0) = 0 gives a fixed-point problem for
U0, solved here by Picard iteration from U0 = 0.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline

from .ansatz import AnsatzPair, SpeciesProfile
from .extfield import ExternalField
from .fieldsolve import radial_potential_from_samples
from .pusher import SPECIES_SIGN, invariant_arrays


class FixedPointError(RuntimeError):
    """Raised when the Picard iteration is used in an invalid configuration."""


class SupportScanError(RuntimeError):
    """Raised when no support is detected within the scan range."""


@dataclass(frozen=True)
class QuadSpec:
    """Quadrature resolution of the reduced triple integral.

    Gauss-Legendre in the energy and angle variables, truncated trapezoid
    in the axial canonical momentum over the majorant's effective support
    (mu_cut Gaussian widths).
    """

    n_g: int = 33
    n_e: int = 24
    n_theta: int = 24
    mu_cut: float = 6.0


@dataclass
class RadialSteadyState:
    """Radial samples of the converged steady state."""

    r: np.ndarray
    u0: np.ndarray
    rho0_plus: np.ndarray
    rho0_minus: np.ndarray
    R_plus: float
    R_minus: float
    R: float
    e_min_plus: float
    e_min_minus: float
    M: float
    converged: bool
    residual: float
    iterations: int
    scan_resolution: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._spline = None

    @property
    def rmax(self) -> float:
        return float(self.r[-1])

    @property
    def rho0(self) -> np.ndarray:
        return self.rho0_plus - self.rho0_minus

    def _build_spline(self):
        if self._spline is None:
            # clamped at the axis (symmetry), tail-matched derivative at rmax
            du_end = -2.0 * self.M / self.rmax
            self._spline = CubicSpline(
                self.r, self.u0, bc_type=((1, 0.0), (1, du_end))
            )
        return self._spline

    def u0_at(self, r) -> np.ndarray:
        """Smooth U0(r); logarithmic tail U0(rmax) - 2M ln(r/rmax) beyond rmax."""
        r = np.asarray(r, dtype=float)
        sp = self._build_spline()
        inside = np.clip(r, 0.0, self.rmax)
        vals = sp(inside)
        tail = self.u0[-1] - 2.0 * self.M * np.log(np.maximum(r, self.rmax) / self.rmax)
        return np.where(r <= self.rmax, vals, tail)

    def u0_prime_at(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        sp = self._build_spline()
        inside = np.clip(r, 0.0, self.rmax)
        vals = sp(inside, 1)
        tail = -2.0 * self.M / np.maximum(r, self.rmax)
        return np.where(r <= self.rmax, vals, tail)

    def e_eval(self, points) -> np.ndarray:
        """Radial electric field E = -U0'(r) r_hat at points (..., 2)."""
        points = np.asarray(points, dtype=float)
        x, y = points[..., 0], points[..., 1]
        r = np.hypot(x, y)
        safe = np.where(r > 0, r, 1.0)
        er = -self.u0_prime_at(r)
        return np.stack(
            [np.where(r > 0, er * x / safe, 0.0), np.where(r > 0, er * y / safe, 0.0)],
            axis=-1,
        )

    def m_of_r(self, r) -> np.ndarray:
        """Enclosed charge M(r) = 2 pi int_0^r s rho0(s) ds."""
        r = np.asarray(r, dtype=float)
        dr = np.diff(self.r)
        integrand = self.r * self.rho0
        cum = np.concatenate([[0.0], np.cumsum(0.5 * dr * (integrand[:-1] + integrand[1:]))])
        out = 2.0 * math.pi * np.interp(np.clip(r, 0.0, self.rmax), self.r, cum)
        return np.where(r >= self.rmax, 2.0 * math.pi * cum[-1], out)

    # ------------------------------------------------------------------
    # persistence: CSV with a metadata header block
    # ------------------------------------------------------------------
    def save_csv(self, path) -> None:
        buf = io.StringIO()
        buf.write("# radial steady state\n")
        for key in sorted(self.meta):
            buf.write(f"# {key} = {self.meta[key]}\n")
        buf.write(f"# R_plus = {self.R_plus:.17g}\n")
        buf.write(f"# R_minus = {self.R_minus:.17g}\n")
        buf.write(f"# R = {self.R:.17g}\n")
        buf.write(f"# E_min_plus = {self.e_min_plus:.17g}\n")
        buf.write(f"# E_min_minus = {self.e_min_minus:.17g}\n")
        buf.write(f"# M = {self.M:.17g}\n")
        buf.write(f"# converged = {self.converged}\n")
        buf.write(f"# residual = {self.residual:.17g}\n")
        buf.write(f"# iterations = {self.iterations}\n")
        buf.write("r,U0,rho0_plus,rho0_minus\n")
        for k in range(self.r.size):
            buf.write(
                f"{self.r[k]:.17g},{self.u0[k]:.17g},{self.rho0_plus[k]:.17g},{self.rho0_minus[k]:.17g}\n"
            )
        with open(path, "w") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load_csv(cls, path) -> "RadialSteadyState":
        meta = {}
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "=" in line:
                        key, val = line[1:].split("=", 1)
                        meta[key.strip()] = val.strip()
                    continue
                if line.startswith("r,"):
                    continue
                rows.append([float(v) for v in line.split(",")])
        data = np.asarray(rows)
        scalars = {k: float(meta.pop(k)) for k in
                   ("R_plus", "R_minus", "R", "E_min_plus", "E_min_minus", "M", "residual")}
        return cls(
            r=data[:, 0],
            u0=data[:, 1],
            rho0_plus=data[:, 2],
            rho0_minus=data[:, 3],
            R_plus=scalars["R_plus"],
            R_minus=scalars["R_minus"],
            R=scalars["R"],
            e_min_plus=scalars["E_min_plus"],
            e_min_minus=scalars["E_min_minus"],
            M=scalars["M"],
            converged=meta.pop("converged") == "True",
            residual=scalars["residual"],
            iterations=int(meta.pop("iterations")),
            meta=meta,
        )


# ----------------------------------------------------------------------
# the reduced triple integral
# ----------------------------------------------------------------------
def _species_density(
    profile: SpeciesProfile,
    field_: ExternalField,
    r: np.ndarray,
    u0_vals: np.ndarray,
    quad: QuadSpec,
    mu_width_hint: Optional[float] = None,
) -> np.ndarray:
    s = profile.sign
    r = np.asarray(r, dtype=float)
    u0_vals = np.asarray(u0_vals, dtype=float)

    a_phi = field_.a_phi_at(r)
    a3 = field_.a3_at(r)

    # G-range: intersection of the kinematic window |G - s A3| <= u_max
    # with the majorant's effective support
    u_max_sq = 2.0 * (profile.e_max - s * u0_vals)
    u_max = np.sqrt(np.maximum(u_max_sq, 0.0))
    g_lo_kin = s * a3 - u_max
    g_hi_kin = s * a3 + u_max
    # psi_star support estimate: scan where psi_star is above a tiny floor
    probe = np.linspace(-50.0, 50.0, 4001)
    pstar = np.asarray(profile.psi_star(probe), dtype=float)
    alive = probe[pstar > 1e-14 * max(pstar.max(), 1e-300)]
    if alive.size == 0:
        return np.zeros_like(r)
    g_lo = np.maximum(g_lo_kin, alive[0])
    g_hi = np.minimum(g_hi_kin, alive[-1])
    empty = g_hi <= g_lo

    n_g, n_e, n_t = quad.n_g, quad.n_e, quad.n_theta
    tg = np.linspace(0.0, 1.0, n_g)
    G = g_lo[:, None] + (g_hi - g_lo)[:, None] * tg[None, :]  # (nr, ng)
    wg = np.full(n_g, 1.0 / (n_g - 1))
    wg[0] = wg[-1] = 0.5 / (n_g - 1)
    wG = (g_hi - g_lo)[:, None] * wg[None, :]
    wG[empty] = 0.0

    xe, we = leggauss(n_e)
    xe = 0.5 * (xe + 1.0)  # map to [0, 1]
    we = 0.5 * we

    E0 = 0.5 * (G - (s * a3)[:, None]) ** 2 + (s * u0_vals)[:, None]  # (nr, ng)
    span = np.maximum(profile.e_max - E0, 0.0)
    E = E0[..., None] + span[..., None] * xe[None, None, :]  # (nr, ng, ne)
    wE = span[..., None] * we[None, None, :]

    xt, wt = leggauss(n_t)
    theta_nodes = math.pi * (xt + 1.0)  # [0, 2pi]
    wT = math.pi * wt

    u_sq = 2.0 * (E - (s * u0_vals)[:, None, None]) - (G[..., None] - (s * a3)[:, None, None]) ** 2
    u = np.sqrt(np.maximum(u_sq, 0.0))

    theta_of_E = np.asarray(profile.theta(E), dtype=float)  # (nr, ng, ne)

    sigma = r[:, None, None, None] * (
        u[..., None] * np.sin(theta_nodes)[None, None, None, :]
        + (s * a_phi)[:, None, None, None]
    )
    psi_vals = np.asarray(
        profile.psi(sigma, np.broadcast_to(G[..., None, None], sigma.shape)), dtype=float
    )

    inner = np.einsum("rget,t->rge", psi_vals, wT)
    mid = np.einsum("rge,rge->rg", inner * theta_of_E[..., :], wE)
    out = np.einsum("rg,rg->r", mid, wG)
    return np.maximum(out, 0.0)


def density_from_potential(
    u0,
    ansatz: AnsatzPair,
    field_: ExternalField,
    r,
    quad: QuadSpec = QuadSpec(),
    *,
    check_convergence: bool = False,
    rtol: float = 1e-3,
) -> tuple[np.ndarray, np.ndarray]:
    """Species densities (rho0+, rho0-) at radii r for the potential u0.

    u0 may be a callable of r or an array aligned with r.  With
    check_convergence the quadrature is repeated at doubled resolution and
    a RuntimeError reports the achieved tolerance if the change exceeds
    rtol relative to the density scale.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    u0_vals = np.asarray(u0(r), dtype=float) if callable(u0) else np.asarray(u0, dtype=float)
    u0_vals = np.broadcast_to(u0_vals, r.shape)
    if not np.all(np.isfinite(u0_vals)):
        raise ValueError("u0 samples must be finite")

    out = []
    for name in ("plus", "minus"):
        profile = ansatz.species(name)
        val = _species_density(profile, field_, r, u0_vals, quad)
        if check_convergence:
            quad2 = QuadSpec(
                n_g=2 * quad.n_g - 1,
                n_e=2 * quad.n_e,
                n_theta=2 * quad.n_theta,
                mu_cut=quad.mu_cut,
            )
            val2 = _species_density(profile, field_, r, u0_vals, quad2)
            scale = max(float(np.max(np.abs(val2))), 1e-300)
            achieved = float(np.max(np.abs(val2 - val))) / scale
            if achieved > rtol:
                raise RuntimeError(
                    f"density quadrature not converged for species {name}: "
                    f"achieved {achieved:.2e} > rtol {rtol:.2e}"
                )
            val = val2
        out.append(val)
    return out[0], out[1]


# ----------------------------------------------------------------------
# Picard iteration
# ----------------------------------------------------------------------
def fixed_point_solve(
    ansatz: AnsatzPair,
    field_: ExternalField,
    rmax: float,
    tol: float = 1e-8,
    max_iter: int = 80,
    *,
    n_r: int = 384,
    relax: float = 1.0,
    quad: QuadSpec = QuadSpec(),
    support_rtol: float = 1e-12,
) -> RadialSteadyState:
    """Construct the steady state by Picard alternation of the two integral maps.

    Starts from U0 = 0 (the normalization at the axis) and iterates
    density -> radial potential until the sup-norm update is below tol.
    Divergence is reported, not silently damped: a non-converged result
    carries converged=False and the last residual.
    """
    if rmax <= 0:
        raise FixedPointError("rmax must be positive")
    if not 0.0 < relax <= 1.0:
        raise FixedPointError("relaxation factor must be in (0, 1]")
    r = np.linspace(0.0, rmax, n_r)
    u = np.zeros(n_r)
    residual = math.inf
    rho_p = np.zeros(n_r)
    rho_m = np.zeros(n_r)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        rho_p, rho_m = density_from_potential(u, ansatz, field_, r, quad)
        u_new = radial_potential_from_samples(r, rho_p - rho_m)
        residual = float(np.max(np.abs(u_new - u)))
        u = (1.0 - relax) * u + relax * u_new
        if residual <= tol:
            converged = True
            break

    rho = rho_p - rho_m
    dr = r[1] - r[0]
    M = float(2.0 * math.pi * np.trapezoid(r * rho, r))

    def support_radius_of(samples: np.ndarray) -> float:
        peak = float(np.max(samples))
        if peak <= 0.0:
            return 0.0
        alive = np.nonzero(samples > support_rtol * peak)[0]
        k = int(alive[-1])
        return float(r[min(k + 1, n_r - 1)])

    R_plus = support_radius_of(rho_p)
    R_minus = support_radius_of(rho_m)
    R = max(R_plus, R_minus)

    state = RadialSteadyState(
        r=r,
        u0=u,
        rho0_plus=rho_p,
        rho0_minus=rho_m,
        R_plus=R_plus,
        R_minus=R_minus,
        R=R,
        e_min_plus=0.0,
        e_min_minus=0.0,
        M=M,
        converged=converged,
        residual=residual,
        iterations=iterations,
        scan_resolution=dr,
        meta=dict(ansatz.meta, rmax=rmax, n_r=n_r, tol=tol, relax=relax,
                  quad_n_g=quad.n_g, quad_n_e=quad.n_e, quad_n_theta=quad.n_theta),
    )
    state.e_min_plus = _e_min(state, +1.0, R_plus)
    state.e_min_minus = _e_min(state, -1.0, R_minus)
    return state


def _e_min(state: RadialSteadyState, sign: float, R_species: float) -> float:
    """E_min = inf over the support ball of sign * U0 (dense spline sampling)."""
    if R_species <= 0.0:
        return 0.0
    rr = np.linspace(0.0, R_species, 2049)
    return float(np.min(sign * state.u0_at(rr)))


def poisson_residual(state: RadialSteadyState) -> float:
    """Max residual of the discrete radial Poisson equation (1/r)(r U')' = -4 pi rho."""
    r, u = state.r, state.u0
    dr = r[1] - r[0]
    du = np.gradient(u, dr)
    flux = r * du
    lap = np.gradient(flux, dr)[1:-1] / r[1:-1]
    res = lap + 4.0 * math.pi * state.rho0[1:-1]
    return float(np.max(np.abs(res)))


# ----------------------------------------------------------------------
# sampling and support
# ----------------------------------------------------------------------
def sample_f0(x, p, species: str, state: RadialSteadyState, ansatz: AnsatzPair,
              field_: ExternalField) -> np.ndarray:
    """Steady-state value f0(x, p) = theta(E) psi(F, G) with the stored U0."""
    profile = ansatz.species(species)
    E, F, G = invariant_arrays(
        np.asarray(x, dtype=float),
        np.asarray(p, dtype=float),
        SPECIES_SIGN[species],
        state.u0_at,
        field_,
    )
    return profile.eta(E, F, G)


def f0_sampler(state: RadialSteadyState, ansatz: AnsatzPair, field_: ExternalField):
    """Convenience closure (x, p, species) -> f0 values."""

    def sampler(x, p, species):
        return sample_f0(x, p, species, state, ansatz, field_)

    return sampler


def support_radius(
    sampler: Callable[[np.ndarray, np.ndarray, str], np.ndarray],
    species: str,
    *,
    r_scan: float,
    n_r: int = 256,
    p_max: float = 2.0,
    n_p: int = 15,
) -> float:
    """Smallest sampled radius beyond which all phase-space probes vanish.

    Axisymmetric samplers are probed along (r, 0) with a p-lattice.  The
    scan resolution r_scan / n_r bounds the accuracy; the result is
    monotone under refinement of the scan.
    """
    radii = np.linspace(0.0, r_scan, n_r + 1)
    pg = np.linspace(-p_max, p_max, n_p)
    P = np.stack(np.meshgrid(pg, pg, pg, indexing="ij"), axis=-1).reshape(-1, 3)
    found = -1
    for k in range(n_r, -1, -1):
        X = np.tile([radii[k], 0.0], (P.shape[0], 1))
        vals = np.asarray(sampler(X, P, species))
        if np.any(vals > 0.0):
            found = k
            break
    if found == n_r:
        raise SupportScanError(
            f"support of species {species} not detected within scan radius {r_scan}"
        )
    if found < 0:
        return 0.0
    return float(radii[found + 1])


# ----------------------------------------------------------------------
# confinement condition
# ----------------------------------------------------------------------
def confinement_required(ansatz: AnsatzPair, r) -> np.ndarray:
    """Required vector-potential magnitude at radii r for confinement."""
    r = np.asarray(r, dtype=float)
    vals = []
    for name in ("plus", "minus"):
        prof = ansatz.species(name)
        base = np.sqrt(2.0 * prof.e_max + 4.0 * math.pi ** 2 * prof.eta_star_l1 * r ** 2)
        if ansatz.pinch == "z":
            base = abs(prof.g0) + base
        vals.append(base)
    return np.maximum(vals[0], vals[1])


def confinement_margin(ansatz: AnsatzPair, field_: ExternalField, r_range) -> np.ndarray:
    """margin(r) = A_component(r) - required(r); confined iff >= 0 on all samples."""
    r = np.asarray(r_range, dtype=float)
    a_comp = field_.a_phi_at(r) if ansatz.pinch == "theta" else field_.a3_at(r)
    return a_comp - confinement_required(ansatz, r)


# ----------------------------------------------------------------------
# assumption certificates
# ----------------------------------------------------------------------
@dataclass
class AssumptionItem:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class AssumptionReport:
    items: list
    caveat: str = "checks are finite-sampling certificates, not proofs"

    @property
    def all_passed(self) -> bool:
        return all(item.passed for item in self.items)

    def to_text(self) -> str:
        lines = ["assumption certificates", f"note: {self.caveat}"]
        for item in self.items:
            status = "PASS" if item.passed else "FAIL"
            lines.append(f"[{status}] {item.name}: {item.detail}")
        return "\n".join(lines) + "\n"


def check_assumptions(
    ansatz: AnsatzPair,
    field_: ExternalField,
    state: Optional[RadialSteadyState] = None,
    *,
    r_tilde: Optional[float] = None,
    r_scan_hi: Optional[float] = None,
    n_samples: int = 512,
) -> AssumptionReport:
    """Per-assumption pass/fail certificates for the structural hypotheses."""
    items: list[AssumptionItem] = []

    # axis regularity of the vector potential
    try:
        a_ok = (
            abs(float(field_.a_phi_at(np.array([0.0]))[0])) < 1e-10
            and abs(float(field_.a3_at(np.array([0.0]))[0])) < 1e-10
        )
        items.append(AssumptionItem("axis-regularity", a_ok, "A_phi(0) = A_3(0) = 0"))
    except Exception as exc:  # pragma: no cover - defensive
        items.append(AssumptionItem("axis-regularity", False, str(exc)))

    for name in ("plus", "minus"):
        prof = ansatz.species(name)
        sgn = prof.sign
        tag = f"[{name}]"

        # S1: cutoff structure of theta
        above = np.linspace(prof.e_max, prof.e_max + 5.0, n_samples)
        below = np.linspace(prof.e_max - 8.0, prof.e_max - 1e-9, n_samples)
        th_above = np.asarray(prof.theta(above))
        th_below = np.asarray(prof.theta(below))
        ok_above = bool(np.all(th_above == 0.0))
        ok_below = bool(np.all(th_below > 0.0))
        detail = "theta = 0 above E_max and > 0 below"
        if not ok_above:
            detail = f"theta({above[np.argmax(th_above != 0)]:.4g}) != 0 above E_max"
        elif not ok_below:
            detail = f"theta({below[np.argmin(th_below > 0)]:.4g}) <= 0 below E_max"
        items.append(AssumptionItem(f"energy-cutoff {tag}", ok_above and ok_below, detail))

        # S2: sign support of psi and the majorant
        sig = np.linspace(-4.0, 4.0, n_samples)
        mu = np.linspace(-4.0, 4.0, 65)
        SIG, MU = np.meshgrid(sig, mu, indexing="ij")
        vals = np.asarray(prof.psi(SIG, MU))
        wrong_side = vals[sgn * SIG >= 0.0]
        inside = SIG[(sgn * SIG < 0.0) & (np.abs(MU) < 1e-12)]
        inside_vals = np.asarray(prof.psi(inside, np.zeros_like(inside)))
        star = np.asarray(prof.psi_star(MU))
        ok_zero = bool(np.all(wrong_side == 0.0))
        ok_pos = bool(np.all(inside_vals > 0.0)) if ansatz.pinch == "theta" else True
        ok_major = bool(np.all(vals <= star + 1e-14))
        detail = "psi sign support and majorant hold"
        if not ok_zero:
            bad = SIG[(sgn * SIG >= 0.0) & (vals != 0.0)]
            detail = f"psi nonzero at sigma = {bad.ravel()[0]:.4g} on the forbidden side"
        elif not ok_pos:
            detail = "psi vanishes inside its support"
        elif not ok_major:
            detail = "psi exceeds psi_star"
        passed = (ok_zero and ok_pos and ok_major) if ansatz.pinch == "theta" else (ok_major and _g_cutoff_ok(prof))
        if ansatz.pinch == "z" and not _g_cutoff_ok(prof):
            detail = "z-pinch G-cutoff violated"
        items.append(AssumptionItem(f"momentum-support {tag}", passed, detail))

        # S4: strict monotonicity of theta on the reachable energy interval
        if state is not None:
            e_lo = state.e_min_plus if name == "plus" else state.e_min_minus
            src = "state E_min"
        else:
            e_lo = prof.e_max - 0.9 * prof.meta.get("turn", 2.5) if prof.meta else prof.e_max - 2.0
            src = "profile design interval"
        taus = np.linspace(e_lo, prof.e_max - 1e-9, n_samples)
        dth = np.asarray(prof.theta_prime(taus))
        ok_s4 = bool(np.all(dth < 0.0))
        detail = f"theta' < 0 on [{e_lo:.4g}, E_max) ({src})"
        if not ok_s4:
            detail = f"theta'({taus[np.argmax(dth >= 0)]:.4g}) >= 0"
        items.append(AssumptionItem(f"strict-decrease {tag}", ok_s4, detail))

    # S3: confinement condition on [r_tilde, scan_hi]
    rt = r_tilde if r_tilde is not None else (state.R if state is not None else 1.0)
    hi = r_scan_hi if r_scan_hi is not None else max(3.0 * rt, 3.0)
    rr = np.linspace(rt, hi, n_samples)
    margin = confinement_margin(ansatz, field_, rr)
    ok_s3 = bool(np.all(margin >= 0.0))
    detail = f"margin >= 0 on [{rt:.4g}, {hi:.4g}] (min {margin.min():.4g})"
    if not ok_s3:
        detail = f"margin < 0 at r = {rr[np.argmax(margin < 0)]:.4g}"
    items.append(AssumptionItem("confinement-condition", ok_s3, detail))

    return AssumptionReport(items=items)


def _g_cutoff_ok(prof: SpeciesProfile) -> bool:
    if prof.g0 is None:
        return False
    mus = prof.g0 * np.linspace(1.0, 4.0, 64) if prof.sign > 0 else prof.g0 * np.linspace(1.0, 4.0, 64)
    vals = np.asarray(prof.psi(np.zeros_like(mus), mus))
    return bool(np.all(vals == 0.0))
