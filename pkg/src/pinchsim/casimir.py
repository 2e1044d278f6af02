"""Energy-Casimir machinery: the integrand Phi, the functionals and bounds.

For a steady state f0 = theta(E) psi(F, G) of a theta-pinch, the Casimir
integrand Phi(tau, sigma, mu) per species is built so that the energy-
Casimir functional H_C = H + C has f0 as a constrained minimizer:

* on the support side (sign * sigma < 0), for tau in [0, theta_max psi]:
      Phi = -psi * int_0^{tau/psi} theta^{-1}(s) ds,
  extended quadratically beyond theta_max psi so Phi stays C^1 with
      d2/dtau2 Phi >= c_theta / psi,   c_theta = -1 / inf theta' > 0;
* on the opposite side (sign * sigma > 0):
      Phi = (sign * sigma + xi(r0)) tau,
  where xi(r) = sup_{|x| <= r} |U0| and r0 is the radius from which
  min(A_phi(r), r) >= sqrt(2 |U0(r)|);
* on sigma = 0 (a null set) Phi is taken to be zero.

The resulting expansion of H_C(f) - H_C(f0) is bounded below by the
weighted L^2 distance on {sign F < 0} and above by initial-data terms
only, which is the stability estimate this module evaluates numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzPair
from .extfield import ExternalField
from .fieldsolve import LOG_HLS_DEFAULT_C, interaction_energy
from .kinetic import LatticeSpec, MarkerEnsemble, phase_lattice_points
from .pusher import SPECIES_SIGN, FieldHistory, backward_map, invariant_arrays
from .steadystate import RadialSteadyState


class CasimirDomainError(ValueError):
    """Raised for inputs outside the domain of the Casimir construction."""


# ----------------------------------------------------------------------
# xi and r0
# ----------------------------------------------------------------------
def xi(r, state: RadialSteadyState) -> np.ndarray:
    """Running sup of |U0| over the ball of radius r.

    Beyond the stored grid the exact logarithmic tail
    U0(rmax) - 2 M ln(r / rmax) continues the potential, and |U0| is
    monotone along it, so the sup is max(grid sup, |tail value|).
    """
    r = np.asarray(r, dtype=float)
    absu = np.abs(state.u0)
    cummax = np.maximum.accumulate(absu)
    idx = np.clip(np.searchsorted(state.r, r, side="right") - 1, 0, state.r.size - 1)
    inside = np.maximum(cummax[idx], np.abs(state.u0_at(np.minimum(r, state.rmax))))
    tail = np.maximum(cummax[-1], np.abs(state.u0_at(r)))
    return np.where(r <= state.rmax, inside, tail)


def compute_r0(
    state: RadialSteadyState,
    field_: ExternalField,
    *,
    tail_factor: float = 10.0,
    n_tail: int = 2048,
) -> float:
    """Smallest grid radius from which min(A_phi(r), r) >= sqrt(2 |U0(r)|).

    The inequality is checked on the radial grid and, beyond it, on the
    analytic logarithmic tail out to tail_factor * rmax, where polynomial
    growth of min(A_phi, r) dominates the logarithm (verified at the scan
    end by comparing growth rates).
    """
    r_in = state.r
    ok_in = np.minimum(field_.a_phi_at(r_in), r_in) >= np.sqrt(2.0 * np.abs(state.u0))
    r_out = np.linspace(state.rmax, tail_factor * state.rmax, n_tail)
    ok_out = np.minimum(field_.a_phi_at(r_out), r_out) >= np.sqrt(
        2.0 * np.abs(state.u0_at(r_out))
    )
    if not ok_out.all():
        raise CasimirDomainError(
            "min(A_phi, r) < sqrt(2|U0|) on the tail scan; confinement condition "
            "too weak for the Casimir construction"
        )
    # growth-rate certificate at the scan end: d/dr r^2 > d/dr 2|U0_tail|
    r_end = r_out[-1]
    if 2.0 * r_end <= 4.0 * abs(state.M) / r_end:
        raise CasimirDomainError("tail dominance not certified at scan end")
    suffix_ok = np.logical_and.accumulate(ok_in[::-1])[::-1]
    alive = np.nonzero(suffix_ok)[0]
    if alive.size == 0:
        raise CasimirDomainError("inequality never satisfied within the radial grid")
    return float(r_in[alive[0]])


# ----------------------------------------------------------------------
# spec: per-species constants and lookup tables
# ----------------------------------------------------------------------
@dataclass
class _SpeciesCasimir:
    sign: float
    e_min: float
    e_max: float
    theta_max: float
    c_theta: float
    c_bound: float
    theta: Callable
    theta_prime: Callable
    psi: Callable
    inv_grid_s: np.ndarray  # s in [0, theta_max]
    inv_grid_e: np.ndarray  # theta^{-1}(s)
    int_inv: np.ndarray  # int_0^s theta^{-1}

    def theta_inverse(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any(s < -1e-12) or np.any(s > self.theta_max * (1 + 1e-12)):
            raise CasimirDomainError(
                f"theta_inverse argument outside [0, {self.theta_max:.6g}]"
            )
        s = np.clip(s, 0.0, self.theta_max)
        # bisection refined to 1e-12 on the strictly decreasing branch
        lo = np.full_like(s, self.e_min)
        hi = np.full_like(s, self.e_max)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            val = np.asarray(self.theta(mid), dtype=float)
            take_hi = val > s  # theta decreasing: value too big -> move right
            lo = np.where(take_hi, mid, lo)
            hi = np.where(take_hi, hi, mid)
        return 0.5 * (lo + hi)

    def int_theta_inverse(self, y) -> np.ndarray:
        """int_0^y theta^{-1}(s) ds, cubic Hermite on the cumulative table.

        Both the integral and its derivative theta^{-1} are tabulated, so
        the Hermite interpolant is C^1 globally, which the C^1-junction
        property of Phi relies on.
        """
        y = np.asarray(y, dtype=float)
        s = self.inv_grid_s
        if s.size < 2:
            return np.zeros_like(y)
        hcell = s[1] - s[0]
        k = np.clip(((y - s[0]) / hcell).astype(int), 0, s.size - 2)
        t = (y - s[k]) / hcell
        t2 = t * t
        t3 = t2 * t
        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return (
            h00 * self.int_inv[k]
            + h10 * hcell * self.inv_grid_e[k]
            + h01 * self.int_inv[k + 1]
            + h11 * hcell * self.inv_grid_e[k + 1]
        )


@dataclass
class CasimirSpec:
    """Constants, profiles and tables defining the Casimir functional."""

    state: RadialSteadyState
    ansatz: AnsatzPair
    extfield: ExternalField
    r0: float
    xi_r0: float
    psi_floor_rel: float = 1e-12
    hls_constant: float = LOG_HLS_DEFAULT_C
    species_data: dict = field(default_factory=dict)

    @classmethod
    def from_state(
        cls,
        state: RadialSteadyState,
        ansatz: AnsatzPair,
        extfield: ExternalField,
        *,
        psi_floor_rel: float = 1e-12,
        hls_constant: float = LOG_HLS_DEFAULT_C,
        lut_size: int = 8193,
    ) -> "CasimirSpec":
        if ansatz.pinch != "theta":
            raise CasimirDomainError("the Casimir construction applies to the theta-pinch")
        if not state.converged:
            raise CasimirDomainError("spec requires a converged steady state")
        r0 = compute_r0(state, extfield)
        xi_r0 = float(xi(np.array([r0]), state)[0])
        spec = cls(
            state=state,
            ansatz=ansatz,
            extfield=extfield,
            r0=r0,
            xi_r0=xi_r0,
            psi_floor_rel=psi_floor_rel,
            hls_constant=hls_constant,
        )
        for name in ("plus", "minus"):
            prof = ansatz.species(name)
            e_min = state.e_min_plus if name == "plus" else state.e_min_minus
            e_max = prof.e_max
            theta_max = float(np.asarray(prof.theta(np.array([e_min])))[0])
            taus = np.linspace(e_min, e_max, 4097)
            dth = np.asarray(prof.theta_prime(taus), dtype=float)
            inf_prime = float(np.min(dth))
            if inf_prime >= 0:
                raise CasimirDomainError(
                    f"theta' not negative on [E_min, E_max] for species {name}"
                )
            c_theta = -1.0 / inf_prime
            dp_at_emin = float(np.asarray(prof.theta_prime(np.array([e_min])))[0])
            # derivative-bound constant: |d Phi / d tau| <= c (1 + tau / psi)
            c_bound = max(
                abs(e_min),
                abs(e_max),
                1.0 / abs(dp_at_emin),
                theta_max / abs(dp_at_emin) + abs(e_min),
            )
            sgrid = np.linspace(0.0, theta_max, lut_size)
            data = _SpeciesCasimir(
                sign=SPECIES_SIGN[name],
                e_min=e_min,
                e_max=e_max,
                theta_max=theta_max,
                c_theta=c_theta,
                c_bound=c_bound,
                theta=prof.theta,
                theta_prime=prof.theta_prime,
                psi=prof.psi,
                inv_grid_s=sgrid,
                inv_grid_e=np.zeros_like(sgrid),
                int_inv=np.zeros_like(sgrid),
            )
            egrid = data.theta_inverse(sgrid)
            data.inv_grid_e = egrid
            dsg = np.diff(sgrid)
            data.int_inv = np.concatenate(
                [[0.0], np.cumsum(0.5 * dsg * (egrid[:-1] + egrid[1:]))]
            )
            spec.species_data[name] = data
        return spec

    def species(self, name: str) -> _SpeciesCasimir:
        return self.species_data[name]

    def psi_floor(self, name: str) -> float:
        # psi_sup of the built-in profiles is 1; the relative floor follows
        return self.psi_floor_rel * self.ansatz.species(name).psi_sup

    def c_combined(self) -> float:
        """Constructive constant of the bounded-psi L^2 estimate."""
        return max(
            2.0 * self.ansatz.species(name).psi_sup / self.species(name).c_theta
            for name in ("plus", "minus")
        )


def theta_inverse(spec: CasimirSpec, species: str, s) -> np.ndarray:
    """Inverse of the strictly decreasing map theta on [E_min, E_max]."""
    return spec.species(species).theta_inverse(s)


# ----------------------------------------------------------------------
# the integrand Phi
# ----------------------------------------------------------------------
def phi(tau, sigma, mu, species: str, spec: CasimirSpec) -> np.ndarray:
    """Casimir integrand Phi(tau, sigma, mu) for one species.

    Nodes on the support side with psi below the configured floor
    contribute zero (the boundary {F = 0} is a null set; quadratures
    report the excluded mass separately).
    """
    data = spec.species(species)
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(tau < 0):
        raise CasimirDomainError("tau must be nonnegative")
    tau, sigma, mu = np.broadcast_arrays(tau, sigma, mu)
    out = np.zeros(tau.shape)

    pos_side = data.sign * sigma > 0
    if pos_side.any():
        out[pos_side] = (data.sign * sigma[pos_side] + spec.xi_r0) * tau[pos_side]

    neg_side = data.sign * sigma < 0
    if neg_side.any():
        psi_v = np.asarray(data.psi(sigma[neg_side], mu[neg_side]), dtype=float)
        floor = spec.psi_floor(species)
        ok = psi_v >= floor
        tv = tau[neg_side][ok]
        pv = psi_v[ok]
        vals = np.zeros(psi_v.shape)
        junction = data.theta_max * pv
        inner = tv <= junction
        res = np.zeros(tv.shape)
        if inner.any():
            res[inner] = -pv[inner] * data.int_theta_inverse(tv[inner] / pv[inner])
        outer = ~inner
        if outer.any():
            excess = tv[outer] - junction[outer]
            dp_emin = float(np.asarray(data.theta_prime(np.array([data.e_min])))[0])
            res[outer] = (
                -(excess ** 2) / (2.0 * dp_emin * pv[outer])
                - data.e_min * excess
                - pv[outer] * data.int_theta_inverse(np.array([data.theta_max]))[0]
            )
        vals[ok] = res
        out[neg_side] = vals
    return out


def phi_prime(tau, sigma, mu, species: str, spec: CasimirSpec) -> np.ndarray:
    """d Phi / d tau (needed by the bound-shape checks)."""
    data = spec.species(species)
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    tau, sigma, mu = np.broadcast_arrays(tau, sigma, mu)
    out = np.zeros(tau.shape)
    pos_side = data.sign * sigma > 0
    out[pos_side] = data.sign * sigma[pos_side] + spec.xi_r0
    neg_side = data.sign * sigma < 0
    if neg_side.any():
        psi_v = np.asarray(data.psi(sigma[neg_side], mu[neg_side]), dtype=float)
        ok = psi_v >= spec.psi_floor(species)
        tv = tau[neg_side][ok]
        pv = psi_v[ok]
        vals = np.zeros(psi_v.shape)
        junction = data.theta_max * pv
        inner = tv <= junction
        res = np.zeros(tv.shape)
        if inner.any():
            res[inner] = -data.theta_inverse(tv[inner] / pv[inner])
        outer = ~inner
        if outer.any():
            dp_emin = float(np.asarray(data.theta_prime(np.array([data.e_min])))[0])
            res[outer] = -(tv[outer] - junction[outer]) / (dp_emin * pv[outer]) - data.e_min
        vals[ok] = res
        out[neg_side] = vals
    return out


# ----------------------------------------------------------------------
# Casimir functional
# ----------------------------------------------------------------------
def casimir_functional(ensemble: MarkerEnsemble, spec: CasimirSpec) -> float:
    """C(f) by marker quadrature with the invariants frozen at birth.

    f, F and G are constant along characteristics, so evaluating Phi on
    the carried values makes the result time independent to rounding.
    """
    total = 0.0
    for name in ("plus", "minus"):
        sp = ensemble.species(name)
        if sp.n == 0:
            continue
        if sp.F0 is None or sp.G0 is None:
            raise CasimirDomainError(
                "ensemble lacks frozen invariants; call freeze_invariants first"
            )
        vals = phi(sp.f_val, sp.F0, sp.G0, name, spec)
        total += float(np.sum(sp.cell_volume * vals))
    return total


def casimir_on_points(
    f_sampler: Callable,
    spec: CasimirSpec,
    x: np.ndarray,
    p: np.ndarray,
    vol: float,
) -> float:
    """C(f) by direct quadrature of a sampler on given phase-space points."""
    total = 0.0
    for name in ("plus", "minus"):
        E, F, G = invariant_arrays(x, p, SPECIES_SIGN[name], spec.state.u0_at, spec.extfield)
        f = np.asarray(f_sampler(x, p, name), dtype=float)
        total += float(np.sum(vol * phi(f, F, G, name, spec)))
    return total


# ----------------------------------------------------------------------
# evaluation lattice for the stability quantities
# ----------------------------------------------------------------------
@dataclass
class EvalLattice:
    """Fixed phase-space quadrature lattice restricted to the reachable set.

    Nodes with particle energy above e_cap carry no mass at any time
    (the energy is invariant under the steady flow), so they are dropped.
    Tensor structure is kept per species for momentum finite differences.
    """

    x: np.ndarray  # (Nx, 2) spatial sublattice
    p: np.ndarray  # (Np, 3) momentum sublattice
    dx: float
    dp: float
    keep: dict  # species -> bool mask over (Nx*Np,)
    E: dict
    F: dict
    G: dict
    psi: dict

    @property
    def vol(self) -> float:
        return self.dx ** 2 * self.dp ** 3

    def nodes(self, species: str) -> tuple[np.ndarray, np.ndarray]:
        m = self.keep[species]
        nx, npts = self.x.shape[0], self.p.shape[0]
        X = np.repeat(self.x, npts, axis=0)[m]
        P = np.tile(self.p, (nx, 1))[m]
        return X, P


def build_eval_lattice(
    spec: CasimirSpec,
    lattice: LatticeSpec,
    *,
    e_cap_margin: float = 0.05,
) -> EvalLattice:
    xs, ps = phase_lattice_points(lattice)
    # deduplicate the tensor factors
    ax = lattice.axis_x()
    ap = lattice.axis_p()
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    x_nodes = np.column_stack([X1.ravel(), X2.ravel()])
    P1, P2, P3 = np.meshgrid(ap, ap, ap, indexing="ij")
    p_nodes = np.column_stack([P1.ravel(), P2.ravel(), P3.ravel()])

    out = EvalLattice(
        x=x_nodes,
        p=p_nodes,
        dx=lattice.dx,
        dp=lattice.dp,
        keep={},
        E={},
        F={},
        G={},
        psi={},
    )
    nx, npts = x_nodes.shape[0], p_nodes.shape[0]
    X = np.repeat(x_nodes, npts, axis=0)
    P = np.tile(p_nodes, (nx, 1))
    for name in ("plus", "minus"):
        data = spec.species(name)
        E, F, G = invariant_arrays(X, P, data.sign, spec.state.u0_at, spec.extfield)
        e_cap = data.e_max + e_cap_margin
        keep = E <= e_cap
        out.keep[name] = keep
        out.E[name] = E[keep]
        out.F[name] = F[keep]
        out.G[name] = G[keep]
        out.psi[name] = np.asarray(data.psi(F[keep], G[keep]), dtype=float)
    return out


def _f_at_time(
    f_init_sampler: Callable,
    history: Optional[FieldHistory],
    t: float,
    x: np.ndarray,
    p: np.ndarray,
    species: str,
    dt: float,
) -> np.ndarray:
    """f(t) at nodes by exact transport along backtracked characteristics."""
    if t > 1e-15 and history is None:
        raise ValueError("field history required to evaluate f at t > 0")
    if t <= 1e-15:
        return np.asarray(f_init_sampler(x, p, species), dtype=float)
    x0, p0 = backward_map(history, t, x, p, SPECIES_SIGN[species], dt)
    return np.asarray(f_init_sampler(x0, p0, species), dtype=float)


def stability_lhs(
    t: float,
    history: Optional[FieldHistory],
    f_init_sampler: Callable,
    f0_sampler: Callable,
    spec: CasimirSpec,
    lattice: EvalLattice,
    dt: float,
) -> dict:
    """Weighted L^2 distance sum_pm (c_theta/2) int_{sign F<0} (f-f0)^2/psi.

    f(t) is reconstructed on the fixed lattice via backward characteristics;
    nodes with psi below the floor are excluded and their |f - f0| mass is
    reported separately (they sit at the measure-zero support boundary).
    """
    total = 0.0
    excluded_mass = 0.0
    per_species = {}
    for name in ("plus", "minus"):
        data = spec.species(name)
        X, P = lattice.nodes(name)
        F = lattice.F[name]
        psi_v = lattice.psi[name]
        region = data.sign * F < 0.0
        if not region.any():
            per_species[name] = 0.0
            continue
        Xr, Pr = X[region], P[region]
        ft = _f_at_time(f_init_sampler, history, t, Xr, Pr, name, dt)
        f0 = np.asarray(f0_sampler(Xr, Pr, name), dtype=float)
        pv = psi_v[region]
        ok = pv >= spec.psi_floor(name)
        diff2 = (ft - f0) ** 2
        val = 0.5 * data.c_theta * float(np.sum(lattice.vol * diff2[ok] / pv[ok]))
        excluded_mass += float(np.sum(lattice.vol * np.abs(ft - f0)[~ok]))
        per_species[name] = val
        total += val
    return {"t": t, "lhs": total, "per_species": per_species, "excluded_mass": excluded_mass}


def _support_radius_from_nodes(x: np.ndarray, values: np.ndarray) -> float:
    alive = values > 0.0
    if not alive.any():
        return 0.0
    return float(np.max(np.hypot(x[alive, 0], x[alive, 1])))


def stability_rhs(
    f_init_sampler: Callable,
    f0_sampler: Callable,
    spec: CasimirSpec,
    lattice: EvalLattice,
    *,
    charge_rtol: float = 1e-6,
) -> dict:
    """All terms of the initial-data upper bound of the stability estimate.

    Returns the total and the breakdown: the two support-side integrals,
    the opposite-side integral with xi(r0) and xi(R(..)), and the entropy
    plus ln(2 S(f)) terms for the deposited density difference.  The
    charge-neutrality precondition (same total charge as the steady state)
    is enforced to charge_rtol.
    """
    terms = {"support_side": 0.0, "support_side_xi": 0.0, "opposite_side": 0.0}
    delta_rho = np.zeros(lattice.x.shape[0])
    l1_delta_f = 0.0
    nx, npts = lattice.x.shape[0], lattice.p.shape[0]
    for name in ("plus", "minus"):
        data = spec.species(name)
        X, P = lattice.nodes(name)
        F = lattice.F[name]
        psi_v = lattice.psi[name]
        f_init = np.asarray(f_init_sampler(X, P, name), dtype=float)
        f0 = np.asarray(f0_sampler(X, P, name), dtype=float)
        diff = f_init - f0
        absdiff = np.abs(diff)
        l1_delta_f += float(np.sum(lattice.vol * absdiff))

        # density difference on the spatial sublattice (p-sum per x node)
        flat = np.zeros(nx * npts)
        flat[lattice.keep[name]] = data.sign * diff
        delta_rho += flat.reshape(nx, npts).sum(axis=1) * lattice.dp ** 3

        neg = data.sign * F < 0.0
        pos = data.sign * F > 0.0
        pv = psi_v[neg]
        ok = pv >= spec.psi_floor(name)
        fmax = max(float(f_init.max(initial=0.0)), float(f0.max(initial=0.0)))
        p2half = 0.5 * np.sum(P ** 2, axis=1)
        w_neg = (
            data.c_bound
            + data.c_bound * fmax / np.where(ok, pv, 1.0)
            + p2half[neg]
        )
        terms["support_side"] += float(
            np.sum(lattice.vol * (w_neg * absdiff[neg])[ok])
        )
        r_supp_neg = _support_radius_from_nodes(X[neg], f_init[neg])
        s_neg = max(r_supp_neg, spec.state.R)
        terms["support_side_xi"] += float(xi(np.array([s_neg]), spec.state)[0]) * float(
            np.sum(lattice.vol * absdiff[neg][ok])
        )
        # on the opposite side f0 = 0, so |f - f0| = f_init
        r_supp_pos = _support_radius_from_nodes(X[pos], f_init[pos])
        xi_pos = float(xi(np.array([max(r_supp_pos, 1e-12)]), spec.state)[0]) if r_supp_pos > 0 else 0.0
        w_pos = data.sign * F[pos] + spec.xi_r0 + p2half[pos] + xi_pos
        terms["opposite_side"] += float(np.sum(lattice.vol * w_pos * absdiff[pos]))

    # entropy and log-size terms of the density difference
    h = lattice.dx
    l1_rho = float(np.sum(np.abs(delta_rho)) * h ** 2)
    net = float(np.sum(delta_rho) * h ** 2)
    if l1_rho > 0 and abs(net) > charge_rtol * max(l1_rho, 1e-300):
        raise CasimirDomainError(
            f"initial datum charge mismatch {net:.3e} exceeds {charge_rtol:.1e} * ||drho||_1"
        )
    r_supp_f = 0.0
    for name in ("plus", "minus"):
        X, P = lattice.nodes(name)
        f_init = np.asarray(f_init_sampler(X, P, name), dtype=float)
        r_supp_f = max(r_supp_f, _support_radius_from_nodes(X, f_init))
    s_f = max(r_supp_f, spec.state.R)
    degenerate = l1_rho == 0.0
    if degenerate:
        entropy_term = 0.0
        log_term = 0.0
    else:
        pos = np.abs(delta_rho) > 0
        ent = np.zeros_like(delta_rho)
        ent[pos] = np.abs(delta_rho[pos]) * np.log(np.abs(delta_rho[pos]) / l1_rho)
        entropy_term = 0.5 * l1_rho * float(np.sum(ent) * h ** 2)
        log_term = (spec.hls_constant + math.log(2.0 * s_f)) * l1_rho ** 2
    total = (
        terms["support_side"]
        + terms["support_side_xi"]
        + terms["opposite_side"]
        + entropy_term
        + log_term
    )
    return {
        "rhs": total,
        "terms": dict(terms, entropy=entropy_term, log_size=log_term),
        "l1_delta_rho": l1_rho,
        "l1_delta_f": l1_delta_f,
        "S_f": s_f,
        "degenerate_delta_rho": degenerate,
    }


def region_norms(
    ensemble: MarkerEnsemble,
    spec: CasimirSpec,
    qs=(1.0, 2.0, math.inf),
) -> dict:
    """L^q norms of f(t) - f0 over {sign F >= 0}, recomputed per marker.

    f0 vanishes a.e. on that region, so the norms reduce to marker
    quadratures of f over markers currently on the region (membership by
    the invariants recomputed from the current phase points, which makes
    this an honest dynamical check rather than a bookkeeping identity).
    """
    out = {}
    for name in ("plus", "minus"):
        sp = ensemble.species(name)
        sign = SPECIES_SIGN[name]
        if sp.n == 0:
            for q in qs:
                key = "inf" if math.isinf(q) else f"{q:g}"
                out[f"L{key}_{name}"] = 0.0
            continue
        _, F, _ = invariant_arrays(sp.x, sp.p, sign, spec.state.u0_at, spec.extfield)
        region = sign * F >= 0.0
        fv = sp.f_val[region]
        for q in qs:
            if math.isinf(q):
                val = float(fv.max(initial=0.0))
            else:
                val = float(np.sum(sp.cell_volume * fv ** q) ** (1.0 / q)) if fv.size else 0.0
            key = "inf" if math.isinf(q) else f"{q:g}"
            out[f"L{key}_{name}"] = val
    return out


def hc_difference(
    f_sampler: Callable,
    f0_sampler: Callable,
    spec: CasimirSpec,
    lattice: EvalLattice,
) -> float:
    """H_C(f) - H_C(f0) via the exact expansion on a shared lattice.

    = sum_pm int [Phi(f) - Phi(f0) + E0 (f - f0)] + quadratic form of the
    density difference (exact because the linear potential term pairs the
    charge-neutral difference with U0).
    """
    total = 0.0
    delta_rho = np.zeros(lattice.x.shape[0])
    nx, npts = lattice.x.shape[0], lattice.p.shape[0]
    for name in ("plus", "minus"):
        data = spec.species(name)
        X, P = lattice.nodes(name)
        f = np.asarray(f_sampler(X, P, name), dtype=float)
        f0 = np.asarray(f0_sampler(X, P, name), dtype=float)
        E = lattice.E[name]
        F = lattice.F[name]
        G = lattice.G[name]
        dphi = phi(f, F, G, name, spec) - phi(f0, F, G, name, spec)
        total += float(np.sum(lattice.vol * (dphi + E * (f - f0))))
        flat = np.zeros(nx * npts)
        flat[lattice.keep[name]] = data.sign * (f - f0)
        delta_rho += flat.reshape(nx, npts).sum(axis=1) * lattice.dp ** 3
    rho_grid = delta_rho.reshape(
        int(round(math.sqrt(lattice.x.shape[0]))), -1
    )
    total += interaction_energy(rho_grid, rho_grid, lattice.dx)
    return total


# ----------------------------------------------------------------------
# stability report for perturbed initial data
# ----------------------------------------------------------------------
@dataclass
class StabilityReport:
    """Time series of the stability inequality and the conserved region norms."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: float
    region: list  # list of dicts per sample time
    rhs_terms: dict
    tolerance: float
    excluded_mass: np.ndarray

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs + self.tolerance))

    def region_drift(self) -> float:
        """Max relative drift of any region norm across sample times."""
        worst = 0.0
        for key in self.region[0]:
            series = np.array([row[key] for row in self.region])
            scale = max(abs(series[0]), 1e-300)
            if series[0] == 0.0:
                worst = max(worst, float(np.max(np.abs(series))))
            else:
                worst = max(worst, float(np.max(np.abs(series - series[0])) / scale))
        return worst

    def to_csv(self, path) -> None:
        keys = sorted(self.region[0]) if self.region else []
        with open(path, "w") as fh:
            fh.write("t,lhs,rhs,pass," + ",".join(f"region_{k}" for k in keys) + "\n")
            for i, t in enumerate(self.times):
                ok = self.lhs[i] <= self.rhs + self.tolerance
                row = [f"{t:.17g}", f"{self.lhs[i]:.17g}", f"{self.rhs:.17g}", str(ok)]
                row += [f"{self.region[i][k]:.17g}" for k in keys]
                fh.write(",".join(row) + "\n")

    def summary_text(self) -> str:
        lines = [
            "stability report (initial-data perturbation)",
            f"pass: {self.passed}",
            f"rhs (from initial data): {self.rhs:.6e}",
            f"max lhs over samples:    {float(np.max(self.lhs)):.6e}",
            f"margin:                  {self.rhs - float(np.max(self.lhs)):.6e}",
            f"region-norm max drift:   {self.region_drift():.3e}",
            f"rhs terms: " + ", ".join(f"{k}={v:.4e}" for k, v in self.rhs_terms.items()),
        ]
        return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# continuous dependence on the magnetic field
# ----------------------------------------------------------------------
def rqe_exponents(gamma: float) -> tuple[float, float, float]:
    """(r, q, eps) with 1/r + 1/q = 1/2 and (6+2eps)/r + 3eps/2 + 4 < gamma."""
    if gamma <= 4.0:
        raise ValueError("gamma must exceed 4")
    eps = (gamma - 4.0) / 8.0
    slack = gamma - 4.0 - 1.5 * eps
    r = max(2.5, 2.0 * (6.0 + 2.0 * eps) / slack)
    q = 2.0 * r / (r - 2.0)
    assert (6.0 + 2.0 * eps) / r + 1.5 * eps + 4.0 < gamma
    return r, q, eps


def field_l2_difference(
    field_a: ExternalField, field_b: ExternalField, grid_extent: float, n: int = 192
) -> float:
    """||B_a - B_b||_{L^2(R^2)} by midpoint quadrature on a covering grid."""
    ax = np.linspace(-grid_extent, grid_extent, n)
    h = ax[1] - ax[0]
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    diff = field_a.B(pts) - field_b.B(pts)
    return float(math.sqrt(np.sum(diff ** 2) * h ** 2))


def momentum_gradient_norms(
    f_vals_grid: np.ndarray, p_axis: np.ndarray, x_count: int, dx: float, q_exp: float
) -> tuple[float, float]:
    """(L^inf_x L^2_p of p x grad_p f, L^q_x L^2_p of grad_p f).

    f_vals_grid has shape (x_count, n_p, n_p, n_p) on the tensor lattice.
    """
    dp = p_axis[1] - p_axis[0]
    g1, g2, g3 = np.gradient(f_vals_grid, dp, axis=(1, 2, 3))
    P1, P2, P3 = np.meshgrid(p_axis, p_axis, p_axis, indexing="ij")
    c1 = P2 * g3 - P3 * g2
    c2 = P3 * g1 - P1 * g3
    c3 = P1 * g2 - P2 * g1
    cross_sq = c1 ** 2 + c2 ** 2 + c3 ** 2
    grad_sq = g1 ** 2 + g2 ** 2 + g3 ** 2
    l2_cross = np.sqrt(np.sum(cross_sq.reshape(x_count, -1), axis=1) * dp ** 3)
    l2_grad = np.sqrt(np.sum(grad_sq.reshape(x_count, -1), axis=1) * dp ** 3)
    a_part = float(np.max(l2_cross))
    b_part = float(np.sum(l2_grad ** q_exp * dx ** 2) ** (1.0 / q_exp))
    return a_part, b_part


@dataclass
class ContdepReport:
    """Paired-run continuous-dependence diagnostic."""

    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    a_series: np.ndarray
    b_series: np.ndarray
    b_norm: np.ndarray  # ||B1 - B2||_{L^1(0,t;L^2)}
    gamma: float
    c_gronwall: float
    q_exp: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.lhs <= self.rhs + 1e-12))

    def empirical_ratio(self) -> np.ndarray:
        """lhs / ||B1-B2||_{L^1 L^2}: the scientifically checkable slope."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.b_norm > 0, self.lhs / self.b_norm, 0.0)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,lhs,rhs,a,b,b_norm,empirical_ratio,pass\n")
            ratio = self.empirical_ratio()
            for i, t in enumerate(self.times):
                ok = self.lhs[i] <= self.rhs[i] + 1e-12
                fh.write(
                    f"{t:.17g},{self.lhs[i]:.17g},{self.rhs[i]:.17g},"
                    f"{self.a_series[i]:.17g},{self.b_series[i]:.17g},"
                    f"{self.b_norm[i]:.17g},{ratio[i]:.17g},{ok}\n"
                )


def contdep_bound(
    history1: FieldHistory,
    history2: FieldHistory,
    f_init_sampler: Callable,
    lattice: LatticeSpec,
    times: np.ndarray,
    dt: float,
    *,
    gamma: float = 4.5,
    c_gronwall: float = 0.05,
    field_extent: float = 2.0,
) -> ContdepReport:
    """Evaluate both sides of the field continuous-dependence estimate.

    Both runs must share the initial datum.  The L^2 distance of the two
    transported solutions is computed on a full tensor lattice via backward
    evaluation through each run's field history; the coefficient a and b
    norms come from momentum finite differences of run 2's reconstruction.
    The Gronwall constant c is configured, not derived; the empirical
    lhs / ||delta B|| ratio is reported alongside as the checkable slope.
    """
    if gamma <= 4.0:
        raise ValueError("gamma must exceed 4")
    _, q_exp, _ = rqe_exponents(gamma)
    ax = lattice.axis_x()
    ap = lattice.axis_p()
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    x_nodes = np.column_stack([X1.ravel(), X2.ravel()])
    P1, P2, P3 = np.meshgrid(ap, ap, ap, indexing="ij")
    p_nodes = np.column_stack([P1.ravel(), P2.ravel(), P3.ravel()])
    nx = x_nodes.shape[0]
    npts = p_nodes.shape[0]
    X = np.repeat(x_nodes, npts, axis=0)
    P = np.tile(p_nodes, (nx, 1))
    vol = lattice.cell_volume

    db_l2 = field_l2_difference(history1.extfield, history2.extfield, field_extent)

    times = np.asarray(times, dtype=float)
    lhs = np.zeros(times.size)
    a_series = np.zeros(times.size)
    b_series = np.zeros(times.size)
    a_run = 0.0
    b_run = 0.0
    for i, t in enumerate(times):
        f2_parts = {}
        for name in ("plus", "minus"):
            f1 = _f_at_time(f_init_sampler, history1, t, X, P, name, dt)
            f2 = _f_at_time(f_init_sampler, history2, t, X, P, name, dt)
            f2_parts[name] = f2
            lhs[i] += math.sqrt(float(np.sum(vol * (f1 - f2) ** 2)))
        for name in ("plus", "minus"):
            grid_vals = f2_parts[name].reshape(nx, ap.size, ap.size, ap.size)
            a_part, b_part = momentum_gradient_norms(grid_vals, ap, nx, lattice.dx, q_exp)
            a_run = max(a_run, 2.0 * a_part)
            b_run = max(b_run, 2.0 * b_part)
        a_series[i] = a_run
        b_series[i] = b_run
    b_norm = db_l2 * times  # static field difference
    rhs = a_series * np.exp(b_series * c_gronwall * (1.0 + times) ** gamma) * b_norm
    return ContdepReport(
        times=times,
        lhs=lhs,
        rhs=rhs,
        a_series=a_series,
        b_series=b_series,
        b_norm=b_norm,
        gamma=gamma,
        c_gronwall=c_gronwall,
        q_exp=q_exp,
    )
