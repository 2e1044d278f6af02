"""Forward-marker evolution of the full two-species system.

Markers are laid deterministically on a uniform phase-space lattice
intersected with the support of the initial datum; each carries its exact
f-value along the characteristic (so every L^q norm and the Casimir
functional are conserved by representation) plus the flow invariants frozen
at birth.  A step is deposit -> field solve -> Boris push; deposition is
cloud-in-cell, matching the bilinear field interpolation (momentum-
conserving pairing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .extfield import ExternalField
from .fieldsolve import solve_field, solve_potential
from .grid import Grid2D
from .pusher import SPECIES_SIGN, FieldHistory, boris_push, invariant_arrays


class EmptySupportError(ValueError):
    """Raised when the sampled initial datum has empty support."""


class MarkerEscapeError(RuntimeError):
    """A marker left the deposition domain (loss of confinement or an
    undersized grid)."""

    def __init__(self, species: str, indices: np.ndarray, t: float):
        self.species = species
        self.indices = np.asarray(indices)
        self.t = t
        super().__init__(
            f"{self.indices.size} {species} markers outside grid at t={t:.6g} "
            f"(first ids {self.indices[:5].tolist()})"
        )


class DiagnosticsError(RuntimeError):
    """Non-finite diagnostics encountered during a run.

    Carries the diagnostics rows collected so far as .partial for post-mortem
    inspection.
    """

    def __init__(self, message: str, partial: Optional[dict] = None):
        super().__init__(message)
        self.partial = partial or {}


@dataclass
class SpeciesMarkers:
    """Marker arrays of one species."""

    x: np.ndarray  # (N, 2)
    p: np.ndarray  # (N, 3)
    weight: np.ndarray  # (N,)
    f_val: np.ndarray  # (N,)
    cell_volume: float
    z0_x: np.ndarray = None  # type: ignore[assignment]
    z0_p: np.ndarray = None  # type: ignore[assignment]
    F0: np.ndarray = None  # type: ignore[assignment]
    G0: np.ndarray = None  # type: ignore[assignment]
    E0: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.z0_x is None:
            self.z0_x = self.x.copy()
        if self.z0_p is None:
            self.z0_p = self.p.copy()

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def copy(self) -> "SpeciesMarkers":
        return SpeciesMarkers(
            x=self.x.copy(),
            p=self.p.copy(),
            weight=self.weight.copy(),
            f_val=self.f_val.copy(),
            cell_volume=self.cell_volume,
            z0_x=self.z0_x.copy(),
            z0_p=self.z0_p.copy(),
            F0=None if self.F0 is None else self.F0.copy(),
            G0=None if self.G0 is None else self.G0.copy(),
            E0=None if self.E0 is None else self.E0.copy(),
        )


@dataclass
class MarkerEnsemble:
    """Both species' markers."""

    plus: SpeciesMarkers
    minus: SpeciesMarkers
    meta: dict = field(default_factory=dict)

    def species(self, name: str) -> SpeciesMarkers:
        if name == "plus":
            return self.plus
        if name == "minus":
            return self.minus
        raise ValueError(f"unknown species {name!r}")

    @property
    def n_total(self) -> int:
        return self.plus.n + self.minus.n

    def copy(self) -> "MarkerEnsemble":
        return MarkerEnsemble(plus=self.plus.copy(), minus=self.minus.copy(), meta=dict(self.meta))

    def freeze_invariants(self, u0_at, extfield: ExternalField) -> None:
        """Record E, F, G at the current (birth) phase points."""
        for name in ("plus", "minus"):
            sp = self.species(name)
            E, F, G = invariant_arrays(sp.x, sp.p, SPECIES_SIGN[name], u0_at, extfield)
            sp.E0, sp.F0, sp.G0 = E, F, G


@dataclass(frozen=True)
class LatticeSpec:
    """Uniform phase-space lattice: midpoints of an nx^2 x np^3 cell tiling."""

    x_halfwidth: float
    p_halfwidth: float
    nx: int
    np_: int

    @property
    def dx(self) -> float:
        return 2.0 * self.x_halfwidth / self.nx

    @property
    def dp(self) -> float:
        return 2.0 * self.p_halfwidth / self.np_

    @property
    def cell_volume(self) -> float:
        return self.dx ** 2 * self.dp ** 3

    def axis_x(self) -> np.ndarray:
        return -self.x_halfwidth + (np.arange(self.nx) + 0.5) * self.dx

    def axis_p(self) -> np.ndarray:
        return -self.p_halfwidth + (np.arange(self.np_) + 0.5) * self.dp


def phase_lattice_points(lattice: LatticeSpec) -> tuple[np.ndarray, np.ndarray]:
    """All (x, p) lattice midpoints as arrays of shape (N, 2) and (N, 3)."""
    ax = lattice.axis_x()
    ap = lattice.axis_p()
    X1, X2 = np.meshgrid(ax, ax, indexing="ij")
    xs = np.column_stack([X1.ravel(), X2.ravel()])
    P1, P2, P3 = np.meshgrid(ap, ap, ap, indexing="ij")
    ps = np.column_stack([P1.ravel(), P2.ravel(), P3.ravel()])
    return xs, ps


def init_ensemble(
    sampler: Callable[[np.ndarray, np.ndarray, str], np.ndarray],
    lattice: LatticeSpec,
    seed: int = 0,
    *,
    species: tuple = ("plus", "minus"),
    allow_empty: bool = False,
) -> MarkerEnsemble:
    """Deterministic lattice initialization; the seed only reorders markers.

    Markers sit at lattice midpoints where the sampled datum is positive;
    weight = f_value * phase-cell volume, so the deposited charge converges
    to the p-integral of the datum at second order in the lattice spacing.
    """
    xs, ps = phase_lattice_points(lattice)
    rng = np.random.default_rng(seed)
    made = {}
    for name in species:
        chunks_x, chunks_p, chunks_f = [], [], []
        # chunk over position rows to bound peak memory
        rows = max(1, int(4e6 // max(ps.shape[0], 1)))
        for start in range(0, xs.shape[0], rows):
            xb = xs[start : start + rows]
            nb = xb.shape[0]
            X = np.repeat(xb, ps.shape[0], axis=0)
            P = np.tile(ps, (nb, 1))
            f = np.asarray(sampler(X, P, name), dtype=float)
            keep = f > 0.0
            if keep.any():
                chunks_x.append(X[keep])
                chunks_p.append(P[keep])
                chunks_f.append(f[keep])
        if not chunks_f:
            if not allow_empty:
                raise EmptySupportError(f"species {name}: empty support on the lattice")
            x = np.zeros((0, 2))
            p = np.zeros((0, 3))
            f = np.zeros((0,))
        else:
            x = np.concatenate(chunks_x)
            p = np.concatenate(chunks_p)
            f = np.concatenate(chunks_f)
        order = rng.permutation(x.shape[0])
        x, p, f = x[order], p[order], f[order]
        made[name] = SpeciesMarkers(
            x=x,
            p=p,
            weight=f * lattice.cell_volume,
            f_val=f,
            cell_volume=lattice.cell_volume,
        )
    if made and not any(made[name].n for name in species) and not allow_empty:
        raise EmptySupportError("empty support for all species")
    for name in ("plus", "minus"):
        if name not in made:
            made[name] = SpeciesMarkers(
                x=np.zeros((0, 2)),
                p=np.zeros((0, 3)),
                weight=np.zeros((0,)),
                f_val=np.zeros((0,)),
                cell_volume=lattice.cell_volume,
            )
    return MarkerEnsemble(
        plus=made["plus"],
        minus=made["minus"],
        meta={"lattice": lattice, "seed": seed},
    )


# ----------------------------------------------------------------------
# deposition
# ----------------------------------------------------------------------
def _deposit_species(sp: SpeciesMarkers, grid: Grid2D, t: float, name: str) -> np.ndarray:
    out = np.zeros(grid.nx * grid.ny)
    if sp.n == 0:
        return out.reshape(grid.nx, grid.ny)
    sx = (sp.x[:, 0] - grid.origin[0]) / grid.h
    sy = (sp.x[:, 1] - grid.origin[1]) / grid.h
    # one full ring inside so the free-space support check stays valid
    bad = (sx < 1.0) | (sx > grid.nx - 2.0) | (sy < 1.0) | (sy > grid.ny - 2.0)
    if bad.any():
        raise MarkerEscapeError(name, np.nonzero(bad)[0], t)
    i0 = np.floor(sx).astype(np.int64)
    j0 = np.floor(sy).astype(np.int64)
    fx = sx - i0
    fy = sy - j0
    w = sp.weight / grid.h ** 2
    base = i0 * grid.ny + j0
    np.add.at(out, base, w * (1 - fx) * (1 - fy))
    np.add.at(out, base + grid.ny, w * fx * (1 - fy))
    np.add.at(out, base + 1, w * (1 - fx) * fy)
    np.add.at(out, base + grid.ny + 1, w * fx * fy)
    return out.reshape(grid.nx, grid.ny)


def deposit_charge(ensemble: MarkerEnsemble, grid: Grid2D, t: float = 0.0) -> Grid2D:
    """Cloud-in-cell deposition of both species onto the grid."""
    rho_p = _deposit_species(ensemble.plus, grid, t, "plus")
    rho_m = _deposit_species(ensemble.minus, grid, t, "minus")
    grid.rho_plus = rho_p
    grid.rho_minus = rho_m
    grid.rho = rho_p - rho_m
    return grid


# ----------------------------------------------------------------------
# norms and support functionals
# ----------------------------------------------------------------------
def lq_norms(ensemble: MarkerEnsemble, qs=(1.0, 2.0, math.inf)) -> dict:
    """Per-species L^q norms of f via the marker quadrature."""
    out = {}
    for name in ("plus", "minus"):
        sp = ensemble.species(name)
        for q in qs:
            if sp.n == 0:
                val = 0.0
            elif math.isinf(q):
                val = float(np.max(sp.f_val))
            else:
                val = float(np.sum(sp.cell_volume * sp.f_val ** q) ** (1.0 / q))
            key = "inf" if math.isinf(q) else f"{q:g}"
            out[f"L{key}_{name}"] = val
    return out


def support_extrema(ensemble: MarkerEnsemble, previous: tuple = (0.0, 0.0)) -> tuple:
    """Running maxima (P, X) of |p| and |x| over markers and past samples."""
    P, X = previous
    for name in ("plus", "minus"):
        sp = ensemble.species(name)
        if sp.n:
            P = max(P, float(np.max(np.linalg.norm(sp.p, axis=1))))
            X = max(X, float(np.max(np.linalg.norm(sp.x, axis=1))))
    return P, X


# ----------------------------------------------------------------------
# time stepping
# ----------------------------------------------------------------------
@dataclass
class SimulationState:
    """Mutable state of a kinetic run."""

    t: float
    ensemble: MarkerEnsemble
    grid: Grid2D
    extfield: ExternalField
    self_field: bool = True
    history: Optional[FieldHistory] = None

    def fields_current(self) -> None:
        """deposit -> solve on the current ensemble."""
        deposit_charge(self.ensemble, self.grid, self.t)
        if self.self_field:
            solve_potential(self.grid)
            solve_field(self.grid)
        else:
            self.grid.U = np.zeros_like(self.grid.U)
            self.grid.Ex = np.zeros_like(self.grid.Ex)
            self.grid.Ey = np.zeros_like(self.grid.Ey)


def step(state: SimulationState, dt: float) -> SimulationState:
    """Advance one step: deposit -> solve -> push, appending field history."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    state.fields_current()
    if state.history is not None and (
        not state.history.times or state.history.times[-1] < state.t
    ):
        state.history.record(state.t, state.grid)
    if state.self_field:
        e_eval = state.grid.e_at
    else:
        e_eval = lambda pts: np.zeros(np.shape(pts)[:-1] + (2,))
    b_eval = state.extfield.B
    for name in ("plus", "minus"):
        sp = state.ensemble.species(name)
        if sp.n:
            sp.x, sp.p = boris_push(sp.x, sp.p, SPECIES_SIGN[name], e_eval, b_eval, dt)
    state.t += dt
    return state


def default_dt(b_max: float, h: float, p_estimate: float) -> float:
    """Fixed-step rule dt <= min(0.2/||B||, 0.25 h / P_estimate)."""
    caps = []
    if b_max > 0:
        caps.append(0.2 / b_max)
    if p_estimate > 0:
        caps.append(0.25 * h / p_estimate)
    return min(caps) if caps else 0.01


@dataclass
class RunResult:
    diagnostics: dict
    history: Optional[FieldHistory]
    ensemble: MarkerEnsemble
    snapshots: list
    escaped: bool = False

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.diagnostics[name])


DIAG_BASE_COLUMNS = ("t", "H", "Ekin", "Epot", "Casimir", "P", "X", "M")


def run(
    ensemble: MarkerEnsemble,
    grid: Grid2D,
    extfield: ExternalField,
    dt: float,
    t_final: float,
    *,
    self_field: bool = True,
    casimir_eval: Optional[Callable[[MarkerEnsemble], float]] = None,
    diag_stride: int = 1,
    snapshot_every: float = 0.0,
    r_escape: float = 0.0,
    keep_history: bool = True,
    sample_callback: Optional[Callable[[SimulationState], None]] = None,
) -> RunResult:
    """Fixed-step loop to t_final with per-sample diagnostics rows.

    casimir_eval, when given, is called on the ensemble at sample times
    (the marker representation makes it time independent up to rounding).
    r_escape > 0 raises MarkerEscapeError when any marker leaves that
    radius (the confinement sentinel).
    """
    state = SimulationState(
        t=0.0,
        ensemble=ensemble,
        grid=grid,
        extfield=extfield,
        self_field=self_field,
        history=FieldHistory.for_grid(grid, extfield, self_field) if keep_history else None,
    )
    n_steps = int(round(t_final / dt)) if t_final > 0 else 0
    cols: dict = {name: [] for name in DIAG_BASE_COLUMNS}
    for key in lq_norms(ensemble):
        cols[key] = []
    snapshots: list = []
    P, X = support_extrema(ensemble)
    next_snapshot = 0.0

    def record_row():
        # fields on state.grid are fresh for the current positions here
        nonlocal next_snapshot
        ekin = 0.0
        for name in ("plus", "minus"):
            sp = state.ensemble.species(name)
            if sp.n:
                ekin += 0.5 * float(np.sum(sp.weight * np.sum(sp.p ** 2, axis=1)))
        epot = 0.5 * state.grid.h ** 2 * float(np.sum(state.grid.U * state.grid.rho))
        cas = casimir_eval(state.ensemble) if casimir_eval is not None else math.nan
        row = {
            "t": state.t,
            "H": ekin + epot,
            "Ekin": ekin,
            "Epot": epot,
            "Casimir": cas,
            "P": P,
            "X": X,
            "M": state.grid.total_charge(),
        }
        row.update(lq_norms(state.ensemble))
        for key, val in row.items():
            cols[key].append(val)
        if not np.isfinite(row["H"]):
            raise DiagnosticsError(
                f"non-finite total energy at t={state.t:.6g}",
                partial={key: np.asarray(vals) for key, vals in cols.items()},
            )
        if snapshot_every > 0 and state.t >= next_snapshot - 1e-12:
            snapshots.append((state.t, state.grid.copy()))
            next_snapshot += snapshot_every

    # equivalent to repeated deposit -> solve -> push, with each solve done
    # once and reused by the diagnostics of the same instant
    state.fields_current()
    if state.history is not None:
        state.history.record(0.0, state.grid)
    record_row()
    if sample_callback is not None:
        sample_callback(state)

    b_eval = extfield.B
    zero_e = lambda pts: np.zeros(np.shape(pts)[:-1] + (2,))
    for k in range(n_steps):
        e_eval = state.grid.e_at if self_field else zero_e
        for name in ("plus", "minus"):
            sp = state.ensemble.species(name)
            if sp.n:
                sp.x, sp.p = boris_push(sp.x, sp.p, SPECIES_SIGN[name], e_eval, b_eval, dt)
        state.t = (k + 1) * dt
        state.fields_current()
        if state.history is not None:
            state.history.record(state.t, state.grid)
        P, X = support_extrema(state.ensemble, (P, X))
        if r_escape > 0:
            for name in ("plus", "minus"):
                sp = state.ensemble.species(name)
                if sp.n:
                    rr = np.hypot(sp.x[:, 0], sp.x[:, 1])
                    if np.any(rr > r_escape):
                        raise MarkerEscapeError(name, np.nonzero(rr > r_escape)[0], state.t)
        if (k + 1) % diag_stride == 0 or k == n_steps - 1:
            record_row()
            if sample_callback is not None:
                sample_callback(state)

    diagnostics = {key: np.asarray(vals) for key, vals in cols.items()}
    return RunResult(
        diagnostics=diagnostics,
        history=state.history,
        ensemble=state.ensemble,
        snapshots=snapshots,
    )
