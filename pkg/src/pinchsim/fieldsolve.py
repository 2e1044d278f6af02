"""Free-space 2D Poisson solve with logarithmic kernel and potential-energy ops.

The potential of a compactly supported density rho is the convolution

    U(x) = -2 * integral rho(y) ln|x - y| dy,

which solves -Delta U = 4 pi rho with the far-field normalization
U(x) + 2 M ln|x| -> 0, M = integral rho.  On the grid the convolution is a
nodal kernel table applied with zero-padded FFT convolution; the singular
self-cell uses the analytic average of ln over a square cell, which keeps
the scheme second order (the log kernel is harmonic away from the origin,
so the midpoint error of all other cells has no h^2 Laplacian term).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from .grid import Grid2D

# mean of ln|x| over a square cell of side h centered at the origin is
# ln h + LOG_CELL_MEAN_CONST  (exact integral of ln over the square)
LOG_CELL_MEAN_CONST = math.pi / 4.0 - 1.5 - 0.5 * math.log(2.0)

# default constant in the logarithmic Hardy-Littlewood-Sobolev bound; the
# equality case of the inequality gives (1 + ln pi) / 2
LOG_HLS_DEFAULT_C = 0.5 * (1.0 + math.log(math.pi))

# zero-total-charge tolerance for the quadratic-form sign check
ZERO_CHARGE_RTOL = 1e-10


class DegenerateDensityError(ValueError):
    """Raised for inputs on which a functional is undefined (e.g. zero mass)."""


class ChargeToleranceError(ValueError):
    """Raised when the quadratic-form precondition |M| <= tol*||rho||_1 fails."""


# ----------------------------------------------------------------------
# kernel tables (cached per grid shape)
# ----------------------------------------------------------------------
_kernel_cache: dict[tuple, np.ndarray] = {}


def _offsets(n: int, h: float) -> np.ndarray:
    return h * (np.arange(2 * n - 1) - (n - 1))


def log_kernel_table(nx: int, ny: int, h: float) -> np.ndarray:
    """Table K[di, dj] = ln|offset| with the analytic self-cell average."""
    key = ("log", nx, ny, h)
    tab = _kernel_cache.get(key)
    if tab is not None:
        return tab
    dx = _offsets(nx, h)[:, None]
    dy = _offsets(ny, h)[None, :]
    r = np.hypot(dx, dy)
    with np.errstate(divide="ignore"):
        tab = np.log(r)
    tab[nx - 1, ny - 1] = math.log(h) + LOG_CELL_MEAN_CONST
    _kernel_cache[key] = tab
    return tab


def gradient_kernel_table(nx: int, ny: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Tables for the components of offset/|offset|^2 (zero self-cell)."""
    key = ("grad", nx, ny, h)
    tab = _kernel_cache.get(key)
    if tab is not None:
        return tab
    dx = _offsets(nx, h)[:, None]
    dy = _offsets(ny, h)[None, :]
    r2 = dx ** 2 + dy ** 2
    r2[nx - 1, ny - 1] = 1.0
    gx = dx / r2
    gy = dy / r2
    gx[nx - 1, ny - 1] = 0.0  # odd kernel: cell average vanishes
    gy[nx - 1, ny - 1] = 0.0
    _kernel_cache[key] = (gx, gy)
    return gx, gy


# ----------------------------------------------------------------------
# potential and field
# ----------------------------------------------------------------------
def solve_potential(grid: Grid2D, *, check_support: bool = True) -> Grid2D:
    """Fill grid.U with the free-space potential of grid.rho."""
    if check_support:
        grid.check_support_interior()
    K = log_kernel_table(grid.nx, grid.ny, grid.h)
    grid.U = -2.0 * grid.h ** 2 * fftconvolve(grid.rho, K, mode="same")
    return grid


def solve_field(grid: Grid2D, *, check_support: bool = True) -> Grid2D:
    """Fill grid.Ex, grid.Ey with E = -grad U via the gradient kernel.

    grad U(x) = -2 integral rho(y) (x-y)/|x-y|^2 dy, so E = +2 (rho * G).
    """
    if check_support:
        grid.check_support_interior()
    Gx, Gy = gradient_kernel_table(grid.nx, grid.ny, grid.h)
    scale = 2.0 * grid.h ** 2
    grid.Ex = scale * fftconvolve(grid.rho, Gx, mode="same")
    grid.Ey = scale * fftconvolve(grid.rho, Gy, mode="same")
    return grid


def gradient_fd(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Centered-difference gradient of grid.U (one-sided at the boundary)."""
    gx, gy = np.gradient(grid.U, grid.h, grid.h)
    return gx, gy


def laplacian_residual(grid: Grid2D) -> float:
    """Max interior residual of -Delta_h U - 4 pi rho (5-point stencil)."""
    U = grid.U
    lap = (
        U[2:, 1:-1] + U[:-2, 1:-1] + U[1:-1, 2:] + U[1:-1, :-2] - 4.0 * U[1:-1, 1:-1]
    ) / grid.h ** 2
    res = -lap - 4.0 * math.pi * grid.rho[1:-1, 1:-1]
    return float(np.max(np.abs(res)))


# ----------------------------------------------------------------------
# radial potential (axisymmetric normalization U0(0) = 0)
# ----------------------------------------------------------------------
def radial_potential_from_samples(r: np.ndarray, rho0: np.ndarray) -> np.ndarray:
    """U0 on the given uniform r-grid from nested trapezoid cumulative sums.

    U0(r) = -4 pi * int_0^r (1/s) int_0^s sigma rho0(sigma) dsigma ds with
    U0(0) = 0.  The integrand (1/s) * inner(s) extends continuously by 0
    at s = 0.
    """
    r = np.asarray(r, dtype=float)
    rho0 = np.asarray(rho0, dtype=float)
    if r.shape != rho0.shape:
        raise ValueError("r and rho0 must have the same shape")
    if not np.all(np.isfinite(rho0)):
        raise ValueError("rho0 samples must be finite")
    if r[0] != 0.0 or np.any(np.diff(r) <= 0):
        raise ValueError("r must be an increasing grid starting at 0")
    dr = np.diff(r)
    inner = np.concatenate([[0.0], np.cumsum(0.5 * dr * (r[:-1] * rho0[:-1] + r[1:] * rho0[1:]))])
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(r > 0, inner / np.where(r > 0, r, 1.0), 0.0)
    outer = np.concatenate([[0.0], np.cumsum(0.5 * dr * (g[:-1] + g[1:]))])
    return -4.0 * math.pi * outer


def radial_potential(rho0, rmax: float, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    """Sample U0 on [0, rmax] for a callable radial density rho0(r)."""
    if rmax <= 0:
        raise ValueError("rmax must be positive")
    if n_samples < 2:
        raise ValueError("need at least two radial samples")
    r = np.linspace(0.0, rmax, n_samples)
    vals = np.asarray(rho0(r), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("rho0 samples must be finite")
    return r, radial_potential_from_samples(r, vals)


# ----------------------------------------------------------------------
# potential-energy functionals and the inequality checkers
# ----------------------------------------------------------------------
def interaction_energy(rho_a: np.ndarray, rho_b: np.ndarray, h: float) -> float:
    """Bilinear form -integral ln|x-y| rho_a(y) rho_b(x) dy dx on the grid.

    Symmetric in its two arguments; with rho_a = rho_b it is the potential
    energy E_pot = (1/2) integral U rho.
    """
    rho_a = np.asarray(rho_a, dtype=float)
    rho_b = np.asarray(rho_b, dtype=float)
    if rho_a.shape != rho_b.shape:
        raise ValueError("density shape mismatch")
    nx, ny = rho_a.shape
    K = log_kernel_table(nx, ny, h)
    Ua = -2.0 * h ** 2 * fftconvolve(rho_a, K, mode="same")
    return float(0.5 * h ** 2 * np.sum(Ua * rho_b))


def potential_energy(grid_or_rho, rho_b=None, h: float | None = None) -> float:
    """E_pot = (1/2) integral U rho = -intint ln|x-y| rho rho.

    Accepts either a Grid2D (uses grid.rho against itself) or a pair of
    density arrays with their spacing h.
    """
    if isinstance(grid_or_rho, Grid2D):
        g = grid_or_rho
        other = g.rho if rho_b is None else np.asarray(rho_b)
        return interaction_energy(g.rho, other, g.h)
    if h is None:
        raise ValueError("h is required when passing raw density arrays")
    rho_a = np.asarray(grid_or_rho, dtype=float)
    other = rho_a if rho_b is None else np.asarray(rho_b, dtype=float)
    return interaction_energy(rho_a, other, h)


def entropy_integral(rho: np.ndarray, h: float, mass: float) -> float:
    """integral rho ln(rho / mass) with the continuous extension 0 ln 0 = 0."""
    rho = np.asarray(rho, dtype=float)
    pos = rho > 0
    out = np.zeros_like(rho)
    out[pos] = rho[pos] * np.log(rho[pos] / mass)
    return float(out.sum() * h ** 2)


def log_hls_gap(rho: np.ndarray, h: float, *, hls_constant: float = LOG_HLS_DEFAULT_C) -> float:
    """Gap RHS - LHS of the logarithmic HLS bound for nonnegative rho.

    RHS = (1/2)||rho||_1 integral rho ln(rho/||rho||_1) + C ||rho||_1^2,
    LHS = -intint ln|x-y| rho(y) rho(x).  Nonnegative gap means the bound
    holds for the configured constant C.
    """
    rho = np.asarray(rho, dtype=float)
    if (rho < 0).any():
        raise ValueError("log_hls_gap requires a nonnegative density")
    mass = float(rho.sum() * h ** 2)
    if mass <= 0:
        raise DegenerateDensityError("zero total mass: entropy term undefined")
    lhs = interaction_energy(rho, rho, h)
    rhs = 0.5 * mass * entropy_integral(rho, h, mass) + hls_constant * mass ** 2
    return rhs - lhs


def quadratic_form_sign(rho: np.ndarray, h: float, *, charge_rtol: float = ZERO_CHARGE_RTOL) -> float:
    """Quadratic form intint (-ln|x-y|) rho rho for zero-total-charge rho.

    The form is positive semidefinite on densities with vanishing total
    charge; callers check the returned value against their tolerance.
    """
    rho = np.asarray(rho, dtype=float)
    h2 = h ** 2
    total = abs(float(rho.sum() * h2))
    l1 = float(np.abs(rho).sum() * h2)
    if l1 > 0 and total > charge_rtol * l1:
        raise ChargeToleranceError(
            f"total charge {total:.3e} exceeds {charge_rtol:.1e} * ||rho||_1 = {charge_rtol * l1:.3e}"
        )
    return interaction_energy(rho, rho, h)
