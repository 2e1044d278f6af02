"""Uniform Cartesian grid for the self-consistent field solve.

Nodes sit at ``origin + (i, j) * h`` and each node owns a square cell of
area h^2 centered on it, so nodal sums times h^2 are midpoint quadratures.
Arrays are indexed ``[i, j]`` with i along x and j along y.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

SNAPSHOT_MAGIC = b"VPGRID2D"
SNAPSHOT_VERSION = 1
_ARRAY_ORDER = ("rho_plus", "rho_minus", "rho", "U", "Ex", "Ey")


class GridShapeError(ValueError):
    """Raised when grid arrays are inconsistent with nx, ny."""


class SupportBoundaryError(ValueError):
    """Raised when the charge support touches the grid boundary.

    The free-space convolution assumes the density is compactly supported
    in the grid interior; charge on the outermost node ring signals that
    the convolution domain is too small.
    """


@dataclass
class Grid2D:
    """Nodal grid holding rho+-, rho, U and E = -grad U."""

    origin: tuple[float, float]
    h: float
    nx: int
    ny: int
    rho_plus: np.ndarray = field(default=None)  # type: ignore[assignment]
    rho_minus: np.ndarray = field(default=None)  # type: ignore[assignment]
    rho: np.ndarray = field(default=None)  # type: ignore[assignment]
    U: np.ndarray = field(default=None)  # type: ignore[assignment]
    Ex: np.ndarray = field(default=None)  # type: ignore[assignment]
    Ey: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per direction")
        shape = (self.nx, self.ny)
        for name in _ARRAY_ORDER:
            arr = getattr(self, name)
            if arr is None:
                setattr(self, name, np.zeros(shape))
            elif np.asarray(arr).shape != shape:
                raise GridShapeError(
                    f"array {name} has shape {np.asarray(arr).shape}, expected {shape}"
                )
            else:
                setattr(self, name, np.asarray(arr, dtype=float))

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------
    @classmethod
    def centered(cls, extent: float, n: int) -> "Grid2D":
        """Square grid with n x n nodes covering [-extent, extent]^2."""
        if extent <= 0:
            raise ValueError("extent must be positive")
        h = 2.0 * extent / (n - 1)
        return cls(origin=(-extent, -extent), h=h, nx=n, ny=n)

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------
    @property
    def x_nodes(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def y_nodes(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_nodes, self.y_nodes, indexing="ij")

    def node_radii(self) -> np.ndarray:
        X, Y = self.meshgrid()
        return np.hypot(X, Y)

    # ------------------------------------------------------------------
    # state
    # ------------------------------------------------------------------
    def set_density(self, rho_plus: np.ndarray, rho_minus: np.ndarray) -> "Grid2D":
        """Set species densities and the signed total rho = rho+ - rho-."""
        rho_plus = np.asarray(rho_plus, dtype=float)
        rho_minus = np.asarray(rho_minus, dtype=float)
        if rho_plus.shape != (self.nx, self.ny) or rho_minus.shape != (self.nx, self.ny):
            raise GridShapeError("density shape mismatch")
        if (rho_plus < 0).any() or (rho_minus < 0).any():
            raise ValueError("species densities must be nonnegative")
        self.rho_plus = rho_plus
        self.rho_minus = rho_minus
        self.rho = rho_plus - rho_minus
        return self

    def validate(self, atol: float = 1e-12) -> None:
        """Check the structural invariants (shapes, signs, rho consistency)."""
        if (self.rho_plus < 0).any() or (self.rho_minus < 0).any():
            raise ValueError("species densities must be nonnegative")
        if not np.allclose(self.rho, self.rho_plus - self.rho_minus, atol=atol):
            raise ValueError("rho != rho_plus - rho_minus")

    def total_charge(self) -> float:
        """M = integral of rho over the cross section (nodal quadrature)."""
        return float(self.rho.sum() * self.h ** 2)

    def check_support_interior(self, rings: int = 1) -> None:
        """Raise SupportBoundaryError if rho is nonzero on the outer rings."""
        r = rings
        border = np.concatenate(
            [
                self.rho[:r, :].ravel(),
                self.rho[-r:, :].ravel(),
                self.rho[:, :r].ravel(),
                self.rho[:, -r:].ravel(),
            ]
        )
        if np.any(border != 0.0):
            raise SupportBoundaryError(
                "charge support touches the grid boundary: convolution domain too small"
            )

    def copy(self) -> "Grid2D":
        return Grid2D(
            origin=self.origin,
            h=self.h,
            nx=self.nx,
            ny=self.ny,
            rho_plus=self.rho_plus.copy(),
            rho_minus=self.rho_minus.copy(),
            rho=self.rho.copy(),
            U=self.U.copy(),
            Ex=self.Ex.copy(),
            Ey=self.Ey.copy(),
        )

    # ------------------------------------------------------------------
    # interpolation (shared stencil with cloud-in-cell deposition)
    # ------------------------------------------------------------------
    def bilinear(self, arr: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Bilinear sample of a nodal array at points of shape (N, 2)."""
        points = np.asarray(points, dtype=float)
        sx = (points[..., 0] - self.origin[0]) / self.h
        sy = (points[..., 1] - self.origin[1]) / self.h
        i0 = np.clip(np.floor(sx).astype(int), 0, self.nx - 2)
        j0 = np.clip(np.floor(sy).astype(int), 0, self.ny - 2)
        fx = sx - i0
        fy = sy - j0
        a00 = arr[i0, j0]
        a10 = arr[i0 + 1, j0]
        a01 = arr[i0, j0 + 1]
        a11 = arr[i0 + 1, j0 + 1]
        return (
            a00 * (1 - fx) * (1 - fy)
            + a10 * fx * (1 - fy)
            + a01 * (1 - fx) * fy
            + a11 * fx * fy
        )

    def e_at(self, points: np.ndarray) -> np.ndarray:
        """Electric field (N, 2) interpolated at marker positions."""
        return np.stack(
            [self.bilinear(self.Ex, points), self.bilinear(self.Ey, points)], axis=-1
        )

    # ------------------------------------------------------------------
    # persistence: self-describing binary snapshot + CSV export
    # ------------------------------------------------------------------
    def save(self, path) -> None:
        """Write binary snapshot: header + row-major float64 arrays.

        Layout: magic, version, nx, ny, h, origin_x, origin_y, n_arrays,
        then the arrays of _ARRAY_ORDER as little-endian float64.
        """
        header = struct.pack(
            "<8sIIIdddI",
            SNAPSHOT_MAGIC,
            SNAPSHOT_VERSION,
            self.nx,
            self.ny,
            self.h,
            self.origin[0],
            self.origin[1],
            len(_ARRAY_ORDER),
        )
        with open(path, "wb") as fh:
            fh.write(header)
            for name in _ARRAY_ORDER:
                fh.write(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "Grid2D":
        fmt = "<8sIIIdddI"
        head_size = struct.calcsize(fmt)
        with open(path, "rb") as fh:
            magic, version, nx, ny, h, ox, oy, narr = struct.unpack(fmt, fh.read(head_size))
            if magic != SNAPSHOT_MAGIC:
                raise ValueError(f"bad snapshot magic {magic!r}")
            if version != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported snapshot version {version}")
            if narr != len(_ARRAY_ORDER):
                raise ValueError(f"unexpected array count {narr}")
            arrays = {}
            count = nx * ny
            for name in _ARRAY_ORDER:
                buf = fh.read(8 * count)
                arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(nx, ny).copy()
        return cls(origin=(ox, oy), h=h, nx=nx, ny=ny, **arrays)

    def to_csv(self, path) -> None:
        """CSV export (x, y, rho, U, Ex, Ey) for plotting."""
        X, Y = self.meshgrid()
        cols = np.column_stack(
            [
                X.ravel(),
                Y.ravel(),
                self.rho.ravel(),
                self.U.ravel(),
                self.Ex.ravel(),
                self.Ey.ravel(),
            ]
        )
        np.savetxt(path, cols, fmt="%.17g", delimiter=",", header="x,y,rho,U,Ex,Ey", comments="")
