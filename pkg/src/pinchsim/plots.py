"""Figure rendering for the experiment reports (PNG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_steady(state, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(state.r, state.u0, color="tab:blue")
    ax1.set_xlabel("r")
    ax1.set_ylabel("U0")
    ax1.set_title("electric potential")
    ax2.plot(state.r, state.rho0_plus, label="rho0+", color="tab:red")
    ax2.plot(state.r, state.rho0_minus, label="rho0-", color="tab:blue")
    ax2.axvline(state.R, color="gray", ls="--", lw=0.8, label="support R")
    ax2.set_xlabel("r")
    ax2.set_ylabel("density")
    ax2.set_title("species densities")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_margin(r, margin, path, r_tilde=None) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(r, margin, color="tab:green")
    ax.axhline(0.0, color="gray", lw=0.8)
    if r_tilde is not None:
        ax.axvline(r_tilde, color="gray", ls="--", lw=0.8)
    ax.set_xlabel("r")
    ax.set_ylabel("A_phi - required")
    ax.set_title("confinement margin")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_diagnostics(diag: dict, path) -> None:
    t = np.asarray(diag["t"])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(t, diag["Ekin"], label="E_kin")
    ax1.plot(t, diag["Epot"], label="E_pot")
    ax1.plot(t, diag["H"], label="H", color="k", lw=1.4)
    ax1.set_xlabel("t")
    ax1.set_title("energies")
    ax1.legend(fontsize=8)
    H = np.asarray(diag["H"])
    scale = abs(H[0]) if H.size and H[0] != 0 else 1.0
    ax2.plot(t, (H - H[0]) / scale, color="tab:red")
    ax2.set_xlabel("t")
    ax2.set_title("relative energy drift")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_support(diag: dict, path, bound=None) -> None:
    t = np.asarray(diag["t"])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(t, diag["P"], label="P(t)")
    ax.plot(t, diag["X"], label="X(t)")
    if bound is not None:
        ax.plot(t, bound, ls="--", color="gray", label="c (1+t)^2.1")
    ax.set_xlabel("t")
    ax.set_title("support functionals")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_stability(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(report.times, np.maximum(report.lhs, 1e-300), "o-", label="lhs(t)")
    ax.axhline(report.rhs, color="tab:red", ls="--", label="rhs (initial data)")
    ax.set_xlabel("t")
    ax.set_title("stability estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_contdep(report, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(report.times, np.maximum(report.lhs, 1e-300), "o-", label="sum ||f1-f2||_2")
    ax.semilogy(report.times, np.maximum(report.rhs, 1e-300), "s--", label="Gronwall rhs")
    ax.set_xlabel("t")
    ax.set_title("field continuous dependence")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_combined(times, lhs, bound, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(times, np.maximum(lhs, 1e-300), "o-", label="sum ||f-f0||_2")
    ax.semilogy(times, np.maximum(bound, 1e-300), "s--", label="combined bound")
    ax.set_xlabel("t")
    ax.set_title("combined perturbation bound")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_snapshot(grid, path) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    extent = [
        grid.origin[0],
        grid.origin[0] + grid.h * (grid.nx - 1),
        grid.origin[1],
        grid.origin[1] + grid.h * (grid.ny - 1),
    ]
    im1 = ax1.imshow(grid.rho.T, origin="lower", extent=extent, cmap="RdBu_r")
    ax1.set_title("rho")
    fig.colorbar(im1, ax=ax1, shrink=0.85)
    im2 = ax2.imshow(grid.U.T, origin="lower", extent=extent, cmap="viridis")
    ax2.set_title("U")
    fig.colorbar(im2, ax=ax2, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
