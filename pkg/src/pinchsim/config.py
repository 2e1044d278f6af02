"""Experiment configuration: flat key=value files mirrored by CLI flags.

Precedence: defaults < config file < command-line flags.  Unknown or
duplicate keys are hard errors; the effective configuration is echoed
into every output directory for reproducibility.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .fieldsolve import LOG_HLS_DEFAULT_C

EXPERIMENT_KINDS = ("steady", "evolve", "perturb-init", "perturb-field", "combined")


class ConfigError(ValueError):
    """Malformed configuration input."""


@dataclass
class ExperimentConfig:
    # experiment
    kind: str = "steady"
    out_dir: str = "out"
    seed: int = 0
    # ansatz profiles
    ansatz_profile: str = "linear"  # linear | quadratic
    kappa_plus: float = 0.55
    kappa_minus: float = 0.33
    e_max: float = 1.0
    theta_smooth: float = 0.05
    theta_turn: float = 1.3
    theta_decay: float = 0.5
    psi_sigma_scale: float = 0.15
    psi_mu_width: float = 0.25
    # external field
    field_kind: str = "theta_pinch"  # theta_pinch | z_pinch
    field_shape: str = "cubic"  # linear | cubic
    field_margin: float = 0.1
    field_s1_fraction: float = 0.75
    r_tilde: float = 1.0
    r_chamber: float = 1.2
    g0_plus: float = 0.6
    g0_minus: float = -0.6
    # steady-state solve
    steady_rmax: float = 0.0  # 0 -> 1.5 * r_chamber
    steady_n_r: int = 256
    fp_tol: float = 1e-8
    fp_max_iter: int = 80
    fp_relax: float = 1.0
    quad_n_g: int = 25
    quad_n_e: int = 16
    quad_n_theta: int = 16
    # kinetic run
    grid_n: int = 96
    grid_extent: float = 0.0  # 0 -> 1.5 * r_chamber
    dt: float = 0.0  # 0 -> dt <= min(0.2/||B||, 0.25 h / P)
    t_final: float = 5.0
    snapshot_every: float = 1.0
    diag_stride: int = 1
    markers_x: int = 32
    markers_p: int = 12
    marker_x_halfwidth: float = 0.0  # 0 -> from the state support
    marker_p_halfwidth: float = 1.5
    self_field: bool = True
    # perturbation library
    perturb_eps: float = 0.03
    perturb_r_plus: float = 0.30
    perturb_r_minus: float = 0.45
    perturb_r_width: float = 0.18
    perturb_p_cut: float = 0.8
    perturb_sigma_scale: float = 0.15
    perturb_side: str = "both"
    fieldpert_amp: float = 2e-3
    fieldpert_r_center: float = 0.5
    fieldpert_r_width: float = 0.35
    # stability evaluation
    lattice_x: int = 16
    lattice_p: int = 8
    lattice_x_halfwidth: float = 0.0  # 0 -> from the state support
    lattice_p_halfwidth: float = 1.5
    sample_every: float = 1.0
    psi_floor_rel: float = 1e-12
    hls_constant: float = LOG_HLS_DEFAULT_C
    gronwall_c: float = 0.05
    gronwall_gamma: float = 4.5
    charge_rtol: float = 1e-6
    report_tol: float = 1e-6

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.kappa_plus < 0 or self.kappa_minus < 0:
            raise ConfigError("kappa amplitudes must be nonnegative")
        positive = (
            "e_max", "theta_smooth", "theta_turn",
            "theta_decay", "psi_sigma_scale", "psi_mu_width", "r_tilde",
            "r_chamber", "steady_n_r", "fp_tol", "fp_max_iter", "quad_n_g",
            "quad_n_e", "quad_n_theta", "grid_n", "t_final", "diag_stride",
            "markers_x", "markers_p", "marker_p_halfwidth", "perturb_r_width",
            "perturb_p_cut", "perturb_sigma_scale", "lattice_x", "lattice_p",
            "lattice_p_halfwidth", "sample_every", "report_tol",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.r_tilde >= self.r_chamber:
            raise ConfigError("r_tilde must be smaller than the chamber radius")
        if not 0.0 < self.fp_relax <= 1.0:
            raise ConfigError("fp_relax must lie in (0, 1]")
        if self.gronwall_gamma <= 4.0:
            raise ConfigError("gronwall_gamma must exceed 4")

    # derived defaults -------------------------------------------------
    @property
    def rmax_effective(self) -> float:
        return self.steady_rmax if self.steady_rmax > 0 else 1.5 * self.r_chamber

    @property
    def extent_effective(self) -> float:
        return self.grid_extent if self.grid_extent > 0 else 1.5 * self.r_chamber

    def echo_text(self) -> str:
        lines = ["# effective configuration"]
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    typ = _FIELD_TYPES[key]
    raw = raw.strip()
    if typ == "bool":
        low = raw.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key {key}: cannot parse boolean from {raw!r}")
    if typ == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key}: malformed integer {raw!r}") from exc
    if typ == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key}: malformed number {raw!r}") from exc
    return raw


def read_config_file(path) -> dict:
    """Parse a flat key=value file ('#' comments, blank lines allowed)."""
    values: dict = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def parse_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then file values, then explicit overrides (CLI flags)."""
    values: dict = {}
    if path is not None:
        values.update(read_config_file(path))
    for key, val in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, str(val)) if isinstance(val, str) else val
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg
