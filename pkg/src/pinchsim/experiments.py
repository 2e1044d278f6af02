"""Experiment orchestration: the five CLI experiment kinds.

steady        construct and certify a confined steady state
evolve        evolve an initial datum and record conservation diagnostics
perturb-init  stability report for perturbed initial data under the base field
perturb-field paired runs under base/perturbed field, continuous dependence
combined      perturb both, triangle-decomposition bound

Every experiment writes into its output directory: the effective config,
a version stamp with the tolerances in force, delimited reports (CSV) and
rendered figures (PNG).
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import __version__
from .ansatz import AnsatzPair, confining_theta_pinch_field, standard_ansatz
from .casimir import (
    CasimirSpec,
    StabilityReport,
    build_eval_lattice,
    casimir_functional,
    contdep_bound,
    region_norms,
    stability_lhs,
    stability_rhs,
)
from .config import ExperimentConfig
from .extfield import ExternalField
from .grid import Grid2D
from .kinetic import LatticeSpec, default_dt, init_ensemble, run
from .perturbations import (
    BumpPerturbation,
    FieldBump,
    PerturbedDatum,
    calibrate_on_eval_lattice,
    perturbed_theta_pinch,
)
from .steadystate import (
    QuadSpec,
    check_assumptions,
    confinement_margin,
    f0_sampler,
    fixed_point_solve,
    poisson_residual,
)
from . import plots


class ExperimentError(RuntimeError):
    """An experiment could not produce a valid result."""


# ----------------------------------------------------------------------
# shared setup
# ----------------------------------------------------------------------
def build_ansatz(cfg: ExperimentConfig) -> AnsatzPair:
    return standard_ansatz(
        cfg.ansatz_profile,
        kappa_plus=cfg.kappa_plus,
        kappa_minus=cfg.kappa_minus,
        e_max=cfg.e_max,
        smooth_delta=cfg.theta_smooth,
        turn=cfg.theta_turn,
        decay=cfg.theta_decay,
        sigma_scale=cfg.psi_sigma_scale,
        mu_width=cfg.psi_mu_width,
        pinch="theta" if cfg.field_kind == "theta_pinch" else "z",
        g0_plus=cfg.g0_plus,
        g0_minus=cfg.g0_minus,
    )


def build_field(cfg: ExperimentConfig, ansatz: AnsatzPair) -> ExternalField:
    if cfg.field_kind == "theta_pinch":
        return confining_theta_pinch_field(
            ansatz,
            cfg.r_tilde,
            margin=cfg.field_margin,
            shape=cfg.field_shape,
            s1_fraction=cfg.field_s1_fraction,
        )
    if cfg.field_kind == "z_pinch":
        # A_3 = g0 + required-shaped growth, normalized to vanish on the axis
        from .steadystate import confinement_required

        g0_max = max(abs(cfg.g0_plus), abs(cfg.g0_minus))
        req_rt = float(confinement_required(ansatz, np.array([cfg.r_tilde]))[0])
        slope = (1.0 + cfg.field_margin) * req_rt / cfg.r_tilde
        a3 = lambda r: slope * np.asarray(r, dtype=float)
        a3p = lambda r: slope * np.ones_like(np.asarray(r, dtype=float))
        return ExternalField.z_pinch(a3, a3p, label=f"z-pinch slope={slope:.4g}")
    raise ExperimentError(f"unsupported field kind {cfg.field_kind!r}")


def solve_steady(cfg: ExperimentConfig, ansatz: AnsatzPair, field: ExternalField):
    state = fixed_point_solve(
        ansatz,
        field,
        rmax=cfg.rmax_effective,
        tol=cfg.fp_tol,
        max_iter=cfg.fp_max_iter,
        n_r=cfg.steady_n_r,
        relax=cfg.fp_relax,
        quad=QuadSpec(n_g=cfg.quad_n_g, n_e=cfg.quad_n_e, n_theta=cfg.quad_n_theta),
    )
    if not state.converged:
        raise ExperimentError(
            f"fixed-point iteration not converged: residual {state.residual:.3e} "
            f"after {state.iterations} iterations"
        )
    return state


def marker_lattice(cfg: ExperimentConfig, state, extra_radius: float = 0.0) -> LatticeSpec:
    half = cfg.marker_x_halfwidth
    if half <= 0:
        half = min(1.08 * max(state.R, extra_radius), cfg.r_tilde)
    return LatticeSpec(
        x_halfwidth=half,
        p_halfwidth=cfg.marker_p_halfwidth,
        nx=cfg.markers_x,
        np_=cfg.markers_p,
    )


def eval_lattice_spec(cfg: ExperimentConfig, state, extra_radius: float = 0.0) -> LatticeSpec:
    half = cfg.lattice_x_halfwidth
    if half <= 0:
        half = min(1.08 * max(state.R, extra_radius), cfg.r_tilde)
    return LatticeSpec(
        x_halfwidth=half,
        p_halfwidth=cfg.lattice_p_halfwidth,
        nx=cfg.lattice_x,
        np_=cfg.lattice_p,
    )


def choose_dt(cfg: ExperimentConfig, field: ExternalField, state) -> float:
    if cfg.dt > 0:
        return cfg.dt
    b_max = field.b_max_estimate(cfg.r_tilde)
    h = 2.0 * cfg.extent_effective / (cfg.grid_n - 1)
    return default_dt(b_max, h, cfg.marker_p_halfwidth)


def sample_times(cfg: ExperimentConfig) -> np.ndarray:
    n = int(math.floor(cfg.t_final / cfg.sample_every + 1e-9))
    return np.array([k * cfg.sample_every for k in range(n + 1)])


def _write_versions(out: Path, cfg: ExperimentConfig) -> None:
    import numpy
    import scipy

    lines = [
        f"pinchsim = {__version__}",
        f"numpy = {numpy.__version__}",
        f"scipy = {scipy.__version__}",
        "# tolerances in force",
        f"fp_tol = {cfg.fp_tol}",
        f"psi_floor_rel = {cfg.psi_floor_rel}",
        f"charge_rtol = {cfg.charge_rtol}",
        f"report_tol = {cfg.report_tol}",
        f"hls_constant = {cfg.hls_constant}",
        f"gronwall_c = {cfg.gronwall_c}",
        f"gronwall_gamma = {cfg.gronwall_gamma}",
    ]
    (out / "versions.txt").write_text("\n".join(lines) + "\n")


def _write_diagnostics_csv(path, diag: dict, stability: dict | None = None) -> None:
    """One row per sample time; stability lhs/rhs columns joined on t."""
    base_cols = [k for k in diag if k != "t"]
    cols = ["t"] + base_cols + ["stability_lhs", "stability_rhs"]
    t = np.asarray(diag["t"])
    lhs_col = np.full(t.size, np.nan)
    rhs_col = np.full(t.size, np.nan)
    if stability is not None:
        for ts, lv in zip(stability["times"], stability["lhs"]):
            idx = np.argmin(np.abs(t - ts))
            if abs(t[idx] - ts) < 1e-9:
                lhs_col[idx] = lv
                rhs_col[idx] = stability["rhs"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(t.size):
            row = [f"{t[i]:.17g}"]
            row += [f"{np.asarray(diag[k])[i]:.17g}" for k in base_cols]
            row += [f"{lhs_col[i]:.17g}", f"{rhs_col[i]:.17g}"]
            fh.write(",".join(row) + "\n")


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_used.txt").write_text(cfg.echo_text())
    _write_versions(out, cfg)
    return out


# ----------------------------------------------------------------------
# experiment kinds
# ----------------------------------------------------------------------
def run_steady(cfg: ExperimentConfig) -> dict:
    out = _prepare_out(cfg)
    ansatz = build_ansatz(cfg)
    field = build_field(cfg, ansatz)
    pre_report = check_assumptions(ansatz, field, r_tilde=cfg.r_tilde)
    state = solve_steady(cfg, ansatz, field)
    report = check_assumptions(ansatz, field, state, r_tilde=cfg.r_tilde)
    state.meta["poisson_residual"] = poisson_residual(state)
    state.save_csv(out / "steady_state.csv")
    (out / "assumptions.txt").write_text(report.to_text())
    rr = np.linspace(cfg.r_tilde, 3.0 * cfg.r_tilde, 256)
    margin = confinement_margin(ansatz, field, rr)
    np.savetxt(
        out / "margin.csv",
        np.column_stack([rr, margin]),
        fmt="%.17g",
        delimiter=",",
        header="r,margin",
        comments="",
    )
    plots.plot_steady(state, out / "steady_profiles.png")
    plots.plot_margin(rr, margin, out / "margin.png", r_tilde=cfg.r_tilde)
    passed = bool(state.converged and report.all_passed and np.all(margin >= 0.0))
    summary = {
        "passed": passed,
        "converged": state.converged,
        "iterations": state.iterations,
        "residual": state.residual,
        "R": state.R,
        "M": state.M,
        "E_min_plus": state.e_min_plus,
        "E_min_minus": state.e_min_minus,
        "assumptions_passed": report.all_passed,
        "margin_min": float(margin.min()),
    }
    _write_summary(out, "steady", summary)
    return summary


def _kinetic_setup(cfg: ExperimentConfig, datum, state, field, extra_radius=0.0):
    lat = marker_lattice(cfg, state, extra_radius)
    ens = init_ensemble(datum, lat, seed=cfg.seed)
    ens.freeze_invariants(state.u0_at, field)
    grid = Grid2D.centered(cfg.extent_effective, cfg.grid_n)
    dt = choose_dt(cfg, field, state)
    return ens, grid, dt


def run_evolve(cfg: ExperimentConfig) -> dict:
    out = _prepare_out(cfg)
    ansatz = build_ansatz(cfg)
    field = build_field(cfg, ansatz)
    state = solve_steady(cfg, ansatz, field)
    state.save_csv(out / "steady_state.csv")
    spec = CasimirSpec.from_state(
        state, ansatz, field,
        psi_floor_rel=cfg.psi_floor_rel, hls_constant=cfg.hls_constant,
    )
    datum = f0_sampler(state, ansatz, field)
    ens, grid, dt = _kinetic_setup(cfg, datum, state, field)
    result = run(
        ens,
        grid,
        field,
        dt=dt,
        t_final=cfg.t_final,
        self_field=cfg.self_field,
        casimir_eval=lambda e: casimir_functional(e, spec),
        diag_stride=cfg.diag_stride,
        snapshot_every=cfg.snapshot_every,
        r_escape=cfg.r_chamber,
        keep_history=False,
    )
    _write_diagnostics_csv(out / "diagnostics.csv", result.diagnostics)
    for k, (ts, g) in enumerate(result.snapshots):
        g.save(out / f"snapshot_{k:04d}.bin")
    if result.snapshots:
        plots.plot_snapshot(result.snapshots[-1][1], out / "snapshot_final.png")
    plots.plot_diagnostics(result.diagnostics, out / "energy.png")
    plots.plot_support(result.diagnostics, out / "support.png")
    H = result.column("H")
    drift = float(np.max(np.abs(H - H[0])) / abs(H[0])) if H[0] != 0 else 0.0
    cas = result.column("Casimir")
    cas_drift = (
        float(np.max(np.abs(cas - cas[0])) / abs(cas[0])) if cas.size and cas[0] != 0 else 0.0
    )
    summary = {
        "passed": True,
        "dt": dt,
        "energy_drift": drift,
        "casimir_drift": cas_drift,
        "P_final": float(result.column("P")[-1]),
        "X_final": float(result.column("X")[-1]),
    }
    _write_summary(out, "evolve", summary)
    return summary


def run_perturb_init(cfg: ExperimentConfig) -> dict:
    out = _prepare_out(cfg)
    ansatz = build_ansatz(cfg)
    field = build_field(cfg, ansatz)
    state = solve_steady(cfg, ansatz, field)
    state.save_csv(out / "steady_state.csv")
    spec = CasimirSpec.from_state(
        state, ansatz, field,
        psi_floor_rel=cfg.psi_floor_rel, hls_constant=cfg.hls_constant,
    )
    f0 = f0_sampler(state, ansatz, field)
    bump = BumpPerturbation(
        eps=cfg.perturb_eps,
        extfield=field,
        r_center_plus=cfg.perturb_r_plus,
        r_center_minus=cfg.perturb_r_minus,
        r_width=cfg.perturb_r_width,
        p_cut=cfg.perturb_p_cut,
        sigma_scale=cfg.perturb_sigma_scale,
        side=cfg.perturb_side,
    )
    bump_radius = max(cfg.perturb_r_plus, cfg.perturb_r_minus) + cfg.perturb_r_width
    e_cap_margin = max(
        0.05, 0.5 * cfg.perturb_p_cut ** 2 + float(np.max(np.abs(state.u0))) - cfg.e_max + 0.05
    )
    lattice = build_eval_lattice(
        spec, eval_lattice_spec(cfg, state, bump_radius), e_cap_margin=e_cap_margin
    )
    calibrate_on_eval_lattice(bump, lattice)
    datum = PerturbedDatum(f0, bump)

    ens, grid, dt = _kinetic_setup(cfg, datum, state, field, extra_radius=bump_radius)
    times = sample_times(cfg)
    region_rows = []
    next_sample = {"i": 0}

    def collector(sim_state):
        if next_sample["i"] < times.size and sim_state.t >= times[next_sample["i"]] - 1e-9:
            region_rows.append(region_norms(sim_state.ensemble, spec))
            next_sample["i"] += 1

    result = run(
        ens,
        grid,
        field,
        dt=dt,
        t_final=cfg.t_final,
        self_field=cfg.self_field,
        casimir_eval=lambda e: casimir_functional(e, spec),
        diag_stride=cfg.diag_stride,
        r_escape=cfg.r_chamber,
        keep_history=True,
        sample_callback=collector,
    )
    rhs_info = stability_rhs(datum, f0, spec, lattice, charge_rtol=cfg.charge_rtol)
    lhs_vals = []
    excluded = []
    for ts in times:
        info = stability_lhs(ts, result.history, datum, f0, spec, lattice, dt)
        lhs_vals.append(info["lhs"])
        excluded.append(info["excluded_mass"])
    report = StabilityReport(
        times=times,
        lhs=np.asarray(lhs_vals),
        rhs=rhs_info["rhs"],
        region=region_rows,
        rhs_terms=rhs_info["terms"],
        tolerance=cfg.report_tol,
        excluded_mass=np.asarray(excluded),
    )
    report.to_csv(out / "stability.csv")
    (out / "summary.txt").write_text(report.summary_text())
    _write_diagnostics_csv(
        out / "diagnostics.csv",
        result.diagnostics,
        {"times": times, "lhs": report.lhs, "rhs": report.rhs},
    )
    plots.plot_stability(report, out / "stability.png")
    plots.plot_diagnostics(result.diagnostics, out / "energy.png")
    summary = {
        "passed": report.passed,
        "dt": dt,
        "rhs": rhs_info["rhs"],
        "lhs_max": float(np.max(report.lhs)),
        "region_drift": report.region_drift(),
        "eps": cfg.perturb_eps,
    }
    _write_summary(out, "perturb-init", summary)
    return summary


def run_perturb_field(cfg: ExperimentConfig) -> dict:
    out = _prepare_out(cfg)
    ansatz = build_ansatz(cfg)
    field = build_field(cfg, ansatz)
    state = solve_steady(cfg, ansatz, field)
    state.save_csv(out / "steady_state.csv")
    fbump = FieldBump(
        amplitude=cfg.fieldpert_amp,
        r_center=cfg.fieldpert_r_center,
        r_width=cfg.fieldpert_r_width,
    )
    field_pert = perturbed_theta_pinch(field, fbump)
    f0 = f0_sampler(state, ansatz, field)

    histories = {}
    for tag, fld in (("perturbed", field_pert), ("base", field)):
        ens, grid, dt = _kinetic_setup(cfg, f0, state, field)
        result = run(
            ens, grid, fld, dt=dt, t_final=cfg.t_final,
            self_field=cfg.self_field, diag_stride=cfg.diag_stride,
            r_escape=cfg.r_chamber, keep_history=True,
        )
        histories[tag] = result
        _write_diagnostics_csv(out / f"diagnostics_{tag}.csv", result.diagnostics)
    times = sample_times(cfg)
    lat = eval_lattice_spec(cfg, state)
    report = contdep_bound(
        histories["perturbed"].history,
        histories["base"].history,
        f0,
        lat,
        times,
        dt,
        gamma=cfg.gronwall_gamma,
        c_gronwall=cfg.gronwall_c,
        field_extent=cfg.extent_effective,
    )
    report.to_csv(out / "contdep.csv")
    plots.plot_contdep(report, out / "contdep.png")
    summary = {
        "passed": report.passed,
        "dt": dt,
        "lhs_final": float(report.lhs[-1]),
        "rhs_final": float(report.rhs[-1]),
        "empirical_ratio_final": float(report.empirical_ratio()[-1]),
        "delta_b": cfg.fieldpert_amp,
    }
    _write_summary(out, "perturb-field", summary)
    return summary


def run_combined(cfg: ExperimentConfig) -> dict:
    out = _prepare_out(cfg)
    ansatz = build_ansatz(cfg)
    field = build_field(cfg, ansatz)
    state = solve_steady(cfg, ansatz, field)
    state.save_csv(out / "steady_state.csv")
    spec = CasimirSpec.from_state(
        state, ansatz, field,
        psi_floor_rel=cfg.psi_floor_rel, hls_constant=cfg.hls_constant,
    )
    f0 = f0_sampler(state, ansatz, field)
    bump = BumpPerturbation(
        eps=cfg.perturb_eps,
        extfield=field,
        r_center_plus=cfg.perturb_r_plus,
        r_center_minus=cfg.perturb_r_minus,
        r_width=cfg.perturb_r_width,
        p_cut=cfg.perturb_p_cut,
        sigma_scale=cfg.perturb_sigma_scale,
        side=cfg.perturb_side,
    )
    bump_radius = max(cfg.perturb_r_plus, cfg.perturb_r_minus) + cfg.perturb_r_width
    lattice = build_eval_lattice(spec, eval_lattice_spec(cfg, state, bump_radius))
    calibrate_on_eval_lattice(bump, lattice)
    datum = PerturbedDatum(f0, bump)
    fbump = FieldBump(
        amplitude=cfg.fieldpert_amp,
        r_center=cfg.fieldpert_r_center,
        r_width=cfg.fieldpert_r_width,
    )
    field_pert = perturbed_theta_pinch(field, fbump)

    results = {}
    for tag, fld in (("pert", field_pert), ("star", field)):
        ens, grid, dt = _kinetic_setup(cfg, datum, state, field, extra_radius=bump_radius)
        results[tag] = run(
            ens, grid, fld, dt=dt, t_final=cfg.t_final,
            self_field=cfg.self_field, diag_stride=cfg.diag_stride,
            r_escape=cfg.r_chamber, keep_history=True,
        )
        _write_diagnostics_csv(out / f"diagnostics_{tag}.csv", results[tag].diagnostics)

    times = sample_times(cfg)
    lat = eval_lattice_spec(cfg, state, bump_radius)

    # part 1: initial-data bound for ||f_* - f0||_2 (bounded-psi estimate)
    rhs_info = stability_rhs(datum, f0, spec, lattice, charge_rtol=cfg.charge_rtol)
    region_sq = 0.0
    for name in ("plus", "minus"):
        data = spec.species(name)
        X, P = lattice.nodes(name)
        F = lattice.F[name]
        pos = data.sign * F >= 0.0
        fi = np.asarray(datum(X[pos], P[pos], name), dtype=float)
        f0v = np.asarray(f0(X[pos], P[pos], name), dtype=float)
        region_sq += float(np.sum(lattice.vol * (fi - f0v) ** 2))
    bound1 = math.sqrt(2.0 * (spec.c_combined() * rhs_info["rhs"] + region_sq))

    # part 2: field continuous dependence of f - f_* (shared initial datum)
    cd = contdep_bound(
        results["pert"].history,
        results["star"].history,
        datum,
        lat,
        times,
        dt,
        gamma=cfg.gronwall_gamma,
        c_gronwall=cfg.gronwall_c,
        field_extent=cfg.extent_effective,
    )

    # direct distance sum ||f(t) - f0||_2 on the tensor lattice
    from .casimir import _f_at_time
    from .kinetic import phase_lattice_points

    xs, ps = phase_lattice_points(lat)
    X = np.repeat(xs, ps.shape[0], axis=0)
    P = np.tile(ps, (xs.shape[0], 1))
    lhs = np.zeros(times.size)
    for i, ts in enumerate(times):
        for name in ("plus", "minus"):
            ft = _f_at_time(datum, results["pert"].history, ts, X, P, name, dt)
            f0v = np.asarray(f0(X, P, name), dtype=float)
            lhs[i] += math.sqrt(float(np.sum(lat.cell_volume * (ft - f0v) ** 2)))
    total_bound = bound1 + cd.rhs
    passed = bool(np.all(lhs <= total_bound + cfg.report_tol))
    with open(out / "combined.csv", "w") as fh:
        fh.write("t,lhs,bound_initial,bound_field,bound_total,pass\n")
        for i, ts in enumerate(times):
            ok = lhs[i] <= total_bound[i] + cfg.report_tol
            fh.write(
                f"{ts:.17g},{lhs[i]:.17g},{bound1:.17g},{cd.rhs[i]:.17g},"
                f"{total_bound[i]:.17g},{ok}\n"
            )
    plots.plot_combined(times, lhs, total_bound, out / "combined.png")
    summary = {
        "passed": passed,
        "dt": dt,
        "bound_initial": bound1,
        "lhs_final": float(lhs[-1]),
        "bound_total_final": float(total_bound[-1]),
        "c_combined": spec.c_combined(),
    }
    _write_summary(out, "combined", summary)
    return summary


def _write_summary(out: Path, kind: str, summary: dict) -> None:
    lines = [f"experiment = {kind}"]
    for key, val in summary.items():
        lines.append(f"{key} = {val}")
    (out / "result.txt").write_text("\n".join(lines) + "\n")


_RUNNERS = {
    "steady": run_steady,
    "evolve": run_evolve,
    "perturb-init": run_perturb_init,
    "perturb-field": run_perturb_field,
    "combined": run_combined,
}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Dispatch on cfg.kind; returns the summary dict (with 'passed')."""
    cfg.validate()
    runner = _RUNNERS.get(cfg.kind)
    if runner is None:
        raise ExperimentError(f"unknown experiment kind {cfg.kind!r}")
    summary = runner(cfg)
    summary["out_dir"] = cfg.out_dir
    return summary
