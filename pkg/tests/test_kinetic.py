"""Marker ensemble: lattice init, CIC deposition, conservation, evolution."""

import math

import numpy as np
import pytest

from pinchsim.extfield import ExternalField
from pinchsim.grid import Grid2D
from pinchsim.kinetic import (
    DiagnosticsError,
    EmptySupportError,
    LatticeSpec,
    MarkerEscapeError,
    SpeciesMarkers,
    MarkerEnsemble,
    deposit_charge,
    default_dt,
    init_ensemble,
    lq_norms,
    run,
    support_extrema,
)


def _box_sampler(value=2.0, xb=0.5, pb=0.5):
    def sampler(x, p, sp):
        inside = (
            (np.abs(x[:, 0]) <= xb)
            & (np.abs(x[:, 1]) <= xb)
            & np.all(np.abs(p) <= pb, axis=1)
        )
        return np.where(inside, value, 0.0)

    return sampler


# ----------------------------------------------------------------------
# initialization
# ----------------------------------------------------------------------
def test_init_empty_support_raises():
    zero = lambda x, p, sp: np.zeros(x.shape[0])
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=4, np_=4)
    with pytest.raises(EmptySupportError):
        init_ensemble(zero, lat)


def test_init_constant_box_exact_weight():
    # lattice aligned with the box: midpoint sum is exact for constants
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=8, np_=6)
    ens = init_ensemble(_box_sampler(value=2.0, xb=0.5, pb=0.5), lat, seed=3)
    box_volume = 1.0 ** 2 * 1.0 ** 3
    for name in ("plus", "minus"):
        total = ens.species(name).weight.sum()
        assert total == pytest.approx(2.0 * box_volume, rel=1e-13)


def test_init_refinement_second_order():
    # smooth datum: total weight error is O(lattice spacing^2)
    def smooth(x, p, sp):
        r2 = np.sum(x ** 2, axis=1)
        q2 = np.sum(p ** 2, axis=1)
        vals = np.cos(0.5 * np.pi * np.sqrt(r2)) ** 2 * np.cos(0.5 * np.pi * np.sqrt(q2)) ** 2
        vals[np.sqrt(r2) > 1.0] = 0.0
        vals[np.sqrt(q2) > 1.0] = 0.0
        return vals

    totals = []
    for n in (8, 16, 32):
        lat = LatticeSpec(x_halfwidth=1.0, p_halfwidth=1.0, nx=n, np_=n)
        ens = init_ensemble(smooth, lat, seed=0)
        totals.append(ens.plus.weight.sum())
    e1 = abs(totals[0] - totals[2])
    e2 = abs(totals[1] - totals[2])
    assert e2 < e1 / 2.5


def test_seed_reorders_but_never_moves_markers():
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=6, np_=5)
    a = init_ensemble(_box_sampler(), lat, seed=0)
    b = init_ensemble(_box_sampler(), lat, seed=99)
    for name in ("plus", "minus"):
        pa = np.sort(np.hstack([a.species(name).x, a.species(name).p]), axis=0)
        pb = np.sort(np.hstack([b.species(name).x, b.species(name).p]), axis=0)
        np.testing.assert_array_equal(pa, pb)
    assert not np.array_equal(a.plus.x, b.plus.x)  # order differs


# ----------------------------------------------------------------------
# deposition
# ----------------------------------------------------------------------
def _single_marker_ensemble(x, w=1.0):
    sp = SpeciesMarkers(
        x=np.array([x], dtype=float),
        p=np.zeros((1, 3)),
        weight=np.array([w], dtype=float),
        f_val=np.array([1.0]),
        cell_volume=1.0,
    )
    empty = SpeciesMarkers(
        x=np.zeros((0, 2)), p=np.zeros((0, 3)), weight=np.zeros(0),
        f_val=np.zeros(0), cell_volume=1.0,
    )
    return MarkerEnsemble(plus=sp, minus=empty)


def test_deposit_marker_on_node():
    g = Grid2D.centered(1.0, 21)  # h = 0.1
    node = (g.origin[0] + 5 * g.h, g.origin[1] + 7 * g.h)
    ens = _single_marker_ensemble(node, w=0.3)
    deposit_charge(ens, g)
    assert g.rho_plus[5, 7] == pytest.approx(0.3 / g.h ** 2, rel=1e-12)
    g.rho_plus[5, 7] = 0.0
    assert np.all(g.rho_plus == 0.0)


def test_deposit_marker_at_cell_center_quarters():
    g = Grid2D.centered(1.0, 21)
    center = (g.origin[0] + 5.5 * g.h, g.origin[1] + 7.5 * g.h)
    ens = _single_marker_ensemble(center, w=0.4)
    deposit_charge(ens, g)
    expect = 0.25 * 0.4 / g.h ** 2
    for di, dj in ((0, 0), (1, 0), (0, 1), (1, 1)):
        assert g.rho_plus[5 + di, 7 + dj] == pytest.approx(expect, rel=1e-12)


def test_deposit_conserves_total_weight():
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=7, np_=5)
    ens = init_ensemble(_box_sampler(), lat, seed=1)
    g = Grid2D.centered(1.0, 33)
    deposit_charge(ens, g)
    assert g.rho_plus.sum() * g.h ** 2 == pytest.approx(ens.plus.weight.sum(), rel=1e-13)
    assert g.rho_minus.sum() * g.h ** 2 == pytest.approx(ens.minus.weight.sum(), rel=1e-13)


def test_deposit_escape_reports_marker_ids():
    g = Grid2D.centered(1.0, 21)
    ens = _single_marker_ensemble((0.999, 0.0))
    with pytest.raises(MarkerEscapeError) as err:
        deposit_charge(ens, g, t=2.5)
    assert err.value.species == "plus"
    assert err.value.t == 2.5
    assert err.value.indices.tolist() == [0]


# ----------------------------------------------------------------------
# norms and support functionals
# ----------------------------------------------------------------------
def test_lq_norms_basics():
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=6, np_=5)
    ens = init_ensemble(_box_sampler(value=2.0), lat, seed=0)
    norms = lq_norms(ens)
    assert norms["L1_plus"] == pytest.approx(ens.plus.weight.sum(), rel=1e-13)
    assert norms["Linf_plus"] == 2.0
    empty = MarkerEnsemble(
        plus=SpeciesMarkers(np.zeros((0, 2)), np.zeros((0, 3)), np.zeros(0), np.zeros(0), 1.0),
        minus=SpeciesMarkers(np.zeros((0, 2)), np.zeros((0, 3)), np.zeros(0), np.zeros(0), 1.0),
    )
    assert lq_norms(empty)["L2_plus"] == 0.0


def test_support_extrema_running_max():
    ens = _single_marker_ensemble((0.1, 0.0))
    ens.plus.p = np.array([[0.0, 2.0, 0.0]])
    P, X = support_extrema(ens)
    assert P == pytest.approx(2.0) and X == pytest.approx(0.1)
    P2, X2 = support_extrema(ens, (3.0, 0.05))
    assert P2 == 3.0 and X2 == pytest.approx(0.1)


# ----------------------------------------------------------------------
# evolution
# ----------------------------------------------------------------------
def test_run_zero_datum_only_advances_time():
    lat = LatticeSpec(x_halfwidth=0.5, p_halfwidth=0.5, nx=4, np_=4)
    ens = init_ensemble(lambda x, p, sp: np.zeros(x.shape[0]), lat, allow_empty=True)
    g = Grid2D.centered(1.0, 17)
    res = run(ens, g, ExternalField.none(), dt=0.1, t_final=0.5)
    assert res.column("t")[-1] == pytest.approx(0.5)
    assert np.all(res.column("H") == 0.0)
    assert np.all(res.column("M") == 0.0)


def test_run_single_marker_gyromotion_no_self_field():
    ens = _single_marker_ensemble((0.0, 0.0), w=1e-6)
    ens.plus.p = np.array([[0.5, 0.0, 0.0]])
    g = Grid2D.centered(2.0, 33)
    field = ExternalField.general(
        lambda x: np.zeros(np.shape(x)[:-1] + (3,)),
        lambda x: np.tile(np.array([0.0, 0.0, 1.0]), np.shape(x)[:-1] + (1,)),
    )
    T = math.pi  # half gyro-turn: p -> (-0.5, 0, 0)
    res = run(ens, g, field, dt=1e-3, t_final=T, self_field=False, keep_history=False)
    p_final = res.ensemble.plus.p[0]
    np.testing.assert_allclose(p_final, [-0.5, 0.0, 0.0], atol=2e-3)
    # P is constant under pure gyromotion
    np.testing.assert_allclose(res.column("P"), 0.5, atol=1e-12)


def test_run_charge_and_lq_conservation(default_f0, default_field):
    lat = LatticeSpec(x_halfwidth=0.65, p_halfwidth=1.5, nx=20, np_=8)
    ens = init_ensemble(default_f0, lat, seed=0)
    g = Grid2D.centered(1.8, 64)
    res = run(ens, g, default_field, dt=0.02, t_final=0.3)
    M = res.column("M")
    np.testing.assert_allclose(M, M[0], rtol=1e-13)
    for key in ("L1_plus", "L2_plus", "Linf_plus", "L1_minus", "L2_minus", "Linf_minus"):
        series = res.column(key)
        np.testing.assert_allclose(series, series[0], rtol=1e-13)
    # support functionals never decrease
    assert np.all(np.diff(res.column("P")) >= 0)
    assert np.all(np.diff(res.column("X")) >= 0)


def test_run_escape_sentinel(default_f0, default_field):
    lat = LatticeSpec(x_halfwidth=0.65, p_halfwidth=1.5, nx=12, np_=6)
    ens = init_ensemble(default_f0, lat, seed=0)
    g = Grid2D.centered(1.8, 64)
    with pytest.raises(MarkerEscapeError):
        run(ens, g, default_field, dt=0.02, t_final=0.1, r_escape=0.2)


def test_run_stationarity_noise_level(default_state, default_f0, default_field):
    """Deposited rho stays at the marker shot-noise level over 100 steps."""
    lat = LatticeSpec(x_halfwidth=0.65, p_halfwidth=1.5, nx=24, np_=10)
    ens = init_ensemble(default_f0, lat, seed=0)
    g0 = Grid2D.centered(1.8, 64)
    deposit_charge(ens, g0)
    # shot-noise floor: per-cell rms of decorrelated CIC weights
    floor = 0.0
    for name in ("plus", "minus"):
        sp = ens.species(name)
        cell_counts = np.histogram2d(
            sp.x[:, 0], sp.x[:, 1], bins=g0.nx - 1,
            range=[[-1.8, 1.8], [-1.8, 1.8]],
        )[0]
        w2 = np.max(sp.weight) ** 2 * cell_counts.max()
        floor += math.sqrt(w2) / g0.h ** 2
    R = g0.node_radii()
    rho0g = np.interp(R.ravel(), default_state.r, default_state.rho0).reshape(R.shape)
    res = run(ens, g0.copy(), default_field, dt=0.01, t_final=1.0, keep_history=False)
    gT = Grid2D.centered(1.8, 64)
    deposit_charge(res.ensemble, gT)
    err_final = np.abs(gT.rho - rho0g).max()
    assert err_final < 3.0 * floor, (err_final, floor)


def test_default_dt_rule():
    assert default_dt(10.0, 0.05, 2.0) == pytest.approx(min(0.02, 0.00625))
    assert default_dt(0.0, 0.05, 2.0) == pytest.approx(0.00625)


def test_reproducibility_same_seed(default_f0, default_field):
    lat = LatticeSpec(x_halfwidth=0.65, p_halfwidth=1.5, nx=12, np_=6)

    def one():
        ens = init_ensemble(default_f0, lat, seed=7)
        g = Grid2D.centered(1.8, 48)
        res = run(ens, g, default_field, dt=0.02, t_final=0.1)
        return res

    r1, r2 = one(), one()
    for key in r1.diagnostics:
        np.testing.assert_array_equal(r1.diagnostics[key], r2.diagnostics[key])
    np.testing.assert_array_equal(r1.ensemble.plus.x, r2.ensemble.plus.x)


def test_step_matches_run_single_step(default_f0, default_field):
    from pinchsim.kinetic import SimulationState, step

    lat = LatticeSpec(x_halfwidth=0.65, p_halfwidth=1.5, nx=10, np_=6)
    g = Grid2D.centered(1.8, 48)
    ens_a = init_ensemble(default_f0, lat, seed=0)
    state = SimulationState(t=0.0, ensemble=ens_a, grid=g.copy(), extfield=default_field)
    step(state, 0.02)
    assert state.t == pytest.approx(0.02)

    ens_b = init_ensemble(default_f0, lat, seed=0)
    res = run(ens_b, g.copy(), default_field, dt=0.02, t_final=0.02, keep_history=False)
    np.testing.assert_array_equal(state.ensemble.plus.x, res.ensemble.plus.x)
    np.testing.assert_array_equal(state.ensemble.plus.p, res.ensemble.plus.p)
    with pytest.raises(ValueError):
        step(state, -0.1)


def test_non_finite_diagnostics_abort_with_dump(default_field):
    from pinchsim.kinetic import DiagnosticsError

    ens = _single_marker_ensemble((0.1, 0.0), w=1.0)
    ens.plus.p = np.array([[np.inf, 0.0, 0.0]])  # corrupt state mid-run setup
    g = Grid2D.centered(1.0, 17)
    with pytest.raises(DiagnosticsError) as err:
        run(ens, g, ExternalField.none(), dt=0.1, t_final=0.0, self_field=False)
    assert "t" in err.value.partial
