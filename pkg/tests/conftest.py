"""Shared fixtures: the default confined state is expensive, build it once."""

import numpy as np
import pytest

from pinchsim.ansatz import confining_theta_pinch_field, standard_ansatz
from pinchsim.casimir import CasimirSpec
from pinchsim.steadystate import QuadSpec, f0_sampler, fixed_point_solve

DEFAULT_ANSATZ_KW = dict(
    kappa_plus=0.55,
    kappa_minus=0.33,
    e_max=1.0,
    smooth_delta=0.05,
    turn=1.3,
    decay=0.5,
    sigma_scale=0.15,
    mu_width=0.25,
)


@pytest.fixture(scope="session")
def default_ansatz():
    return standard_ansatz(**DEFAULT_ANSATZ_KW)


@pytest.fixture(scope="session")
def default_field(default_ansatz):
    return confining_theta_pinch_field(default_ansatz, r_tilde=1.0, shape="cubic")


@pytest.fixture(scope="session")
def default_state(default_ansatz, default_field):
    state = fixed_point_solve(
        default_ansatz,
        default_field,
        rmax=2.25,
        tol=1e-8,
        n_r=256,
        quad=QuadSpec(n_g=25, n_e=16, n_theta=16),
    )
    assert state.converged
    return state


@pytest.fixture(scope="session")
def default_f0(default_state, default_ansatz, default_field):
    return f0_sampler(default_state, default_ansatz, default_field)


@pytest.fixture(scope="session")
def default_spec(default_state, default_ansatz, default_field):
    return CasimirSpec.from_state(default_state, default_ansatz, default_field)
