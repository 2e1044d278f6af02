"""Two-species 2.5D Vlasov-Poisson simulator with an external magnetic field.

The package evolves ion/electron phase-space densities f+(t,x,p), f-(t,x,p)
with x in R^2 and p in R^3, coupled through the free-space 2D Poisson
equation -Delta U = 4 pi (rho+ - rho-), under a prescribed external magnetic
field B = curl A.  It constructs magnetically confined steady states for
theta-pinch and z-pinch configurations and validates conservation laws,
confinement conditions and energy-Casimir stability estimates numerically.
"""

__version__ = "0.1.0"

from .ansatz import AnsatzPair, SpeciesProfile, confining_theta_pinch_field, standard_ansatz
from .casimir import CasimirSpec, casimir_functional, stability_lhs, stability_rhs, xi
from .config import ExperimentConfig, parse_config
from .extfield import ExternalField
from .grid import Grid2D
from .kinetic import LatticeSpec, MarkerEnsemble, SimulationState, deposit_charge, init_ensemble, run
from .perturbations import BumpPerturbation, FieldBump, PerturbedDatum
from .pusher import FieldHistory, InvariantTriple, PhasePoint, backward_evaluate, boris_step, invariants
from .steadystate import (
    RadialSteadyState,
    check_assumptions,
    confinement_margin,
    density_from_potential,
    fixed_point_solve,
    sample_f0,
    support_radius,
)
from .experiments import run_experiment

__all__ = [
    "AnsatzPair",
    "BumpPerturbation",
    "CasimirSpec",
    "ExperimentConfig",
    "ExternalField",
    "FieldBump",
    "FieldHistory",
    "Grid2D",
    "InvariantTriple",
    "LatticeSpec",
    "MarkerEnsemble",
    "PerturbedDatum",
    "PhasePoint",
    "RadialSteadyState",
    "SimulationState",
    "SpeciesProfile",
    "backward_evaluate",
    "boris_step",
    "casimir_functional",
    "check_assumptions",
    "confinement_margin",
    "confining_theta_pinch_field",
    "density_from_potential",
    "deposit_charge",
    "fixed_point_solve",
    "init_ensemble",
    "invariants",
    "parse_config",
    "run",
    "run_experiment",
    "sample_f0",
    "stability_lhs",
    "stability_rhs",
    "standard_ansatz",
    "support_radius",
    "xi",
    "__version__",
]
