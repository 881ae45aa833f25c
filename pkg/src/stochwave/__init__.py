"""Spectral Galerkin Monte Carlo simulation of stochastic nonlinear wave equations.

The governed dynamics is the damped wave equation with a polynomial source
and additive trace-class noise,

    u_tt - lap u + |u_t|^(q-2) u_t = |u|^(p-2) u + eps sigma(x, t) dW/dt,

with homogeneous Dirichlet boundary conditions on an interval or rectangle.
The package discretizes it as a modal SDE system over the Dirichlet sine
eigenbasis, integrates ensembles of paths reproducibly, and evaluates the
energy functionals, identities, and finite-time blow-up certificates that
govern the competition between the damping and source exponents.
"""

from .analysis import (
    BlowupParams,
    blowup_functional_series,
    certificate,
    concavity_exponent,
    energy_deficit_series,
    initial_signed_energy,
    lifespan_bound,
    moment_energy_bound,
)
from .basis import Domain, SpectralBasis, build_basis
from .config import ConfigError, load_config, resolve_config
from .dynamics import (
    ModalState,
    SimConfig,
    StopInfo,
    TrajectoryRecord,
    drift,
    energy_identity_residual,
    simulate_path,
    step,
    stopping_time,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleResult,
    EnsembleStats,
    aggregate_records,
    estimate_blowup_probability,
    run_ensemble,
    save_run,
    sup_energy_estimate,
)
from .nonlinear import (
    CutoffLevel,
    Exponents,
    cutoff_weight,
    damping_gap,
    odd_power,
    resolvent,
    truncated_source,
    yosida,
)
from .noise import (
    NoiseSpec,
    amplitude_field,
    forcing_coeffs,
    ito_correction_rate,
    noise_energy,
    noise_energy_series,
    noise_energy_total,
    path_rng,
    power_spectrum,
    wiener_increment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Domain",
    "SpectralBasis",
    "build_basis",
    "Exponents",
    "CutoffLevel",
    "odd_power",
    "resolvent",
    "yosida",
    "cutoff_weight",
    "truncated_source",
    "damping_gap",
    "NoiseSpec",
    "power_spectrum",
    "path_rng",
    "wiener_increment",
    "amplitude_field",
    "forcing_coeffs",
    "noise_energy",
    "noise_energy_series",
    "noise_energy_total",
    "ito_correction_rate",
    "SimConfig",
    "ModalState",
    "StopInfo",
    "TrajectoryRecord",
    "drift",
    "step",
    "simulate_path",
    "energy_identity_residual",
    "stopping_time",
    "EnsembleConfig",
    "EnsembleStats",
    "EnsembleResult",
    "run_ensemble",
    "aggregate_records",
    "estimate_blowup_probability",
    "sup_energy_estimate",
    "save_run",
    "BlowupParams",
    "concavity_exponent",
    "initial_signed_energy",
    "certificate",
    "energy_deficit_series",
    "blowup_functional_series",
    "lifespan_bound",
    "moment_energy_bound",
    "ConfigError",
    "load_config",
    "resolve_config",
]
