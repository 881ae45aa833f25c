"""Trace-class Wiener noise: spectrum, increments, forcing projection, energy injection.

The driving noise is ``W(t) = sum_i sqrt(lambda_i) B_i(t) e_i`` with
independent scalar Brownian motions ``B_i`` and a covariance spectrum
``lambda_i >= 0`` shared with the Laplacian eigenbasis, truncated to the same
modes as the solution.  The deterministic amplitude is separable,

    sigma(x, t) = sigma0(x) * exp(-kappa t),

which makes the accumulated noise energy

    noise_energy(t) = (eps^2 / 2) sum_i lambda_i int_0^t int_D e_i^2 sigma^2

available in closed form in time, and its all-time limit finite whenever
``kappa > 0``.

Random streams are counter-based (Philox) and keyed per path from a master
seed, so ensemble output is reproducible regardless of execution order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import SpectralBasis

__all__ = [
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
]


@dataclass(frozen=True)
class NoiseSpec:
    """Covariance spectrum, noise strength, and separable amplitude.

    ``sigma0`` may be a float (constant in space), a modal coefficient vector
    of basis length, or a callable mapping grid points of shape (npoints, d)
    to values of shape (npoints,).
    """

    lam: np.ndarray
    eps: float
    sigma0: object = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "lam", lam)
        if lam.ndim != 1:
            raise ValueError("covariance spectrum must be a 1D vector")
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("covariance eigenvalues must be finite and nonnegative")
        if not (np.isfinite(self.eps) and self.eps >= 0):
            raise ValueError(f"noise strength must be >= 0, got {self.eps}")
        if not (np.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError(f"amplitude decay rate must be >= 0, got {self.kappa}")

    @property
    def trace(self) -> float:
        """Trace of the truncated covariance, ``sum_i lambda_i``."""
        return float(np.sum(self.lam))


def power_spectrum(basis: SpectralBasis, gamma: float, lambda0: float) -> np.ndarray:
    """Power-law covariance spectrum ``lambda_i = lambda0 * mu_i^(-gamma)``.

    For gamma > d/2 the extension of this law to all modes is summable
    (trace class); smaller gamma is allowed for experiments but warns.
    """
    if not lambda0 > 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    if gamma <= basis.d / 2:
        warnings.warn(
            f"spectrum decay gamma={gamma} is not summable beyond the truncation "
            f"(needs gamma > d/2 = {basis.d / 2})",
            stacklevel=2,
        )
    return lambda0 * basis.mu ** (-gamma)


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    """Independent counter-based generator for one simulation path.

    Streams are keyed by (master_seed, path_index) through a SeedSequence
    spawn key over the Philox counter-based generator, so every path's draws
    are fixed by the master seed alone.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(seq))


def wiener_increment(spec: NoiseSpec, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One modal noise increment, entries ``sqrt(lambda_i) * N(0, dt)``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    xi = rng.standard_normal(spec.lam.shape[0])
    return np.sqrt(spec.lam * dt) * xi


def _sigma0_grid(spec: NoiseSpec, basis: SpectralBasis) -> np.ndarray:
    s0 = spec.sigma0
    if callable(s0):
        out = np.asarray(s0(basis.points), dtype=float)
        if out.shape != (basis.npoints,):
            raise ValueError("sigma0 callable must return one value per grid point")
        return out
    if np.isscalar(s0):
        return np.full(basis.npoints, float(s0))
    coeffs = np.asarray(s0, dtype=float)
    if coeffs.shape != (basis.m,):
        raise ValueError(
            f"modal sigma0 has shape {coeffs.shape}, expected ({basis.m},); "
            "pass a float for a constant amplitude or a callable for a closed form"
        )
    return basis.to_grid(coeffs)


def amplitude_field(spec: NoiseSpec, t: float, basis: SpectralBasis) -> np.ndarray:
    """Amplitude ``sigma0(x) exp(-kappa t)`` on the collocation grid."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return _sigma0_grid(spec, basis) * np.exp(-spec.kappa * t)


def forcing_coeffs(
    spec: NoiseSpec,
    increment: np.ndarray,
    t: float,
    basis: SpectralBasis,
    sigma_grid: np.ndarray | None = None,
) -> np.ndarray:
    """Modal coefficients of ``eps * sigma(x, t) * sum_i dW_i e_i(x)``.

    The increment field is formed on the grid, multiplied pointwise by the
    amplitude, and projected back onto the basis.  ``sigma_grid`` may be
    passed to reuse a precomputed amplitude field.
    """
    increment = np.asarray(increment, dtype=float)
    if increment.shape != (basis.m,):
        raise ValueError("increment length does not match the basis")
    if spec.eps == 0.0:
        return np.zeros(basis.m)
    if sigma_grid is None:
        sigma_grid = amplitude_field(spec, t, basis)
    w_grid = basis.to_grid(increment)
    return basis.to_coeffs(spec.eps * sigma_grid * w_grid)


def _space_factor(spec: NoiseSpec, basis: SpectralBasis) -> float:
    """``sum_i lambda_i int_D e_i^2 sigma0^2 dx`` by quadrature."""
    s0 = _sigma0_grid(spec, basis)
    return float(spec.lam @ basis.mode_sq_integrals(s0 * s0))


def _time_factor(kappa: float, t: float) -> float:
    """``int_0^t exp(-2 kappa s) ds``, with t = inf allowed for kappa > 0."""
    if np.isinf(t):
        if kappa <= 0:
            raise ValueError("infinite-horizon noise energy requires kappa > 0")
        return 1.0 / (2.0 * kappa)
    if kappa == 0.0:
        return t
    return float(-np.expm1(-2.0 * kappa * t)) / (2.0 * kappa)


def noise_energy(spec: NoiseSpec, t: float, basis: SpectralBasis) -> float:
    """Accumulated noise energy ``(eps^2/2) sum_i lambda_i int_0^t int e_i^2 sigma^2``.

    Nondecreasing in t; closed form in time thanks to the separable amplitude.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if spec.eps == 0.0:
        return 0.0
    return 0.5 * spec.eps**2 * _space_factor(spec, basis) * _time_factor(spec.kappa, t)


def noise_energy_series(spec: NoiseSpec, t: np.ndarray, basis: SpectralBasis) -> np.ndarray:
    """`noise_energy` evaluated on a whole time grid with one quadrature pass."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("times must be >= 0")
    if spec.eps == 0.0:
        return np.zeros_like(t)
    space = _space_factor(spec, basis)
    if spec.kappa == 0.0:
        tf = t.copy()
    else:
        tf = -np.expm1(-2.0 * spec.kappa * t) / (2.0 * spec.kappa)
    return 0.5 * spec.eps**2 * space * tf


def noise_energy_total(spec: NoiseSpec, basis: SpectralBasis) -> tuple[float, float]:
    """All-time noise energy and its coarse upper bound.

    Returns ``(exact, coarse)`` where ``exact`` is the infinite-horizon limit
    of `noise_energy` and ``coarse`` is the cruder estimate
    ``(eps^2/2) c0^2 TrR int_0^inf int sigma^2``; the first never exceeds the
    second, strictly when sigma is not constant in space.
    """
    if spec.eps == 0.0:
        return 0.0, 0.0
    if spec.kappa <= 0:
        raise ValueError("total noise energy is finite only for kappa > 0")
    exact = noise_energy(spec, np.inf, basis)
    s0 = _sigma0_grid(spec, basis)
    sigma_sq_spacetime = basis.quad(s0 * s0) * _time_factor(spec.kappa, np.inf)
    coarse = 0.5 * spec.eps**2 * basis.c0**2 * spec.trace * sigma_sq_spacetime
    if exact > coarse * (1 + 1e-12) + 1e-300:
        raise AssertionError("noise energy exceeded its coarse bound; quadrature is inconsistent")
    return exact, coarse


def ito_correction_rate(spec: NoiseSpec, t: float, basis: SpectralBasis) -> float:
    """Instantaneous quadratic-variation rate ``eps^2 sum_i lambda_i int e_i^2 sigma^2(., t)``.

    This is twice the derivative of `noise_energy`; the velocity energy
    equation gains exactly this rate from the noise.
    """
    if spec.eps == 0.0:
        return 0.0
    return spec.eps**2 * _space_factor(spec, basis) * float(np.exp(-2.0 * spec.kappa * t))
