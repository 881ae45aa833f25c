"""Dirichlet sine eigenbasis of the Laplacian on an interval or rectangle.

Every field in the simulator lives in the span of the first modes of the
Dirichlet Laplacian, ``-lap e_k = mu_k e_k`` with ``e_k = 0`` on the boundary.
On an interval of length L the eigenpairs are closed form,

    mu_i = (i pi / L)^2,    e_i(x) = sqrt(2/L) sin(i pi x / L),

and on a rectangle they are tensor products of the 1D pairs.  The basis is
orthonormal in L^2(D).  Transforms between modal coefficients and grid values
use direct sine summation (no FFT); quadrature is composite trapezoid on a
uniform grid including the endpoints, which integrates products of basis
functions exactly as long as the grid has at least ``2m + 1`` points per axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Domain", "SpectralBasis", "build_basis"]


@dataclass(frozen=True)
class Domain:
    """Rectangular domain (0, L1) x ... with homogeneous Dirichlet boundary."""

    lengths: tuple[float, ...]

    def __post_init__(self):
        if not 1 <= len(self.lengths) <= 2:
            raise ValueError(f"domain dimension must be 1 or 2, got {len(self.lengths)}")
        for L in self.lengths:
            if not (np.isfinite(L) and L > 0):
                raise ValueError(f"domain lengths must be positive, got {self.lengths}")

    @classmethod
    def interval(cls, length: float) -> "Domain":
        return cls((float(length),))

    @classmethod
    def rectangle(cls, lx: float, ly: float) -> "Domain":
        return cls((float(lx), float(ly)))

    @property
    def d(self) -> int:
        return len(self.lengths)

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))


def _as_per_axis(value, d: int, name: str) -> tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),) * d
    value = tuple(int(v) for v in value)
    if len(value) != d:
        raise ValueError(f"{name} must have one entry per axis, got {value} for d={d}")
    return value


@dataclass(frozen=True)
class SpectralBasis:
    """Truncated sine eigenbasis with its collocation grid and quadrature.

    Modes are stored flat, sorted by increasing eigenvalue (ties broken by
    index), so ``mu[0] <= mu[1] <= ...`` regardless of dimension.  Modal
    coefficient vectors have length ``m``; grid fields are flat arrays of
    length ``npoints`` over the tensor grid in C order.

    Immutable after construction; safe to share between concurrent
    simulation paths.
    """

    domain: Domain
    m_axes: tuple[int, ...]
    n_axes: tuple[int, ...]
    mode_indices: np.ndarray  # (m, d) 1-based per-axis indices, sorted order
    mu: np.ndarray  # (m,) eigenvalues, ascending
    points: np.ndarray  # (npoints, d) grid points including endpoints
    weights: np.ndarray  # (npoints,) trapezoid quadrature weights
    c0: float  # sup norm shared by every basis function
    _sines: tuple[np.ndarray, ...] = field(repr=False)  # per axis (m_a, n_a)
    _dsines: tuple[np.ndarray, ...] = field(repr=False)  # analytic d/dx of the above
    _tensor_index: np.ndarray = field(repr=False)  # sorted mode -> flat tensor slot

    @property
    def m(self) -> int:
        return int(np.prod(self.m_axes))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.n_axes))

    @property
    def d(self) -> int:
        return self.domain.d

    # -- transforms ---------------------------------------------------------

    def _check_coeffs(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.m,):
            raise ValueError(f"coefficient vector has shape {c.shape}, expected ({self.m},)")
        return c

    def _check_field(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != (self.npoints,):
            raise ValueError(f"grid field has shape {f.shape}, expected ({self.npoints},)")
        return f

    def to_grid(self, c: np.ndarray) -> np.ndarray:
        """Evaluate ``sum_k c_k e_k`` on the collocation grid."""
        c = self._check_coeffs(c)
        tensor = np.zeros(self.m_axes)
        tensor.ravel()[self._tensor_index] = c
        if self.d == 1:
            return tensor @ self._sines[0]
        out = self._sines[0].T @ tensor @ self._sines[1]
        return out.ravel()

    def to_coeffs(self, f: np.ndarray) -> np.ndarray:
        """L^2 projection of a grid field onto the basis (quadrature inner products)."""
        f = self._check_field(f)
        fw = (f * self.weights).reshape(self.n_axes)
        if self.d == 1:
            tensor = self._sines[0] @ fw
        else:
            tensor = self._sines[0] @ fw @ self._sines[1].T
        return tensor.ravel()[self._tensor_index].copy()

    def gradient_on_grid(self, c: np.ndarray) -> np.ndarray:
        """Partial derivatives of the modal field, shape (d, npoints), via analytic mode derivatives."""
        c = self._check_coeffs(c)
        tensor = np.zeros(self.m_axes)
        tensor.ravel()[self._tensor_index] = c
        if self.d == 1:
            return (tensor @ self._dsines[0])[None, :]
        gx = self._dsines[0].T @ tensor @ self._sines[1]
        gy = self._sines[0].T @ tensor @ self._dsines[1]
        return np.stack([gx.ravel(), gy.ravel()])

    # -- norms ---------------------------------------------------------------

    def h1_seminorm_sq(self, c: np.ndarray) -> float:
        """Squared Dirichlet seminorm, the exact Parseval sum ``sum_k mu_k c_k^2``."""
        c = self._check_coeffs(c)
        return float(self.mu @ (c * c))

    def l2_norm_sq(self, c: np.ndarray) -> float:
        """Squared L^2 norm of a modal vector (Parseval)."""
        c = self._check_coeffs(c)
        return float(c @ c)

    def lp_norm_pow(self, f: np.ndarray, p: float) -> float:
        """Quadrature approximation of ``int |f|^p dx`` for p > 1."""
        if not p > 1:
            raise ValueError(f"p must be > 1, got {p}")
        f = self._check_field(f)
        if not np.all(np.isfinite(f)):
            raise ValueError("grid field contains non-finite values")
        return float(self.weights @ np.abs(f) ** p)

    def quad(self, f: np.ndarray) -> float:
        """Trapezoid quadrature of a grid field over the domain."""
        f = self._check_field(f)
        return float(self.weights @ f)

    def mode_sq_integrals(self, f: np.ndarray) -> np.ndarray:
        """Per-mode integrals ``int e_k^2 f dx`` for a grid field, in sorted mode order."""
        f = self._check_field(f)
        fw = (f * self.weights).reshape(self.n_axes)
        if self.d == 1:
            tensor = (self._sines[0] ** 2) @ fw
        else:
            tensor = (self._sines[0] ** 2) @ fw @ (self._sines[1] ** 2).T
        return tensor.ravel()[self._tensor_index].copy()


def build_basis(domain: Domain, m, n=None) -> SpectralBasis:
    """Construct the truncated eigenbasis with grid and quadrature data.

    Parameters
    ----------
    domain : Domain
    m : int or tuple of int
        Mode count per axis.
    n : int or tuple of int, optional
        Grid points per axis, endpoints included.  Defaults to ``4 m + 1``
        per axis, which oversamples the quadrature enough to keep aliasing of
        the non-polynomial source term small.  Must be at least ``2 m + 1``
        so that products of basis functions are integrated exactly.
    """
    m_axes = _as_per_axis(m, domain.d, "m")
    if any(ma <= 0 for ma in m_axes):
        raise ValueError(f"mode count must be positive, got {m_axes}")
    if n is None:
        n_axes = tuple(4 * ma + 1 for ma in m_axes)
    else:
        n_axes = _as_per_axis(n, domain.d, "n")
    for ma, na in zip(m_axes, n_axes):
        if na < 2 * ma + 1:
            raise ValueError(
                f"grid size {na} too small for {ma} modes; "
                f"need n >= 2m+1 = {2 * ma + 1} per axis to avoid aliasing"
            )

    axes_points, axes_weights, sines, dsines = [], [], [], []
    for L, ma, na in zip(domain.lengths, m_axes, n_axes):
        x = np.linspace(0.0, L, na)
        w = np.full(na, L / (na - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        i = np.arange(1, ma + 1)
        arg = np.outer(i * np.pi / L, x)
        scale = math.sqrt(2.0 / L)
        sines.append(scale * np.sin(arg))
        dsines.append(scale * (i * np.pi / L)[:, None] * np.cos(arg))
        axes_points.append(x)
        axes_weights.append(w)

    if domain.d == 1:
        points = axes_points[0][:, None]
        weights = axes_weights[0]
        idx = np.arange(1, m_axes[0] + 1)[:, None]
        mu_tensor = (idx[:, 0] * np.pi / domain.lengths[0]) ** 2
        mode_indices = idx
    else:
        xx, yy = np.meshgrid(axes_points[0], axes_points[1], indexing="ij")
        points = np.column_stack([xx.ravel(), yy.ravel()])
        weights = np.outer(axes_weights[0], axes_weights[1]).ravel()
        ix, iy = np.meshgrid(
            np.arange(1, m_axes[0] + 1), np.arange(1, m_axes[1] + 1), indexing="ij"
        )
        mode_indices = np.column_stack([ix.ravel(), iy.ravel()])
        mu_tensor = (
            (ix.ravel() * np.pi / domain.lengths[0]) ** 2
            + (iy.ravel() * np.pi / domain.lengths[1]) ** 2
        )

    # sort modes by eigenvalue, ties broken by index tuple, and remember the
    # flat tensor slot of each sorted mode for the transforms
    order = np.lexsort(tuple(mode_indices[:, a] for a in range(domain.d - 1, -1, -1)) + (mu_tensor,))
    mode_indices = np.ascontiguousarray(mode_indices[order])
    mu = mu_tensor[order]
    tensor_index = np.ravel_multi_index(tuple((mode_indices - 1).T), m_axes)

    c0 = float(np.prod([math.sqrt(2.0 / L) for L in domain.lengths]))
    return SpectralBasis(
        domain=domain,
        m_axes=m_axes,
        n_axes=n_axes,
        mode_indices=mode_indices,
        mu=mu,
        points=points,
        weights=weights,
        c0=c0,
        _sines=tuple(sines),
        _dsines=tuple(dsines),
        _tensor_index=tensor_index,
    )
