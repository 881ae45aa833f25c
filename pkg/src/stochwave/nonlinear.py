"""Scalar nonlinear maps: power damping, its Yosida regularization, and the source cutoff.

The damping nonlinearity is the odd power map ``g(x) = |x|^(q-2) x`` with
``q >= 2``; it is maximal monotone on the reals, so its resolvent
``(I + lam g)^(-1)`` is a well defined contraction for every ``lam > 0`` and
the Yosida regularization

    yosida(x) = (x - resolvent(x)) / lam = g(resolvent(x))

is Lipschitz with constant ``1/lam``, dominated by ``g`` and by ``|x|/lam``,
and converges to ``g`` pointwise as ``lam -> 0``.

The source map ``|u|^(p-2) u`` is truncated by a C^1 cutoff of the gradient
norm: the cutoff is identically 1 below the level, 0 above level + 1, and a
monotone cubic smoothstep in between (slope bounded by 1.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Exponents",
    "CutoffLevel",
    "odd_power",
    "resolvent",
    "yosida",
    "cutoff_weight",
    "truncated_source",
    "damping_gap",
]

_RESOLVENT_TOL = 1e-13
_RESOLVENT_MAX_ITER = 200


@dataclass(frozen=True)
class Exponents:
    """Damping exponent q, source exponent p, and spatial dimension d.

    Admissibility: q >= 2, p > 2, and for d >= 3 additionally
    max(p, q) <= 2(d-1)/(d-2) so that H^1_0 embeds compactly in L^p.
    """

    q: float
    p: float
    d: int = 1

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension d must be 1, 2 or 3, got {self.d}")
        if not self.q >= 2:
            raise ValueError(f"damping exponent requires q >= 2, got q={self.q}")
        if not self.p > 2:
            raise ValueError(f"source exponent requires p > 2, got p={self.p}")
        if self.d >= 3:
            cap = 2 * (self.d - 1) / (self.d - 2)
            if max(self.p, self.q) > cap:
                raise ValueError(
                    f"for d={self.d} the exponents must satisfy "
                    f"max(p, q) <= 2(d-1)/(d-2) = {cap:g}, got p={self.p}, q={self.q}"
                )


@dataclass(frozen=True)
class CutoffLevel:
    """Gradient-norm level above which the source term is switched off."""

    level: float

    def __post_init__(self):
        if not self.level > 0:
            raise ValueError(f"cutoff level must be positive, got {self.level}")


def odd_power(x, q: float):
    """Odd power map ``|x|^(q-2) x`` for q >= 2, elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** (q - 1.0)
    return out if out.ndim else float(out)


def resolvent(x, q: float, lam: float):
    """Solve ``y + lam |y|^(q-2) y = x`` elementwise to absolute tolerance 1e-12.

    The map is a strictly increasing bijection of the reals, so the solution
    is unique with sign(y) = sign(x) and |y| <= |x|.  Solved by safeguarded
    Newton on the magnitude with a bisection fallback on [0, |x|]; raises
    RuntimeError if 200 iterations do not converge.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    x = np.asarray(x, dtype=float)
    s = np.abs(x)
    if q == 2.0:
        out = x / (1.0 + lam)
        return out if out.ndim else float(out)

    lo = np.zeros_like(s)
    hi = s.copy()
    # one bisection step seeds Newton away from 0, where the curvature of the
    # power term is unbounded for q < 3
    t = 0.5 * s
    converged = False
    for _ in range(_RESOLVENT_MAX_ITER):
        phi = t + lam * t ** (q - 1.0) - s
        hi = np.where(phi > 0, t, hi)
        lo = np.where(phi > 0, lo, t)
        dphi = 1.0 + lam * (q - 1.0) * t ** (q - 2.0)
        t_new = t - phi / dphi
        bad = ~np.isfinite(t_new) | (t_new < lo) | (t_new > hi)
        t_new = np.where(bad, 0.5 * (lo + hi), t_new)
        # the relative term keeps the stop criterion meaningful when one ulp
        # of t already exceeds the absolute tolerance
        if np.all(np.abs(t_new - t) <= _RESOLVENT_TOL + 4e-16 * t):
            t = t_new
            converged = True
            break
        t = t_new
    if not converged:
        raise RuntimeError(f"resolvent iteration did not converge for q={q}, lam={lam}")
    out = np.sign(x) * t
    return out if out.ndim else float(out)


def yosida(x, q: float, lam: float):
    """Yosida regularization ``(x - resolvent(x, q, lam)) / lam`` of the odd power map."""
    x = np.asarray(x, dtype=float)
    out = (x - resolvent(x, q, lam)) / lam
    return out if out.ndim else float(out)


def cutoff_weight(x, level: float):
    """C^1 cutoff: 1 for x <= level, 0 for x >= level + 1, cubic smoothstep between.

    The transition is ``1 - 3 s^2 + 2 s^3`` with ``s = x - level``; its slope
    peaks at 1.5, comfortably below the required bound of 2.
    """
    if not level > 0:
        raise ValueError(f"cutoff level must be positive, got {level}")
    x = np.asarray(x, dtype=float)
    s = np.clip(x - level, 0.0, 1.0)
    out = 1.0 - 3.0 * s * s + 2.0 * s * s * s
    return out if out.ndim else float(out)


def truncated_source(u: np.ndarray, grad_norm: float, p: float, cutoff: CutoffLevel) -> np.ndarray:
    """Pointwise source ``|u|^(p-2) u`` scaled by the cutoff of the gradient norm.

    ``grad_norm`` is the Dirichlet seminorm of u, supplied by the caller.
    """
    u = np.asarray(u, dtype=float)
    if not (np.isfinite(grad_norm) and np.all(np.isfinite(u))):
        raise ValueError("non-finite input to the truncated source")
    chi = cutoff_weight(grad_norm, cutoff.level)
    if chi == 0.0:
        return np.zeros_like(u)
    return chi * odd_power(u, p)


def damping_gap(a, b, q: float):
    """Monotonicity gap ``(g(a) - g(b)) (a - b)`` of the odd power map, always >= 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = (odd_power(a, q) - odd_power(b, q)) * (a - b)
    return out if out.ndim else float(out)
