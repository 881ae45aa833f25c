"""Self-contained verification suites behind the ``verify`` CLI subcommand.

Each suite exercises one module's invariants at desk scale and returns a
machine-readable report: a list of named checks with pass flags and details.
These are condensed versions of the test suite, runnable from an installed
package without pytest.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.integrate import solve_ivp

from .basis import Domain, build_basis
from .dynamics import SimConfig, energy_identity_residual, simulate_path
from .nonlinear import Exponents, odd_power, resolvent, yosida
from .noise import NoiseSpec, power_spectrum

__all__ = ["SUITES", "run_suite"]


def _check(name: str, passed: bool, detail: str) -> dict:
    return {"name": name, "passed": bool(passed), "detail": detail}


def _suite_basis() -> list[dict]:
    checks = []
    rng = np.random.default_rng(0)
    for domain, m in [(Domain.interval(1.0), 16), (Domain.rectangle(1.0, 2.0), (4, 5))]:
        b = build_basis(domain, m)
        eye = np.eye(b.m)
        gram = np.array(
            [[b.quad(b.to_grid(eye[i]) * b.to_grid(eye[j])) for j in range(b.m)] for i in range(b.m)]
        )
        err = float(np.max(np.abs(gram - np.eye(b.m))))
        checks.append(_check(f"orthonormality_d{b.d}", err < 1e-12, f"max gram error {err:.2e}"))
        c = rng.standard_normal(b.m) * 10
        rt = float(np.max(np.abs(b.to_coeffs(b.to_grid(c)) - c)))
        checks.append(_check(f"round_trip_d{b.d}", rt < 1e-10, f"max round-trip error {rt:.2e}"))
        pv = abs(b.lp_norm_pow(b.to_grid(c), 2.0) - b.l2_norm_sq(c))
        checks.append(_check(f"parseval_d{b.d}", pv < 1e-8, f"modal vs grid L2 gap {pv:.2e}"))
        g = b.gradient_on_grid(c)
        grad_quad = b.quad(np.sum(g * g, axis=0))
        gap = abs(grad_quad - b.h1_seminorm_sq(c)) / max(1.0, b.h1_seminorm_sq(c))
        checks.append(_check(f"gradient_parseval_d{b.d}", gap < 1e-10, f"relative gap {gap:.2e}"))
    return checks


def _suite_yosida() -> list[dict]:
    checks = []
    rng = np.random.default_rng(1)
    x = np.concatenate([rng.uniform(-1e3, 1e3, 2400), np.linspace(-5, 5, 100)])
    start = time.perf_counter()
    ok_slope = ok_dom = ok_lin = True
    worst = 0.0
    for q in (2.0, 2.5, 3.0, 4.0):
        for lam in (1e-3, 1e-2, 1e-1, 1.0):
            g_lam = yosida(x, q, lam)
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            slope = (yosida(x + h, q, lam) - g_lam) / h
            ok_slope &= bool(np.all(slope >= -1e-6) and np.all(slope <= 1.0 / lam + 1e-6))
            ok_dom &= bool(np.all(np.abs(g_lam) <= np.abs(odd_power(x, q)) + 1e-10))
            ok_lin &= bool(np.all(np.abs(g_lam) <= np.abs(x) / lam + 1e-10))
            gap = np.abs(g_lam - odd_power(resolvent(x, q, lam), q)) / (1.0 + np.abs(g_lam))
            worst = max(worst, float(np.max(gap)))
    checks.append(_check("slope_bounds", ok_slope, "0 <= finite-difference slope <= 1/lam"))
    checks.append(_check("dominated_by_power_map", ok_dom, "|yosida| <= |odd_power|"))
    checks.append(_check("dominated_by_linear", ok_lin, "|yosida| <= |x|/lam"))
    checks.append(_check("two_formulas_agree", worst < 1e-10, f"worst scaled gap {worst:.2e}"))
    xs = np.linspace(-3, 3, 41)
    gaps = []
    for n in range(5, 31, 5):
        lam_n = 2.0**-n
        gaps.append(float(np.max(np.abs(yosida(xs + lam_n, 3.0, lam_n) - odd_power(xs, 3.0)))))
    trend = all(g2 <= g1 * 1.01 for g1, g2 in zip(gaps, gaps[1:]))
    checks.append(
        _check(
            "convergence_to_power_map",
            trend and gaps[-1] < 1e-6,
            f"gap at lam=2^-30: {gaps[-1]:.2e}, trend {['%.1e' % g for g in gaps]}",
        )
    )
    checks.append(_check("runtime", time.perf_counter() - start < 5.0, f"{time.perf_counter() - start:.2f} s"))
    return checks


def _suite_noise() -> list[dict]:
    checks = []
    b = build_basis(Domain.interval(1.0), 8)
    lam = power_spectrum(b, 2.0, 1.0)
    spec = NoiseSpec(lam=lam, eps=1.0, sigma0=1.0, kappa=0.0)
    rng = np.random.default_rng(11)
    dt = 1e-3
    n_draw = 20000
    draws = np.sqrt(lam * dt) * rng.standard_normal((n_draw, 8))
    var = draws.var(axis=0, ddof=1)
    se = lam * dt * math.sqrt(2.0 / (n_draw - 1))
    ok = bool(np.all(np.abs(var - lam * dt) <= 3 * se))
    checks.append(_check("increment_variance", ok, f"max |var - lam dt| / (3 se) = {np.max(np.abs(var - lam*dt)/(3*se)):.2f}"))
    from .noise import noise_energy, noise_energy_total

    spec_k = NoiseSpec(lam=lam, eps=0.5, sigma0=1.0, kappa=1.0)
    exact, coarse = noise_energy_total(spec_k, b)
    tail_gap = abs(noise_energy(spec_k, 50.0, b) - exact)
    checks.append(_check("noise_energy_limit", tail_gap < 1e-8, f"gap at t=50/kappa: {tail_gap:.2e}"))
    checks.append(_check("coarse_bound", exact <= coarse + 1e-15, f"exact {exact:.3e} <= coarse {coarse:.3e}"))
    return checks


def _suite_energy() -> list[dict]:
    checks = []
    b = build_basis(Domain.interval(1.0), 16)
    exps = Exponents(q=2.0, p=4.0, d=1)
    spec0 = NoiseSpec(lam=np.zeros(16), eps=0.0)
    u0 = np.zeros(16)
    u0[0] = 0.5
    u1 = np.zeros(16)
    maxima = []
    for dt in (2e-3, 1e-3, 5e-4):
        cfg = SimConfig(basis=b, exponents=exps, noise=spec0, u0=u0, u1=u1, dt=dt, T=1.0)
        rec = simulate_path(cfg, seed=0)
        maxima.append(energy_identity_residual(rec).max_abs)
    ratios = [m1 / m2 for m1, m2 in zip(maxima, maxima[1:])]
    checks.append(
        _check(
            "residual_order_one",
            all(r >= 1.7 for r in ratios),
            f"max residuals {['%.2e' % v for v in maxima]}, halving ratios {['%.2f' % r for r in ratios]}",
        )
    )
    return checks


def _suite_blowup_ode() -> list[dict]:
    checks = []
    worst = 0.0
    for alpha in (0.1, 0.25, 0.4):
        for k_const in (0.5, 1.0, 2.0):
            l0 = 2.0
            expo = alpha / (1.0 - alpha)
            t_star = (1.0 - alpha) / (alpha * k_const * l0**expo)
            big = l0 * 10.0 ** math.ceil(3.0 * (1.0 - alpha) / alpha)

            def rhs(_t, y):
                return [k_const * y[0] ** (1.0 / (1.0 - alpha))]

            hit = lambda _t, y: y[0] - big  # noqa: E731
            hit.terminal = True
            hit.direction = 1
            sol = solve_ivp(rhs, (0.0, 2.0 * t_star), [l0], events=hit, rtol=1e-10, atol=1e-12, max_step=t_star / 50)
            t_hit = float(sol.t_events[0][0])
            worst = max(worst, abs(t_hit - t_star) / t_star)
    checks.append(_check("divergence_time", worst < 0.01, f"worst relative error {worst:.2%} over 3x3 grid"))
    return checks


SUITES = {
    "basis": _suite_basis,
    "yosida": _suite_yosida,
    "noise": _suite_noise,
    "energy": _suite_energy,
    "blowup-ode": _suite_blowup_ode,
}


def run_suite(name: str) -> dict:
    """Run one named suite; raises KeyError for unknown names."""
    checks = SUITES[name]()
    return {"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks}
