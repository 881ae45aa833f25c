"""Damping map, resolvent, Yosida regularization, cutoff, and their proved bounds."""

import numpy as np
import pytest
from scipy.optimize import brentq

from stochwave import (
    CutoffLevel,
    Exponents,
    cutoff_weight,
    damping_gap,
    odd_power,
    resolvent,
    truncated_source,
    yosida,
)


def test_odd_power_examples():
    assert odd_power(-3.7, 2.0) == pytest.approx(-3.7, rel=1e-15)
    assert odd_power(2.0, 4.0) == pytest.approx(8.0, rel=1e-15)
    assert odd_power(-1.5, 3.0) == pytest.approx(-2.25, rel=1e-15)
    assert odd_power(0.0, 2.5) == 0.0


def test_odd_power_is_odd_and_monotone():
    rng = np.random.default_rng(0)
    x = rng.uniform(-50, 50, 200)
    for q in (2.0, 2.5, 3.0, 4.0):
        assert np.allclose(odd_power(-x, q), -odd_power(x, q), rtol=1e-13)
        xs = np.sort(x)
        assert np.all(np.diff(odd_power(xs, q)) >= 0)


def test_resolvent_linear_case():
    x = np.array([-7.0, 0.0, 0.3, 1e3])
    assert np.allclose(resolvent(x, 2.0, 0.7), x / 1.7, rtol=1e-14)


def test_resolvent_golden_ratio():
    # q=3, lam=1, x=1 solves y + y^2 = 1, the inverse golden ratio;
    # bisection oracle on the same equation confirms
    oracle = brentq(lambda y: y + y * y - 1.0, 0.0, 1.0, xtol=1e-14)
    assert oracle == pytest.approx((np.sqrt(5.0) - 1.0) / 2.0, abs=1e-12)
    assert resolvent(1.0, 3.0, 1.0) == pytest.approx(oracle, abs=1e-12)


def test_resolvent_against_bisection_oracle_random():
    rng = np.random.default_rng(1)
    for _ in range(50):
        q = rng.uniform(2.0, 5.0)
        lam = 10.0 ** rng.uniform(-3, 0)
        x = rng.uniform(-1e3, 1e3)
        y = resolvent(x, q, lam)
        lo, hi = (0.0, abs(x)) if x >= 0 else (0.0, abs(x))
        oracle = brentq(lambda t: t + lam * t ** (q - 1) - abs(x), lo, hi + 1e-9, xtol=1e-13)
        assert y == pytest.approx(np.sign(x) * oracle, abs=1e-10, rel=1e-10)
        assert abs(y) <= abs(x) + 1e-15
        assert np.sign(y) == np.sign(x) or x == 0


def test_resolvent_defining_equation_residual():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1e3, 1e3, 1000)
    for q in (2.2, 3.0, 4.0):
        y = resolvent(x, q, 0.05)
        res = y + 0.05 * odd_power(y, q) - x
        assert np.max(np.abs(res) / np.maximum(1.0, np.abs(x))) < 1e-12


def test_resolvent_nonexpansive():
    rng = np.random.default_rng(3)
    for q in (2.5, 3.0, 4.0):
        a = rng.uniform(-100, 100, 300)
        b = rng.uniform(-100, 100, 300)
        gap = np.abs(resolvent(a, q, 0.3) - resolvent(b, q, 0.3))
        assert np.all(gap <= np.abs(a - b) * (1 + 1e-10) + 1e-12)


def test_yosida_examples():
    assert yosida(1.0, 2.0, 1.0) == pytest.approx(0.5, rel=1e-14)
    assert yosida(0.0, 3.5, 0.2) == 0.0
    # (x - y)/lam with y from the bisection oracle
    y_star = brentq(lambda t: t + t * t - 1.0, 0.0, 1.0, xtol=1e-14)
    assert yosida(1.0, 3.0, 1.0) == pytest.approx(1.0 - y_star, abs=1e-12)
    assert yosida(1.0, 3.0, 1.0) == pytest.approx(0.3819660, abs=1e-7)


def test_yosida_bounds_sample():
    rng = np.random.default_rng(4)
    x = np.concatenate([rng.uniform(-1e3, 1e3, 500), np.linspace(-2, 2, 101)])
    for q in (2.0, 2.5, 3.0, 4.0):
        for lam in (1e-3, 1e-2, 0.1, 1.0):
            g_lam = yosida(x, q, lam)
            assert np.all(np.abs(g_lam) <= np.abs(odd_power(x, q)) + 1e-10)
            assert np.all(np.abs(g_lam) <= np.abs(x) / lam + 1e-10)
            h = 1e-6 * np.maximum(1.0, np.abs(x))
            slope = (yosida(x + h, q, lam) - g_lam) / h
            assert np.all(slope >= -1e-6)
            assert np.all(slope <= 1.0 / lam + 1e-6)


def test_yosida_two_formulas_agree():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1e3, 1e3, 2000)
    for q in (2.0, 2.5, 3.0, 4.0):
        for lam in (1e-3, 1e-1, 1.0):
            a = yosida(x, q, lam)
            b = odd_power(resolvent(x, q, lam), q)
            # scaled tolerance: one ulp of |y|^(q-1) alone exceeds 1e-10
            # absolute once the values reach ~1e6
            assert np.max(np.abs(a - b) / (1.0 + np.abs(a))) < 1e-10


def test_yosida_converges_to_power_map():
    # lam_n = 2^-n with x_n = x + 2^-n: the gap to the unregularized map
    # shrinks monotonically (measured trend) and is < 1e-6 at n = 30
    xs = np.linspace(-3.0, 3.0, 61)
    for q in (2.0, 2.5, 3.0, 4.0):
        gaps = []
        for n in range(5, 31, 5):
            lam_n = 2.0**-n
            gaps.append(float(np.max(np.abs(yosida(xs + lam_n, q, lam_n) - odd_power(xs, q)))))
        assert all(g2 <= g1 * 1.01 for g1, g2 in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-6


def test_cutoff_values_and_slope():
    assert cutoff_weight(5.0, 5.0) == 1.0
    assert cutoff_weight(6.0, 5.0) == 0.0
    assert cutoff_weight(5.5, 5.0) == pytest.approx(0.5, rel=1e-14)  # 1 - 3/4 + 1/4
    assert cutoff_weight(0.0, 5.0) == 1.0
    assert cutoff_weight(100.0, 5.0) == 0.0
    x = np.linspace(3.0, 8.0, 20001)
    chi = cutoff_weight(x, 5.0)
    assert np.all((chi >= 0.0) & (chi <= 1.0))
    assert np.all(np.diff(chi) <= 1e-15)
    slope = np.diff(chi) / np.diff(x)
    assert np.max(np.abs(slope)) <= 2.0
    assert np.max(np.abs(slope)) == pytest.approx(1.5, abs=1e-3)


def test_cutoff_is_c1_at_joins():
    eps = 1e-7
    for edge in (5.0, 6.0):
        left = (cutoff_weight(edge, 5.0) - cutoff_weight(edge - eps, 5.0)) / eps
        right = (cutoff_weight(edge + eps, 5.0) - cutoff_weight(edge, 5.0)) / eps
        assert left == pytest.approx(right, abs=1e-5)


def test_truncated_source():
    u = np.array([-1.0, 0.5, 2.0])
    level = CutoffLevel(3.0)
    assert np.all(truncated_source(u, 4.5, 4.0, level) == 0.0)
    assert np.allclose(truncated_source(u, 1.0, 4.0, level), u**3, rtol=1e-14)
    # grad at level + 0.5 scales the p=3 source by the smoothstep value 1/2
    out = truncated_source(np.array([2.0]), 3.5, 3.0, level)
    assert out[0] == pytest.approx(0.5 * 2.0 * 2.0, rel=1e-14)
    with pytest.raises(ValueError):
        truncated_source(u, np.nan, 4.0, level)


def test_damping_gap():
    assert damping_gap(1.3, 1.3, 3.0) == 0.0
    rng = np.random.default_rng(6)
    a = rng.uniform(-10, 10, 400)
    b = rng.uniform(-10, 10, 400)
    assert np.allclose(damping_gap(a, b, 2.0), (a - b) ** 2, rtol=1e-13)
    assert damping_gap(1.0, -1.0, 3.0) == pytest.approx(4.0, rel=1e-14)
    assert 4.0 >= 0.5 * 2.0**3
    for q in (2.0, 2.5, 3.0, 4.0):
        g = damping_gap(a, b, q)
        assert np.all(g >= 0.0)
        assert np.all((g > 0) | (a == b))
        # calibrate an empirical constant c with gap >= c |a-b|^q on the sample
        mask = a != b
        c_emp = np.min(g[mask] / np.abs(a - b)[mask] ** q)
        assert c_emp > 0.0


def test_exponent_validation():
    Exponents(q=2.0, p=4.0, d=1)
    Exponents(q=3.0, p=3.5, d=2)
    Exponents(q=2.0, p=3.0, d=3)  # cap is 4 for d=3
    with pytest.raises(ValueError):
        Exponents(q=1.9, p=4.0, d=1)
    with pytest.raises(ValueError):
        Exponents(q=2.0, p=2.0, d=1)
    with pytest.raises(ValueError):
        Exponents(q=2.0, p=4.5, d=3)
    with pytest.raises(ValueError):
        Exponents(q=2.0, p=3.0, d=4)
