"""Eigenbasis construction, transforms, and norm computations."""

import numpy as np
import pytest
from scipy.integrate import quad

from stochwave import Domain, build_basis


@pytest.fixture(scope="module")
def unit_interval():
    return build_basis(Domain.interval(1.0), 8)


def test_interval_eigenvalues_closed_form():
    b = build_basis(Domain.interval(1.0), 4)
    assert b.mu[0] == pytest.approx(np.pi**2, rel=1e-14)
    b2 = build_basis(Domain.interval(2.0), 4)
    assert b2.mu[2] == pytest.approx((3 * np.pi / 2) ** 2, rel=1e-14)


def test_discrete_orthonormality_at_minimal_grid():
    m = 6
    b = build_basis(Domain.interval(1.0), m, 2 * m + 1)
    eye = np.eye(m)
    for i in range(m):
        for j in range(m):
            val = b.quad(b.to_grid(eye[i]) * b.to_grid(eye[j]))
            assert abs(val - (1.0 if i == j else 0.0)) < 1e-12


def test_to_grid_single_mode_midpoint(unit_interval):
    c = np.zeros(8)
    c[0] = 1.0
    field = unit_interval.to_grid(c)
    mid = unit_interval.npoints // 2
    assert field[mid] == pytest.approx(np.sqrt(2.0), abs=1e-14)


def test_to_grid_zero_is_zero(unit_interval):
    assert np.all(unit_interval.to_grid(np.zeros(8)) == 0.0)


def test_to_grid_matches_direct_summation_oracle():
    # c = (1, 1): evaluate sum_j c_j sqrt(2) sin(j pi x) by hand at x = 1/4
    c = np.array([1.0, 1.0])
    b = build_basis(Domain.interval(1.0), 2, 9)  # grid contains x = 1/4
    field = b.to_grid(c)
    x = b.points[:, 0]
    k = int(np.argmin(np.abs(x - 0.25)))
    oracle = np.sqrt(2.0) * (np.sin(np.pi * 0.25) + np.sin(2 * np.pi * 0.25))
    assert field[k] == pytest.approx(oracle, abs=1e-13)
    assert oracle == pytest.approx(np.sqrt(2.0) * 1.70710678, abs=1e-7)


def test_to_coeffs_round_trip(unit_interval):
    c = np.zeros(8)
    c[1] = 1.0
    assert np.max(np.abs(unit_interval.to_coeffs(unit_interval.to_grid(c)) - c)) < 1e-10
    assert np.all(unit_interval.to_coeffs(np.zeros(unit_interval.npoints)) == 0.0)


def test_to_coeffs_parabola_mode_one():
    # f(x) = x(1-x): first sine coefficient is 4*sqrt(2)/pi^3 analytically;
    # cross-checked against adaptive quadrature of the same integral
    b = build_basis(Domain.interval(1.0), 16)
    x = b.points[:, 0]
    coeffs = b.to_coeffs(x * (1.0 - x))
    analytic = 4.0 * np.sqrt(2.0) / np.pi**3
    oracle, _ = quad(lambda s: s * (1 - s) * np.sqrt(2) * np.sin(np.pi * s), 0.0, 1.0, epsabs=1e-14)
    assert analytic == pytest.approx(oracle, abs=1e-12)
    assert coeffs[0] == pytest.approx(analytic, abs=1e-8)
    assert analytic == pytest.approx(0.182442, abs=1e-6)


def test_h1_seminorm_examples(unit_interval):
    c = np.zeros(8)
    c[0] = 1.0
    assert unit_interval.h1_seminorm_sq(c) == pytest.approx(np.pi**2, rel=1e-14)
    assert unit_interval.h1_seminorm_sq(np.zeros(8)) == 0.0
    c2 = np.zeros(8)
    c2[0], c2[1] = 1.0, 2.0
    # direct sum oracle: mu_1 * 1 + mu_2 * 4 = pi^2 (1 + 16)
    assert unit_interval.h1_seminorm_sq(c2) == pytest.approx(17 * np.pi**2, rel=1e-14)


def test_lp_norm_examples(unit_interval):
    amp = 1.7
    c = np.zeros(8)
    c[0] = amp
    assert unit_interval.lp_norm_pow(unit_interval.to_grid(c), 2.0) == pytest.approx(amp**2, abs=1e-12)
    assert unit_interval.lp_norm_pow(np.zeros(unit_interval.npoints), 3.0) == 0.0


def test_lp_norm_quartic_sine():
    # int_0^1 sin(pi x)^4 dx = 3/8 by power reduction; dense quadrature oracle agrees
    b = build_basis(Domain.interval(1.0), 8)
    amp = 1.3
    field = amp * np.sin(np.pi * b.points[:, 0])
    oracle, _ = quad(lambda s: (amp * np.sin(np.pi * s)) ** 4, 0.0, 1.0, epsabs=1e-14)
    assert oracle == pytest.approx(0.375 * amp**4, abs=1e-12)
    assert b.lp_norm_pow(field, 4.0) == pytest.approx(0.375 * amp**4, abs=1e-12)


def test_lp_norm_rejects_bad_input(unit_interval):
    with pytest.raises(ValueError):
        unit_interval.lp_norm_pow(np.full(unit_interval.npoints, np.nan), 2.0)
    with pytest.raises(ValueError):
        unit_interval.lp_norm_pow(np.zeros(unit_interval.npoints), 1.0)


def test_parseval_random_coefficients():
    rng = np.random.default_rng(3)
    m = 12
    b = build_basis(Domain.interval(1.0), m, 2 * m + 1)
    for _ in range(5):
        c = rng.standard_normal(m) * 100
        assert b.lp_norm_pow(b.to_grid(c), 2.0) == pytest.approx(b.l2_norm_sq(c), abs=1e-8, rel=1e-12)


def test_round_trip_large_coefficients():
    rng = np.random.default_rng(4)
    b = build_basis(Domain.interval(1.0), 10)
    c = rng.uniform(-1.0, 1.0, 10) * 1e3
    assert np.max(np.abs(b.to_coeffs(b.to_grid(c)) - c)) < 1e-10


def test_gradient_matches_seminorm():
    rng = np.random.default_rng(5)
    for domain, m in [(Domain.interval(1.5), 9), (Domain.rectangle(1.0, 0.7), (3, 4))]:
        b = build_basis(domain, m)
        c = rng.standard_normal(b.m)
        g = b.gradient_on_grid(c)
        val = b.quad(np.sum(g * g, axis=0))
        assert val == pytest.approx(b.h1_seminorm_sq(c), rel=1e-12, abs=1e-12)


def test_sup_norm_constant():
    assert build_basis(Domain.interval(2.0), 3).c0 == pytest.approx(1.0, rel=1e-15)
    assert build_basis(Domain.rectangle(2.0, 0.5), (2, 2)).c0 == pytest.approx(2.0, rel=1e-15)


def test_rectangle_eigenvalues_and_round_trip():
    b = build_basis(Domain.rectangle(1.0, 2.0), (3, 4))
    assert b.mu[0] == pytest.approx(np.pi**2 + (np.pi / 2) ** 2, rel=1e-14)
    assert np.all(np.diff(b.mu) >= 0)
    rng = np.random.default_rng(6)
    c = rng.standard_normal(b.m)
    assert np.max(np.abs(b.to_coeffs(b.to_grid(c)) - c)) < 1e-10


def test_rectangle_point_evaluation_oracle():
    b = build_basis(Domain.rectangle(1.0, 1.0), (2, 2), (9, 9))
    c = np.zeros(4)
    k = int(np.flatnonzero((b.mode_indices == [1, 2]).all(axis=1))[0])
    c[k] = 1.0
    field = b.to_grid(c)
    x, y = 0.25, 0.5
    r = int(np.flatnonzero((np.abs(b.points - [x, y]) < 1e-12).all(axis=1))[0])
    oracle = 2.0 * np.sin(np.pi * x) * np.sin(2 * np.pi * y)
    assert field[r] == pytest.approx(oracle, abs=1e-13)


def test_build_rejects_bad_arguments():
    with pytest.raises(ValueError):
        Domain.interval(0.0)
    with pytest.raises(ValueError):
        Domain.interval(-1.0)
    with pytest.raises(ValueError):
        build_basis(Domain.interval(1.0), 0)
    with pytest.raises(ValueError):
        build_basis(Domain.interval(1.0), 8, 16)  # < 2m + 1
    with pytest.raises(ValueError):
        build_basis(Domain.rectangle(1.0, 1.0), (4, 0))


def test_shape_mismatches_rejected(unit_interval):
    with pytest.raises(ValueError):
        unit_interval.to_grid(np.zeros(7))
    with pytest.raises(ValueError):
        unit_interval.to_coeffs(np.zeros(10))
    with pytest.raises(ValueError):
        unit_interval.h1_seminorm_sq(np.zeros(9))
