"""
Tests for Bogoliubov coefficients and the rotated matrix elements

mpmath evaluates the same closed forms at 40 digits as an independent
reference for the float code.
"""
import unittest

import mpmath
import numpy as np
import pytest

from src.bogoliubov import (
    depletion,
    e_B,
    e_B_alt,
    f_coeff,
    g1_coeff,
    g1_kernel,
    g2_coeff,
    g2_kernel,
    hqp1_aaa,
    hqp1_caa,
    hqp2,
    qp_coeffs,
    qp_table,
)
from src.core.errors import DomainError
from src.lattice import TWO_PI_SQ, Momentum
from src.potential import PotentialSpec
from src.series import support_domain

from .batteries import mixed_battery

mpmath.mp.dps = 40


def mp_coeffs(k2, v):
    k2, v = mpmath.mpf(k2), mpmath.mpf(v)
    eps = mpmath.sqrt(k2 * k2 + 2 * k2 * v)
    alpha = v / (k2 + v + eps)
    sigma = 1 / mpmath.sqrt(1 - alpha * alpha)
    return eps, alpha, sigma, alpha * sigma


BATTERY = mixed_battery()


class TestQuasiparticleCoefficients(unittest.TestCase):
    """(ε, α, σ, γ) against extended precision"""

    def setUp(self):
        self.spec = PotentialSpec.tabulated(1.0, {(1,): 3.0})

    def test_single_mode_matches_mpmath(self):
        c = qp_coeffs(self.spec, Momentum.of(1))
        eps, alpha, sigma, gamma = mp_coeffs(TWO_PI_SQ, 3.0)
        self.assertAlmostEqual(c.eps / float(eps), 1.0, places=14)
        self.assertAlmostEqual(c.alpha / float(alpha), 1.0, places=14)
        self.assertAlmostEqual(c.sigma / float(sigma), 1.0, places=14)
        self.assertAlmostEqual(c.gamma / float(gamma), 1.0, places=14)

    def test_vhat_equal_to_k2_gives_two_minus_root_three(self):
        spec = PotentialSpec.tabulated(1.0, {(1,): TWO_PI_SQ})
        alpha = qp_coeffs(spec, Momentum.of(1)).alpha
        self.assertAlmostEqual(alpha, float(2 - mpmath.sqrt(3)), places=14)

    def test_zero_momentum_is_a_domain_error(self):
        with self.assertRaises(DomainError):
            qp_coeffs(self.spec, Momentum.of(0))

    def test_outside_support_is_free(self):
        c = qp_coeffs(self.spec, Momentum.of(3))
        self.assertEqual((c.alpha, c.sigma, c.gamma), (0.0, 1.0, 0.0))
        self.assertEqual(c.eps, c.k2)

    def test_table_rows_have_all_columns(self):
        rows = qp_table(support_domain(self.spec), self.spec).rows()
        self.assertEqual(len(rows), 4)
        self.assertEqual(set(rows[0]), {"n", "k2", "vhat", "eps", "alpha", "sigma", "gamma"})


@pytest.mark.parametrize("spec,M", BATTERY)
def test_coefficient_invariants(spec, M):
    t = qp_table(M, spec)
    assert np.all(np.abs(t.sigma**2 - t.gamma**2 - 1.0) <= 1e-12 * t.sigma**2)
    assert np.all((t.alpha >= 0.0) & (t.alpha < 1.0))
    assert np.all(t.eps >= t.k2)


@pytest.mark.parametrize("spec,M", BATTERY)
def test_ground_energy_two_forms_agree(spec, M):
    a, b = e_B(M, spec), e_B_alt(M, spec)
    assert a < 0.0
    assert abs(a - b) <= 1e-12 * abs(a)


def test_ground_energy_matches_mpmath(nearest_neighbour_spec, closed_modes):
    expected = mpmath.mpf(0)
    for m in closed_modes:
        v = 1.0 if m.n2 == 1 else 0.0
        _, alpha, _, _ = mp_coeffs(m.k2, v)
        expected += -alpha * v / 2
    assert e_B(closed_modes, nearest_neighbour_spec) == pytest.approx(float(expected), rel=1e-14)


def test_depletion_is_sum_of_gamma_squared(nearest_neighbour_spec, closed_modes):
    t = qp_table(closed_modes, nearest_neighbour_spec)
    assert depletion(closed_modes, nearest_neighbour_spec) == pytest.approx(float(np.sum(t.gamma**2)), rel=1e-14)


class TestMatrixElements(unittest.TestCase):
    """f, g₁, g₂ and their quasiparticle names"""

    def setUp(self):
        self.spec = PotentialSpec.tabulated(1.0, {(1,): 2.0, (2,): 0.5})
        self.M = support_domain(self.spec)

    def _mp_kernel(self, kernel, k, l):
        args = []
        for q in (k, l, k + l):
            v = 0.0
            if q.n2 == 1:
                v = 2.0
            elif q.n2 == 4:
                v = 0.5
            _, _, sigma, gamma = mp_coeffs(q.k2, v)
            args.append((mpmath.mpf(v), sigma, gamma))
        (vk, sk, gk), (vl, sl, gl), (vs, ss, gs) = args
        return kernel(vk, vl, vs, sk, gk, sl, gl, ss, gs)

    def test_g_kernels_match_extended_precision(self):
        k = l = Momentum.of(1)
        self.assertAlmostEqual(g1_coeff(self.spec, k, l) / float(self._mp_kernel(g1_kernel, k, l)), 1.0, places=13)
        self.assertAlmostEqual(g2_coeff(self.spec, k, l) / float(self._mp_kernel(g2_kernel, k, l)), 1.0, places=13)

    def test_g_kernels_at_mixed_momenta(self):
        k, l = Momentum.of(2), Momentum.of(-1)
        self.assertAlmostEqual(g1_coeff(self.spec, k, l) / float(self._mp_kernel(g1_kernel, k, l)), 1.0, places=13)
        self.assertAlmostEqual(g2_coeff(self.spec, k, l) / float(self._mp_kernel(g2_kernel, k, l)), 1.0, places=13)

    def test_quasiparticle_names(self):
        k, l = Momentum.of(1), Momentum.of(1)
        self.assertEqual(hqp1_caa(self.spec, k, l), g1_coeff(self.spec, k, l))
        self.assertEqual(hqp1_aaa(self.spec, k, l), g2_coeff(self.spec, k, l))
        for k in self.M:
            self.assertAlmostEqual(hqp2(self.M, self.spec, k), 0.5 * f_coeff(self.M, self.spec, k), delta=1e-12)

    def test_vanishing_momentum_rejected(self):
        with self.assertRaises(DomainError):
            g1_coeff(self.spec, Momentum.of(1), Momentum.of(-1))
        with self.assertRaises(DomainError):
            g2_coeff(self.spec, Momentum.of(0), Momentum.of(1))


def test_g2_needs_two_of_three_momenta_in_support(nearest_neighbour_spec):
    spec = nearest_neighbour_spec
    assert g2_coeff(spec, Momentum.of(1), Momentum.of(2)) == 0.0
    assert g2_coeff(spec, Momentum.of(2), Momentum.of(3)) == 0.0
    assert g1_coeff(spec, Momentum.of(2), Momentum.of(3)) == 0.0
    assert g2_coeff(spec, Momentum.of(1), Momentum.of(1)) != 0.0
