"""
Tests for the exact-diagonalization oracle and the binding-series fit
"""
import math
import unittest

import numpy as np
import pytest

from src.core.errors import ConfigError, FitError
from src.diagnostics import DiagnosticsTracker
from src.fock_oracle import (
    binding_energy,
    binding_point,
    binding_sweep,
    build_nbody_hamiltonian,
    energy_offset_probe,
    fit_binding_points,
    fit_binding_series,
    ground_energy,
    mean_field_constant,
    series_targets,
)
from src.fock_space import block_structure
from src.lattice import TWO_PI_SQ, ModeSet
from src.potential import PotentialSpec
from src.series import e1_binding, e2_binding, support_domain

SPEC = PotentialSpec.tabulated(1.0, {(1,): 1.0})
SUPPORT = ModeSet.explicit(1, [[1], [2]])
PAIR = ModeSet.explicit(1, [[1]])


class TestSmallSystems(unittest.TestCase):
    """Two-level spectra solvable by hand"""

    def test_two_particles_on_one_pair(self):
        v0, v1 = 0.7, 2.5
        spec = PotentialSpec.tabulated(v0, {(1,): v1})
        # |2,0,0⟩ couples to |0,1,1⟩ through √2 v1
        expected = v0 + TWO_PI_SQ - math.sqrt(TWO_PI_SQ**2 + 2.0 * v1 * v1)
        self.assertAlmostEqual(ground_energy(2, 1.0, spec, PAIR), expected, places=10)
        self.assertEqual(ground_energy(1, 1.0, spec, PAIR), 0.0)
        self.assertAlmostEqual(binding_energy(2, spec, PAIR), expected, places=10)

    def test_mean_field_constant(self):
        N, lam = 9, 1.0 / 8
        self.assertAlmostEqual(mean_field_constant(N, lam, SPEC), N * 0.5 * SPEC.value_at_zero, places=14)

    def test_hamiltonian_conserves_momentum(self):
        basis, H = build_nbody_hamiltonian(5, 0.25, SPEC, SUPPORT, full_space=True)
        self.assertEqual(H.hermiticity_residual(), 0.0)
        self.assertTrue(block_structure(H, basis))

    def test_analytic_constant_shift(self):
        _, with_mf = build_nbody_hamiltonian(4, 1.0 / 3, SPEC, SUPPORT)
        _, without = build_nbody_hamiltonian(4, 1.0 / 3, SPEC, SUPPORT, include_mean_field=False)
        diff = (with_mf.matrix - without.matrix).diagonal()
        np.testing.assert_allclose(diff, mean_field_constant(4, 1.0 / 3, SPEC))

    def test_binding_needs_two_particles(self):
        with self.assertRaises(ConfigError):
            binding_point(1, SPEC, SUPPORT)

    def test_open_mode_set_is_flagged(self):
        tracker = DiagnosticsTracker()
        ground_energy(2, 1.0, SPEC, PAIR, tracker=tracker)
        self.assertEqual(tracker.entries[0]["kind"], "Precondition")


class TestBindingTrend(unittest.TestCase):
    """ΔE(N) at the common coupling 1/(N−1)"""

    def test_binding_energy_tends_to_v0(self):
        points = binding_sweep([6, 12, 24], SPEC, SUPPORT)
        self.assertEqual([p.N for p in points], [6, 12, 24])
        gaps = [abs(p.delta_E - SPEC.value_at_zero) for p in points]
        self.assertLess(gaps[-1], gaps[0])
        self.assertLess(gaps[-1], 1e-2)
        self.assertEqual(points[0].lam, 0.2)

    def test_sweep_order_and_parallel_agreement(self):
        serial = binding_sweep([7, 5, 6], SPEC, SUPPORT, workers=1)
        parallel = binding_sweep([5, 6, 7], SPEC, SUPPORT, workers=2)
        self.assertEqual([p.N for p in serial], [5, 6, 7])
        for a, b in zip(serial, parallel):
            self.assertAlmostEqual(a.delta_E, b.delta_E, places=10)

    def test_energy_offset_shrinks(self):
        probe = energy_offset_probe([6, 12, 24], SPEC, SUPPORT)
        offsets = [abs(r["offset"]) for r in probe["rows"]]
        self.assertLess(offsets[-1], offsets[0])
        self.assertEqual(probe["e_H"], 0.5)
        self.assertIsNotNone(probe["exponent"])


class TestFit(unittest.TestCase):
    """Polynomial fit in λ_N and the residual exponent"""

    Ns = [16, 24, 32, 48, 64, 96, 128]

    def setUp(self):
        self.lam = np.array([1.0 / (n - 1) for n in self.Ns])

    def test_recovers_quadratic(self):
        y = 1.5 - 0.3 * self.lam + 0.7 * self.lam**2
        fit = fit_binding_points(self.lam, y, order=2)
        self.assertAlmostEqual(fit.coefficients[0], 1.5, places=9)
        self.assertAlmostEqual(fit.coefficients[1], -0.3, places=7)
        self.assertAlmostEqual(fit.coefficients[2], 0.7, places=5)
        self.assertEqual(fit.N_list, self.Ns)
        self.assertEqual(fit.residual_reference, "fit")

    def test_residual_exponent_against_targets(self):
        y = 1.5 - 0.3 * self.lam + 0.7 * self.lam**2 + 0.05 * self.lam**3
        targets = {"e0_binding": 1.5, "e1_binding": -0.3, "e2_binding": 0.7}
        fit = fit_binding_points(self.lam, y, order=2, targets=targets, N_list=self.Ns)
        self.assertEqual(fit.residual_reference, "targets")
        self.assertAlmostEqual(fit.residual_exponent, 3.0, places=4)
        comparison = fit.comparison()
        self.assertEqual(set(comparison), set(targets))
        self.assertAlmostEqual(comparison["e0_binding"]["target"], 1.5)

    def test_too_few_points(self):
        with self.assertRaises(FitError):
            fit_binding_points(self.lam[:3], np.ones(3), order=2)

    def test_narrow_lambda_range(self):
        lam = np.array([1.0 / (n - 1) for n in (64, 96, 128, 200)])
        with self.assertRaises(FitError):
            fit_binding_points(lam, np.ones(4), order=2)

    def test_series_needs_distinct_particle_numbers(self):
        with self.assertRaises(FitError):
            fit_binding_series([16, 24, 32, 32], SPEC, SUPPORT)

    def test_targets_on_the_mode_set(self):
        targets = series_targets(SPEC, SUPPORT)
        self.assertEqual(targets["e0_binding"], 1.0)
        self.assertEqual(targets["e1_binding"], e1_binding(SUPPORT, SPEC))
        self.assertEqual(targets["e2_binding"], e2_binding(SUPPORT, SPEC))
        self.assertEqual(set(series_targets(SPEC, SUPPORT, order=1)), {"e0_binding", "e1_binding"})


@pytest.mark.slow
def test_oracle_fit_matches_closed_forms():
    M = support_domain(SPEC, 1)
    fit, points = fit_binding_series([16, 24, 32, 48, 64, 96, 128], SPEC, M)
    assert len(points) == 7
    assert fit.coefficients[0] == pytest.approx(SPEC.value_at_zero, abs=1e-3)
    assert fit.coefficients[1] == pytest.approx(e1_binding(M, SPEC), rel=0.02)
    assert fit.residual_reference == "targets"
    assert 2.7 <= fit.residual_exponent <= 3.3
