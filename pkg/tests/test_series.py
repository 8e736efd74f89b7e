"""
Tests for the closed-form binding coefficients
"""
import math
import unittest
from types import SimpleNamespace
from unittest.mock import patch

import pytest

from src.bogoliubov import e_B, qp_table
from src.core.errors import ConfigError, DomainError, UnsupportedError
from src.diagnostics import DiagnosticsTracker
from src.lattice import TWO_PI, ModeSet, enumerate_ball
from src.potential import PotentialSpec
from src.series import (
    CSV_COLUMNS,
    SCALING_COLUMNS,
    SCALING_EXPONENT_WINDOW,
    BindingValue,
    check_closure,
    convergence_study,
    e0_binding,
    e1_binding,
    e1_binding_leading_order,
    e2_binding,
    e2_binding_qp_assembly,
    e2_breakdown,
    scaling_probe,
    series_on_modes,
    support_domain,
)

from .batteries import band_limited_battery, mixed_battery


class TestFirstCoefficients(unittest.TestCase):
    """E₀ᵇ and E₁ᵇ"""

    def setUp(self):
        self.spec = PotentialSpec.tabulated(1.25, {(1,): 1.0})
        self.M = support_domain(self.spec)

    def test_e0_is_vhat_at_zero(self):
        self.assertEqual(e0_binding(self.spec), 1.25)
        self.assertEqual(e0_binding(self.spec.with_scale(3.0)), 1.25)

    def test_e1_by_hand_on_two_modes(self):
        M = ModeSet.explicit(1, [[1]])
        alpha = qp_table(M, self.spec).alpha[0]
        self.assertAlmostEqual(e1_binding(M, self.spec), -2.0 * alpha / (1.0 + alpha), places=15)

    def test_e1_forms_agree(self):
        a = e1_binding(self.M, self.spec, "compact")
        b = e1_binding(self.M, self.spec, "e0_minus_kinetic")
        self.assertLess(abs(a - b), 1e-12 * abs(a))

    def test_unknown_form(self):
        with self.assertRaises(ConfigError):
            e1_binding(self.M, self.spec, "other")

    def test_leading_order_form(self):
        value = e1_binding_leading_order(11, self.spec, self.M)
        expected = 1.25 + e1_binding(self.M, self.spec, "e0_minus_kinetic") / 11
        self.assertAlmostEqual(value, expected, places=14)
        with self.assertRaises(DomainError):
            e1_binding_leading_order(1, self.spec, self.M)


@pytest.mark.parametrize("spec,M", mixed_battery())
def test_e1_dual_form_identity(spec, M):
    a = e1_binding(M, spec, "compact")
    b = e1_binding(M, spec, "e0_minus_kinetic")
    assert a < 0.0
    assert abs(a - b) <= 1e-12 * abs(a)


@pytest.mark.parametrize("spec,M", band_limited_battery())
def test_e2_closed_form_matches_quasiparticle_assembly(spec, M):
    closed = e2_binding(M, spec)
    assembled, terms = e2_binding_qp_assembly(M, spec)
    assert len(terms) == 4
    assert abs(closed - assembled) <= 1e-10 * abs(closed)


class TestSecondCoefficient(unittest.TestCase):
    """E₂ᵇ summation domain, symmetry reduction and sharding"""

    def setUp(self):
        self.spec = PotentialSpec.tabulated(1.0, {(1,): 4.0, (2,): 1.0})
        self.M = support_domain(self.spec)

    def test_extra_modes_do_not_change_band_limited_sums(self):
        wide = enumerate_ball(1, TWO_PI * 7.5)
        self.assertTrue(self.M.issubset(wide))
        a, b = e2_binding(self.M, self.spec), e2_binding(wide, self.spec)
        self.assertLess(abs(a - b), 1e-12 * abs(a))

    def test_symmetry_reduction_matches_full_rows(self):
        spec = PotentialSpec.gaussian(g=2.0, s=5.0)
        for d, radius in ((1, 5.5), (2, 3.2)):
            M = enumerate_ball(d, TWO_PI * radius)
            full = e2_breakdown(M, spec, use_symmetry=False)
            reduced = e2_breakdown(M, spec, use_symmetry=True)
            self.assertLess(abs(full.closed_form - reduced.closed_form), 1e-12 * abs(full.closed_form))
            self.assertLess(abs(full.qp_total - reduced.qp_total), 1e-12 * abs(full.qp_total))

    def test_result_independent_of_worker_count(self):
        M = enumerate_ball(1, TWO_PI * 8.5)
        spec = PotentialSpec.gaussian(g=1.0, s=8.0)
        serial = e2_breakdown(M, spec, workers=1, use_symmetry=False)
        sharded = e2_breakdown(M, spec, workers=2, use_symmetry=False)
        self.assertEqual(serial.closed_form, sharded.closed_form)
        self.assertEqual(serial.terms, sharded.terms)

    def test_empty_mode_set(self):
        self.assertEqual(e2_binding(ModeSet.empty(1), self.spec), 0.0)


class TestClosure(unittest.TestCase):
    """supp ∪ (supp+supp) precondition"""

    def test_missing_sums_are_flagged(self):
        spec = PotentialSpec.tabulated(1.0, {(1,): 1.0})
        tracker = DiagnosticsTracker()
        self.assertFalse(check_closure(ModeSet.explicit(1, [[1]]), spec, tracker))
        self.assertEqual(len(tracker.entries), 1)
        self.assertEqual(tracker.entries[0]["kind"], "Precondition")
        self.assertEqual(tracker.entries[0]["context"]["missing"], [[-2], [2]])

    def test_flag_travels_with_the_value(self):
        spec = PotentialSpec.tabulated(1.0, {(1,): 1.0})
        open_set = ModeSet.explicit(1, [[1]])
        value = e2_binding(open_set, spec)
        self.assertIsInstance(value, BindingValue)
        self.assertFalse(value.closure_ok)
        total, _ = e2_binding_qp_assembly(open_set, spec)
        self.assertFalse(total.closure_ok)
        closed = e2_binding(support_domain(spec), spec)
        self.assertTrue(closed.closure_ok)
        self.assertEqual(float(closed), e2_breakdown(support_domain(spec), spec).closed_form)

    def test_support_domain_passes(self):
        spec = PotentialSpec.tabulated(1.0, {(1, 0): 1.0, (0, 1): 2.0})
        self.assertTrue(check_closure(support_domain(spec), spec))

    def test_gaussian_always_passes(self):
        self.assertTrue(check_closure(ModeSet.explicit(1, [[1]]), PotentialSpec.gaussian(1.0, 1.0)))

    def test_series_on_modes_reports_flag(self):
        spec = PotentialSpec.tabulated(1.0, {(1,): 1.0})
        result = series_on_modes(spec, ModeSet.explicit(1, [[1]]))
        self.assertEqual(result.flags, ["closure_precondition"])
        self.assertEqual(set(result.rows[0]), set(CSV_COLUMNS))


class TestConvergenceStudy(unittest.TestCase):
    """Cutoff sweeps on balls"""

    def setUp(self):
        self.spec = PotentialSpec.gaussian(g=1.0, s=4.0)

    def test_sweep_with_tail_fit(self):
        result = convergence_study(self.spec, [10.0, 20.0, 40.0], d=1)
        self.assertEqual(len(result.rows), 3)
        self.assertEqual(set(result.extrapolated), {"e1_binding", "e2_binding"})
        self.assertEqual(result.e1_binding, result.rows[-1]["e1b_compact"])
        self.assertEqual(result.mode_set_summary["modes"], len(enumerate_ball(1, 40.0)))
        self.assertEqual(result.flags, [])

    def test_single_cutoff_skips_fit(self):
        tracker = DiagnosticsTracker()
        result = convergence_study(self.spec, [20.0], d=1, tracker=tracker)
        self.assertIsNone(result.extrapolated)
        self.assertIn("fit_skipped", result.flags)
        self.assertEqual(tracker.entries[-1]["kind"], "Fit Skipped")

    def test_cutoffs_must_increase(self):
        with self.assertRaises(ConfigError):
            convergence_study(self.spec, [20.0, 10.0])
        with self.assertRaises(ConfigError):
            convergence_study(self.spec, [])


class TestScalingProbe(unittest.TestCase):
    """E₂ᵇ under v̂(k) → v̂(k/Λ)"""

    def setUp(self):
        self.spec = PotentialSpec.gaussian(g=1.0, s=3.0)

    def test_rows_and_derived_columns(self):
        result = scaling_probe(self.spec, [1.0, 2.0, 4.0], d=1, rel_cutoff=1e-8)
        self.assertEqual(len(result.rows), 3)
        for row in result.rows:
            self.assertEqual(set(row), set(SCALING_COLUMNS))
            self.assertAlmostEqual(row["e2b_over_lambda2"], row["e2b"] / row["lambda_scale"] ** 2, places=15)
            self.assertAlmostEqual(row["leading_ratio"], row["leading_double_sum"] / row["e2b"], places=12)
        self.assertEqual(result.sign_at_max, int(math.copysign(1, result.rows[-1]["e2b"])))
        self.assertIsNotNone(result.exponent)
        self.assertGreater(result.rows[-1]["modes"], result.rows[0]["modes"])

    def test_needs_gaussian(self):
        with self.assertRaises(UnsupportedError):
            scaling_probe(PotentialSpec.tabulated(1.0, {(1,): 1.0}), [1.0, 2.0])

    def test_scales_must_increase(self):
        with self.assertRaises(ConfigError):
            scaling_probe(self.spec, [2.0, 1.0])

    def _fake_breakdown(self, power):
        def breakdown(M, scaled, workers=None, tracker=None):
            lam = scaled.lambda_scale
            return SimpleNamespace(closed_form=0.5 * lam**power, leading_double_sum=0.5 * lam**power)

        return breakdown

    def test_exponent_outside_window_is_flagged(self):
        tracker = DiagnosticsTracker()
        with patch("src.series.e2_breakdown", side_effect=self._fake_breakdown(3.0)):
            result = scaling_probe(self.spec, [4.0, 8.0, 16.0], d=1, tracker=tracker)
        self.assertAlmostEqual(result.exponent, 3.0, places=10)
        self.assertIn("exponent_out_of_window", result.flags)
        self.assertEqual(tracker.entries[-1]["kind"], "Scaling")
        self.assertAlmostEqual(tracker.entries[-1]["metrics"]["exponent"], 3.0, places=10)

    def test_quadratic_growth_is_not_flagged(self):
        tracker = DiagnosticsTracker()
        with patch("src.series.e2_breakdown", side_effect=self._fake_breakdown(2.0)):
            result = scaling_probe(self.spec, [4.0, 8.0, 16.0], d=1, tracker=tracker)
        self.assertEqual(result.flags, [])
        self.assertEqual(tracker.entries, [])
        self.assertEqual(result.sign_at_max, 1)
        self.assertAlmostEqual(result.leading_ratio_at_max, 1.0, places=12)


def test_e_B_negative_on_every_band_limited_case():
    for spec, M in band_limited_battery():
        assert e_B(M, spec) < 0.0


@pytest.mark.slow
def test_scaling_sign_and_leading_ratio_at_large_lambda():
    result = scaling_probe(PotentialSpec.gaussian(g=1.0, s=1.0), [4.0, 8.0, 16.0, 32.0], d=3)
    for row in result.rows:
        if row["lambda_scale"] >= 16.0:
            assert row["e2b"] >= 0.0
    assert result.sign_at_max == 1
    assert result.leading_ratio_at_max == pytest.approx(1.0, abs=0.2)
    lo, hi = SCALING_EXPONENT_WINDOW
    assert ("exponent_out_of_window" in result.flags) == (not lo <= result.exponent <= hi)
