"""
Tests for potential specifications and v̂ evaluation
"""
import json
import math
import unittest

import numpy as np
import pytest

from src.core.errors import ConfigError, UnboundedSupportError
from src.lattice import TWO_PI_SQ, Momentum
from src.potential import PotentialSpec, potential_cutoff_hint, support, vhat, vhat_array


class TestGaussian(unittest.TestCase):
    """v̂(k) = g exp(−k²/(2s²))"""

    def setUp(self):
        self.spec = PotentialSpec.gaussian(g=2.0, s=3.0)

    def test_value_at_zero(self):
        self.assertEqual(vhat(self.spec, Momentum.of(0)), 2.0)
        self.assertEqual(self.spec.value_at_zero, 2.0)

    def test_formula(self):
        expected = 2.0 * math.exp(-TWO_PI_SQ * 5 / (2 * 9.0))
        self.assertAlmostEqual(vhat(self.spec, Momentum.of(1, 2)), expected, places=14)

    def test_scaling_stretches_momentum(self):
        scaled = self.spec.with_scale(4.0)
        k = Momentum.of(3)
        expected = 2.0 * math.exp(-TWO_PI_SQ * 9 / (2 * 9.0 * 16.0))
        self.assertAlmostEqual(vhat(scaled, k), expected, places=14)

    def test_vectorized_matches_scalar(self):
        ns = np.array([[1, 0], [0, 2], [-1, 1]])
        values = vhat_array(self.spec, ns)
        for row, v in zip(ns, values):
            self.assertEqual(v, vhat(self.spec, Momentum(tuple(row))))

    def test_cutoff_hint(self):
        hint = potential_cutoff_hint(self.spec, rel=1e-8)
        self.assertAlmostEqual(math.exp(-hint * hint / (2 * 9.0)), 1e-8, delta=1e-20)

    def test_support_is_unbounded(self):
        with self.assertRaises(UnboundedSupportError):
            support(self.spec)


class TestTabulated(unittest.TestCase):
    """Finite-support potentials"""

    def setUp(self):
        self.spec = PotentialSpec.tabulated(1.5, {(1,): 1.0, (2,): 0.25})

    def test_negatives_filled_in(self):
        self.assertEqual(vhat(self.spec, Momentum.of(-2)), 0.25)
        self.assertEqual(vhat(self.spec, Momentum.of(3)), 0.0)
        self.assertEqual(vhat(self.spec, Momentum.of(0)), 1.5)

    def test_support(self):
        self.assertEqual([m.n[0] for m in support(self.spec)], [-2, -1, 1, 2])

    def test_integer_scale_moves_support(self):
        scaled = self.spec.with_scale(2.0)
        self.assertEqual(vhat(scaled, Momentum.of(2)), 1.0)
        self.assertEqual(vhat(scaled, Momentum.of(1)), 0.0)
        self.assertEqual([m.n[0] for m in support(scaled)], [-4, -2, 2, 4])

    def test_fractional_scale_support_matches_vhat(self):
        scaled = PotentialSpec.tabulated(1.0, {(2,): 1.0}, lambda_scale=2.5)
        self.assertEqual([m.n for m in support(scaled)], [(-5,), (5,)])
        self.assertEqual(vhat(scaled, Momentum.of(5)), 1.0)
        self.assertEqual(vhat(scaled, Momentum.of(2)), 0.0)

    def test_fractional_scale_drops_off_lattice_entries(self):
        # 2.5·1 is not a lattice point, 2.5·2 is
        scaled = self.spec.with_scale(2.5)
        members = {m.n[0] for m in support(scaled)}
        self.assertEqual(members, {-5, 5})
        positive = {n for n in range(-12, 13) if n and vhat(scaled, Momentum.of(n)) > 0}
        self.assertEqual(members, positive)

    def test_band_limited(self):
        self.assertTrue(self.spec.is_band_limited)
        self.assertFalse(PotentialSpec.gaussian(1.0, 1.0).is_band_limited)

    def test_json_round_trip(self):
        again = PotentialSpec.from_json(self.spec.to_json())
        self.assertEqual(again.table(), self.spec.table())


@pytest.mark.parametrize(
    "payload",
    [
        {"kind": "gaussian", "g": 1.0},
        {"kind": "gaussian", "g": 1.0, "s": -1.0},
        {"kind": "tabulated", "entries": [{"n": [1], "v": 1.0}]},
        {"kind": "tabulated", "v0": 1.0, "entries": [{"n": [1], "v": -1.0}]},
        {"kind": "tabulated", "v0": 1.0, "entries": [{"n": [1], "v": 1.0}, {"n": [-1], "v": 2.0}]},
        {"kind": "tabulated", "v0": 1.0, "entries": [{"n": [0], "v": 1.0}]},
        {"kind": "yukawa", "g": 1.0},
    ],
)
def test_malformed_potentials_raise_config_error(payload):
    with pytest.raises(ConfigError) as excinfo:
        PotentialSpec.from_dict(payload)
    assert excinfo.value.exit_code == 2
    assert excinfo.value.details["fields"]


def test_from_json_needs_an_object():
    with pytest.raises(ConfigError):
        PotentialSpec.from_json(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        PotentialSpec.from_json("{broken")


def test_identically_zero_rejected_on_request():
    zero = PotentialSpec.tabulated(0.0, {(1,): 0.0})
    assert zero.is_identically_zero()
    with pytest.raises(ConfigError):
        zero.require_nonzero()
    assert PotentialSpec.gaussian(1.0, 1.0).require_nonzero().g == 1.0
