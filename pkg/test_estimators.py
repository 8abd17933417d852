import math
import os
import unittest
from unittest import mock

import numpy as np

from src.apps import adc_bounds, isotropic, platypus_channel, rains_sandwich, replacer_channel
from src.estimators import dmax_precheck, gap_bound, required_level, sandwich
from src.linalg import maximally_entangled
from src.sets import build_point, build_rains, build_singleton
from src.types import DensityOperator, SandwichReport, Solution, SolveStatus, SolverError

TOL = 1e-6


class TestLevels(unittest.TestCase):
    def test_required_level(self):
        self.assertEqual(required_level(0.5, 2), 192)
        self.assertGreater(required_level(0.1, 3), required_level(0.5, 3))
        with self.assertRaises(ValueError):
            required_level(0.0, 2)
        with self.assertRaises(ValueError):
            required_level(0.5, 0)

    def test_gap_bound(self):
        self.assertAlmostEqual(gap_bound(1, 2), 12 * math.log2(3))
        self.assertLess(gap_bound(4, 3), gap_bound(2, 3))

    def test_report_certificate(self):
        report = SandwichReport(level=1, lower=0.1, upper=0.3, gap_bound=0.1, d=2,
                                assumptions_certified=True)
        self.assertAlmostEqual(report.gap, 0.2)
        self.assertFalse(report.certificate_holds())
        report.assumptions_certified = False
        self.assertTrue(report.certificate_holds())
        self.assertEqual(SandwichReport(1, math.inf, math.inf, 1.0, 2).to_json()['upper'], 'inf')


class TestMaxDivergencePrecheck(unittest.TestCase):
    def test_maximally_entangled_against_rains(self):
        value = dmax_precheck(build_singleton(maximally_entangled(2)), build_rains(2, 2))
        self.assertAlmostEqual(value, 1.0, places=5)

    def test_disjoint_point_is_infinite(self):
        zero = DensityOperator(np.diag([1.0, 0.0]))
        one = DensityOperator(np.diag([0.0, 1.0]))
        self.assertTrue(math.isinf(dmax_precheck(build_point(zero), build_point(one))))

    def test_infinite_sandwich(self):
        zero = DensityOperator(np.diag([1.0, 0.0]))
        one = DensityOperator(np.diag([0.0, 1.0]))
        report = sandwich(lambda m: build_singleton(zero, m), lambda m: build_singleton(one, m), 1)
        self.assertTrue(math.isinf(report.lower))
        self.assertTrue(math.isinf(report.upper))
        self.assertTrue(report.certificate_holds())


class TestSandwich(unittest.TestCase):
    def test_level_validation(self):
        with self.assertRaises(ValueError):
            rains_sandwich(isotropic(2, 0.9), 0)

    def test_crossed_estimates_raise(self):
        rho = DensityOperator(np.diag([0.5, 0.5]))
        upper = Solution(SolveStatus.OPTIMAL, 0.1, accuracy=0.0)
        lower = Solution(SolveStatus.OPTIMAL, 0.1 + 1e-4, accuracy=0.0)
        with mock.patch('src.estimators.dmax_precheck', return_value=0.0), \
                mock.patch('src.estimators._solve_pair', return_value=(upper, lower)):
            with self.assertRaises(SolverError):
                sandwich(lambda m: build_singleton(rho, m), lambda m: build_singleton(rho, m), 1)
            lower.value = 0.1 + 1e-8
            report = sandwich(lambda m: build_singleton(rho, m),
                              lambda m: build_singleton(rho, m), 1)
        self.assertAlmostEqual(report.upper, 0.1)

    def test_channel_pair_level_one(self):
        report = adc_bounds(replacer_channel(), platypus_channel(0.05), 1)
        self.assertFalse(report.symmetry)
        self.assertEqual(report.d, 3)
        self.assertGreaterEqual(report.lower, -TOL)
        self.assertLessEqual(report.lower, report.upper + 2 * TOL)
        self.assertTrue(report.certificate_holds())

    def test_state_pair_level_one(self):
        report = rains_sandwich(isotropic(2, 0.9), 1)
        self.assertTrue(report.assumptions_certified)
        self.assertLessEqual(report.lower, report.upper + 2 * TOL)
        self.assertGreater(report.lower, 0.0)

    def test_channel_pair_level_two_reduced(self):
        first = adc_bounds(replacer_channel(), platypus_channel(0.05), 1)
        second = adc_bounds(replacer_channel(), platypus_channel(0.05), 2, threads=2)
        self.assertTrue(second.symmetry)
        self.assertLessEqual(second.lower, first.upper + 2 * TOL)
        self.assertLessEqual(first.lower, second.upper + 2 * TOL)
        self.assertTrue(second.certificate_holds())

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_reduction_preserves_optimum(self):
        reduced = adc_bounds(replacer_channel(), platypus_channel(0.05), 2, use_symmetry=True)
        full = adc_bounds(replacer_channel(), platypus_channel(0.05), 2, use_symmetry=False)
        self.assertAlmostEqual(reduced.upper, full.upper, delta=1e-6)
        self.assertAlmostEqual(reduced.lower, full.lower, delta=1e-6)
        rho = isotropic(2, 0.8)
        reduced = rains_sandwich(rho, 2, use_symmetry=True)
        full = rains_sandwich(rho, 2, use_symmetry=False)
        self.assertAlmostEqual(reduced.upper, full.upper, delta=1e-6)
        self.assertAlmostEqual(reduced.lower, full.lower, delta=1e-6)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_strict_monotonicity(self):
        for p in (0.02, 0.05, 0.1):
            one = adc_bounds(replacer_channel(), platypus_channel(p), 1)
            two = adc_bounds(replacer_channel(), platypus_channel(p), 2)
            self.assertGreaterEqual(one.upper, two.upper + 1e-6)
            self.assertLessEqual(one.lower + 1e-6, two.lower)
            for report in (one, two):
                self.assertLessEqual(report.gap, report.gap_bound + 1e-5)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_level_three_with_reduction(self):
        two = adc_bounds(replacer_channel(), platypus_channel(0.05), 2)
        three = adc_bounds(replacer_channel(), platypus_channel(0.05), 3)
        self.assertLessEqual(three.upper, two.upper + 1e-6)
        self.assertGreaterEqual(three.lower, two.lower - 1e-6)
        self.assertTrue(three.certificate_holds())


if __name__ == '__main__':
    unittest.main()
