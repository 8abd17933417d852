import math
import os
import unittest

import numpy as np

from src.apps import (
    ad_channel, analytic_iso, analytic_werner, binary_entropy, bound_ec, bound_magic,
    d_m_pptk, e_lr, e_wd1, e_wd2, e_wd2_direct, e_wjz, e_wjz_channel, ec_ad_bound, isotropic,
    mana, platypus_channel, pptk_sandwich, pptk_upper, q_ad, rains_bound, replacer_channel,
    thauma, thauma_sandwich, werner,
)
from src.config import SolverConfig
from src.linalg import choi_state, maximally_entangled, random_density, rank
from src.types import DensityOperator
from src.wigner import stabilizer_states, strange_state

PHI2 = maximally_entangled(2)


class TestChannels(unittest.TestCase):
    def test_parameter_ranges(self):
        with self.assertRaises(ValueError):
            platypus_channel(1.5)
        with self.assertRaises(ValueError):
            ad_channel(-0.1)
        with self.assertRaises(ValueError):
            replacer_channel([1.0, 1.0, 0.0])

    def test_channels_are_trace_preserving(self):
        for channel in (replacer_channel(), platypus_channel(0.3), ad_channel(0.4)):
            self.assertTrue(channel.trace_preserving)
            completeness = sum(k.conj().T @ k for k in channel.kraus_ops)
            np.testing.assert_allclose(completeness, np.eye(channel.dim_in), atol=1e-12)

    def test_replacer_output(self):
        out = replacer_channel().apply_matrix(random_density(3, seed=2).entries)
        v = np.array([2.0, 1.0, 2.0]) / 3.0
        np.testing.assert_allclose(out, np.outer(v, v), atol=1e-12)


class TestStateFamilies(unittest.TestCase):
    def test_binary_entropy(self):
        self.assertAlmostEqual(binary_entropy(0.5), 1.0)
        self.assertEqual(binary_entropy(0.0), 0.0)

    def test_isotropic_and_werner(self):
        np.testing.assert_allclose(isotropic(3, 1.0).entries, maximally_entangled(3).entries,
                                   atol=1e-12)
        self.assertEqual(rank(isotropic(3, 0.5)), 9)
        self.assertAlmostEqual(werner(3, 0.3).trace(), 1.0)
        with self.assertRaises(ValueError):
            werner(1, 0.5)

    def test_analytic_curves(self):
        self.assertEqual(analytic_iso(3, 1.0 / 3.0), 0.0)
        self.assertAlmostEqual(analytic_iso(3, 1.0), math.log2(3))
        self.assertEqual(analytic_werner(3, 0.5), 0.0)
        self.assertAlmostEqual(analytic_werner(3, 0.75), 1.0 - binary_entropy(0.75))
        self.assertAlmostEqual(analytic_werner(3, 1.0), math.log2(5.0 / 3.0))

    def test_coherent_information(self):
        self.assertAlmostEqual(q_ad(0.0), 1.0, places=6)
        self.assertAlmostEqual(q_ad(0.5), 0.0, places=6)
        self.assertGreater(q_ad(0.2), q_ad(0.3))


class TestEntanglementBounds(unittest.TestCase):
    def test_maximally_entangled_values(self):
        self.assertAlmostEqual(e_wd1(PHI2), 1.0, places=5)
        self.assertAlmostEqual(e_wd2(PHI2), 1.0, places=5)
        self.assertAlmostEqual(e_wd2_direct(PHI2), 1.0, places=5)
        self.assertAlmostEqual(e_wjz(PHI2), 1.0, places=5)

    def test_full_rank_vanishing(self):
        rho = random_density(9, seed=3, dims=(3, 3))
        self.assertLess(e_wd1(rho), 1e-5)
        self.assertLess(e_wd2(rho), 1e-5)
        self.assertEqual(e_lr(rho), 0.0)
        with self.assertRaises(ValueError):
            e_lr(random_density(4, rank=2, seed=1, dims=(2, 2)))

    def test_bipartite_structure_required(self):
        with self.assertRaises(ValueError):
            e_wd1(random_density(4, seed=1))
        with self.assertRaises(ValueError):
            e_wjz(PHI2, k=1)

    def test_isotropic_chain(self):
        rho = isotropic(2, 0.9)
        lower = d_m_pptk(rho)
        upper = pptk_upper(rho)
        self.assertLessEqual(e_wjz(rho), lower + 1e-5)
        self.assertLessEqual(lower, upper + 1e-5)
        self.assertAlmostEqual(upper, analytic_iso(2, 0.9), delta=1e-3)

    def test_bound_report(self):
        report = bound_ec(isotropic(2, 0.9))
        self.assertIn('e_lr', report.values)
        self.assertTrue(report.ordering_holds(slack=1e-5))
        self.assertEqual(report.parameters, {'k': 2})

    def test_rains_bound(self):
        self.assertAlmostEqual(rains_bound(PHI2), 1.0, delta=1e-4)
        self.assertLessEqual(rains_bound(isotropic(2, 0.9)), pptk_upper(isotropic(2, 0.9)) + 1e-5)

    def test_pptk_sandwich_level_one(self):
        rho = isotropic(2, 0.9)
        report = pptk_sandwich(rho, 2, 1)
        self.assertAlmostEqual(report.upper, pptk_upper(rho), delta=1e-5)
        self.assertLessEqual(report.lower, report.upper + 1e-5)
        self.assertTrue(report.assumptions_certified)

    def test_amplitude_damping_gap(self):
        self.assertGreater(ec_ad_bound(0.3) - q_ad(0.3), 1e-3)

    def test_channel_heuristic(self):
        channel = ad_channel(0.3)
        result = e_wjz_channel(channel, steps=2)
        self.assertEqual(result['label'], 'heuristic only')
        self.assertGreaterEqual(result['value'], e_wjz(choi_state(channel)) - 1e-5)

    def test_direct_e_wd2_on_rank_deficient_states(self):
        for seed in range(3):
            rho = random_density(4, rank=2, seed=40 + seed, dims=(2, 2))
            self.assertAlmostEqual(e_wd2_direct(rho), e_wd2(rho), delta=1e-4)

    def test_direct_programs_take_solver_config(self):
        config = SolverConfig(tol=1e-6)
        self.assertAlmostEqual(e_wd2_direct(PHI2, config), 1.0, places=4)
        self.assertAlmostEqual(e_wjz(PHI2, 2, config), 1.0, places=4)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_direct_e_wd2_battery(self):
        for seed in range(20):
            rank_ = 1 + seed % 3
            rho = random_density(4, rank=rank_, seed=60 + seed, dims=(2, 2))
            self.assertAlmostEqual(e_wd2_direct(rho), e_wd2(rho), delta=1e-4, msg=seed)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_bound_chain_on_random_qutrit_pairs(self):
        for seed in range(20):
            rank_ = 2 + seed % 8
            report = bound_ec(random_density(9, rank=rank_, seed=80 + seed, dims=(3, 3)))
            self.assertTrue(report.ordering_holds(slack=1e-5), msg=report.values)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_isotropic_curve(self):
        for p in (0.2, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0):
            self.assertAlmostEqual(d_m_pptk(isotropic(3, p)), analytic_iso(3, p), delta=2e-3)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_werner_curve(self):
        for p in (0.55, 0.65, 0.75, 0.85, 0.95):
            self.assertAlmostEqual(d_m_pptk(werner(3, p)), analytic_werner(3, p), delta=2e-3)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_full_rank_battery(self):
        for seed in range(20):
            rho = random_density(9, seed=seed, dims=(3, 3))
            self.assertLess(max(e_wd1(rho), e_wd2(rho)), 1e-5)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_amplitude_damping_grid(self):
        for gamma in np.linspace(0.1, 0.9, 9):
            self.assertGreater(ec_ad_bound(gamma) - q_ad(gamma), 1e-3)


class TestMagic(unittest.TestCase):
    def test_stabilizer_state_has_no_thauma(self):
        self.assertLess(thauma(stabilizer_states(3)[0]), 1e-4)

    def test_strange_state(self):
        value = thauma(strange_state())
        self.assertGreater(value, 0.3)
        self.assertLessEqual(value, mana(strange_state()) + 1e-5)

    def test_bound_magic(self):
        report = bound_magic(strange_state(), c=2.0)
        self.assertAlmostEqual(report.values['scaled_thauma'], 2.0 * report.values['thauma'])
        self.assertAlmostEqual(report.values['mana'], math.log2(5.0 / 3.0))

    def test_thauma_sandwich_level_one(self):
        report = thauma_sandwich(strange_state(), 1)
        self.assertAlmostEqual(report.upper, thauma(strange_state()), delta=1e-5)
        self.assertLessEqual(report.lower, report.upper + 1e-5)
        self.assertTrue(report.certificate_holds())

    def test_requires_odd_prime(self):
        with self.assertRaises(ValueError):
            thauma(DensityOperator(np.eye(4) / 4))

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_all_stabilizer_states(self):
        for rho in stabilizer_states(3):
            self.assertLess(thauma(rho), 1e-4)


if __name__ == '__main__':
    unittest.main()
