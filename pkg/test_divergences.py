import math
import os
import unittest

import numpy as np

from src.divergences import (
    commute, d_max, d_min, divergence, measured, measured_half, support_contained, umegaki,
)
from src.linalg import apply_channel, random_channel, random_density, random_unitary
from src.types import DensityOperator, DivergenceKind, HermitianOperator

SLACK = 1e-5


class TestClosedForms(unittest.TestCase):
    def test_umegaki_commuting(self):
        rho = DensityOperator(np.diag([0.5, 0.5]))
        sigma = DensityOperator(np.diag([0.25, 0.75]))
        expected = 0.5 * math.log2(2.0) + 0.5 * math.log2(0.5 / 0.75)
        self.assertAlmostEqual(umegaki(rho, sigma).value, expected, places=12)

    def test_identical_states(self):
        rho = random_density(3, seed=1)
        for kind in DivergenceKind:
            self.assertAlmostEqual(divergence(kind, rho, rho).value, 0.0, places=5, msg=kind)

    def test_d_min_and_d_max(self):
        rho = DensityOperator(np.diag([1.0, 0.0]))
        sigma = DensityOperator(np.diag([0.25, 0.75]))
        self.assertAlmostEqual(d_min(rho, sigma).value, 2.0, places=10)
        self.assertAlmostEqual(d_max(rho, sigma).value, 2.0, places=10)

    def test_unnormalized_sigma(self):
        rho = random_density(2, seed=4)
        sigma = HermitianOperator(0.5 * random_density(2, seed=5).entries)
        shifted = umegaki(rho, HermitianOperator(2 * sigma.entries)).value + 1.0
        self.assertAlmostEqual(umegaki(rho, sigma).value, shifted, places=10)

    def test_measured_half_is_fidelity(self):
        psi = DensityOperator.from_vector(np.array([1.0, 1.0]))
        zero = DensityOperator.from_vector(np.array([1.0, 0.0]))
        self.assertAlmostEqual(measured_half(psi, zero).value, 1.0, places=10)


class TestInfiniteValues(unittest.TestCase):
    def setUp(self):
        self.rho = DensityOperator(np.diag([1.0, 0.0]))
        self.sigma = DensityOperator(np.diag([0.0, 1.0]))

    def test_disjoint_supports(self):
        for kind in DivergenceKind:
            value = divergence(kind, self.rho, self.sigma)
            self.assertTrue(value.is_infinite, msg=kind)
            self.assertEqual(value.to_json()['value'], 'inf')

    def test_support_containment(self):
        full = DensityOperator(np.eye(2) / 2)
        self.assertTrue(support_contained(self.rho, full))
        self.assertFalse(support_contained(full, self.rho))
        self.assertTrue(math.isinf(umegaki(full, self.rho).value))
        self.assertFalse(math.isinf(d_min(full, self.rho).value))


class TestValidation(unittest.TestCase):
    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            umegaki(random_density(2, seed=1), random_density(3, seed=1))

    def test_non_psd_sigma(self):
        with self.assertRaises(ValueError):
            d_max(random_density(2, seed=1), HermitianOperator(np.diag([1.0, -0.5])))

    def test_commute(self):
        self.assertTrue(commute(HermitianOperator(np.diag([1.0, 2.0])),
                                HermitianOperator(np.diag([3.0, 4.0]))))
        self.assertFalse(commute(random_density(2, seed=1), random_density(2, seed=2)))


class TestOrdering(unittest.TestCase):
    def check_chain(self, rho, sigma):
        values = [d_min(rho, sigma).value, measured_half(rho, sigma).value,
                  measured(rho, sigma).value, umegaki(rho, sigma).value, d_max(rho, sigma).value]
        for lower, upper in zip(values, values[1:]):
            self.assertLessEqual(lower, upper + SLACK, msg=values)

    def test_qubit_pairs(self):
        for seed in range(3):
            self.check_chain(random_density(2, seed=seed), random_density(2, seed=100 + seed))

    def test_measured_commuting_equals_umegaki(self):
        rho = DensityOperator(np.diag([0.2, 0.3, 0.5]))
        sigma = DensityOperator(np.diag([0.6, 0.1, 0.3]))
        self.assertEqual(measured(rho, sigma).value, umegaki(rho, sigma).value)

    def test_unitary_invariance(self):
        rho, sigma = random_density(2, seed=7), random_density(2, seed=8)
        u = random_unitary(2, seed=9)
        rotated = (DensityOperator(u @ rho.entries @ u.conj().T),
                   DensityOperator(u @ sigma.entries @ u.conj().T))
        self.assertAlmostEqual(measured(*rotated).value, measured(rho, sigma).value, places=5)
        self.assertAlmostEqual(umegaki(*rotated).value, umegaki(rho, sigma).value, places=10)

    def test_umegaki_data_processing(self):
        for seed in range(20):
            rho, sigma = random_density(2, seed=seed), random_density(2, seed=200 + seed)
            channel = random_channel(2, 3, n_kraus=2, seed=400 + seed)
            out_rho = DensityOperator(apply_channel(channel, rho).entries)
            out_sigma = DensityOperator(apply_channel(channel, sigma).entries)
            self.assertLessEqual(umegaki(out_rho, out_sigma).value,
                                 umegaki(rho, sigma).value + 1e-9)

    def test_umegaki_additivity(self):
        for seed in range(20):
            rho1, sigma1 = random_density(2, seed=seed), random_density(2, seed=50 + seed)
            rho2, sigma2 = random_density(3, seed=100 + seed), random_density(3, seed=150 + seed)
            joint = umegaki(DensityOperator(np.kron(rho1.entries, rho2.entries)),
                            DensityOperator(np.kron(sigma1.entries, sigma2.entries))).value
            self.assertAlmostEqual(joint, umegaki(rho1, sigma1).value + umegaki(rho2, sigma2).value,
                                   places=8)

    def test_d_max_uses_support_threshold(self):
        rho = DensityOperator(np.diag([1.0, 1e-11]) / (1.0 + 1e-11))
        sigma = DensityOperator(np.diag([1.0, 1e-13]) / (1.0 + 1e-13))
        self.assertTrue(support_contained(rho, sigma))
        self.assertAlmostEqual(d_max(rho, sigma).value, 0.0, places=8)

    @unittest.skipUnless(os.environ.get("REGENT_SLOW"), "set REGENT_SLOW=1 for heavy checks")
    def test_qutrit_battery(self):
        for seed in range(50):
            self.check_chain(random_density(3, seed=seed), random_density(3, seed=500 + seed))


if __name__ == '__main__':
    unittest.main()
