import math
import unittest

import numpy as np

from src.main.config import DecodeConfig
from src.main.generator.decode import CONSTELLATION, bit_error_rate, gen_signal_decode, noise_variance
from src.main.model.problem import FiniteSet, objective, validate
from src.main.solver.admm import Settings, relax_and_round, solve
from src.main.solver.errors import DimensionError


class BitErrorRateTests(unittest.TestCase):
    """This class represents the Gray-coded bit error rate test case"""

    def test_identical(self):
        """Test a perfect decode"""
        x = [-3.0, -1.0, 1.0, 3.0]
        self.assertEqual(bit_error_rate(x, x), 0.0)

    def test_neighbouring_symbol(self):
        """Test that adjacent symbols differ in one bit"""
        x_true = np.array([-3.0, 1.0, 1.0, 3.0])
        x_hat = np.array([-1.0, 1.0, 1.0, 3.0])
        self.assertEqual(bit_error_rate(x_hat, x_true), 1 / 8)

    def test_all_wrong(self):
        """Test symbols whose labels differ in both bits"""
        self.assertEqual(bit_error_rate([-3.0, -3.0], [1.0, 1.0]), 1.0)
        self.assertEqual(bit_error_rate([-1.0], [3.0]), 1.0)

    def test_invalid(self):
        """Test to reject symbols outside the constellation and length mismatches"""
        with self.assertRaises(ValueError):
            bit_error_rate([0.0], [1.0])
        with self.assertRaises(DimensionError):
            bit_error_rate([1.0, 1.0], [1.0])


class SignalDecodeTests(unittest.TestCase):
    """This class represents the signal decoding problem test case"""

    def test_canonical_form(self):
        """Test that the objective equals the squared residual norm"""
        p, x_true, y = gen_signal_decode(10, 30, snr_db=8.0, seed=2)
        H = np.random.default_rng(2).standard_normal((30, 10))
        self.assertEqual(validate(p), [])
        self.assertEqual(p.m, 0)
        self.assertEqual(list(p.sets), [FiniteSet(CONSTELLATION)] * 10)
        rng = np.random.default_rng(0)
        for _ in range(10):
            x_hat = rng.choice(CONSTELLATION, size=10)
            expected = float(np.sum((H @ x_hat - y) ** 2))
            self.assertAlmostEqual(objective(p, x_hat), expected, delta=1e-9 * max(1.0, expected))
        self.assertTrue(set(x_true.tolist()) <= set(CONSTELLATION))

    def test_noise_variance(self):
        """Test the noise level of an 8 dB channel"""
        self.assertAlmostEqual(noise_variance(40, 8.0), 200 / 10 ** 0.8)
        self.assertEqual(noise_variance(40, math.inf), 0.0)

    def test_noiseless(self):
        """Test that noiseless data is decoded exactly"""
        p, x_true, y = gen_signal_decode(12, 60, snr_db=math.inf, seed=4)
        self.assertAlmostEqual(objective(p, x_true), 0.0, delta=1e-9 * float(y @ y))
        rounded = relax_and_round(p, Settings.from_config(DecodeConfig))
        np.testing.assert_array_equal(rounded.best_x, x_true)
        self.assertEqual(bit_error_rate(rounded.best_x, x_true), 0.0)

    def test_heuristic_decodes(self):
        """Test that the heuristic returns constellation points"""
        p, _, _ = gen_signal_decode(20, 100, seed=1)
        solution = solve(p, Settings.from_config(DecodeConfig))
        self.assertTrue(solution.found_feasible)
        self.assertTrue(set(solution.best_x.tolist()) <= set(CONSTELLATION))

    def test_seeded(self):
        """Test to reproduce the received signal from the seed"""
        _, x_first, y_first = gen_signal_decode(5, 10, seed=7)
        _, x_second, y_second = gen_signal_decode(5, 10, seed=7)
        np.testing.assert_array_equal(y_first, y_second)
        np.testing.assert_array_equal(x_first, x_second)

    def test_dimensions(self):
        """Test to reject fewer received components than symbols"""
        with self.assertRaises(DimensionError):
            gen_signal_decode(10, 5)


if __name__ == '__main__':
    unittest.main()
