import unittest

import numpy as np
from scipy.optimize import brentq

from src.core import equilibrium_by_branch, linearize
from src.exceptions import BoundaryError, ConfigError, DomainError
from src.models import Branch, ModelParams, RegionLabel, VerdictKind
from src.region import classify_region, dg1_dq, dg2_dq, g1, g2, landmarks, sample_grid
from src.stability import classify_equilibrium


def x2_gap(p, eps, q, delta):
    """a - b at X2."""
    params = ModelParams(alpha=0.97, tau=0.0, delta=delta, epsilon=eps, p=p, q=q)
    coeffs = linearize(params, equilibrium_by_branch(params, Branch.X2).value)
    return coeffs.a - coeffs.b


class TestLandmarks(unittest.TestCase):
    def test_unit_parameters(self):
        marks = landmarks(1.0, 1.0)
        self.assertAlmostEqual(marks.q0, 11.0 / 64.0)
        self.assertAlmostEqual(marks.q1, 5.0 / 16.0)
        self.assertAlmostEqual(marks.q2, 9.0 / 16.0)
        self.assertAlmostEqual(marks.q3, -1.0)
        self.assertAlmostEqual(marks.delta0, 3.75)
        self.assertAlmostEqual(marks.delta1, -1.0 / 32.0)

    def test_scaling(self):
        marks = landmarks(2.0, 0.5)
        self.assertAlmostEqual(marks.q2, 9.0 * 8.0 / 16.0)
        self.assertAlmostEqual(marks.q3, -8.0)

    def test_curve_values_at_landmarks(self):
        marks = landmarks(1.0, 1.0)
        self.assertAlmostEqual(g1(1.0, 0.0, 1.0), marks.delta0)
        self.assertAlmostEqual(g2(1.0, 0.0, 1.0), 0.0)
        self.assertAlmostEqual(g2(1.0, marks.q0, 1.0), marks.delta1)
        self.assertAlmostEqual(g2(1.0, marks.q3, 1.0), 0.75)

    def test_requires_positive_quadrant(self):
        for p, eps in ((0.0, 1.0), (1.0, -1.0), (-1.0, 1.0)):
            with self.assertRaises(DomainError):
                landmarks(p, eps)


class TestCurves(unittest.TestCase):
    def test_reference_values(self):
        self.assertAlmostEqual(g1(2.0, -1.0, 1.0), 18.514, places=3)
        self.assertAlmostEqual(g2(1.0, 0.2, 1.0), -0.0302, places=4)

    def test_curves_are_where_a_equals_b(self):
        p, eps = 1.0, 1.0
        for q in np.linspace(-0.99, 0.56, 25):
            delta = g1(p, q, eps)
            self.assertAlmostEqual(x2_gap(p, eps, q, delta), 0.0, delta=1e-9 * max(1.0, delta))
            delta = g2(p, q, eps)
            self.assertAlmostEqual(x2_gap(p, eps, q, delta), 0.0, delta=1e-9)

    def test_upper_curve_matches_root_finder(self):
        p, eps = 2.0, 1.5
        for q in (-3.0, -0.5, 0.0, 1.0):
            expected = g1(p, q, eps)
            root = brentq(lambda d: x2_gap(p, eps, q, d), expected - 0.5, expected + 0.5, xtol=1e-13)
            self.assertAlmostEqual(root, expected, places=9)

    def test_monotonicity(self):
        marks = landmarks(1.0, 1.0)
        upper_q = np.linspace(-3.0, marks.q2, 10_000)
        upper = np.array([g1(1.0, q, 1.0) for q in upper_q])
        self.assertTrue(np.all(np.diff(upper) < 0.0))

        falling = np.linspace(marks.q3, marks.q0, 5_000)
        rising = np.linspace(marks.q0, marks.q2, 5_000)
        self.assertTrue(np.all(np.diff([g2(1.0, q, 1.0) for q in falling]) < 0.0))
        self.assertTrue(np.all(np.diff([g2(1.0, q, 1.0) for q in rising]) > 0.0))

    def test_position_relative_to_zero_sum_line(self):
        marks = landmarks(1.0, 1.0)
        for q in np.linspace(-3.0, marks.q2, 200):
            self.assertGreater(g1(1.0, q, 1.0), -q)
        for q in np.linspace(marks.q3, -0.01, 100):
            self.assertLess(g2(1.0, q, 1.0), -q)
        for q in np.linspace(0.01, marks.q2, 100):
            self.assertGreater(g2(1.0, q, 1.0), -q)

    def test_curves_meet_at_q2(self):
        q2 = landmarks(1.0, 1.0).q2
        self.assertAlmostEqual(g1(1.0, q2, 1.0), 0.75)
        self.assertAlmostEqual(g2(1.0, q2, 1.0), 0.75)

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            g1(1.0, 0.6, 1.0)
        with self.assertRaises(DomainError):
            g2(1.0, -1.5, 1.0)
        with self.assertRaises(DomainError):
            g1(-1.0, 0.0, 1.0)


class TestSlopes(unittest.TestCase):
    def test_match_finite_differences(self):
        step = 1e-6
        for q in np.linspace(-0.9, 0.45, 12):
            fd1 = (g1(1.0, q + step, 1.0) - g1(1.0, q - step, 1.0)) / (2.0 * step)
            fd2 = (g2(1.0, q + step, 1.0) - g2(1.0, q - step, 1.0)) / (2.0 * step)
            self.assertAlmostEqual(dg1_dq(1.0, q, 1.0), fd1, delta=1e-5)
            self.assertAlmostEqual(dg2_dq(1.0, q, 1.0), fd2, delta=1e-5)

    def test_lower_curve_turns_at_q0(self):
        q0 = landmarks(1.0, 1.0).q0
        self.assertAlmostEqual(dg2_dq(1.0, q0, 1.0), 0.0, places=12)
        self.assertLess(dg1_dq(1.0, q0, 1.0), -2.0)

    def test_unbounded_at_q2(self):
        q2 = landmarks(1.0, 1.0).q2
        with self.assertRaises(DomainError):
            dg1_dq(1.0, q2, 1.0)
        with self.assertRaises(DomainError):
            dg2_dq(1.0, -2.0, 1.0)


class TestClassifyRegion(unittest.TestCase):
    CASES = (
        # (p, epsilon, q, delta, label)
        (1.0, 1.0, -2.0, 3.0, RegionLabel.B_STABLE_ALL_TAU),
        (4.0, 2.0, 1.0, -0.5, RegionLabel.CI_DELAY_DEPENDENT),
        (3.0, 1.0, 1.0, -2.0, RegionLabel.UNSTABLE_NO_POSITIVE_SUM),
        (1.0, 1.0, 0.0, -1.0, RegionLabel.NO_REAL_EQUILIBRIUM),
        (1.0, 1.0, 0.4, 1.0, RegionLabel.CII_STABLE_ALL_TAU),
        (1.0, 1.0, 0.4, 3.0, RegionLabel.A_DELAY_DEPENDENT),
        (1.0, 1.0, 1.0, 0.0, RegionLabel.A_DELAY_DEPENDENT),
        (1.0, 1.0, -0.5, 10.0, RegionLabel.A_DELAY_DEPENDENT),
    )

    def test_examples(self):
        for p, eps, q, delta, label in self.CASES:
            with self.subTest(q=q, delta=delta):
                self.assertIs(classify_region(p, eps, q, delta), label)

    def test_points_on_curves(self):
        self.assertIs(classify_region(1.0, 1.0, -0.5, 0.5), RegionLabel.ON_BIFURCATION_CURVE)
        self.assertIs(
            classify_region(1.0, 1.0, 0.4, g1(1.0, 0.4, 1.0)), RegionLabel.ON_BIFURCATION_CURVE
        )
        self.assertIs(
            classify_region(1.0, 1.0, 0.2, g2(1.0, 0.2, 1.0)), RegionLabel.ON_BIFURCATION_CURVE
        )

    def test_implied_verdicts(self):
        self.assertIs(RegionLabel.CII_STABLE_ALL_TAU.implied_verdict, VerdictKind.STABLE_ALL_DELAYS)
        self.assertIs(RegionLabel.A_DELAY_DEPENDENT.implied_verdict, VerdictKind.DELAY_DEPENDENT)
        self.assertIsNone(RegionLabel.ON_BIFURCATION_CURVE.implied_verdict)
        self.assertIsNone(RegionLabel.NO_REAL_EQUILIBRIUM.implied_verdict)

    def _assert_agrees_with_classifier(self, p, eps, q, delta):
        label = classify_region(p, eps, q, delta)
        if label.implied_verdict is None:
            return False
        params = ModelParams(alpha=0.97, tau=0.0, delta=delta, epsilon=eps, p=p, q=q)
        try:
            verdict = classify_equilibrium(params, equilibrium_by_branch(params, Branch.X2))
        except BoundaryError:
            return False
        self.assertIs(verdict.kind, label.implied_verdict, msg=f"q={q}, delta={delta}, {label}")
        return True

    def test_random_points_agree_with_classifier(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for q, delta in zip(rng.uniform(-2.0, 1.5, 200), rng.uniform(-1.0, 6.0, 200)):
            checked += self._assert_agrees_with_classifier(1.0, 1.0, float(q), float(delta))
        self.assertGreater(checked, 100)

    def test_grid_between_landmarks_agrees_with_classifier(self):
        marks = landmarks(2.0, 1.5)
        grid = sample_grid(2.0, 1.5, marks.q3, marks.q2, marks.delta1, marks.delta0, 60, 60)
        labels = set()
        for q, delta, label in grid:
            labels.add(label)
            self._assert_agrees_with_classifier(2.0, 1.5, q, delta)
        self.assertTrue(
            {
                RegionLabel.B_STABLE_ALL_TAU,
                RegionLabel.CI_DELAY_DEPENDENT,
                RegionLabel.CII_STABLE_ALL_TAU,
                RegionLabel.UNSTABLE_NO_POSITIVE_SUM,
            }
            <= labels
        )


class TestSampleGrid(unittest.TestCase):
    def test_row_major_with_q_fastest(self):
        grid = sample_grid(1.0, 1.0, -1.0, 1.0, 0.0, 2.0, 3, 2)
        self.assertEqual(len(grid), 6)
        self.assertEqual([(q, d) for q, d, _ in grid[:3]], [(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)])
        self.assertEqual(grid[3][:2], (-1.0, 2.0))
        for q, delta, label in grid:
            self.assertIs(label, classify_region(1.0, 1.0, q, delta))

    def test_far_above_curves_is_delay_dependent(self):
        grid = sample_grid(1.0, 1.0, -1.0, 2.0, 50.0, 60.0, 20, 5)
        labels = {label for _, _, label in grid}
        self.assertIn(RegionLabel.A_DELAY_DEPENDENT, labels)
        self.assertTrue(labels <= {RegionLabel.A_DELAY_DEPENDENT, RegionLabel.CI_DELAY_DEPENDENT})

    def test_workers_do_not_change_result(self):
        serial = sample_grid(1.0, 1.0, -1.5, 0.8, -1.0, 4.0, 30, 20, workers=1)
        parallel = sample_grid(1.0, 1.0, -1.5, 0.8, -1.0, 4.0, 30, 20, workers=2)
        self.assertEqual(serial, parallel)

    def test_invalid_grids(self):
        with self.assertRaises(ConfigError):
            sample_grid(1.0, 1.0, 1.0, -1.0, 0.0, 1.0, 10, 10)
        with self.assertRaises(ConfigError):
            sample_grid(1.0, 1.0, -1.0, 1.0, 0.0, 1.0, 1, 10)
        with self.assertRaises(ConfigError):
            sample_grid(1.0, 1.0, -1.0, float("inf"), 0.0, 1.0, 10, 10)
        with self.assertRaises(DomainError):
            sample_grid(-1.0, 1.0, -1.0, 1.0, 0.0, 1.0, 10, 10)


if __name__ == "__main__":
    unittest.main()
