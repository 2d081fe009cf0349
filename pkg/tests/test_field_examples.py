import unittest

import numpy as np

from MonoHam.core import InvariantError
from MonoHam.monotonicity import check_all_orders, check_joint, check_single
from MonoHam.scenarios.field_examples import KINDS, generate_example, sample_points


class TestFieldExamples(unittest.TestCase):
    """
    Tests for the synthetic field generators.
    """

    def test_deterministic(self):
        """
        Test that every kind is reproducible from its seed.
        """
        for kind in KINDS:
            order = 4 if kind == "triplet4" else 3
            d = 2 if kind == "rotation" else 1
            first = generate_example(kind, m=5, d=d, order=order, seed=11)
            second = generate_example(kind, m=5, d=d, order=order, seed=11)
            np.testing.assert_array_equal(first.values, second.values)
            np.testing.assert_array_equal(first.domain.points, second.domain.points)

    def test_gradient_is_cyclically_monotone(self):
        """
        Test that gradient examples pass the all-orders check.
        """
        for seed in range(10):
            fields = generate_example("gradient", m=6, d=2, order=3, seed=seed)
            self.assertTrue(check_all_orders(fields.domain, fields.field(1)).passed, msg=f"seed {seed}")
            np.testing.assert_array_equal(fields.field(2), 0.0)

    def test_random_monotone_slots(self):
        """
        Test that each random_monotone slot is cyclically monotone on its own.
        """
        fields = generate_example("random_monotone", m=5, d=2, order=4, seed=3)
        for ell in range(1, 4):
            self.assertTrue(check_all_orders(fields.domain, fields.field(ell)).passed)

    def test_rotation(self):
        """
        Test that the rotation example contains the triangle and fails at N = 3.
        """
        fields = generate_example("rotation", m=5, d=2, order=3, seed=0)
        np.testing.assert_array_equal(fields.domain.points[:3], [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        outcome = check_single(fields.domain, fields.field(1), 3)
        self.assertFalse(outcome.passed)
        self.assertLessEqual(outcome.defect, -1.0 + 1e-12)

    def test_triplet_is_jointly_monotone(self):
        """
        Test that triplet examples pass the joint check at N = 4.
        """
        for seed in range(5):
            fields = generate_example("triplet4", m=4, d=1, order=4, seed=seed)
            self.assertTrue(check_joint(fields).passed, msg=f"seed {seed}")

    def test_grid_layout(self):
        """
        Test the regular grid layout on [-1, 1]^2.
        """
        points = sample_points(9, 2, np.random.default_rng(0), layout="grid")
        self.assertEqual(points.shape, (9, 2))
        np.testing.assert_allclose(np.unique(points[:, 0]), [-1.0, 0.0, 1.0])
        with self.assertRaises(InvariantError):
            sample_points(8, 2, np.random.default_rng(0), layout="grid")

    def test_invalid_requests(self):
        """
        Test that unknown kinds and unsupported shapes are rejected.
        """
        with self.assertRaises(InvariantError):
            generate_example("spiral", m=4)
        with self.assertRaises(InvariantError):
            generate_example("rotation", m=4, d=1)
        with self.assertRaises(InvariantError):
            generate_example("triplet4", m=4, order=3)
        with self.assertRaises(InvariantError):
            generate_example("gradient", m=4, order=1)


if __name__ == '__main__':
    unittest.main()
