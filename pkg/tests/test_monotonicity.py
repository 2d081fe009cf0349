import itertools
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from MonoHam.core import DiscreteDomain, FieldTuple, IndexCycle, InvariantError, SizeCapError
from MonoHam.monotonicity import (METHOD_ENUMERATE, METHOD_NEGATIVE_CYCLE, CycleWitness, Pass, check_all_orders,
                                  check_joint, check_single, check_step, cost_tensor, cycle_defect,
                                  cycle_defect_symmetrized, joint_defect_tensor, min_closed_walk,
                                  single_cycle_defect)

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def rotation(points):
    return np.stack([-points[:, 1], points[:, 0]], axis=1)


class TestCycleDefects(unittest.TestCase):
    """
    Tests for the scalar cycle sums.
    """

    def test_identity_two_cycle(self):
        """
        Test that the identity field on {0, 1} has 2-cycle defect 1.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        fields = FieldTuple.single(domain, domain.points, order=2)
        self.assertAlmostEqual(cycle_defect(fields, (0, 1)), 1.0)
        self.assertAlmostEqual(single_cycle_defect(domain, domain.points, (0, 1)), 1.0)

    def test_identity_pair_three_cycle(self):
        """
        Test that (u, u) with u the identity on {0, 1, 2} has defect 6 on (0, 1, 2).
        """
        domain = DiscreteDomain(np.array([0.0, 1.0, 2.0]))
        fields = FieldTuple(domain, np.stack([domain.points, domain.points]))
        self.assertAlmostEqual(cycle_defect(fields, IndexCycle((0, 1, 2), 3)), 6.0)

    def test_zero_fields(self):
        """
        Test that zero fields have zero defect on every cycle.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0, 2.0]))
        fields = FieldTuple(domain, np.zeros((2, 3, 1)))
        for t in itertools.product(range(3), repeat=3):
            self.assertEqual(cycle_defect(fields, t), 0.0)

    def test_rotation_triangle(self):
        """
        Test that the plane rotation has defect -1 around the standard triangle.
        """
        domain = DiscreteDomain(TRIANGLE)
        self.assertAlmostEqual(single_cycle_defect(domain, rotation(TRIANGLE), (0, 1, 2)), -1.0)

    def test_rotation_step_two(self):
        """
        Test that the rotation has zero (4, 2) defect on every 4-cycle.
        """
        domain = DiscreteDomain(TRIANGLE)
        u = rotation(TRIANGLE)
        for t in itertools.product(range(3), repeat=4):
            self.assertAlmostEqual(single_cycle_defect(domain, u, t, step=2), 0.0)

    def test_cycle_length_mismatch(self):
        """
        Test that a cycle of the wrong length is rejected.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        fields = FieldTuple.single(domain, domain.points, order=3)
        with self.assertRaises(InvariantError):
            cycle_defect(fields, (0, 1))

    def test_step_out_of_range(self):
        """
        Test that a step outside 1..N-1 is rejected.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        with self.assertRaises(InvariantError):
            single_cycle_defect(domain, domain.points, (0, 1, 0), step=3)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_symmetrized_matches_direct(self, seed):
        """
        Test that the rotation-averaged start cost reproduces the cycle sum.
        """
        rng = np.random.default_rng(seed)
        domain = DiscreteDomain(rng.standard_normal((3, 2)))
        fields = FieldTuple(domain, rng.standard_normal((2, 3, 2)))
        for t in itertools.product(range(3), repeat=3):
            self.assertAlmostEqual(cycle_defect(fields, t), cycle_defect_symmetrized(fields, t), places=10)


class TestDefectTensors(unittest.TestCase):
    """
    Tests for the dense cost and defect tensors.
    """

    def test_joint_tensor_matches_scalar(self):
        """
        Test that every entry of the joint defect tensor equals the scalar cycle sum.
        """
        rng = np.random.default_rng(11)
        domain = DiscreteDomain(rng.standard_normal((3, 1)))
        fields = FieldTuple(domain, rng.standard_normal((2, 3, 1)))
        defects = joint_defect_tensor(fields)
        for t in np.ndindex(defects.shape):
            self.assertAlmostEqual(defects[t], cycle_defect(fields, t), places=10)

    def test_cost_tensor_diagonal_zero(self):
        """
        Test that the start cost vanishes on the diagonal.
        """
        rng = np.random.default_rng(12)
        domain = DiscreteDomain(rng.standard_normal((4, 2)))
        fields = FieldTuple(domain, rng.standard_normal((2, 4, 2)))
        f = cost_tensor(fields)
        for i in range(4):
            self.assertEqual(f[i, i, i], 0.0)

    def test_cap_enforced(self):
        """
        Test that the enumeration cap applies to the defect tensor.
        """
        domain = DiscreteDomain(np.arange(5.0))
        fields = FieldTuple.single(domain, domain.points, order=4)
        with self.assertRaises(SizeCapError):
            check_joint(fields, cap=100)


class TestChecks(unittest.TestCase):
    """
    Tests for the monotonicity checks and their witnesses.
    """

    def test_gradient_of_square_is_jointly_monotone(self):
        """
        Test that (u, 0) with u the gradient of |x|^2/2 passes the joint check.
        """
        domain = DiscreteDomain(np.array([[0.0, 0.0], [1.0, 0.5], [-0.5, 1.0], [0.3, -0.7]]))
        fields = FieldTuple.single(domain, domain.points, order=3)
        outcome = check_joint(fields)
        self.assertIsInstance(outcome, Pass)
        self.assertTrue(outcome.passed)

    def test_rotation_joint_witness(self):
        """
        Test that (rotation, 0) fails with the triangle as witness and defect -1.
        """
        domain = DiscreteDomain(TRIANGLE)
        outcome = check_joint(FieldTuple.single(domain, rotation(TRIANGLE), order=3))
        self.assertIsInstance(outcome, CycleWitness)
        self.assertEqual(outcome.cycle.to_list(), [0, 1, 2])
        self.assertAlmostEqual(outcome.defect, -1.0)
        self.assertEqual(outcome.kind, "joint")

    def test_pair_of_two_monotone_fields(self):
        """
        Test that (u, u) passes for a 2-monotone u at N = 3.
        """
        domain = DiscreteDomain(np.array([-1.0, 0.0, 0.5, 2.0]))
        u = 2.0 * domain.points
        self.assertTrue(check_joint(FieldTuple(domain, np.stack([u, u]))).passed)

    def test_rotation_is_two_monotone(self):
        """
        Test that the rotation is 2-cyclically monotone by both methods.
        """
        domain = DiscreteDomain(TRIANGLE)
        for method in (METHOD_ENUMERATE, METHOD_NEGATIVE_CYCLE):
            self.assertTrue(check_single(domain, rotation(TRIANGLE), 2, method=method).passed)

    def test_rotation_three_cycle_witness(self):
        """
        Test that both methods report defect -1 for the rotation at N = 3.
        """
        domain = DiscreteDomain(TRIANGLE)
        for method in (METHOD_ENUMERATE, METHOD_NEGATIVE_CYCLE):
            outcome = check_single(domain, rotation(TRIANGLE), 3, method=method)
            self.assertFalse(outcome.passed)
            self.assertAlmostEqual(outcome.defect, -1.0)
            self.assertAlmostEqual(single_cycle_defect(domain, rotation(TRIANGLE), outcome.cycle), -1.0)

    def test_step_checks(self):
        """
        Test the (N, l) check on a 2-monotone field, the rotation and the zero field.
        """
        domain = DiscreteDomain(TRIANGLE)
        self.assertTrue(check_step(domain, TRIANGLE, 4, 2).passed)
        outcome = check_step(domain, rotation(TRIANGLE), 3, 1)
        self.assertAlmostEqual(outcome.defect, -1.0)
        self.assertEqual(outcome.kind, "step-1")
        self.assertTrue(check_step(domain, np.zeros((3, 2)), 5, 3).passed)

    def test_all_orders(self):
        """
        Test the all-orders check on the identity, the rotation and u = -x.
        """
        domain = DiscreteDomain(TRIANGLE)
        self.assertTrue(check_all_orders(domain, TRIANGLE).passed)
        outcome = check_all_orders(domain, rotation(TRIANGLE))
        self.assertLessEqual(outcome.defect, -1.0 + 1e-12)
        line = DiscreteDomain(np.array([0.0, 1.0]))
        outcome = check_all_orders(line, -line.points)
        self.assertEqual(outcome.cycle.to_list(), [0, 1])
        self.assertAlmostEqual(outcome.defect, -1.0)

    def test_unknown_method(self):
        """
        Test that an unknown method name is rejected.
        """
        domain = DiscreteDomain(TRIANGLE)
        with self.assertRaises(InvariantError):
            check_single(domain, TRIANGLE, 3, method="simplex")

    def test_min_closed_walk_self_loops(self):
        """
        Test that a nonnegative cost graph has minimum closed walk 0 at a single node.
        """
        value, walk = min_closed_walk(np.ones((3, 3)) - np.eye(3), 3)
        self.assertEqual(value, 0.0)
        self.assertEqual(walk, [0])

    def test_negative_cycle_matches_enumeration(self):
        """
        Test that both single-field methods agree on seeded random instances.
        """
        rng = np.random.default_rng(7)
        for trial in range(1000):
            m = int(rng.integers(2, 5))
            d = int(rng.integers(1, 3))
            order = int(rng.integers(2, 5))
            domain = DiscreteDomain(rng.standard_normal((m, d)))
            u = rng.standard_normal((m, d)) + (domain.points if trial % 2 else 0.0)
            by_enumeration = check_single(domain, u, order, method=METHOD_ENUMERATE)
            by_walks = check_single(domain, u, order, method=METHOD_NEGATIVE_CYCLE)
            self.assertEqual(by_enumeration.passed, by_walks.passed, msg=f"trial {trial}")
            if not by_walks.passed:
                self.assertAlmostEqual(by_enumeration.defect, by_walks.defect, places=9, msg=f"trial {trial}")
                self.assertEqual(by_walks.cycle.order, order)


def outcome_defect(outcome):
    return outcome.min_defect if outcome.passed else outcome.defect


def positive_definite(rng, d, kappa=1.0):
    B = rng.standard_normal((d, d))
    return B @ B.T + kappa * np.eye(d)


class TestReductions(unittest.TestCase):
    """
    Tests relating the joint check to single-field checks on small random instances.
    """

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_single_field_tuple_matches_single_check(self, seed):
        """
        Test that (u, 0, ..., 0) passes jointly exactly when u is N-monotone, with the same defect.
        """
        rng = np.random.default_rng(seed)
        m, d, order = int(rng.integers(2, 6)), int(rng.integers(1, 3)), int(rng.integers(2, 5))
        domain = DiscreteDomain(rng.standard_normal((m, d)))
        u = rng.standard_normal((m, d)) + (domain.points @ positive_definite(rng, d) if seed % 2 else 0.0)
        joint = check_joint(FieldTuple.single(domain, u, order))
        single = check_single(domain, u, order)
        self.assertEqual(joint.passed, single.passed)
        self.assertAlmostEqual(outcome_defect(joint), outcome_defect(single), places=9)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_repeated_field_matches_pair_check(self, seed):
        """
        Test that (u, ..., u) passes jointly exactly when u is 2-monotone.
        """
        rng = np.random.default_rng(seed)
        m, d, order = int(rng.integers(2, 6)), int(rng.integers(1, 3)), int(rng.integers(3, 5))
        domain = DiscreteDomain(rng.standard_normal((m, d)))
        u = domain.points @ positive_definite(rng, d) + rng.uniform(0.0, 2.0) * rng.standard_normal((m, d))
        joint = check_joint(FieldTuple(domain, np.stack([u] * (order - 1))))
        self.assertEqual(joint.passed, check_single(domain, u, 2).passed)

    def test_triplet_rule(self):
        """
        Test that N = 4 fields pass jointly when u2 is 2-monotone and u1 dominates u3 pairwise.
        """
        rng = np.random.default_rng(31)
        premise_held = 0
        for trial in range(60):
            m, d = int(rng.integers(2, 6)), int(rng.integers(1, 3))
            points = rng.standard_normal((m, d))
            domain = DiscreteDomain(points)
            kappa = 1.0
            base = points @ positive_definite(rng, d, kappa)
            shift = rng.standard_normal((m, d))
            shift /= np.maximum(np.linalg.norm(shift, axis=1, keepdims=True), 1e-12)
            gaps = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
            min_gap = gaps[~np.eye(m, dtype=bool)].min()
            shift *= rng.uniform(0.0, 2.0) * kappa * min_gap / 2.0
            u1, u3 = base + shift, base - shift
            u2 = points @ positive_definite(rng, d) + rng.uniform(0.0, 1.0) * rng.standard_normal((m, d))
            dominance = np.einsum("ijk,ijk->ij", u1[:, None, :] - u3[None, :, :],
                                  points[:, None, :] - points[None, :, :])
            if dominance.min() < 0.0 or not check_single(domain, u2, 2).passed:
                continue
            premise_held += 1
            fields = FieldTuple(domain, np.stack([u1, u2, u3]))
            self.assertTrue(check_joint(fields).passed, msg=f"trial {trial}")
        self.assertGreater(premise_held, 0)

    def test_step_rule(self):
        """
        Test that fields each passing their own step check pass jointly.
        """
        rng = np.random.default_rng(37)
        premise_held = 0
        for trial in range(60):
            m, d, order = int(rng.integers(2, 6)), int(rng.integers(1, 3)), int(rng.integers(2, 5))
            domain = DiscreteDomain(rng.standard_normal((m, d)))
            values = []
            for _ in range(order - 1):
                noise = [0.0, 0.0, 0.1, 1.0][int(rng.integers(4))]
                values.append(domain.points @ positive_definite(rng, d) + noise * rng.standard_normal((m, d)))
            if not all(check_step(domain, u, order, ell).passed for ell, u in enumerate(values, start=1)):
                continue
            premise_held += 1
            self.assertTrue(check_joint(FieldTuple(domain, np.stack(values))).passed, msg=f"trial {trial}")
        self.assertGreater(premise_held, 0)

    def test_all_orders_cap(self):
        """
        Test that the all-orders check refuses a walk table larger than the cap.
        """
        domain = DiscreteDomain(TRIANGLE)
        with self.assertRaises(SizeCapError):
            check_all_orders(domain, TRIANGLE, cap=5)


if __name__ == '__main__':
    unittest.main()
