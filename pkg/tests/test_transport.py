import itertools
import unittest

import numpy as np

from MonoHam.core import DiscreteDomain, FieldTuple, GridHamiltonian, InvariantError, NInvolution, SizeCapError
from MonoHam.transport import (METHOD_EXACT, METHOD_LOCAL, check_polar_nesting, diagonal_coupling, duality_gap,
                               enumerate_involutions, involution_polar_value, projection_expansion,
                               projection_objective, pushforward_coupling, random_antisymmetric_basket,
                               sigma_orbits, solve_involution_polar, solve_sigma_kantorovich,
                               verify_graph_lemma, violating_cycle_from_coupling)
from MonoHam.scenarios.field_examples import generate_example

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


class TestSigmaKantorovich(unittest.TestCase):
    """
    Tests for the sigma-invariant transport LP.
    """

    def setUp(self):
        self.line = DiscreteDomain(np.array([0.0, 1.0]))

    def test_identity_field(self):
        """
        Test that a monotone field has optimum 0, attained by the diagonal coupling.
        """
        fields = FieldTuple.single(self.line, self.line.points, order=2)
        result = solve_sigma_kantorovich(fields)
        self.assertAlmostEqual(result.value, 0.0, places=12)
        np.testing.assert_allclose(result.coupling.tensor, [[0.5, 0.0], [0.0, 0.5]], atol=1e-12)
        self.assertIsNone(violating_cycle_from_coupling(result, fields))

    def test_negative_identity(self):
        """
        Test that u = -x on {0, 1} has optimum -1/2 on the off-diagonal coupling.
        """
        fields = FieldTuple.single(self.line, -self.line.points, order=2)
        result = solve_sigma_kantorovich(fields)
        self.assertAlmostEqual(result.value, -0.5)
        np.testing.assert_allclose(result.coupling.tensor, [[0.0, 0.5], [0.5, 0.0]], atol=1e-12)
        witness = violating_cycle_from_coupling(result, fields)
        self.assertAlmostEqual(witness.defect, -1.0)

    def test_zero_fields(self):
        """
        Test that zero fields have optimum 0 with a feasible coupling.
        """
        fields = FieldTuple(self.line, np.zeros((2, 2, 1)))
        result = solve_sigma_kantorovich(fields)
        self.assertAlmostEqual(result.value, 0.0)
        np.testing.assert_allclose(result.coupling.first_marginal(), [0.5, 0.5], atol=1e-10)

    def test_orbits(self):
        """
        Test the sigma-orbit decomposition of 2^3 index triples.
        """
        tuples, orbit_id, size = sigma_orbits(2, 3)
        self.assertEqual(tuples.shape, (8, 3))
        self.assertEqual(sorted(size.tolist()), [1, 1, 3, 3])

    def test_non_uniform_weights(self):
        """
        Test the LP with non-uniform weights keeps the prescribed first marginal.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0, 3.0]), np.array([0.2, 0.3, 0.5]))
        fields = FieldTuple.single(domain, -domain.points, order=3)
        result = solve_sigma_kantorovich(fields)
        np.testing.assert_allclose(result.coupling.first_marginal(), [0.2, 0.3, 0.5], atol=1e-10)
        self.assertLess(result.value, 0.0)


class TestCouplings(unittest.TestCase):
    """
    Tests for the diagonal and graph couplings.
    """

    def setUp(self):
        self.domain = DiscreteDomain(np.array([0.0, 1.0]))

    def test_diagonal(self):
        """
        Test the diagonal coupling of two uniform points.
        """
        coupling = diagonal_coupling(self.domain, 2)
        np.testing.assert_allclose(coupling.tensor, [[0.5, 0.0], [0.0, 0.5]])

    def test_identity_pushforward(self):
        """
        Test that the identity pushes forward to the diagonal coupling.
        """
        coupling = pushforward_coupling(NInvolution.identity(2, 3), self.domain)
        np.testing.assert_allclose(coupling.tensor, diagonal_coupling(self.domain, 3).tensor)

    def test_swap_pushforward(self):
        """
        Test that the swap pushes forward to half mass on (0, 1) and (1, 0).
        """
        coupling = pushforward_coupling(NInvolution(np.array([1, 0]), 2), self.domain)
        np.testing.assert_allclose(coupling.tensor, [[0.0, 0.5], [0.5, 0.0]])

    def test_unequal_weights_rejected(self):
        """
        Test that a swap between points of unequal weight is rejected.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]), np.array([0.25, 0.75]))
        with self.assertRaises(InvariantError):
            pushforward_coupling(NInvolution(np.array([1, 0]), 2), domain)


class TestGraphLemma(unittest.TestCase):
    """
    Tests for the three equivalent conditions on graph couplings.
    """

    def test_swap(self):
        """
        Test that the swap on two points satisfies every condition at N = 2.
        """
        report = verify_graph_lemma([1, 0], DiscreteDomain(np.array([0.0, 1.0])), 2)
        self.assertTrue(report.condition_coupling and report.condition_involution and report.condition_integrals)
        self.assertTrue(report.consistent)

    def test_three_cycle_at_order_two(self):
        """
        Test that a 3-cycle fails at N = 2 with a positive absolute-value integral.
        """
        report = verify_graph_lemma([1, 2, 0], DiscreteDomain(np.array([0.0, 1.0, 2.0])), 2)
        self.assertFalse(report.power_is_identity)
        self.assertFalse(report.condition_coupling)
        abs_check = next(c for c in report.checks if c.name == "abs_value_hamiltonian")
        self.assertGreater(abs_check.residual, 0.0)
        self.assertTrue(report.consistent)

    def test_constant_map(self):
        """
        Test that a constant map fails measure preservation on the indicator family.
        """
        report = verify_graph_lemma([0, 0], DiscreteDomain(np.array([0.0, 1.0])), 2)
        self.assertFalse(report.measure_preserving)
        indicator = next(c for c in report.checks if c.name == "indicator_family")
        self.assertFalse(indicator.passed)
        self.assertTrue(report.consistent)

    def test_all_permutations_of_four_points(self):
        """
        Test the three conditions on every permutation of four points for N = 2, 3, 4.
        """
        domain = DiscreteDomain(np.random.default_rng(4).standard_normal((4, 2)))
        for order in (2, 3, 4):
            for perm in itertools.permutations(range(4)):
                perm = np.array(perm)
                report = verify_graph_lemma(perm, domain, order)
                divides = all(order % length == 0 for length in _cycle_lengths(perm))
                self.assertTrue(report.consistent, msg=f"{perm} N={order}")
                self.assertEqual(report.condition_coupling, divides, msg=f"{perm} N={order}")

    def test_all_self_maps_of_three_points(self):
        """
        Test that the conditions agree on every self-map of three points, bijective or not.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0, 2.5]))
        for order in (2, 3):
            for perm in itertools.product(range(3), repeat=3):
                self.assertTrue(verify_graph_lemma(np.array(perm), domain, order).consistent, msg=f"{perm}")

    def test_basket_is_antisymmetric(self):
        """
        Test that every basket Hamiltonian carries the antisymmetric claim.
        """
        basket = random_antisymmetric_basket(3, 3, size=4, seed=1)
        self.assertEqual(len(basket), 4)
        self.assertTrue(all(H.antisymmetric for H in basket))


def _cycle_lengths(perm):
    seen, lengths = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        length, i = 0, start
        while i not in seen:
            seen.add(i)
            i = int(perm[i])
            length += 1
        lengths.append(length)
    return lengths


class TestInvolutions(unittest.TestCase):
    """
    Tests for the N-involution polar problem and the projection objective.
    """

    def test_enumeration_counts(self):
        """
        Test the number of permutations of three points with S^N = I.
        """
        self.assertEqual(len(list(enumerate_involutions(3, 2))), 4)
        self.assertEqual(len(list(enumerate_involutions(3, 3))), 3)
        self.assertEqual(len(list(enumerate_involutions(4, 4))), 1 + 6 + 3 + 6)

    def test_identity_field_optimum_at_identity(self):
        """
        Test that a monotone field has involution optimum 0 at the identity.
        """
        rng = np.random.default_rng(0)
        for m in range(2, 7):
            for order in (2, 3):
                domain = DiscreteDomain(rng.standard_normal((m, 2)))
                result = solve_involution_polar(FieldTuple.single(domain, domain.points, order))
                self.assertAlmostEqual(result.value, 0.0, places=12)
                self.assertTrue(result.S.is_identity())
                self.assertTrue(result.optimal)

    def test_negative_identity_swap(self):
        """
        Test that u = -x on {0, 1} has optimum -1/2 at the swap.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        result = solve_involution_polar(FieldTuple.single(domain, -domain.points, 2))
        self.assertAlmostEqual(result.value, -0.5)
        self.assertEqual(result.S.to_list(), [1, 0])

    def test_rotation_three_cycle(self):
        """
        Test that the rotation on the triangle has a strictly negative optimum at a 3-cycle.
        """
        domain = DiscreteDomain(TRIANGLE)
        fields = FieldTuple.single(domain, np.stack([-TRIANGLE[:, 1], TRIANGLE[:, 0]], axis=1), 3)
        result = solve_involution_polar(fields)
        self.assertAlmostEqual(result.value, -1.0 / 3.0)
        self.assertEqual(result.S.to_list(), [1, 2, 0])
        self.assertAlmostEqual(involution_polar_value(fields, result.S), result.value)

    def test_exact_and_local_agree(self):
        """
        Test that local search finds the exact optimum on small seeded instances.
        """
        rng = np.random.default_rng(31)
        for trial in range(30):
            m = int(rng.integers(3, 6))
            order = int(rng.integers(2, 4))
            domain = DiscreteDomain(rng.standard_normal((m, 2)))
            fields = FieldTuple(domain, rng.standard_normal((order - 1, m, 2)))
            exact = solve_involution_polar(fields, METHOD_EXACT)
            local = solve_involution_polar(fields, METHOD_LOCAL, seed=trial)
            self.assertAlmostEqual(exact.value, local.value, places=9, msg=f"trial {trial}")

    def test_local_search_is_reproducible(self):
        """
        Test that the local search returns the same result for the same seed.
        """
        rng = np.random.default_rng(8)
        domain = DiscreteDomain(rng.standard_normal((6, 1)))
        fields = FieldTuple(domain, rng.standard_normal((1, 6, 1)))
        first = solve_involution_polar(fields, METHOD_LOCAL, seed=5, restarts=4)
        second = solve_involution_polar(fields, METHOD_LOCAL, seed=5, restarts=4)
        self.assertEqual(first.S.to_list(), second.S.to_list())
        self.assertEqual(first.evaluated, second.evaluated)

    def test_non_uniform_rejected(self):
        """
        Test that the involution problem rejects non-uniform weights.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]), np.array([0.25, 0.75]))
        with self.assertRaises(InvariantError):
            solve_involution_polar(FieldTuple.single(domain, domain.points, 2))

    def test_factorial_cap(self):
        """
        Test that exact search above the factorial cap raises SizeCapError.
        """
        domain = DiscreteDomain(np.arange(9.0))
        with self.assertRaises(SizeCapError):
            solve_involution_polar(FieldTuple.single(domain, domain.points, 2), METHOD_EXACT)

    def test_projection_zero_fields(self):
        """
        Test the projection objective of zero fields at the identity on {0, 1}.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        fields = FieldTuple(domain, np.zeros((2, 2, 1)))
        self.assertAlmostEqual(projection_objective(fields, NInvolution.identity(2, 3)), 1.0)

    def test_projection_expansion_and_polar(self):
        """
        Test the expanded square and projection(S) - projection(I) = 2 polar(S).
        """
        rng = np.random.default_rng(2)
        domain = DiscreteDomain(rng.standard_normal((4, 2)))
        fields = FieldTuple(domain, rng.standard_normal((2, 4, 2)))
        identity = NInvolution.identity(4, 3)
        for S in enumerate_involutions(4, 3):
            self.assertAlmostEqual(projection_objective(fields, S), projection_expansion(fields, S), places=10)
            self.assertAlmostEqual(projection_objective(fields, S) - projection_objective(fields, identity),
                                   2.0 * involution_polar_value(fields, S), places=10)


class TestDuality(unittest.TestCase):
    """
    Tests for the duality gap.
    """

    def test_zero(self):
        """
        Test that zero fields and H = 0 have gap 0 at the identity.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        H = GridHamiltonian(np.zeros((2, 2)), diagonal_zero=True, antisymmetric=True)
        self.assertEqual(duality_gap(FieldTuple(domain, np.zeros((1, 2, 1))), H, NInvolution.identity(2, 2)), 0.0)

    def test_needs_antisymmetric_claim(self):
        """
        Test that the gap refuses a Hamiltonian not claimed antisymmetric.
        """
        domain = DiscreteDomain(np.array([0.0, 1.0]))
        with self.assertRaises(InvariantError):
            duality_gap(FieldTuple(domain, np.zeros((1, 2, 1))), GridHamiltonian(np.zeros((2, 2))),
                        NInvolution.identity(2, 2))

    def test_weak_duality(self):
        """
        Test that the gap is nonnegative for random antisymmetric H and random involutions.
        """
        rng = np.random.default_rng(17)
        for trial in range(500):
            m = int(rng.integers(2, 5))
            order = int(rng.integers(2, 4))
            domain = DiscreteDomain(rng.standard_normal((m, 1)))
            fields = FieldTuple.single(domain, 2.0 * domain.points + 0.5, order)
            H = random_antisymmetric_basket(m, order, 1, seed=trial)[0]
            words = list(enumerate_involutions(m, order))
            S = words[int(rng.integers(len(words)))]
            self.assertGreaterEqual(duality_gap(fields, H, S), -1e-8, msg=f"trial {trial}")

    def test_polar_nesting(self):
        """
        Test that (N+1)-monotone planar gradient fields have nonnegative polar value at order N.
        """
        for trial in range(10):
            for order in (2, 3):
                fields = generate_example("gradient", m=5, d=2, order=order, seed=trial)
                report = check_polar_nesting(fields.domain, fields.field(1), order)
                self.assertTrue(report.monotone_next_order, msg=f"trial {trial} N={order}")
                self.assertTrue(report.holds, msg=f"trial {trial} N={order}")


if __name__ == '__main__':
    unittest.main()
