"""
Sigma-invariant transport and N-involution problems for sampled field tuples.

For fields (u_1, ..., u_{N-1}) with start cost c(t) = sum_l <u_l(x_{t_1}), x_{t_1} - x_{t_{l+1}}>:

    solve_sigma_kantorovich   min_pi sum_t c(t) pi(t) over sigma-invariant pi with first marginal mu
    solve_involution_polar    min_S sum_i mu_i sum_l <u_l(x_i), x_i - x_{S^l i}> over S with S^N = I
    projection_objective      sum_l sum_i mu_i |u_l(x_i) - x_{S^l i}|^2
    duality_gap               int L_H(x, u(x)) dmu - sum_l int <u_l(x), x_{S^l x}> dmu

Note:
    Measure-preserving maps of a uniform cloud are exactly the permutations; the involution
    problems reject non-uniform weights.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from MonoHam.core import (CheckResult, DiscreteDomain, FieldTuple, GridHamiltonian, IndexCycle, InternalError,
                          InvariantError, NInvolution, SigmaCoupling, SizeCapError, check_tensor_size,
                          cycle_type, permutation_power, rotate_tensor)
from MonoHam.hamiltonian import antisymmetrize, legendre_transform
from MonoHam.lp import DEFAULT_MAX_VARIABLES, FEASIBILITY_TOL, PIVOT_TOL, LinearProgram, LPStatus, lp_solve
from MonoHam.monotonicity import (CycleWitness, METHOD_NEGATIVE_CYCLE, check_single, cost_tensor,
                                  cycle_defect)

logger = logging.getLogger(__name__)

METHOD_EXACT = "exact"
METHOD_LOCAL = "local"
FACTORIAL_CAP = 8
RESTARTS = 20
IMPROVE_TOL = 1e-12
TIE_RTOL = 1e-12
GRAPH_TOL = 1e-12
# largest one-move neighbourhood whose two-move expansion is still searched
TWO_MOVE_LIMIT = 200


@dataclass(frozen=True, eq=False)
class TransportResult:
    value: float
    coupling: SigmaCoupling
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "coupling": self.coupling.to_dict(), "diagnostics": self.diagnostics}


@dataclass(frozen=True, eq=False)
class InvolutionResult:
    value: float
    S: NInvolution
    method: str
    optimal: Optional[bool] = None
    evaluated: int = 0

    def to_dict(self) -> dict:
        out = {"value": self.value, "perm": self.S.to_list(), "cycle_type": list(cycle_type(self.S.perm)),
               "method": self.method, "evaluated": self.evaluated}
        if self.optimal is not None:
            out["optimal"] = self.optimal
        return out


# ---------------------------------------------------------------------------
# sigma-invariant Kantorovich problem
# ---------------------------------------------------------------------------

def sigma_orbits(m: int, order: int):
    """Index tuples, their sigma-orbit ids and orbit sizes, orbits numbered by smallest member."""
    tuples = np.indices((m,) * order).reshape(order, -1).T
    strides = m ** np.arange(order - 1, -1, -1)
    keys = np.stack([np.roll(tuples, -k, axis=1) @ strides for k in range(order)])
    _, orbit_id = np.unique(keys.min(axis=0), return_inverse=True)
    orbit_id = orbit_id.reshape(-1)
    return tuples, orbit_id, np.bincount(orbit_id)


def solve_sigma_kantorovich(fields: FieldTuple, cap: Optional[int] = None,
                            max_variables: int = DEFAULT_MAX_VARIABLES, feasibility_tol: float = FEASIBILITY_TOL,
                            pivot_tol: float = PIVOT_TOL) -> TransportResult:
    """Exact LP optimum with one variable per sigma-orbit (the orbit's total mass).

    Raises:
        SizeCapError: m^N or the orbit count exceeds its cap.
        InternalError: the LP reports an infeasible or unbounded problem.
    """
    m, order = fields.m, fields.order
    check_tensor_size(m, order, cap, what="coupling tensor")
    cost = cost_tensor(fields, cap).reshape(-1)
    tuples, orbit_id, size = sigma_orbits(m, order)
    n_orbits = size.shape[0]
    orbit_cost = np.bincount(orbit_id, weights=cost) / size
    A = np.zeros((m, n_orbits))
    np.add.at(A, (tuples[:, 0], orbit_id), 1.0 / size[orbit_id])
    solution = lp_solve(LinearProgram(c=orbit_cost, A_eq=A, b_eq=fields.domain.weights), max_variables=max_variables,
                        feasibility_tol=feasibility_tol, pivot_tol=pivot_tol)
    if solution.status is not LPStatus.OPTIMAL:
        raise InternalError(f"sigma-invariant LP reported {solution.status.value}; the diagonal is always feasible")
    tensor = (solution.x[orbit_id] / size[orbit_id]).reshape((m,) * order)
    coupling = SigmaCoupling(tensor, fields.domain)
    value = float(solution.objective)
    recomputed = coupling.integrate(cost.reshape((m,) * order))
    if abs(recomputed - value) > 1e-9 * (1.0 + abs(value)):
        raise InternalError(f"coupling objective {recomputed!r} differs from LP value {value!r}")
    logger.info("sigma-invariant LP: %d orbits, %d pivots, value %.6g", n_orbits, solution.iterations, value)
    return TransportResult(value, coupling, {"orbits": int(n_orbits), "pivots": solution.iterations,
                                             "support": len(list(coupling.support()))})


def diagonal_coupling(domain: DiscreteDomain, order: int) -> SigmaCoupling:
    """Push-forward of mu by x -> (x, ..., x)."""
    check_tensor_size(domain.m, order, what="coupling tensor")
    tensor = np.zeros((domain.m,) * order)
    idx = np.arange(domain.m)
    tensor[(idx,) * order] = domain.weights
    return SigmaCoupling(tensor, domain)


def graph_tensor(perm, domain: DiscreteDomain, order: int) -> np.ndarray:
    """Image of mu under x -> (x, Sx, ..., S^{N-1}x) for any self-map S of the indices."""
    perm = np.asarray(perm, dtype=int)
    check_tensor_size(domain.m, order, what="coupling tensor")
    tensor = np.zeros((domain.m,) * order)
    index = tuple(permutation_power(perm, k) for k in range(order))
    np.add.at(tensor, index, domain.weights)
    return tensor


def pushforward_coupling(S: NInvolution, domain: DiscreteDomain) -> SigmaCoupling:
    """Graph coupling of an N-involution; every cycle of S must carry equal weights."""
    if S.m != domain.m:
        raise InvariantError(f"involution acts on {S.m} points, domain has {domain.m}")
    weights = domain.weights
    if np.any(weights[S.perm] != weights):
        raise InvariantError("S moves mass between points of unequal weight; it does not preserve mu")
    return SigmaCoupling(graph_tensor(S.perm, domain, S.order), domain)


def violating_cycle_from_coupling(result: TransportResult, fields: FieldTuple,
                                  tolerance: float = 1e-9) -> Optional[CycleWitness]:
    """Most negative joint defect over the support of an LP optimum, or None."""
    best = None
    for t, _ in result.coupling.support(threshold=1e-14):
        defect = cycle_defect(fields, t)
        if best is None or defect < best[1]:
            best = (t, defect)
    if best is None or best[1] >= -tolerance:
        return None
    return CycleWitness(IndexCycle(best[0], fields.m), best[1], "joint")


# ---------------------------------------------------------------------------
# N-involutions
# ---------------------------------------------------------------------------

def _require_uniform(domain: DiscreteDomain, what: str):
    if not domain.is_uniform:
        raise InvariantError(f"{what} needs uniform weights; measure-preserving maps of a "
                             "non-uniform cloud are not permutations")


def involution_words(m: int, order: int, factorial_cap: int = FACTORIAL_CAP) -> np.ndarray:
    """All permutations of m points with S^N = I, one per row, in lexicographic order."""
    if m > factorial_cap:
        raise SizeCapError(f"exact involution search over {m}! permutations exceeds the cap m <= {factorial_cap}")
    perms = np.array(list(itertools.permutations(range(m))), dtype=int).reshape(-1, m)
    keep = np.all(permutation_power(perms, order) == np.arange(m), axis=1)
    return perms[keep]


def enumerate_involutions(m: int, order: int, factorial_cap: int = FACTORIAL_CAP) -> Iterator[NInvolution]:
    for word in involution_words(m, order, factorial_cap):
        yield NInvolution(word, order)


def _polar_values(fields: FieldTuple, perms: np.ndarray) -> np.ndarray:
    """Polar objective for a batch of permutations (one per row)."""
    perms = np.atleast_2d(perms)
    pairing = fields.pairing()
    weights = fields.domain.weights
    rows = np.arange(fields.m)
    total = np.zeros(perms.shape[0])
    for ell in range(1, fields.order):
        image = permutation_power(perms, ell)
        total = total + pairing[ell - 1][rows, image] @ weights
    return total


def involution_polar_value(fields: FieldTuple, S: NInvolution) -> float:
    """sum_i mu_i sum_l <u_l(x_i), x_i - x_{S^l i}>."""
    _require_uniform(fields.domain, "the involution polar value")
    if S.m != fields.m:
        raise InvariantError(f"involution acts on {S.m} points, fields on {fields.m}")
    return float(_polar_values(fields, S.perm[None, :])[0])


def _lexicographic_best(perms: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, float]:
    best = float(values.min())
    tied = perms[values <= best + TIE_RTOL * (1.0 + abs(best))]
    first = np.lexsort(tied.T[::-1])[0]
    return tied[first], best


def _divisors(order: int) -> List[int]:
    return [k for k in range(1, order + 1) if order % k == 0]


def _cycles(perm: np.ndarray) -> List[List[int]]:
    seen = np.zeros(perm.shape[0], dtype=bool)
    cycles = []
    for start in range(perm.shape[0]):
        if seen[start]:
            continue
        cycle, i = [], start
        while not seen[i]:
            seen[i] = True
            cycle.append(i)
            i = int(perm[i])
        cycles.append(cycle)
    return cycles


def _neighbours(perm: np.ndarray, order: int) -> np.ndarray:
    """Splice fixed points into a k-cycle (k | N), dissolve a cycle, or conjugate by a transposition."""
    m = perm.shape[0]
    moves = []
    cycles = _cycles(perm)
    fixed = [c[0] for c in cycles if len(c) == 1]
    for k in _divisors(order):
        if k < 2 or k > len(fixed):
            continue
        for chosen in itertools.combinations(fixed, k):
            for rest in itertools.permutations(chosen[1:]):
                ring = (chosen[0],) + rest
                new = perm.copy()
                for a, b in zip(ring, ring[1:] + ring[:1]):
                    new[a] = b
                moves.append(new)
    for cycle in cycles:
        if len(cycle) > 1:
            new = perm.copy()
            new[cycle] = cycle
            moves.append(new)
    for a, b in itertools.combinations(range(m), 2):
        swap = np.arange(m)
        swap[a], swap[b] = b, a
        new = swap[perm[swap]]
        if not np.array_equal(new, perm):
            moves.append(new)
    if not moves:
        return np.zeros((0, m), dtype=int)
    return np.unique(np.array(moves), axis=0)


def _random_involution(m: int, order: int, rng: np.random.Generator) -> np.ndarray:
    points = rng.permutation(m)
    lengths = _divisors(order)
    perm = np.arange(m)
    pos = 0
    while pos < m:
        k = int(rng.choice([k for k in lengths if k <= m - pos]))
        ring = points[pos:pos + k]
        perm[ring] = np.roll(ring, -1)
        pos += k
    return perm


def _descend(fields: FieldTuple, perm: np.ndarray) -> Tuple[np.ndarray, float, int]:
    """Steepest descent; when no single move improves, the two-move neighbourhood is tried."""
    order = fields.order
    current = float(_polar_values(fields, perm)[0])
    evaluated = 1
    while True:
        near = _neighbours(perm, order)
        if near.shape[0] == 0:
            return perm, current, evaluated
        values = _polar_values(fields, near)
        evaluated += near.shape[0]
        if values.min() < current - IMPROVE_TOL:
            perm, current = _lexicographic_best(near, values)
            continue
        if near.shape[0] > TWO_MOVE_LIMIT:
            return perm, current, evaluated
        far = np.unique(np.vstack([_neighbours(p, order) for p in near] + [near]), axis=0)
        values = _polar_values(fields, far)
        evaluated += far.shape[0]
        if values.min() < current - IMPROVE_TOL:
            perm, current = _lexicographic_best(far, values)
            continue
        return perm, current, evaluated


def solve_involution_polar(fields: FieldTuple, method: str = METHOD_EXACT, seed: int = 0,
                           restarts: int = RESTARTS, factorial_cap: int = FACTORIAL_CAP) -> InvolutionResult:
    """Minimise the polar objective over permutations S with S^N = I.

    ``exact`` enumerates every such permutation. ``local`` runs descent from the identity and
    ``restarts - 1`` random involutions drawn from ``numpy.random.default_rng(seed)``.
    """
    _require_uniform(fields.domain, "the involution polar problem")
    m, order = fields.m, fields.order
    if method == METHOD_EXACT:
        words = involution_words(m, order, factorial_cap)
        values = _polar_values(fields, words)
        perm, value = _lexicographic_best(words, values)
        return InvolutionResult(value, NInvolution(perm, order), METHOD_EXACT, optimal=True,
                                evaluated=int(words.shape[0]))
    if method != METHOD_LOCAL:
        raise InvariantError(f"unknown method {method!r}, expected {METHOD_EXACT} or {METHOD_LOCAL}")
    rng = np.random.default_rng(seed)
    starts = [np.arange(m)] + [_random_involution(m, order, rng) for _ in range(max(restarts, 1) - 1)]
    finals, values, evaluated = [], [], 0
    for start in starts:
        perm, value, count = _descend(fields, start)
        finals.append(perm)
        values.append(value)
        evaluated += count
    perm, value = _lexicographic_best(np.array(finals), np.array(values))
    logger.debug("local involution search: %d restarts, %d evaluations", len(starts), evaluated)
    return InvolutionResult(value, NInvolution(perm, order), METHOD_LOCAL, evaluated=evaluated)


def projection_objective(fields: FieldTuple, S: NInvolution) -> float:
    """sum_l sum_i mu_i |u_l(x_i) - x_{S^l i}|^2."""
    _require_uniform(fields.domain, "the projection objective")
    points, weights = fields.domain.points, fields.domain.weights
    total = 0.0
    for ell in range(1, fields.order):
        diff = fields.values[ell - 1] - points[S.power(ell)]
        total += float(np.sum(diff * diff, axis=1) @ weights)
    return total


def projection_expansion(fields: FieldTuple, S: NInvolution) -> float:
    """The expanded square: sum |u_l|^2 - 2 sum <u_l, x_{S^l}> + (N-1) int |x|^2."""
    _require_uniform(fields.domain, "the projection objective")
    points, weights = fields.domain.points, fields.domain.weights
    norms = np.einsum("lid,lid->li", fields.values, fields.values) @ weights
    cross = sum(np.einsum("id,id->i", fields.values[ell - 1], points[S.power(ell)]) @ weights
                for ell in range(1, fields.order))
    return float(norms.sum() - 2.0 * cross + (fields.order - 1) * (np.einsum("id,id->i", points, points) @ weights))


def duality_gap(fields: FieldTuple, H: GridHamiltonian, S: NInvolution) -> float:
    """int L_H(x, u(x)) dmu - sum_l int <u_l(x), x_{S^l x}> dmu; nonnegative by weak duality."""
    if not H.antisymmetric:
        raise InvariantError("duality_gap needs a Hamiltonian claimed N-antisymmetric")
    if not S.is_identity():
        _require_uniform(fields.domain, "a non-identity involution")
    domain, weights = fields.domain, fields.domain.weights
    L = np.array([legendre_transform(H, domain, i, fields.values[:, i, :]).value for i in range(fields.m)])
    paired = sum(np.einsum("id,id->i", fields.values[ell - 1], domain.points[S.power(ell)])
                 for ell in range(1, fields.order))
    return float(L @ weights - paired @ weights)


# ---------------------------------------------------------------------------
# graph couplings
# ---------------------------------------------------------------------------

def random_antisymmetric_basket(m: int, order: int, size: int, seed: int = 0) -> List[GridHamiltonian]:
    """Antisymmetrised standard-normal tensors."""
    check_tensor_size(m, order, what="test Hamiltonian")
    rng = np.random.default_rng(seed)
    return [antisymmetrize(GridHamiltonian(rng.standard_normal((m,) * order))) for _ in range(size)]


def abs_value_hamiltonian(perm, domain: DiscreteDomain, order: int) -> np.ndarray:
    """|t_1 - S t_N| - |S t_1 - t_2| - |t_2 - S t_1| + |S t_2 - t_3|, positions mod N.

    N-antisymmetric for every map S; along the graph of S it equals |x - S^N x|.
    """
    perm = np.asarray(perm, dtype=int)
    points = domain.points
    m = domain.m
    # D[a, b] = |x_a - x_{S b}|
    D = np.linalg.norm(points[:, None, :] - points[perm][None, :, :], axis=2)

    def place(block, a, b):
        shape = [1] * order
        shape[a] = m
        if a == b:
            return np.diagonal(block).reshape(shape)
        shape[b] = m
        return (block if a < b else block.T).reshape(shape)

    last, second, third = order - 1, 1 % order, 2 % order
    total = place(D, 0, last) - place(D.T, 0, second) - place(D.T, 0, second) + place(D.T, second, third)
    return np.broadcast_to(total, (m,) * order).copy()


@dataclass(frozen=True)
class GraphLemmaReport:
    """Which of the three equivalent graph conditions hold for a map S."""
    sigma_invariant: bool
    measure_preserving: bool
    power_is_identity: bool
    antisymmetric_integrals_vanish: bool
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def condition_coupling(self) -> bool:
        return self.sigma_invariant

    @property
    def condition_involution(self) -> bool:
        return self.measure_preserving and self.power_is_identity

    @property
    def condition_integrals(self) -> bool:
        return self.antisymmetric_integrals_vanish

    @property
    def consistent(self) -> bool:
        return self.condition_coupling == self.condition_involution == self.condition_integrals

    def to_dict(self) -> dict:
        return {"coupling": self.condition_coupling, "involution": self.condition_involution,
                "integrals": self.condition_integrals, "consistent": self.consistent,
                "checks": [check.to_dict() for check in self.checks]}


def verify_graph_lemma(perm, domain: DiscreteDomain, order: int, basket_size: int = 5, seed: int = 0,
                       tolerance: float = GRAPH_TOL) -> GraphLemmaReport:
    """Evaluate the three graph conditions for an arbitrary self-map ``perm`` of the indices."""
    perm = np.asarray(perm, dtype=int).reshape(-1)
    m, weights = domain.m, domain.weights
    if perm.shape[0] != m or np.any(perm < 0) or np.any(perm >= m):
        raise InvariantError(f"perm must map {{0..{m - 1}}} into itself")
    op = "verify_graph_lemma"
    pi = graph_tensor(perm, domain, order)
    asym = float(np.abs(rotate_tensor(pi, 1) - pi).max())

    image = np.bincount(perm, weights=weights, minlength=m)
    transported = float(np.abs(image - weights).max())
    power = permutation_power(perm, order)
    power_identity = bool(np.array_equal(power, np.arange(m)))

    # H = 1_k(t_1) - 1_k(t_j): integrates to mu_k - ((S^{j-1})_# mu)_k
    indicator = 0.0
    for j in range(1, order):
        pushed = np.bincount(permutation_power(perm, j), weights=weights, minlength=m)
        indicator = max(indicator, float(np.abs(weights - pushed).max()))
    abs_integral = float(np.sum(pi * abs_value_hamiltonian(perm, domain, order)))
    basket = max((abs(float(np.sum(pi * H.values))) for H in random_antisymmetric_basket(m, order, basket_size, seed)),
                 default=0.0)
    integrals_vanish = indicator <= tolerance and abs(abs_integral) <= tolerance and basket <= 1e-9
    checks = [CheckResult("sigma_invariance", asym <= tolerance, asym, operation=op),
              CheckResult("measure_preserving", transported <= tolerance, transported, operation=op),
              CheckResult("power_identity", power_identity, 0.0, operation=op),
              CheckResult("indicator_family", indicator <= tolerance, indicator, operation=op),
              CheckResult("abs_value_hamiltonian", abs(abs_integral) <= tolerance, abs_integral, operation=op),
              CheckResult("antisymmetric_basket", basket <= 1e-9, basket, operation=op)]
    return GraphLemmaReport(sigma_invariant=asym <= tolerance, measure_preserving=transported <= tolerance,
                            power_is_identity=power_identity, antisymmetric_integrals_vanish=integrals_vanish,
                            checks=checks)


# ---------------------------------------------------------------------------
# polar nesting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NestingReport:
    order: int
    monotone_next_order: bool
    polar_value: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return (not self.monotone_next_order) or self.polar_value >= -self.tolerance

    def to_dict(self) -> dict:
        return {"order": self.order, "monotone_next_order": self.monotone_next_order,
                "polar_value": self.polar_value, "holds": self.holds}


def check_polar_nesting(domain: DiscreteDomain, u, order: int, tolerance: float = 1e-8,
                        factorial_cap: int = FACTORIAL_CAP, seed: int = 0) -> NestingReport:
    """(N+1)-cyclic monotonicity of u against its involution-polar value at order N."""
    outcome = check_single(domain, u, order + 1, method=METHOD_NEGATIVE_CYCLE)
    fields = FieldTuple.single(domain, u, order)
    method = METHOD_EXACT if domain.m <= factorial_cap else METHOD_LOCAL
    result = solve_involution_polar(fields, method=method, seed=seed, factorial_cap=factorial_cap)
    return NestingReport(order, outcome.passed, result.value, tolerance)
