"""
Cycle defects and monotonicity checks for sampled vector fields.

A FieldTuple (u_1, ..., u_{N-1}) is jointly N-monotone on the sample when every index cycle
t = (t_1, ..., t_N), repetitions allowed, has a nonnegative defect

    sum_i sum_l <u_l(x_{t_i}), x_{t_i} - x_{t_{i+l}}>      (indices mod N).

Single fields are checked with l fixed: l = 1 is N-cyclic monotonicity, general l the step-l
variant. Every check returns either a ``Pass`` or a ``CycleWitness`` carrying the
lexicographically first tuple that attains the minimum defect.

Usage:
    >>> result = check_single(domain, u, order=3)
    >>> if not result.passed:
    ...     print(result.cycle.to_list(), result.defect)
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from MonoHam.core import (DEFAULT_TOLERANCE, DiscreteDomain, FieldTuple, IndexCycle, InvariantError,
                          SizeCapError, check_tensor_size, pairing_matrix, rotation_sum)

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 10**7
# relative slack when collecting tuples tied at the minimum defect
TIE_RTOL = 1e-12

METHOD_ENUMERATE = "enumerate"
METHOD_NEGATIVE_CYCLE = "negative_cycle"


@dataclass(frozen=True)
class Pass:
    """No cycle with defect below -tolerance exists. ``min_defect`` is the smallest defect seen."""
    kind: str
    min_defect: float = 0.0

    @property
    def passed(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"passed": True, "kind": self.kind, "min_defect": float(self.min_defect)}


@dataclass(frozen=True)
class CycleWitness:
    """A violating cycle. ``kind`` is ``single``, ``joint`` or ``step-<l>``."""
    cycle: IndexCycle
    defect: float
    kind: str

    @property
    def passed(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"passed": False, "cycle": self.cycle.to_list(), "defect": float(self.defect), "kind": self.kind}


CheckOutcome = Union[Pass, CycleWitness]


def _as_cycle(cycle, m: int) -> IndexCycle:
    if isinstance(cycle, IndexCycle):
        return cycle
    return IndexCycle(tuple(cycle), m)


def _as_field(domain: DiscreteDomain, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape == (domain.m,) and domain.dimension == 1:
        u = u.reshape(-1, 1)
    if u.shape != (domain.m, domain.dimension):
        raise InvariantError(f"field must have shape ({domain.m}, {domain.dimension}), got {u.shape}")
    if not np.all(np.isfinite(u)):
        raise InvariantError("all field entries must be finite")
    return u


def _check_step_range(order: int, step: int):
    if order < 2:
        raise InvariantError(f"order must be >= 2, got {order}")
    if not 1 <= step <= order - 1:
        raise InvariantError(f"step must lie in 1..{order - 1}, got {step}")


# ---------------------------------------------------------------------------
# scalar defects
# ---------------------------------------------------------------------------

def cycle_defect(fields: FieldTuple, cycle) -> float:
    """Joint cycle sum, accumulated in (i, l) lexicographic order."""
    cycle = _as_cycle(cycle, fields.m)
    if cycle.order != fields.order:
        raise InvariantError(f"cycle has length {cycle.order}, fields have order {fields.order}")
    points = fields.domain.points
    total = 0.0
    for i in range(cycle.order):
        a = cycle.at(i)
        for ell in range(1, fields.order):
            b = cycle.at(i + ell)
            total += float(np.dot(fields.values[ell - 1, a], points[a] - points[b]))
    return total


def start_cost(fields: FieldTuple, cycle) -> float:
    """f(t) = sum_l <u_l(x_{t_1}), x_{t_1} - x_{t_{l+1}}>, the cost seen from the first point."""
    cycle = _as_cycle(cycle, fields.m)
    points = fields.domain.points
    a = cycle.at(0)
    total = 0.0
    for ell in range(1, fields.order):
        total += float(np.dot(fields.values[ell - 1, a], points[a] - points[cycle.at(ell)]))
    return total


def cycle_defect_symmetrized(fields: FieldTuple, cycle) -> float:
    """N times the average of the start cost over the N rotations of ``cycle``."""
    cycle = _as_cycle(cycle, fields.m)
    if cycle.order != fields.order:
        raise InvariantError(f"cycle has length {cycle.order}, fields have order {fields.order}")
    costs = [start_cost(fields, cycle.rotated(k)) for k in range(cycle.order)]
    return cycle.order * float(np.mean(costs))


def single_cycle_defect(domain: DiscreteDomain, u, cycle, step: int = 1) -> float:
    """sum_i <u(x_i), x_i - x_{i+step}> around ``cycle`` with wraparound."""
    u = _as_field(domain, u)
    cycle = _as_cycle(cycle, domain.m)
    _check_step_range(cycle.order, step)
    points = domain.points
    total = 0.0
    for i in range(cycle.order):
        a, b = cycle.at(i), cycle.at(i + step)
        total += float(np.dot(u[a], points[a] - points[b]))
    return total


# ---------------------------------------------------------------------------
# dense defect tensors
# ---------------------------------------------------------------------------

def cost_tensor(fields: FieldTuple, cap: Optional[int] = None) -> np.ndarray:
    """Tensor of start costs f(t) over all index N-tuples."""
    m, order = fields.m, fields.order
    check_tensor_size(m, order, cap, what="cost tensor")
    pairing = fields.pairing()
    f = np.zeros((m,) * order)
    for ell in range(1, order):
        shape = [1] * order
        shape[0] = m
        shape[ell] = m
        f = f + pairing[ell - 1].reshape(shape)
    return f


def joint_defect_tensor(fields: FieldTuple, cap: Optional[int] = None) -> np.ndarray:
    """Defect of every tuple, computed as sum_k f o sigma^k."""
    return rotation_sum(cost_tensor(fields, cap))


def step_defect_tensor(domain: DiscreteDomain, u, order: int, step: int = 1,
                       cap: Optional[int] = None) -> np.ndarray:
    u = _as_field(domain, u)
    _check_step_range(order, step)
    m = domain.m
    check_tensor_size(m, order, cap, what="defect tensor")
    pairing = pairing_matrix(domain.points, u)
    total = np.zeros((m,) * order)
    for i in range(order):
        j = (i + step) % order
        shape = [1] * order
        shape[i] = m
        shape[j] = m
        block = pairing if i < j else pairing.T
        total = total + block.reshape(shape)
    return total


def _first_minimum(defects: np.ndarray):
    """Lexicographically first tuple among those tied at the minimum."""
    best = float(defects.min())
    tied = np.flatnonzero(defects.reshape(-1) <= best + TIE_RTOL * (1.0 + abs(best)))
    return np.unravel_index(int(tied[0]), defects.shape), best


def _outcome_from_tensor(defects: np.ndarray, tolerance: float, kind: str, recompute) -> CheckOutcome:
    t, best = _first_minimum(defects)
    if best >= -tolerance:
        return Pass(kind=kind, min_defect=best)
    cycle = IndexCycle(tuple(int(i) for i in t), defects.shape[0])
    defect = recompute(cycle)
    logger.debug("%s witness %s with defect %.6g", kind, cycle.to_list(), defect)
    return CycleWitness(cycle=cycle, defect=defect, kind=kind)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_joint(fields: FieldTuple, tolerance: float = DEFAULT_TOLERANCE,
                cap: Optional[int] = DEFAULT_ENUMERATION_CAP) -> CheckOutcome:
    """Exhaustive joint N-monotonicity check over all index N-tuples."""
    defects = joint_defect_tensor(fields, cap)
    return _outcome_from_tensor(defects, tolerance, "joint", lambda c: cycle_defect(fields, c))


def check_step(domain: DiscreteDomain, u, order: int, step: int, tolerance: float = DEFAULT_TOLERANCE,
               cap: Optional[int] = DEFAULT_ENUMERATION_CAP) -> CheckOutcome:
    """(N, step)-monotonicity of one field by enumeration of all index N-tuples."""
    defects = step_defect_tensor(domain, u, order, step, cap)
    return _outcome_from_tensor(defects, tolerance, f"step-{step}",
                                lambda c: single_cycle_defect(domain, u, c, step))


def min_closed_walk(cost: np.ndarray, depth: int):
    """Cheapest closed walk with at most ``depth`` edges in the complete digraph ``cost``.

    Min-plus dynamic programme: dist_k[s, v] is the cheapest k-edge walk s -> v. Returns
    (value, walk) where ``walk`` lists the visited nodes, the closing edge being implied.
    Ties prefer fewer edges, then the smaller start node.
    """
    m = cost.shape[0]
    best_value, best_len, best_start = 0.0, 1, 0  # self-loops cost exactly 0
    dist = cost.copy()
    preds = {}
    for k in range(2, depth + 1):
        candidates = dist[:, :, None] + cost[None, :, :]
        pred = candidates.argmin(axis=1)
        dist = np.take_along_axis(candidates, pred[:, None, :], axis=1)[:, 0, :]
        preds[k] = pred
        closed = np.diagonal(dist)
        s = int(np.argmin(closed))
        if closed[s] < best_value:
            best_value, best_len, best_start = float(closed[s]), k, s
    if best_len == 1:
        return best_value, [best_start]
    walk = [best_start]
    node = best_start
    for k in range(best_len, 1, -1):
        node = int(preds[k][best_start, node])
        walk.append(node)
    walk.append(best_start)
    walk.reverse()
    return best_value, walk[:-1]


def _check_walk_size(m: int, depth: int, cap: Optional[int]):
    work = m**3
    if cap is not None and work > cap:
        raise SizeCapError(f"shortest-walk programme needs m^3 = {work} entries per step, cap is {cap}")
    logger.debug("closed-walk programme on %d nodes to depth %d", m, depth)


def check_single(domain: DiscreteDomain, u, order: int, tolerance: float = DEFAULT_TOLERANCE,
                 method: str = METHOD_ENUMERATE,
                 cap: Optional[int] = DEFAULT_ENUMERATION_CAP) -> CheckOutcome:
    """N-cyclic monotonicity of one field.

    ``enumerate`` scans all index N-tuples. ``negative_cycle`` searches closed walks of at most
    N edges in the graph c(i -> j) = <u(x_i), x_i - x_j>; a shorter walk is padded to length N
    by staying at its start point, which costs nothing.
    """
    if method == METHOD_ENUMERATE:
        outcome = check_step(domain, u, order, 1, tolerance, cap)
        if isinstance(outcome, CycleWitness):
            return CycleWitness(outcome.cycle, outcome.defect, "single")
        return Pass(kind="single", min_defect=outcome.min_defect)
    if method != METHOD_NEGATIVE_CYCLE:
        raise InvariantError(f"unknown method {method!r}, expected {METHOD_ENUMERATE} or {METHOD_NEGATIVE_CYCLE}")
    u = _as_field(domain, u)
    _check_step_range(order, 1)
    _check_walk_size(domain.m, order, cap)
    value, walk = min_closed_walk(pairing_matrix(domain.points, u), order)
    if value >= -tolerance:
        return Pass(kind="single", min_defect=value)
    padded = walk + [walk[0]] * (order - len(walk))
    cycle = IndexCycle(tuple(padded), domain.m)
    return CycleWitness(cycle=cycle, defect=single_cycle_defect(domain, u, cycle), kind="single")


def check_all_orders(domain: DiscreteDomain, u, tolerance: float = DEFAULT_TOLERANCE,
                     cap: Optional[int] = DEFAULT_ENUMERATION_CAP) -> CheckOutcome:
    """Cyclic monotonicity for every N at once: no negative cycle in the cost graph.

    Any negative closed walk contains a negative simple cycle, so depth m suffices.
    The witness is the cheapest closed walk found, of its own length.

    Raises:
        SizeCapError: m^3 exceeds ``cap``; the walk programme is cubic in m at every depth.
    """
    u = _as_field(domain, u)
    m = domain.m
    if m < 2:
        return Pass(kind="single", min_defect=0.0)
    _check_walk_size(m, m, cap)
    value, walk = min_closed_walk(pairing_matrix(domain.points, u), m)
    if value >= -tolerance:
        return Pass(kind="single", min_defect=value)
    cycle = IndexCycle(tuple(walk), m)
    return CycleWitness(cycle=cycle, defect=single_cycle_defect(domain, u, cycle), kind="single")
