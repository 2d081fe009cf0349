"""
Lower convex envelopes of grid functions.

The envelope of g over a finite point set P at a query q is

    inf { sum_k lam_k g(p_k) : lam >= 0, sum_k lam_k = 1, sum_k lam_k p_k = q }

and is computed with one small LP per query. ``convexify_block`` applies it to a
GridHamiltonian along the first variable, or jointly along the last N-1 variables, for every
fixed value of the remaining ones.

Note:
    Convex combinations range over sample points only. Extreme points of a cloud admit only
    the trivial combination, so their envelope value is the function value and no LP is solved.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from MonoHam.core import (DiscreteDomain, GridHamiltonian, InvariantError, MonoHamError,
                          check_tensor_size)
from MonoHam.lp import DEFAULT_MAX_VARIABLES, LinearProgram, LPStatus, lp_solve

logger = logging.getLogger(__name__)

BLOCK_FIRST = "first"
BLOCK_LAST = "last_N_minus_1"
SIGN_CONVEXIFY = "convexify"
SIGN_CONCAVIFY = "concavify"

COEFFICIENT_TOL = 1e-12


class EnvelopeInfeasibleError(MonoHamError, ValueError):
    """The query point lies outside the convex hull of the samples."""


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    """Envelope value with the barycentric weights realising it."""
    value: float
    coefficients: np.ndarray
    support: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {"value": self.value, "coefficients": self.coefficients.tolist(), "support": list(self.support)}


def _envelope_program(points: np.ndarray, values: np.ndarray, query: np.ndarray) -> LinearProgram:
    k = points.shape[0]
    A = np.vstack([np.ones((1, k)), points.T])
    b = np.concatenate([[1.0], query])
    return LinearProgram(c=values, A_eq=A, b_eq=b)


def lower_convex_envelope(points, values, query, max_variables: int = DEFAULT_MAX_VARIABLES) -> EnvelopeResult:
    """Envelope of the samples (points[k], values[k]) at ``query``.

    Raises:
        EnvelopeInfeasibleError: ``query`` is outside the convex hull of ``points``.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    values = np.asarray(values, dtype=float).reshape(-1)
    query = np.asarray(query, dtype=float).reshape(-1)
    if values.shape[0] != points.shape[0]:
        raise InvariantError(f"{points.shape[0]} sample points but {values.shape[0]} values")
    if query.shape[0] != points.shape[1]:
        raise InvariantError(f"query has dimension {query.shape[0]}, samples have {points.shape[1]}")
    solution = lp_solve(_envelope_program(points, values, query), max_variables=max_variables)
    if solution.status is not LPStatus.OPTIMAL:
        raise EnvelopeInfeasibleError(f"query {query.tolist()} is outside the convex hull of the samples")
    lam = solution.x
    support = tuple(int(i) for i in np.nonzero(lam > COEFFICIENT_TOL)[0])
    coefficients = np.zeros_like(lam)
    coefficients[list(support)] = lam[list(support)]
    coefficients /= coefficients.sum()
    return EnvelopeResult(value=float(values @ coefficients), coefficients=coefficients, support=support)


@lru_cache(maxsize=64)
def extreme_points(domain: DiscreteDomain) -> np.ndarray:
    """Boolean mask of the vertices of the convex hull of the domain."""
    m = domain.m
    mask = np.ones(m, dtype=bool)
    if m <= 2:
        return mask
    points = domain.points
    for i in range(m):
        others = np.delete(points, i, axis=0)
        problem = _envelope_program(others, np.zeros(m - 1), points[i])
        mask[i] = lp_solve(problem).status is not LPStatus.OPTIMAL
    logger.debug("%d of %d domain points are extreme", int(mask.sum()), m)
    return mask


def _envelope_on_grid(points: np.ndarray, values: np.ndarray, extreme: np.ndarray, max_variables: int):
    """Envelope of ``values`` over ``points`` evaluated at each of the points."""
    out = values.copy()
    for q in np.nonzero(~extreme)[0]:
        solution = lp_solve(_envelope_program(points, values, points[q]), max_variables=max_variables)
        if solution.status is not LPStatus.OPTIMAL:
            raise EnvelopeInfeasibleError(f"grid point {q} not representable; the LP solver is inconsistent")
        out[q] = min(values[q], solution.objective)
    return out


def _tail_cloud(domain: DiscreteDomain, order: int):
    """Concatenated coordinates of every (N-1)-tuple of points, and its extreme-point mask."""
    tails = np.indices((domain.m,) * (order - 1)).reshape(order - 1, -1).T
    cloud = domain.points[tails].reshape(tails.shape[0], -1)
    extreme = np.all(extreme_points(domain)[tails], axis=1)
    return cloud, extreme


def convexify_block(H: GridHamiltonian, domain: DiscreteDomain, block: str = BLOCK_FIRST,
                    sign: str = SIGN_CONVEXIFY, cap: Optional[int] = None,
                    max_variables: int = DEFAULT_MAX_VARIABLES) -> GridHamiltonian:
    """Envelope of H in the chosen block of variables, evaluated at every grid tuple.

    ``concavify`` negates, convexifies and negates back. Identical slices share one solve.
    The result carries no property claims.
    """
    if sign not in (SIGN_CONVEXIFY, SIGN_CONCAVIFY):
        raise InvariantError(f"unknown sign {sign!r}")
    if H.m != domain.m:
        raise InvariantError(f"Hamiltonian is indexed by {H.m} points, domain has {domain.m}")
    order, m = H.order, H.m
    check_tensor_size(m, order, cap, what="envelope tensor")
    values = H.values if sign == SIGN_CONVEXIFY else -H.values

    if block == BLOCK_FIRST:
        slices = values.reshape(m, -1).T        # one row per tail, indexed by the first variable
        cloud, extreme = domain.points, extreme_points(domain)
    elif block == BLOCK_LAST:
        if order < 2:
            raise InvariantError("the last N-1 block needs N >= 2")
        slices = values.reshape(m, -1)          # one row per first index, indexed by the tail
        cloud, extreme = _tail_cloud(domain, order)
    else:
        raise InvariantError(f"unknown block {block!r}, expected {BLOCK_FIRST} or {BLOCK_LAST}")

    out = np.empty_like(slices)
    solved = {}
    for r, row in enumerate(slices):
        key = row.tobytes()
        if key not in solved:
            solved[key] = _envelope_on_grid(cloud, row, extreme, max_variables)
        out[r] = solved[key]
    logger.debug("%s envelope over block %s: %d distinct slices, %d LP queries each",
                 sign, block, len(solved), int((~extreme).sum()))

    if block == BLOCK_FIRST:
        out = out.T.reshape(values.shape)
    else:
        out = out.reshape(values.shape)
    if sign == SIGN_CONCAVIFY:
        out = -out
    return GridHamiltonian(out, tolerance=H.tolerance)
