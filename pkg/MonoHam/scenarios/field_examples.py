"""
Synthetic field tuples for experiments and tests.

Kinds:
    gradient         (u, 0, ..., 0), u a subgradient selection of a random convex piecewise-linear function
    random_monotone  every slot a gradient of its own convex quadratic-plus-piecewise-linear function
    rotation         (u, 0, ..., 0) with u(x) = (-x2, x1) in the plane
    triplet4         (u1, u2, u3) with u2 a gradient and <u1(x) - u3(y), x - y> >= 0 on all sample pairs
    random           i.i.d. uniform entries in [-1, 1]

Example:
    >>> fields = generate_example("gradient", m=4, d=1, order=3, seed=7)
"""

import logging
from typing import Optional

import numpy as np

from MonoHam.core import DiscreteDomain, FieldTuple, InternalError, InvariantError
from MonoHam.monotonicity import check_joint

logger = logging.getLogger(__name__)

KINDS = ("gradient", "random_monotone", "rotation", "triplet4", "random")
LAYOUTS = ("random", "grid")
TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def sample_points(m: int, d: int, rng: np.random.Generator, layout: str = "random") -> np.ndarray:
    if layout == "grid":
        side = int(round(m ** (1.0 / d)))
        if side ** d != m or side < 2:
            raise InvariantError(f"a regular grid needs m = k^d with k >= 2, got m={m}, d={d}")
        axis = np.linspace(-1.0, 1.0, side)
        return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(m, d)
    if layout != "random":
        raise InvariantError(f"unknown layout {layout!r}, expected one of {LAYOUTS}")
    return rng.uniform(-1.0, 1.0, size=(m, d))


def piecewise_linear_gradient(points: np.ndarray, rng: np.random.Generator,
                              pieces: Optional[int] = None) -> np.ndarray:
    """Active slope of phi(x) = max_k <a_k, x> + b_k at each point (first maximiser on ties)."""
    d = points.shape[1]
    pieces = pieces or 2 * d + 1
    slopes = rng.standard_normal((pieces, d))
    offsets = rng.standard_normal(pieces)
    active = np.argmax(points @ slopes.T + offsets, axis=1)
    return slopes[active]


def quadratic_gradient(points: np.ndarray, rng: np.random.Generator, kappa: float = 0.0) -> np.ndarray:
    """Gradient of x -> <x, Q x> / 2 with Q = B B^T + kappa I."""
    d = points.shape[1]
    B = rng.standard_normal((d, d))
    Q = B @ B.T + kappa * np.eye(d)
    return points @ Q


def _min_distance(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return 1.0
    gaps = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    return float(gaps[~np.eye(points.shape[0], dtype=bool)].min())


def generate_example(kind: str, m: int, d: int = 1, order: int = 3, seed: int = 0,
                     layout: str = "random") -> FieldTuple:
    """Deterministic example of the given kind (see the module docstring)."""
    if kind not in KINDS:
        raise InvariantError(f"unknown example kind {kind!r}, expected one of {KINDS}")
    if m < 1 or d < 1 or order < 2:
        raise InvariantError(f"need m >= 1, d >= 1 and order >= 2, got m={m}, d={d}, order={order}")
    rng = np.random.default_rng(seed)
    values = np.zeros((order - 1, m, d))

    if kind == "rotation":
        if d != 2 or m < 3:
            raise InvariantError("the rotation example lives in the plane (d = 2) and needs m >= 3")
        points = np.vstack([TRIANGLE, rng.uniform(-1.0, 1.0, size=(m - 3, 2))])
        values[0] = np.stack([-points[:, 1], points[:, 0]], axis=1)
        return FieldTuple(DiscreteDomain(points), values)

    points = sample_points(m, d, rng, layout)
    domain = DiscreteDomain(points)
    if kind == "gradient":
        values[0] = piecewise_linear_gradient(points, rng)
    elif kind == "random_monotone":
        for ell in range(order - 1):
            values[ell] = quadratic_gradient(points, rng) + piecewise_linear_gradient(points, rng)
    elif kind == "random":
        values = rng.uniform(-1.0, 1.0, size=values.shape)
    elif kind == "triplet4":
        if order != 4:
            raise InvariantError(f"the triplet example has order 4, got {order}")
        kappa = 1.0
        base = quadratic_gradient(points, rng, kappa=kappa) + piecewise_linear_gradient(points, rng)
        shift = rng.standard_normal((m, d))
        norms = np.linalg.norm(shift, axis=1, keepdims=True)
        shift = shift / np.maximum(norms, 1e-12) * rng.uniform(0.0, 1.0, size=(m, 1))
        shift *= 0.5 * kappa * _min_distance(points)
        values[0] = base + shift
        values[1] = piecewise_linear_gradient(points, rng)
        values[2] = base - shift

    fields = FieldTuple(domain, values)
    if kind == "triplet4" and not check_joint(fields).passed:
        raise InternalError("generated triplet is not jointly 4-monotone")
    logger.debug("generated %s example: m=%d d=%d order=%d seed=%d", kind, m, d, order, seed)
    return fields
