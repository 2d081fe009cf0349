"""
Core domain types shared by every MonoHam module.

A sampled problem lives on a finite weighted point cloud (``DiscreteDomain``) carrying
``N-1`` vector fields (``FieldTuple``). Functions on N-tuples of domain indices are dense
numpy tensors of shape ``(m,)*N`` (``GridHamiltonian``, ``SigmaCoupling``), and the cyclic
shift sigma acts on them by rotating tensor axes.

Note:
    Index tuples are 0-based. Tensors are laid out row-major, so ``np.argmin`` on a
    flattened tensor returns the lexicographically smallest index tuple.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_TENSOR_CAP = 10**7
TENSOR_CAP_ENV = "MONOHAM_TENSOR_CAP"
DEFAULT_TOLERANCE = 1e-9
WEIGHT_SUM_TOL = 1e-12
COUPLING_MASS_TOL = 1e-10
COUPLING_SYMMETRY_TOL = 1e-12


class MonoHamError(Exception):
    """Base class of every error raised by MonoHam."""


class InvariantError(MonoHamError, ValueError):
    """A domain type was constructed with data violating one of its invariants."""


class SizeCapError(MonoHamError, ValueError):
    """A dense tensor, enumeration or LP would exceed its configured cap."""


class InputFormatError(MonoHamError, ValueError):
    """An input file or dictionary does not follow the documented schema."""


class InternalError(MonoHamError):
    """A property guaranteed by the theory failed: this is a bug, not a data condition."""


def tensor_cap(cap: Optional[int] = None) -> int:
    """Return the dense tensor cap: explicit value, else environment override, else default."""
    if cap is not None:
        return int(cap)
    env_value = os.environ.get(TENSOR_CAP_ENV)
    if env_value:
        try:
            return int(float(env_value))
        except ValueError as exc:
            raise InputFormatError(f"{TENSOR_CAP_ENV}={env_value!r} is not a number") from exc
    return DEFAULT_TENSOR_CAP


def check_tensor_size(m: int, order: int, cap: Optional[int] = None, what: str = "tensor") -> int:
    """Raise SizeCapError unless m**order fits under the cap; return the entry count."""
    size = int(m) ** int(order)
    limit = tensor_cap(cap)
    if size > limit:
        raise SizeCapError(f"{what} needs m^N = {m}^{order} = {size} entries, cap is {limit}")
    return size


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


# ---------------------------------------------------------------------------
# sigma and tensor rotations
# ---------------------------------------------------------------------------

def apply_sigma(t: Sequence[int]) -> Tuple[int, ...]:
    """The cyclic shift sigma(t1, t2, ..., tN) = (t2, ..., tN, t1)."""
    t = tuple(int(i) for i in t)
    if not t:
        return t
    return t[1:] + t[:1]


def apply_sigma_power(t: Sequence[int], k: int) -> Tuple[int, ...]:
    t = tuple(int(i) for i in t)
    if not t:
        return t
    k %= len(t)
    return t[k:] + t[:k]


def rotate_tensor(values: np.ndarray, k: int = 1) -> np.ndarray:
    """Return the tensor t -> values[sigma^k(t)].

    Axis j of the result reads axis (j - k) mod N of ``values``.
    """
    order = values.ndim
    k %= order
    if k == 0:
        return values
    axes = [(j - k) % order for j in range(order)]
    return np.transpose(values, axes)


def rotation_sum(values: np.ndarray, start: int = 0) -> np.ndarray:
    """Sum of ``values o sigma^k`` for k = start .. N-1, accumulated in increasing k."""
    total = np.zeros_like(values, dtype=float)
    for k in range(start, values.ndim):
        total = total + rotate_tensor(values, k)
    return total


def diagonal_index(m: int, order: int) -> Tuple[np.ndarray, ...]:
    """Fancy index selecting the diagonal entries (i, i, ..., i)."""
    idx = np.arange(m)
    return (idx,) * order


# ---------------------------------------------------------------------------
# domain and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    """Finite point cloud in d dimensions with probability weights."""
    points: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2 or points.shape[0] < 1 or points.shape[1] < 1:
            raise InvariantError(f"points must be an m x d array with m, d >= 1, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise InvariantError("all point coordinates must be finite")
        m = points.shape[0]
        if m > 1:
            order = np.lexsort(points.T[::-1])
            sorted_points = points[order]
            if np.any(np.all(sorted_points[1:] == sorted_points[:-1], axis=1)):
                raise InvariantError("domain points must be pairwise distinct")
        if self.weights is None:
            weights = np.full(m, 1.0 / m)
        else:
            weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape != (m,):
            raise InvariantError(f"expected {m} weights, got {weights.shape[0]}")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvariantError("weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise InvariantError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {weights.sum()!r}")
        object.__setattr__(self, "points", _readonly(points))
        object.__setattr__(self, "weights", _readonly(weights))

    @classmethod
    def uniform(cls, points) -> "DiscreteDomain":
        return cls(points=points)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def gram(self) -> np.ndarray:
        """Matrix of inner products <x_i, x_j>."""
        return self.points @ self.points.T

    def to_dict(self) -> dict:
        return {"dimension": self.dimension,
                "points": self.points.tolist(),
                "weights": self.weights.tolist()}

    def __repr__(self):
        return f"DiscreteDomain(m={self.m}, d={self.dimension}, uniform={self.is_uniform})"


@dataclass(frozen=True, eq=False)
class FieldTuple:
    """The N-1 sampled vector fields: ``values[l][i] = u_{l+1}(x_i)``."""
    domain: DiscreteDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        m, d = self.domain.m, self.domain.dimension
        if values.ndim == 2 and values.shape == (m, d):
            values = values[None, :, :]
        if values.ndim != 3 or values.shape[1:] != (m, d) or values.shape[0] < 1:
            raise InvariantError(f"field values must have shape (N-1, {m}, {d}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvariantError("all field entries must be finite")
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def single(cls, domain: DiscreteDomain, u, order: int) -> "FieldTuple":
        """The (N-1)-tuple (u, 0, ..., 0) used for a single N-monotone field."""
        if order < 2:
            raise InvariantError(f"order must be >= 2, got {order}")
        u = np.asarray(u, dtype=float).reshape(domain.m, domain.dimension)
        values = np.zeros((order - 1, domain.m, domain.dimension))
        values[0] = u
        return cls(domain, values)

    @property
    def order(self) -> int:
        return self.values.shape[0] + 1

    @property
    def m(self) -> int:
        return self.domain.m

    def field(self, ell: int) -> np.ndarray:
        """The sampled field u_ell (1-based, as in the cycle sums)."""
        if not 1 <= ell <= self.order - 1:
            raise IndexError(f"field index must lie in 1..{self.order - 1}, got {ell}")
        return self.values[ell - 1]

    def pairing(self) -> np.ndarray:
        """Array G[l, i, j] = <u_{l+1}(x_i), x_i - x_j>; G[l, i, i] is exactly 0."""
        return pairing_matrix(self.domain.points, self.values)

    def to_dict(self) -> dict:
        out = self.domain.to_dict()
        out["order"] = self.order
        out["fields"] = self.values.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "FieldTuple":
        """Parse the ``{"dimension", "order", "points", "weights"?, "fields"}`` input schema."""
        try:
            points = np.asarray(data["points"], dtype=float)
            order = int(data["order"])
            fields = np.asarray(data["fields"], dtype=float)
        except KeyError as exc:
            raise InputFormatError(f"missing key {exc.args[0]!r} in fields input") from exc
        except (TypeError, ValueError) as exc:
            raise InputFormatError(f"fields input is not numeric: {exc}") from exc
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        dimension = int(data.get("dimension", points.shape[1] if points.ndim == 2 else 1))
        if points.ndim != 2 or points.shape[1] != dimension:
            raise InputFormatError(f"points do not have dimension {dimension}")
        if order < 2:
            raise InputFormatError(f"order must be >= 2, got {order}")
        if fields.ndim == 2 and dimension == 1 and fields.shape[1] == points.shape[0]:
            fields = fields[:, :, None]
        if fields.shape != (order - 1, points.shape[0], dimension):
            raise InputFormatError(
                f"fields must have shape ({order - 1}, {points.shape[0]}, {dimension}), got {fields.shape}")
        domain = DiscreteDomain(points, data.get("weights"))
        return cls(domain, fields)

    def __repr__(self):
        return f"FieldTuple(order={self.order}, m={self.m}, d={self.domain.dimension})"


@dataclass(frozen=True)
class IndexCycle:
    """A cycle x_{t_1}, ..., x_{t_N} of domain indices; repetitions are allowed."""
    indices: Tuple[int, ...]
    m: int

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise InvariantError("a cycle needs at least one index")
        bad = [i for i in indices if not 0 <= i < self.m]
        if bad:
            raise InvariantError(f"cycle indices {bad} outside [0, {self.m})")
        object.__setattr__(self, "indices", indices)

    @property
    def order(self) -> int:
        return len(self.indices)

    def at(self, i: int) -> int:
        """Index of x_i with the wraparound convention x_{N+i} = x_i (i is 0-based)."""
        return self.indices[i % self.order]

    def rotated(self, k: int = 1) -> "IndexCycle":
        return IndexCycle(apply_sigma_power(self.indices, k), self.m)

    def to_list(self):
        return list(self.indices)


# ---------------------------------------------------------------------------
# tensors on index N-tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridHamiltonian:
    """A real function on N-tuples of domain indices, stored as a dense tensor.

    The boolean flags are claims. Claims of diagonal_zero, sub_antisymmetric and antisymmetric
    are checked by full tensor scans on construction. concave_first and convex_tail are not
    scanned; they hold by construction for the outputs of envelope-based builders.
    """
    values: np.ndarray
    diagonal_zero: bool = False
    sub_antisymmetric: bool = False
    antisymmetric: bool = False
    concave_first: bool = False
    convex_tail: bool = False
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim < 1 or len(set(values.shape)) != 1:
            raise InvariantError(f"a grid Hamiltonian needs shape (m,)*N, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvariantError("all Hamiltonian entries must be finite")
        object.__setattr__(self, "values", _readonly(values))
        if self.diagonal_zero and np.any(self.diagonal() != 0.0):
            raise InvariantError("diagonal_zero claimed but H(i,...,i) != 0")
        if self.sub_antisymmetric or self.antisymmetric:
            sums = self.rotation_sum()
            if self.sub_antisymmetric and sums.max() > self.tolerance:
                raise InvariantError(f"sub_antisymmetric claimed but max rotation sum is {sums.max():.3e}")
            if self.antisymmetric and np.abs(sums).max() > self.tolerance:
                raise InvariantError(
                    f"antisymmetric claimed but max |rotation sum| is {np.abs(sums).max():.3e}")

    @property
    def order(self) -> int:
        return self.values.ndim

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.values[diagonal_index(self.m, self.order)]

    def rotation_sum(self) -> np.ndarray:
        return rotation_sum(self.values)

    def __call__(self, *t) -> float:
        if len(t) == 1 and isinstance(t[0], (tuple, list)):
            t = tuple(t[0])
        return float(self.values[tuple(int(i) for i in t)])

    def with_flags(self, **flags) -> "GridHamiltonian":
        return replace(self, **flags)

    def flags(self) -> dict:
        return {"diagonal_zero": self.diagonal_zero,
                "sub_antisymmetric": self.sub_antisymmetric,
                "antisymmetric": self.antisymmetric,
                "concave_first": self.concave_first,
                "convex_tail": self.convex_tail}

    def to_dict(self) -> dict:
        """Tensor export ``{"order", "m", "values"}`` (row-major), plus the flag claims."""
        return {"order": self.order, "m": self.m,
                "values": self.values.reshape(-1).tolist(),
                "flags": self.flags()}

    @classmethod
    def from_dict(cls, data: dict, trust_flags: bool = True) -> "GridHamiltonian":
        try:
            order, m = int(data["order"]), int(data["m"])
            values = np.asarray(data["values"], dtype=float)
        except KeyError as exc:
            raise InputFormatError(f"missing key {exc.args[0]!r} in tensor input") from exc
        if values.size != m**order:
            raise InputFormatError(f"expected {m}^{order} = {m**order} values, got {values.size}")
        flags = data.get("flags", {}) if trust_flags else {}
        return cls(values.reshape((m,) * order), **{k: bool(v) for k, v in flags.items()})

    def __repr__(self):
        claimed = [k for k, v in self.flags().items() if v]
        return f"GridHamiltonian(order={self.order}, m={self.m}, flags={claimed})"


@dataclass(frozen=True, eq=False)
class SigmaCoupling:
    """A sigma-invariant probability tensor on index N-tuples with first marginal mu."""
    tensor: np.ndarray
    domain: DiscreteDomain

    def __post_init__(self):
        tensor = np.asarray(self.tensor, dtype=float)
        m = self.domain.m
        if tensor.ndim < 1 or tensor.shape != (m,) * tensor.ndim:
            raise InvariantError(f"coupling tensor must have shape ({m},)*N, got {tensor.shape}")
        if not np.all(np.isfinite(tensor)) or np.any(tensor < 0):
            raise InvariantError("coupling entries must be finite and nonnegative")
        if abs(tensor.sum() - 1.0) > COUPLING_MASS_TOL:
            raise InvariantError(f"coupling mass is {tensor.sum()!r}, expected 1")
        asym = np.abs(rotate_tensor(tensor, 1) - tensor).max()
        if asym > COUPLING_SYMMETRY_TOL:
            raise InvariantError(f"coupling is not sigma-invariant (max deviation {asym:.3e})")
        marginal = tensor.reshape(m, -1).sum(axis=1)
        if np.abs(marginal - self.domain.weights).max() > COUPLING_MASS_TOL:
            raise InvariantError("first marginal of the coupling differs from the domain weights")
        object.__setattr__(self, "tensor", _readonly(tensor))

    @property
    def order(self) -> int:
        return self.tensor.ndim

    def first_marginal(self) -> np.ndarray:
        return self.tensor.reshape(self.domain.m, -1).sum(axis=1)

    def integrate(self, values: np.ndarray) -> float:
        """Return sum_t values(t) pi(t)."""
        return float(np.sum(np.asarray(values, dtype=float) * self.tensor))

    def support(self, threshold: float = 0.0) -> Iterable[Tuple[Tuple[int, ...], float]]:
        for t in zip(*np.nonzero(self.tensor > threshold)):
            t = tuple(int(i) for i in t)
            yield t, float(self.tensor[t])

    def to_dict(self) -> dict:
        """Sparse export ``{"order", "m", "entries": [[tuple, mass], ...]}``."""
        return {"order": self.order, "m": self.domain.m,
                "entries": [[list(t), mass] for t, mass in self.support()]}


@dataclass(frozen=True, eq=False)
class NInvolution:
    """A permutation S of the domain indices with S^N = identity."""
    perm: np.ndarray
    order: int

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=int).reshape(-1)
        m = perm.shape[0]
        if self.order < 1:
            raise InvariantError(f"order must be positive, got {self.order}")
        if m == 0 or not np.array_equal(np.sort(perm), np.arange(m)):
            raise InvariantError("perm is not a bijection of {0, ..., m-1}")
        if not np.array_equal(permutation_power(perm, self.order), np.arange(m)):
            raise InvariantError(f"perm^{self.order} is not the identity (cycle type {cycle_type(perm)})")
        perm = perm.copy()
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, m: int, order: int) -> "NInvolution":
        return cls(np.arange(m), order)

    @property
    def m(self) -> int:
        return self.perm.shape[0]

    def power(self, k: int) -> np.ndarray:
        return permutation_power(self.perm, k)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.perm, np.arange(self.m)))

    def to_list(self):
        return self.perm.tolist()

    def __repr__(self):
        return f"NInvolution(order={self.order}, perm={self.perm.tolist()})"


def pairing_matrix(points: np.ndarray, u: np.ndarray) -> np.ndarray:
    """G[..., i, j] = <u[..., i, :], x_i - x_j> for one field (m, d) or a stack (L, m, d)."""
    points = np.asarray(points, dtype=float)
    diff = points[:, None, :] - points[None, :, :]
    return np.einsum("...id,ijd->...ij", np.asarray(u, dtype=float), diff)


def permutation_power(perm, k: int) -> np.ndarray:
    """S^k as an index array (works for any map {0..m-1} -> {0..m-1}, not only bijections)."""
    perm = np.asarray(perm, dtype=int)
    out = np.arange(perm.shape[-1])
    if perm.ndim == 2:
        out = np.broadcast_to(out, perm.shape).copy()
        rows = np.arange(perm.shape[0])[:, None]
        for _ in range(k):
            out = perm[rows, out]
        return out
    for _ in range(k):
        out = perm[out]
    return out


def cycle_type(perm) -> Tuple[int, ...]:
    """Sorted cycle lengths of a permutation."""
    perm = np.asarray(perm, dtype=int)
    seen = np.zeros(perm.shape[0], dtype=bool)
    lengths = []
    for start in range(perm.shape[0]):
        if seen[start]:
            continue
        length, i = 0, start
        while not seen[i]:
            seen[i] = True
            i = int(perm[i])
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths))


@dataclass(frozen=True)
class CheckResult:
    """One named check: pass flag, worst residual and an optional witness payload."""
    name: str
    passed: bool
    residual: float = 0.0
    operation: str = ""
    witness: Optional[dict] = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"name": self.name, "passed": bool(self.passed),
               "residual": float(self.residual), "operation": self.operation}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out
