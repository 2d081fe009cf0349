"""
Hamiltonian representations of jointly monotone field tuples.

Pipeline on a finite sample:

    f        = build_cost_f(fields)           start cost, zero on the diagonal
    psi      = build_psi(fields)              -(envelope of f in the first variable)
    H_{k+1}  = improve_step(H_k)              ((N-1) H_k + K^{2..N}) / N, nondecreasing
    H        = build_maximal_H(fields)        fixed point of improve_step started at psi
    bar_H    = antisymmetrize(H)              exactly N-antisymmetric

Every builder verifies what it claims on the full tensor. A property that the theory
guarantees for jointly monotone input but fails numerically raises InternalError; failures on
non-monotone input are logged and reported.

Note:
    The upper bound of the sandwich is H(t) <= sum_{k=1}^{N-1} f(sigma^k t), which follows
    from sub-antisymmetry and H >= -f.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from MonoHam.core import (DEFAULT_TOLERANCE, CheckResult, DiscreteDomain, FieldTuple, GridHamiltonian,
                          InternalError, InvariantError, MonoHamError, check_tensor_size, diagonal_index,
                          pairing_matrix, rotation_sum)
from MonoHam.envelope import BLOCK_FIRST, BLOCK_LAST, SIGN_CONVEXIFY, convexify_block
from MonoHam.lp import DEFAULT_MAX_VARIABLES, LinearProgram, LPStatus, lp_solve
from MonoHam.monotonicity import (CycleWitness, METHOD_NEGATIVE_CYCLE, check_joint, check_single,
                                  cost_tensor, min_closed_walk)

logger = logging.getLogger(__name__)

CHECK_TOL = 1e-8
FIXED_POINT_TOL = 1e-9
MAX_ITER = 200
# entrywise slack for the per-step monotone-iteration assertions, relative to max |f|
STEP_SLACK = 1e-10
TIE_RTOL = 1e-12

VARIANT_PRINTED = "printed"
VARIANT_CORRECTED = "corrected"


class NotMonotoneError(MonoHamError):
    """A builder needs monotone input; ``witness`` is the violating cycle."""

    def __init__(self, message: str, witness: CycleWitness):
        super().__init__(message)
        self.witness = witness


class ConvergenceError(MonoHamError):
    """The fixed-point iteration did not settle within max_iter steps."""

    def __init__(self, message: str, residual: float, last: GridHamiltonian, report: "RepresentationReport"):
        super().__init__(message)
        self.residual = residual
        self.last = last
        self.report = report


@dataclass(frozen=True)
class LegendreResult:
    value: float
    argmax: Tuple[int, ...]

    def to_dict(self) -> dict:
        return {"value": self.value, "argmax": list(self.argmax)}


@dataclass(frozen=True, eq=False)
class RepresentationReport:
    """Outcome of the representation scans for one Hamiltonian.

    ``passed`` ignores ``diagnostics`` (finite differences), which depend on grid spacing.
    """
    checks: List[CheckResult] = field(default_factory=list)
    subgradient_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    diagonal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dualrep_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    fixed_point_residual: float = float("nan")
    iterations: int = 0
    trace: List[dict] = field(default_factory=list)
    diagnostics: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def trace_frame(self) -> pd.DataFrame:
        """Per-iteration trace, ready for ``to_csv``."""
        return pd.DataFrame(self.trace, columns=["iteration", "residual", "max_rotation_sum", "min_increment"])

    def to_dict(self) -> dict:
        out = {"passed": self.passed,
               "checks": [check.to_dict() for check in self.checks],
               "subgradient_residuals": self.subgradient_residuals.tolist(),
               "diagonal": self.diagonal.tolist(),
               "dualrep_residuals": self.dualrep_residuals.tolist(),
               "iterations": self.iterations}
        if np.isfinite(self.fixed_point_residual):
            out["fixed_point_residual"] = self.fixed_point_residual
        if self.diagnostics:
            out["diagnostics"] = [check.to_dict() for check in self.diagnostics]
        return out


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_cost_f(fields: FieldTuple, cap: Optional[int] = None) -> GridHamiltonian:
    """f(t) = sum_l <u_l(x_{t_1}), x_{t_1} - x_{t_{l+1}}>."""
    return GridHamiltonian(cost_tensor(fields, cap), diagonal_zero=True, convex_tail=True)


def _snap_diagonal(values: np.ndarray, tolerance: float) -> Tuple[np.ndarray, bool]:
    """Set diagonal entries within ``tolerance`` of zero to exactly zero."""
    values = np.array(values, dtype=float)
    diag = diagonal_index(values.shape[0], values.ndim)
    ok = bool(np.all(np.abs(values[diag]) <= tolerance))
    if ok:
        values[diag] = 0.0
    return values, ok


def _confirm_or_raise(fields: FieldTuple, what: str, tolerance: float, cap: Optional[int]):
    """Raise InternalError if ``fields`` are jointly monotone, otherwise log the reported failure."""
    if check_joint(fields, tolerance, cap=cap).passed:
        raise InternalError(f"{what} failed for jointly monotone fields")
    logger.warning("%s fails; fields are not jointly monotone", what)


def build_psi(fields: FieldTuple, tolerance: float = DEFAULT_TOLERANCE, cap: Optional[int] = None,
              max_variables: int = DEFAULT_MAX_VARIABLES) -> GridHamiltonian:
    """psi = -(envelope of f in the first variable); claims are verified by full scans."""
    f = build_cost_f(fields, cap)
    f_tilde = convexify_block(f, fields.domain, BLOCK_FIRST, SIGN_CONVEXIFY, cap, max_variables)
    values, diagonal_ok = _snap_diagonal(-f_tilde.values, tolerance)
    if not diagonal_ok:
        _confirm_or_raise(fields, "zero diagonal of psi", tolerance, cap)
    if np.any(values < -f.values - tolerance):
        raise InternalError("psi < -f; the envelope exceeds the function it envelopes")
    sub_antisymmetric = bool(rotation_sum(values).max() <= tolerance)
    if not sub_antisymmetric:
        _confirm_or_raise(fields, "sub-antisymmetry of psi", tolerance, cap)
    return GridHamiltonian(values, diagonal_zero=diagonal_ok, sub_antisymmetric=sub_antisymmetric,
                           concave_first=True, convex_tail=True, tolerance=tolerance)


def improve_step(H: GridHamiltonian, domain: DiscreteDomain, cap: Optional[int] = None,
                 max_variables: int = DEFAULT_MAX_VARIABLES) -> GridHamiltonian:
    """H' = ((N-1) H + K^{2..N}) / N with K(t) = -sum_{k>=1} H(sigma^k t).

    K^{2..N} is the envelope of K in the last N-1 variables. For a sub-antisymmetric H
    the result satisfies H <= H' <= antisymmetrize(H).
    """
    if not (H.concave_first and H.convex_tail):
        raise InvariantError("improve_step needs a Hamiltonian claimed concave-first and convex-tail")
    order = H.order
    K = GridHamiltonian(-rotation_sum(H.values, start=1))
    K_tail = convexify_block(K, domain, BLOCK_LAST, SIGN_CONVEXIFY, cap, max_variables)
    values = ((order - 1) * H.values + K_tail.values) / order
    values, diagonal_ok = _snap_diagonal(values, H.tolerance)
    sub_antisymmetric = bool(rotation_sum(values).max() <= H.tolerance)
    return GridHamiltonian(values, diagonal_zero=H.diagonal_zero and diagonal_ok,
                           sub_antisymmetric=H.sub_antisymmetric and sub_antisymmetric,
                           concave_first=True, convex_tail=True, tolerance=H.tolerance)


def antisymmetrize(H: GridHamiltonian) -> GridHamiltonian:
    """bar_H(t) = ((N-1) H(t) - sum_{k>=1} H(sigma^k t)) / N."""
    order = H.order
    values = ((order - 1) * H.values - rotation_sum(H.values, start=1)) / order
    if H.diagonal_zero:
        values[diagonal_index(H.m, order)] = 0.0
    two_variable_saddle = order == 2 and H.concave_first and H.convex_tail
    return GridHamiltonian(values, diagonal_zero=H.diagonal_zero, sub_antisymmetric=True, antisymmetric=True,
                           concave_first=two_variable_saddle, convex_tail=two_variable_saddle,
                           tolerance=H.tolerance)


def build_maximal_H(fields: FieldTuple, tol: float = FIXED_POINT_TOL, max_iter: int = MAX_ITER,
                    tolerance: float = DEFAULT_TOLERANCE, check_tol: float = CHECK_TOL,
                    cap: Optional[int] = None,
                    max_variables: int = DEFAULT_MAX_VARIABLES) -> Tuple[GridHamiltonian, "RepresentationReport"]:
    """Iterate improve_step from psi until the sup-norm change drops below ``tol``.

    Each step is asserted to be nondecreasing and to stay below the upper sandwich bound.
    ``iterations`` in the report counts the steps that moved H by at least ``tol``.

    Raises:
        NotMonotoneError: the fields fail check_joint.
        ConvergenceError: no fixed point within ``max_iter`` steps.
    """
    outcome = check_joint(fields, tolerance, cap=cap)
    if isinstance(outcome, CycleWitness):
        raise NotMonotoneError(f"fields are not jointly {fields.order}-monotone "
                               f"(cycle {outcome.cycle.to_list()} has defect {outcome.defect:.6g})", outcome)
    f = cost_tensor(fields, cap)
    upper = rotation_sum(f, start=1)
    slack = STEP_SLACK * (1.0 + np.abs(f).max())

    H = build_psi(fields, tolerance, cap, max_variables)
    trace = []
    residual = float("inf")
    iterations = 0
    for step in range(1, max_iter + 1):
        H_next = improve_step(H, fields.domain, cap, max_variables)
        increment = H_next.values - H.values
        residual = float(np.abs(increment).max())
        min_increment = float(increment.min())
        trace.append({"iteration": step, "residual": residual,
                      "max_rotation_sum": float(H_next.rotation_sum().max()),
                      "min_increment": min_increment})
        logger.debug("fixed-point step %d: residual %.3e", step, residual)
        if min_increment < -slack:
            raise InternalError(f"improve_step decreased H by {-min_increment:.3e} at step {step}")
        if np.max(H_next.values - upper) > slack:
            raise InternalError(f"improve_step left the sandwich bound at step {step}")
        if np.max(H_next.values - antisymmetrize(H).values) > slack:
            raise InternalError(f"improve_step exceeded the antisymmetrization of its input at step {step}")
        H = H_next
        if residual < tol:
            break
        iterations = step

    report = verify_representation(H, fields, check_tol, fixed_point_residual=residual, fixed_point_tol=tol,
                                   iterations=iterations, trace=trace)
    if residual >= tol:
        raise ConvergenceError(f"no fixed point after {max_iter} steps (residual {residual:.3e})",
                               residual, H, report)
    logger.info("fixed point reached after %d changing steps (residual %.3e)", iterations, residual)
    return H, report


# ---------------------------------------------------------------------------
# Legendre transform and verification
# ---------------------------------------------------------------------------

def _tail_scores(H: GridHamiltonian, domain: DiscreteDomain, x_index: int, p: np.ndarray) -> np.ndarray:
    order, m = H.order, H.m
    scores = -np.array(H.values[x_index], dtype=float)
    for ell in range(order - 1):
        shape = [1] * (order - 1)
        shape[ell] = m
        scores = scores + (domain.points @ p[ell]).reshape(shape)
    return scores


def legendre_transform(H: GridHamiltonian, domain: DiscreteDomain, x_index: int, p) -> LegendreResult:
    """sup over grid tails y of sum_l <p_l, y_l> - H(x, y); lexicographically first maximiser."""
    if H.order < 2:
        raise InvariantError("the Legendre transform needs N >= 2")
    p = np.asarray(p, dtype=float).reshape(H.order - 1, domain.dimension)
    scores = _tail_scores(H, domain, x_index, p)
    best = float(scores.max())
    tied = np.flatnonzero(scores.reshape(-1) >= best - TIE_RTOL * (1.0 + abs(best)))
    argmax = tuple(int(i) for i in np.unravel_index(int(tied[0]), scores.shape))
    return LegendreResult(value=float(scores[argmax]), argmax=argmax)


def _legendre_at_fields(H: GridHamiltonian, fields: FieldTuple) -> np.ndarray:
    return np.array([legendre_transform(H, fields.domain, i, fields.values[:, i, :]).value
                     for i in range(fields.m)])


def _dualrep_target(fields: FieldTuple) -> np.ndarray:
    """sum_l <u_l(x_i), x_i> for every sample point."""
    return np.einsum("lid,id->i", fields.values, fields.domain.points)


def verify_dualrep(H: GridHamiltonian, fields: FieldTuple, bar_H: Optional[GridHamiltonian] = None,
                   tolerance: float = CHECK_TOL) -> RepresentationReport:
    """L_H(x, u(x)) = sum_l <u_l(x), x> at every point, and the bar_H chain when given."""
    target = _dualrep_target(fields)
    L = _legendre_at_fields(H, fields)
    residuals = np.abs(L - target)
    checks = [CheckResult("dualrep", bool(residuals.max() <= tolerance), float(residuals.max()),
                          operation="verify_dualrep")]
    if bar_H is not None:
        L_bar = _legendre_at_fields(bar_H, fields)
        upper = float(np.max(L_bar - L))
        lower = float(np.max(target - L_bar))
        checks.append(CheckResult("dualrep_bar_upper", upper <= tolerance, max(upper, 0.0),
                                  operation="verify_dualrep"))
        checks.append(CheckResult("dualrep_bar_lower", lower <= tolerance, max(lower, 0.0),
                                  operation="verify_dualrep"))
    report = RepresentationReport(checks=checks, dualrep_residuals=residuals, diagonal=H.diagonal())
    if not report.passed:
        logger.warning("dual representation fails: %s", ", ".join(report.failures()))
    return report


def _regular_axes(points: np.ndarray) -> Optional[List[np.ndarray]]:
    """Axes of a full, evenly spaced product grid, or None."""
    axes = [np.unique(points[:, e]) for e in range(points.shape[1])]
    if points.shape[0] != int(np.prod([len(axis) for axis in axes])):
        return None
    for axis in axes:
        if len(axis) < 3:
            return None
        steps = np.diff(axis)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            return None
    return axes


def finite_difference_check(H: GridHamiltonian, fields: FieldTuple) -> Optional[CheckResult]:
    """Central differences of H in each tail slot at interior diagonal points versus u_l.

    Only defined on regular product grids; tolerance is 10 times the largest spacing.
    """
    points = fields.domain.points
    axes = _regular_axes(points)
    if axes is None:
        return None
    spacing = [float(axis[1] - axis[0]) for axis in axes]
    order = H.order
    worst = 0.0

    def locate(target):
        hits = np.flatnonzero(np.all(np.isclose(points, target, rtol=0.0, atol=1e-9 * min(spacing)), axis=1))
        return int(hits[0]) if hits.size else None

    for i, x in enumerate(points):
        for e, h in enumerate(spacing):
            shift = np.zeros(points.shape[1])
            shift[e] = h
            plus, minus = locate(x + shift), locate(x - shift)
            if plus is None or minus is None:
                continue
            for ell in range(1, order):
                t_plus, t_minus = [i] * order, [i] * order
                t_plus[ell], t_minus[ell] = plus, minus
                derivative = (H(t_plus) - H(t_minus)) / (2.0 * h)
                worst = max(worst, abs(derivative - fields.values[ell - 1, i, e]))
    limit = 10.0 * max(spacing)
    return CheckResult("finite_difference", worst <= limit, worst, operation="verify_representation",
                       details={"limit": limit, "diagnostic": True})


def verify_representation(H: GridHamiltonian, fields: FieldTuple, tolerance: float = CHECK_TOL,
                          fixed_point_residual: Optional[float] = None,
                          fixed_point_tol: float = FIXED_POINT_TOL, iterations: int = 0,
                          trace: Optional[list] = None, bar_H: Optional[GridHamiltonian] = None,
                          finite_differences: bool = True) -> RepresentationReport:
    """Full-scan check of H against the fields it should represent."""
    if H.m != fields.m or H.order != fields.order:
        raise InvariantError(f"Hamiltonian (order {H.order}, m {H.m}) does not match the fields "
                             f"(order {fields.order}, m {fields.m})")
    f = cost_tensor(fields)
    values = H.values
    diagonal = H.diagonal()
    rotation_max = float(rotation_sum(values).max())
    lower_gap = -f - values                      # H >= -f, the subgradient inequality in the tail
    upper_gap = values - rotation_sum(f, start=1)
    per_point = np.maximum(lower_gap.reshape(fields.m, -1).max(axis=1), 0.0)
    op = "verify_representation"
    checks = [
        CheckResult("diagonal_zero", bool(np.abs(diagonal).max() <= tolerance), float(np.abs(diagonal).max()),
                    operation=op),
        CheckResult("sub_antisymmetric", rotation_max <= tolerance, max(rotation_max, 0.0), operation=op),
        CheckResult("bounds_lower", bool(lower_gap.max() <= tolerance), max(float(lower_gap.max()), 0.0),
                    operation=op),
        CheckResult("bounds_upper", bool(upper_gap.max() <= tolerance), max(float(upper_gap.max()), 0.0),
                    operation=op),
        CheckResult("subgradient", bool(per_point.max() <= tolerance), float(per_point.max()), operation=op),
    ]
    if fixed_point_residual is not None:
        checks.append(CheckResult("fixed_point", fixed_point_residual < fixed_point_tol,
                                  float(fixed_point_residual), operation="build_maximal_H"))
    dual = verify_dualrep(H, fields, bar_H, tolerance)
    checks.extend(dual.checks)
    diagnostics = []
    if finite_differences:
        fd = finite_difference_check(H, fields)
        if fd is not None:
            diagnostics.append(fd)
    report = RepresentationReport(checks=checks, subgradient_residuals=per_point, diagonal=diagonal,
                                  dualrep_residuals=dual.dualrep_residuals,
                                  fixed_point_residual=float("nan") if fixed_point_residual is None
                                  else float(fixed_point_residual),
                                  iterations=iterations, trace=list(trace or []), diagnostics=diagnostics)
    if not report.passed:
        logger.warning("representation checks failed: %s", ", ".join(report.failures()))
    return report


# ---------------------------------------------------------------------------
# converse direction
# ---------------------------------------------------------------------------

def extract_subgradient_fields(H: GridHamiltonian, domain: DiscreteDomain,
                               max_variables: int = DEFAULT_MAX_VARIABLES) -> FieldTuple:
    """Read fields off H as discrete subgradients in the tail at the diagonal.

    For each point i, finds the least-L1 p with H(i, y) >= sum_l <p_l, y_l - x_i> over all
    grid tails y.

    Raises:
        InvariantError: H has no such subgradient at some point.
    """
    order, m, d = H.order, H.m, domain.dimension
    if not H.diagonal_zero:
        raise InvariantError("subgradient extraction needs a Hamiltonian with zero diagonal")
    tails = np.indices((m,) * (order - 1)).reshape(order - 1, -1).T
    n_tails, n_p = tails.shape[0], (order - 1) * d
    values = np.zeros((order - 1, m, d))
    for i in range(m):
        # p_l . (y_l - x_i) + s_y = H(i, y), p = p_plus - p_minus, all variables >= 0
        directions = (domain.points[tails] - domain.points[i]).reshape(n_tails, n_p)
        A = np.hstack([directions, -directions, np.eye(n_tails)])
        c = np.concatenate([np.ones(2 * n_p), np.zeros(n_tails)])
        solution = lp_solve(LinearProgram(c=c, A_eq=A, b_eq=H.values[i].reshape(-1)), max_variables=max_variables)
        if solution.status is not LPStatus.OPTIMAL:
            raise InvariantError(f"H has no tail subgradient at point {i}")
        p = solution.x[:n_p] - solution.x[n_p:2 * n_p]
        values[:, i, :] = p.reshape(order - 1, d)
    return FieldTuple(domain, values)


# ---------------------------------------------------------------------------
# two-variable representation and its N-variable lift
# ---------------------------------------------------------------------------

def two_var_F_checks(F: GridHamiltonian, domain: DiscreteDomain, u, order: int,
                     tolerance: float = CHECK_TOL) -> List[CheckResult]:
    """Zero diagonal, N-cyclic sub-antisymmetry and the two-sided sandwich for F."""
    u = np.asarray(u, dtype=float).reshape(domain.m, domain.dimension)
    G = pairing_matrix(domain.points, u)            # G[x, y] = <u(x), x - y>
    op = "build_two_var_F"
    diagonal = np.abs(F.diagonal()).max()
    # max cyclic sum over closed walks of at most N steps; shorter walks pad with F(x, x) = 0
    worst_cycle, _ = min_closed_walk(-F.values, order)
    worst_cycle = -worst_cycle
    lower = float(np.max(-G - F.values))
    upper = float(np.max(F.values - G.T))
    return [CheckResult("diagonal_zero", bool(diagonal <= tolerance), float(diagonal), operation=op),
            CheckResult("cyclic_sub_antisymmetric", worst_cycle <= tolerance, max(worst_cycle, 0.0), operation=op),
            CheckResult("sandwich_lower", lower <= tolerance, max(lower, 0.0), operation=op),
            CheckResult("sandwich_upper", upper <= tolerance, max(upper, 0.0), operation=op)]


def build_two_var_F(domain: DiscreteDomain, u, order: int, tolerance: float = DEFAULT_TOLERANCE,
                    check_tol: float = CHECK_TOL, max_variables: int = DEFAULT_MAX_VARIABLES) -> GridHamiltonian:
    """F = -(envelope in x of <u(x), x - y>) for an N-cyclically monotone field u.

    Raises:
        NotMonotoneError: u is not N-cyclically monotone on the sample.
        InternalError: a verified property of F fails although u is monotone.
    """
    outcome = check_single(domain, u, order, tolerance, method=METHOD_NEGATIVE_CYCLE)
    if isinstance(outcome, CycleWitness):
        raise NotMonotoneError(f"field is not {order}-cyclically monotone "
                               f"(cycle {outcome.cycle.to_list()} has defect {outcome.defect:.6g})", outcome)
    u = np.asarray(u, dtype=float).reshape(domain.m, domain.dimension)
    f = GridHamiltonian(pairing_matrix(domain.points, u))
    f1 = convexify_block(f, domain, BLOCK_FIRST, SIGN_CONVEXIFY, max_variables=max_variables)
    values, diagonal_ok = _snap_diagonal(-f1.values, tolerance)
    F = GridHamiltonian(values, diagonal_zero=diagonal_ok, concave_first=True, convex_tail=True,
                        tolerance=tolerance)
    failed = [check.name for check in two_var_F_checks(F, domain, u, order, check_tol) if not check.passed]
    if failed:
        raise InternalError(f"two-variable F fails {', '.join(failed)} for a monotone field")
    return F


@dataclass(frozen=True, eq=False)
class LiftResult:
    """One lift of a two-variable F to N variables, with its property scans."""
    variant: str
    H: GridHamiltonian
    checks: List[CheckResult]
    rotation_sum: np.ndarray
    cyclic_F_sum: np.ndarray

    @property
    def antisymmetric(self) -> bool:
        return next(check.passed for check in self.checks if check.name == "antisymmetric")

    def to_dict(self) -> dict:
        return {"variant": self.variant, "checks": [check.to_dict() for check in self.checks]}


def _pair_tensor(F: np.ndarray, order: int, a: int) -> np.ndarray:
    """Tensor t -> F(t_a, t_{a+1}) (0-based positions, wrapping at N)."""
    m = F.shape[0]
    b = (a + 1) % order
    shape = [1] * order
    shape[a] = m
    shape[b] = m
    block = F if a < b else F.T
    return np.broadcast_to(block.reshape(shape), (m,) * order)


def lift_F_to_H(F: GridHamiltonian, order: int, variant: str = VARIANT_CORRECTED,
                tolerance: float = CHECK_TOL, cap: Optional[int] = None) -> LiftResult:
    """H(t) = ((N-1) F(t_1, t_2) - sum_i F(t_i, t_{i+1})) / N.

    ``printed`` sums i = 2..N-1 and ``corrected`` sums i = 1..N-1 (1-based positions).
    """
    if F.order != 2:
        raise InvariantError(f"F must be a two-variable Hamiltonian, got order {F.order}")
    if np.any(F.diagonal() != 0.0):
        raise InvariantError("F must vanish on the diagonal")
    if order < 2:
        raise InvariantError(f"order must be >= 2, got {order}")
    if variant not in (VARIANT_PRINTED, VARIANT_CORRECTED):
        raise InvariantError(f"unknown variant {variant!r}")
    check_tensor_size(F.m, order, cap, what="lifted Hamiltonian")
    first = 0 if variant == VARIANT_CORRECTED else 1
    values = (order - 1) * _pair_tensor(F.values, order, 0)
    for a in range(first, order - 1):
        values = values - _pair_tensor(F.values, order, a)
    values = values / order
    cyclic = sum(_pair_tensor(F.values, order, a) for a in range(order))
    rotation = rotation_sum(values)
    expected = cyclic / order if variant == VARIANT_PRINTED else np.zeros_like(rotation)
    dominance = float(np.max(_pair_tensor(F.values, order, 0) - values))
    op = "lift_F_to_H"
    checks = [
        CheckResult("antisymmetric", bool(np.abs(rotation).max() <= tolerance), float(np.abs(rotation).max()),
                    operation=op),
        CheckResult("dominates_F", dominance <= tolerance, max(dominance, 0.0), operation=op),
        CheckResult("rotation_sum_formula", bool(np.abs(rotation - expected).max() <= tolerance),
                    float(np.abs(rotation - expected).max()), operation=op),
    ]
    H = GridHamiltonian(values, diagonal_zero=True)
    result = LiftResult(variant, H, checks, rotation, cyclic)
    if not result.antisymmetric:
        logger.warning("%s lift is not N-antisymmetric (max |rotation sum| %.3e)",
                       variant, float(np.abs(rotation).max()))
    return result


def lift_variants_report(F: GridHamiltonian, order: int, tolerance: float = CHECK_TOL,
                         cap: Optional[int] = None) -> Dict[str, LiftResult]:
    return {variant: lift_F_to_H(F, order, variant, tolerance, cap)
            for variant in (VARIANT_PRINTED, VARIANT_CORRECTED)}
