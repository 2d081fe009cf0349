"""
Small dense linear programs in equality standard form.

    minimize    c . x
    subject to  A x = b,  x >= lower

solved by a two-phase tableau simplex with Bland's anti-cycling rule. The programs built by
the envelope and transport modules are tiny but very degenerate (symmetric costs, optima on
the diagonal), so pivoting is deterministic and guaranteed to terminate.

Example:
    >>> sol = lp_solve(LinearProgram(c=[-1, -1], A_eq=[[1, 1]], b_eq=[1]))
    >>> sol.status, sol.objective
    (<LPStatus.OPTIMAL: 'optimal'>, -1.0)
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from MonoHam.core import MonoHamError, SizeCapError

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8
PIVOT_TOL = 1e-11
BOUND_TOL = 1e-10
DEFAULT_MAX_VARIABLES = 50_000


class LPError(MonoHamError, ValueError):
    """Non-finite LP data or a numerical breakdown of the simplex."""


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """Equality-form LP. ``lower`` defaults to zero for every variable."""
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    lower: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.shape[0]
        A = np.asarray(self.A_eq, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        A = np.atleast_2d(A)
        b = np.asarray(self.b_eq, dtype=float).reshape(-1)
        lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        if A.shape != (b.shape[0], n):
            raise LPError(f"A_eq has shape {A.shape}, expected ({b.shape[0]}, {n})")
        if lower.shape != (n,):
            raise LPError(f"lower has shape {lower.shape}, expected ({n},)")
        for name, arr in (("c", c), ("A_eq", A), ("b_eq", b), ("lower", lower)):
            if not np.all(np.isfinite(arr)):
                raise LPError(f"LP data {name} contains non-finite entries")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_eq", A)
        object.__setattr__(self, "b_eq", b)
        object.__setattr__(self, "lower", lower)

    @property
    def n_variables(self) -> int:
        return self.c.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.b_eq.shape[0]


@dataclass(frozen=True, eq=False)
class LPSolution:
    status: LPStatus
    x: Optional[np.ndarray] = None
    objective: float = float("nan")
    basis: Tuple[int, ...] = ()
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Tableau:
    """Dense simplex tableau; the last row holds reduced costs and -objective."""

    def __init__(self, A, b, pivot_tol, max_iterations):
        p, n = A.shape
        self.n = n
        self.pivot_tol = pivot_tol
        self.max_iterations = max_iterations
        self.iterations = 0
        self.T = np.zeros((p + 1, n + p + 1))
        self.T[:p, :n] = A
        self.T[:p, n:n + p] = np.eye(p)
        self.T[:p, -1] = b
        self.basis = list(range(n, n + p))

    @property
    def rows(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, r: int, s: int):
        T = self.T
        pivot_row = T[r] / T[r, s]
        column = T[:, s].copy()
        T -= np.outer(column, pivot_row)
        T[r] = pivot_row
        T[:, s] = 0.0
        T[r, s] = 1.0
        self.basis[r] = s
        self.iterations += 1

    def set_objective(self, costs: np.ndarray):
        """Load reduced costs of ``costs`` (one entry per tableau column) for the current basis."""
        T = self.T
        p = self.rows
        cb = costs[self.basis]
        T[-1, :-1] = costs - cb @ T[:p, :-1]
        T[-1, -1] = -cb @ T[:p, -1]

    def run(self, allowed: np.ndarray) -> LPStatus:
        """Bland's rule: lowest-index improving column, lowest-index basic variable on ratio ties."""
        T = self.T
        p = self.rows
        while True:
            if self.iterations > self.max_iterations:
                raise LPError(f"simplex exceeded {self.max_iterations} pivots")
            reduced = T[-1, :-1]
            candidates = np.nonzero(allowed & (reduced < -self.pivot_tol))[0]
            if candidates.size == 0:
                return LPStatus.OPTIMAL
            s = int(candidates[0])
            column = T[:p, s]
            rows = np.nonzero(column > self.pivot_tol)[0]
            if rows.size == 0:
                return LPStatus.UNBOUNDED
            ratios = T[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, s)

    def drop_rows(self, rows):
        keep = [i for i in range(self.rows) if i not in set(rows)]
        self.T = np.vstack([self.T[keep], self.T[-1:]])
        self.basis = [self.basis[i] for i in keep]


def lp_solve(problem: LinearProgram,
             max_variables: int = DEFAULT_MAX_VARIABLES,
             feasibility_tol: float = FEASIBILITY_TOL,
             pivot_tol: float = PIVOT_TOL,
             max_iterations: Optional[int] = None) -> LPSolution:
    """Solve ``problem`` exactly up to floating point; see the module docstring."""
    n, p = problem.n_variables, problem.n_constraints
    if n > max_variables:
        raise SizeCapError(f"LP has {n} variables, cap is {max_variables}")
    if max_iterations is None:
        max_iterations = 50 * (n + p) + 1000
    A = problem.A_eq
    c = problem.c
    b = problem.b_eq - A @ problem.lower
    scale = 1.0 + (np.abs(b).max() if p else 0.0)

    if p == 0:
        if np.any(c < -pivot_tol):
            return LPSolution(LPStatus.UNBOUNDED)
        x = problem.lower.copy()
        return LPSolution(LPStatus.OPTIMAL, x, float(c @ x))

    signs = np.where(b < 0, -1.0, 1.0)
    tableau = _Tableau(A * signs[:, None], b * signs, pivot_tol, max_iterations)

    # phase 1: minimise the sum of artificials
    phase1_costs = np.concatenate([np.zeros(n), np.ones(p)])
    tableau.set_objective(phase1_costs)
    tableau.run(np.ones(n + p, dtype=bool))
    infeasibility = -tableau.T[-1, -1]
    if infeasibility > feasibility_tol * scale:
        logger.debug("LP infeasible: phase-1 residual %.3e", infeasibility)
        return LPSolution(LPStatus.INFEASIBLE, iterations=tableau.iterations)

    # drive zero-level artificials out of the basis; rows that cannot pivot are redundant
    redundant = []
    for r in range(tableau.rows):
        if tableau.basis[r] < n:
            continue
        structural = np.nonzero(np.abs(tableau.T[r, :n]) > pivot_tol)[0]
        if structural.size:
            tableau.pivot(r, int(structural[0]))
        else:
            redundant.append(r)
    if redundant:
        tableau.drop_rows(redundant)

    # phase 2 over structural columns only
    phase2_costs = np.concatenate([c, np.zeros(p)])
    allowed = np.concatenate([np.ones(n, dtype=bool), np.zeros(p, dtype=bool)])
    tableau.set_objective(phase2_costs)
    status = tableau.run(allowed)
    if status is LPStatus.UNBOUNDED:
        return LPSolution(LPStatus.UNBOUNDED, iterations=tableau.iterations)

    basis = list(tableau.basis)
    shifted = np.zeros(n)
    shifted[basis] = tableau.T[:-1, -1]
    kept_rows = [i for i in range(p) if i not in set(redundant)]
    try:
        polished = np.linalg.solve((A * signs[:, None])[np.ix_(kept_rows, basis)], (b * signs)[kept_rows])
        if np.all(polished >= -feasibility_tol):
            shifted[basis] = polished
    except np.linalg.LinAlgError:
        logger.debug("basis matrix singular while polishing; keeping tableau values")
    shifted[np.abs(shifted) < BOUND_TOL] = 0.0
    shifted = np.maximum(shifted, 0.0)
    x = shifted + problem.lower
    residual = np.abs(A @ x - problem.b_eq).max()
    if residual > feasibility_tol * scale:
        raise LPError(f"optimal basis violates constraints by {residual:.3e}")
    return LPSolution(LPStatus.OPTIMAL, x, float(c @ x), tuple(int(j) for j in basis), tableau.iterations)
