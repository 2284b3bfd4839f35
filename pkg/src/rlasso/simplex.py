"""Dense two-phase tableau simplex with Bland's rule.

Small and deterministic rather than fast; sized for the null space oracle,
where problems have a few dozen variables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import CycleLimitError, InfeasibleError, NumericalError, UnboundedError

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-11


@dataclass
class LpProblem:
    """``maximize c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative unless flagged in ``free``.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    free: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub = np.zeros((0, n)) if self.A_ub is None else np.atleast_2d(np.asarray(self.A_ub, dtype=float))
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.A_eq = np.zeros((0, n)) if self.A_eq is None else np.atleast_2d(np.asarray(self.A_eq, dtype=float))
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.free = np.zeros(n, dtype=bool) if self.free is None else np.asarray(self.free, dtype=bool).ravel()
        if self.A_ub.shape != (self.b_ub.size, n) or self.A_eq.shape != (self.b_eq.size, n):
            raise ValueError("inconsistent LP dimensions")
        if self.free.size != n:
            raise ValueError("free mask has the wrong length")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")


class LpSolution(NamedTuple):
    optimum: float
    point: np.ndarray


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _refactor(T, basis, A, b, c) -> bool:
    """Rebuild tableau ``T`` from the original data and the current basis, discarding drift."""
    B = A[:, basis]
    try:
        T[:-1, :-1] = np.linalg.solve(B, A)
        T[:-1, -1] = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        return False
    T[-1, :-1] = c - c[basis] @ T[:-1, :-1]
    T[-1, -1] = -c[basis] @ T[:-1, -1]
    return True


def _iterate(T, basis, n_cols, max_pivots, pivots, data=None, refactor_every=50):
    """Bland's-rule pivoting on a tableau whose last row holds reduced costs (min).

    With ``data = (A, b, c)`` the tableau is periodically rebuilt from scratch,
    and always before unboundedness is declared.
    """
    m = T.shape[0] - 1
    fresh = False
    while True:
        costs = T[-1, :n_cols]
        scale = max(1.0, float(np.max(np.abs(costs))))
        entering = np.flatnonzero(costs < -_COST_TOL * scale)
        if entering.size == 0:
            return pivots
        col = int(entering[0])
        column = T[:m, col]
        positive = column > _PIVOT_TOL * max(1.0, float(np.max(np.abs(column))))
        if not np.any(positive):
            if data is not None and not fresh and _refactor(T, basis, *data):
                fresh = True
                continue
            raise UnboundedError("LP is unbounded")
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        pivots += 1
        fresh = False
        if pivots > max_pivots:
            raise CycleLimitError(f"simplex exceeded {max_pivots} pivots")
        if data is not None and pivots % refactor_every == 0:
            fresh = _refactor(T, basis, *data)


def simplex_solve(p: LpProblem, max_pivots: int = 100000, certify_tol: float = 1e-10) -> LpSolution:
    """Solve ``p`` and certify the optimum by duality.

    Raises InfeasibleError, UnboundedError or CycleLimitError.
    """
    n = p.c.size
    free_idx = np.flatnonzero(p.free)
    # columns: original (x+), negative parts of free vars (x-), slacks
    n_x = n + free_idx.size
    m_ub, m_eq = p.b_ub.size, p.b_eq.size
    m = m_ub + m_eq

    def expand(Arows):
        return np.hstack([Arows, -Arows[:, free_idx]])

    A_std = np.zeros((m, n_x + m_ub))
    A_std[:m_ub, :n_x] = expand(p.A_ub)
    A_std[:m_ub, n_x:] = np.eye(m_ub)
    A_std[m_ub:, :n_x] = expand(p.A_eq)
    b_std = np.concatenate([p.b_ub, p.b_eq])
    c_std = np.concatenate([-p.c, p.c[free_idx], np.zeros(m_ub)])  # minimise
    n_std = A_std.shape[1]

    sign = np.where(b_std < 0, -1.0, 1.0)
    A1 = A_std * sign[:, None]
    b1 = b_std * sign

    # phase 1 with one artificial per row
    T = np.zeros((m + 1, n_std + m + 1))
    T[:m, :n_std] = A1
    T[:m, n_std:n_std + m] = np.eye(m)
    T[:m, -1] = b1
    T[-1, :n_std] = -A1.sum(axis=0)
    T[-1, -1] = -b1.sum()
    basis = list(range(n_std, n_std + m))
    c1 = np.concatenate([np.zeros(n_std), np.ones(m)])
    pivots = _iterate(T, basis, n_std + m, max_pivots, 0, (T[:m, :-1].copy(), b1, c1))
    if -T[-1, -1] > 1e-9 * max(1.0, float(np.abs(b1).sum())):
        raise InfeasibleError("LP is infeasible")

    # drive remaining artificials out of the basis; drop redundant rows
    keep_rows = []
    for r in range(m):
        if basis[r] >= n_std:
            cand = np.flatnonzero(np.abs(T[r, :n_std]) > 1e-9)
            if cand.size:
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
                keep_rows.append(r)
        else:
            keep_rows.append(r)
    T = np.vstack([T[keep_rows][:, list(range(n_std)) + [T.shape[1] - 1]], np.zeros((1, n_std + 1))])
    basis = [basis[r] for r in keep_rows]

    # phase 2
    T[-1, :n_std] = c_std
    T[-1, -1] = 0.0
    for r, bcol in enumerate(basis):
        if T[-1, bcol] != 0.0:
            T[-1] -= T[-1, bcol] * T[r]
    _iterate(T, basis, n_std, max_pivots, pivots, (A1[keep_rows], b1[keep_rows], c_std))

    x_std = _certify(A1, b1, c_std, basis, certify_tol)
    x = x_std[:n].copy()
    x[free_idx] -= x_std[n:n_x]
    return LpSolution(optimum=float(p.c @ x), point=x)


def _certify(A, b, c, basis, tol):
    """Recompute the basic solution and check feasibility, dual feasibility and zero gap.

    ``A`` keeps every original row; redundant ones are consistent, so least
    squares recovers the basic solution and a dual vector exactly.
    """
    B = A[:, basis]
    if np.linalg.matrix_rank(B) < len(basis):
        raise NumericalError("singular optimal basis")
    xB = np.linalg.lstsq(B, b, rcond=None)[0]
    y = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
    if np.linalg.norm(B @ xB - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
        raise NumericalError("optimal basis does not reproduce the constraints")
    x = np.zeros(A.shape[1])
    x[basis] = xB
    scale = 1.0 + float(np.max(np.abs(b))) if b.size else 1.0
    if xB.size and xB.min() < -1e-9 * scale:
        raise NumericalError("optimal basis is primal infeasible")
    x = np.maximum(x, 0.0)
    reduced = c - A.T @ y
    cscale = 1.0 + float(np.max(np.abs(c)))
    if reduced.size and reduced.min() < -1e-9 * cscale:
        raise NumericalError("optimal basis is dual infeasible")
    primal, dual = float(c @ x), float(b @ y)
    if abs(primal - dual) > tol * (1.0 + abs(primal) + abs(dual)):
        raise NumericalError(f"complementary slackness violated: {primal} vs {dual}")
    return x


def min_l1_residual(A, y) -> float:
    """``min_z ||A z - y||_1`` as an LP over (z free, t >= 0)."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    M, N = A.shape
    c = np.concatenate([np.zeros(N), -np.ones(M)])
    A_ub = np.block([[A, -np.eye(M)], [-A, -np.eye(M)]])
    b_ub = np.concatenate([y, -y])
    free = np.concatenate([np.ones(N, dtype=bool), np.zeros(M, dtype=bool)])
    return -simplex_solve(LpProblem(c, A_ub, b_ub, free=free)).optimum
