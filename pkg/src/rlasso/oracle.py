"""Small-instance ground truth for the l1 NSP shape constant.

The shape constant is

    tau10 = sup_{|T| <= S} sup_{A v != 0} (||v_T||_1 - ||v_{T^c}||_1) / ||A v||_1,

and the set of tuning parameters for which rLASSO (with l1 fidelity) recovers
every S-sparse vector is exactly the open interval (tau10, inf). Two
independent routes compute it:

* ``nsp_shape_constant_l1`` enumerates supports and sign patterns on the
  support and solves one LP per pattern (exact, polyhedral);
* ``empirical_tau10`` bisects on the tuning parameter using only the
  first-order solver and an exhaustive recovery check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import as_matrix, check_q, lq_norm_cols
from .ensembles import derive_seed, sparse_signal_on_sphere
from .errors import (
    BracketError,
    BudgetExceeded,
    DimensionError,
    InconclusiveError,
    NspViolation,
    UnboundedError,
    InfeasibleError,
)
from .simplex import LpProblem, LpSolution, simplex_solve
from .solvers import SolverConfig, solve_rlasso_batch

MAX_N = 12
MAX_S = 3
RECOVERY_TOL = 1e-6

__all__ = [
    "LpProblem",
    "LpSolution",
    "simplex_solve",
    "ShapeResult",
    "RecoveryCheck",
    "nsp_shape_constant_l1",
    "tau_for_support",
    "check_l1_nsp",
    "robust_nsp_constant_l1",
    "exhaustive_recovery_check",
    "empirical_tau10",
]


@dataclass
class ShapeResult:
    tau10: float
    witness_T: tuple[int, ...]
    witness_sign: np.ndarray
    witness_v: np.ndarray

    def ratio(self, A) -> float:
        """Recompute the shape ratio at the witness."""
        v = self.witness_v
        mask = np.zeros(v.size, dtype=bool)
        mask[list(self.witness_T)] = True
        num = np.abs(v[mask]).sum() - np.abs(v[~mask]).sum()
        return float(num / np.abs(np.asarray(A) @ v).sum())

    def to_dict(self) -> dict:
        return {
            "tau10": self.tau10,
            "witness_T": list(self.witness_T),
            "witness_sign": [int(s) for s in self.witness_sign],
            "witness_v": [float(x) for x in self.witness_v],
        }


def _check_budget(A, S):
    M, N = A.shape
    if not 1 <= S <= N:
        raise DimensionError(f"S={S} must lie in [1, N={N}]")
    if N > MAX_N or S > MAX_S:
        raise BudgetExceeded(f"oracle budget is N <= {MAX_N}, S <= {MAX_S}; got N={N}, S={S}")


def _sign_patterns(S):
    # v -> -v leaves every ratio unchanged, so fix the first sign
    for rest in itertools.product((1.0, -1.0), repeat=S - 1):
        yield np.array((1.0,) + rest)


def _kernel_lp(A, T, s):
    """min ||v_{T^c}||_1 over kernel vectors with sum_{i in T} s_i v_i = 1 on the s-orthant.

    Variables: u (|T|, >= 0) with v_T = s*u, v_{T^c} free, t (>= 0).
    Returns (value, v) or None when no such kernel vector exists.
    """
    M, N = A.shape
    Tc = [i for i in range(N) if i not in T]
    nS, nC = len(T), len(Tc)
    n = nS + 2 * nC
    c = np.concatenate([np.zeros(nS + nC), -np.ones(nC)])
    A_eq = np.zeros((M + 1, n))
    A_eq[:M, :nS] = A[:, T] * s
    A_eq[:M, nS:nS + nC] = A[:, Tc]
    A_eq[M, :nS] = 1.0
    b_eq = np.zeros(M + 1)
    b_eq[M] = 1.0
    A_ub = np.zeros((2 * nC, n))
    for k in range(nC):
        A_ub[2 * k, nS + k] = 1.0
        A_ub[2 * k, nS + nC + k] = -1.0
        A_ub[2 * k + 1, nS + k] = -1.0
        A_ub[2 * k + 1, nS + nC + k] = -1.0
    free = np.zeros(n, dtype=bool)
    free[nS:nS + nC] = True
    try:
        sol = simplex_solve(LpProblem(c, A_ub, np.zeros(2 * nC), A_eq, b_eq, free))
    except InfeasibleError:
        return None
    v = np.zeros(N)
    v[list(T)] = s * sol.point[:nS]
    v[Tc] = sol.point[nS:nS + nC]
    return -sol.optimum, v


def check_l1_nsp(A, S: int, slack: float = 1e-9, rho: float = 1.0) -> None:
    """Raise NspViolation unless ``||v_T||_1 < rho ||v_{T^c}||_1`` for all kernel v != 0, |T| <= S."""
    A = as_matrix(A)
    _check_budget(A, S)
    N = A.shape[1]
    for T in itertools.combinations(range(N), S):
        for s in _sign_patterns(S):
            found = _kernel_lp(A, list(T), s)
            if found is not None and rho * found[0] <= 1.0 + slack:
                raise NspViolation(
                    f"kernel vector with ||v_T||_1 >= {rho:g} ||v_T^c||_1 on T={T}", witness=found[1], support=T)


def _shape_lp(A, T, s, rho=1.0):
    """max sum_T u - rho ||v_{T^c}||_1 subject to ||A v||_1 <= 1, v_T = s*u, u >= 0."""
    M, N = A.shape
    Tc = [i for i in range(N) if i not in T]
    nS, nC = len(T), len(Tc)
    # variables: u (nS), v_c (nC, free), t (nC), r (M)
    n = nS + 2 * nC + M
    c = np.concatenate([np.ones(nS), np.zeros(nC), -rho * np.ones(nC), np.zeros(M)])
    rows = []
    for k in range(nC):
        row = np.zeros(n)
        row[nS + k], row[nS + nC + k] = 1.0, -1.0
        rows.append(row)
        row = np.zeros(n)
        row[nS + k], row[nS + nC + k] = -1.0, -1.0
        rows.append(row)
    AT = A[:, T] * s
    AC = A[:, Tc]
    for m in range(M):
        for sign in (1.0, -1.0):
            row = np.zeros(n)
            row[:nS] = sign * AT[m]
            row[nS:nS + nC] = sign * AC[m]
            row[nS + 2 * nC + m] = -1.0
            rows.append(row)
    row = np.zeros(n)
    row[nS + 2 * nC:] = 1.0
    rows.append(row)
    A_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    b_ub[-1] = 1.0
    free = np.zeros(n, dtype=bool)
    free[nS:nS + nC] = True
    sol = simplex_solve(LpProblem(c, A_ub, b_ub, free=free))
    v = np.zeros(N)
    v[list(T)] = s * sol.point[:nS]
    v[Tc] = sol.point[nS:nS + nC]
    return sol.optimum, v


def tau_for_support(A, T) -> float:
    """Per-support constant: sup over v of the shape ratio with the support fixed to ``T``."""
    A = as_matrix(A)
    T = sorted(int(t) for t in T)
    best = -math.inf
    for s in _sign_patterns(len(T)):
        val, _ = _shape_lp(A, T, s)
        best = max(best, val)
    return best


def nsp_shape_constant_l1(A, S: int) -> ShapeResult:
    """Exact l1 NSP shape constant with l1 fidelity, by LP enumeration.

    The objective is linear once the signs on T are fixed; the negative
    l1 part on the complement is concave and handled by epigraph variables,
    so only the 2^(S-1) sign patterns on T need enumerating. Supports of
    size exactly S suffice because enlarging T never lowers the ratio.
    """
    A = as_matrix(A)
    check_l1_nsp(A, S)
    N = A.shape[1]
    best = None
    for T in itertools.combinations(range(N), S):
        for s in _sign_patterns(S):
            try:
                val, v = _shape_lp(A, list(T), s)
            except UnboundedError:
                raise NspViolation(f"shape LP unbounded on T={T}", support=T) from None
            if best is None or val > best[0] + 1e-12:
                best = (val, T, v)
    val, T, v = best
    v = np.where(np.abs(v) <= 1e-12 * np.max(np.abs(v)), 0.0, v)  # drop pivoting residue
    return ShapeResult(tau10=float(val), witness_T=tuple(T), witness_sign=np.sign(v), witness_v=v)


def robust_nsp_constant_l1(A, S: int, rho: float) -> float:
    """Smallest tau with ``||v_T||_1 <= rho ||v_{T^c}||_1 + tau ||A v||_1`` for all v, |T| <= S.

    This is the l1 robust null space property of order S with l1 fidelity;
    rho = 1 gives the shape constant.
    """
    A = as_matrix(A)
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    check_l1_nsp(A, S, rho=max(rho, 1e-300))
    best = -math.inf
    for T in itertools.combinations(range(A.shape[1]), S):
        for s in _sign_patterns(S):
            best = max(best, _shape_lp(A, list(T), s, rho)[0])
    return best


# -- empirical route ---------------------------------------------------------

@dataclass
class RecoveryCheck:
    success: bool
    witness: np.ndarray | None = None
    estimate: np.ndarray | None = None
    signals_tested: int = 0

    def __bool__(self) -> bool:
        return self.success


def _test_signals(N, S, q, trials, seed):
    n_canon = math.comb(N, S) * 2 ** S
    if trials is None or n_canon <= trials:
        cols = []
        for T in itertools.combinations(range(N), S):
            for signs in itertools.product((1.0, -1.0), repeat=S):
                x = np.zeros(N)
                x[list(T)] = signs
                cols.append(x)
        return np.array(cols).T
    q_draw = 1.0 if q == 1.0 else 2.0
    return np.array([sparse_signal_on_sphere(N, S, q_draw, derive_seed(seed, k)) for k in range(trials)]).T


def exhaustive_recovery_check(A, S: int, lam: float, q=1, trials: int | None = None, seed: int = 0,
                              cfg: SolverConfig | None = None) -> RecoveryCheck:
    """Check that rLASSO returns x exactly from y = A x for every tested S-sparse x.

    Tests all signed canonical patterns on every support when there are at
    most ``trials`` of them (or ``trials`` is None), otherwise ``trials``
    random sphere signals. A converged solve with relative l_q error above
    1e-6 is a failure; the first such signal is returned as the witness.
    Raises InconclusiveError when no failure is certified but some solve
    hit its iteration limit.
    """
    A = as_matrix(A)
    q = check_q(q)
    if trials is not None and trials < 1:
        raise ValueError("trials must be at least 1")
    X = _test_signals(A.shape[1], S, q, trials, seed)
    sols = solve_rlasso_batch(A, A @ X, lam, q, cfg)
    Xh = np.column_stack([s.x_hat for s in sols])
    err = lq_norm_cols(Xh - X, q) / lq_norm_cols(X, q)
    converged = np.array([s.converged for s in sols])
    failed = np.flatnonzero((err > RECOVERY_TOL) & converged)
    if failed.size:
        j = failed[0]
        return RecoveryCheck(False, witness=X[:, j].copy(), estimate=Xh[:, j].copy(), signals_tested=X.shape[1])
    if not np.all(converged):
        raise InconclusiveError(f"{int((~converged).sum())} solves hit the iteration limit at lambda={lam}")
    return RecoveryCheck(True, signals_tested=X.shape[1])


def _recovers(A, S, lam, q, trials, seed, cfg) -> bool:
    try:
        return exhaustive_recovery_check(A, S, lam, q, trials, seed, cfg).success
    except InconclusiveError:
        # an uncertified solve counts against recovery; this can only bias the estimate upward
        return False


def empirical_tau10(A, S: int, q=1, tol: float = 1e-3, trials: int | None = None, seed: int = 0,
                    cfg: SolverConfig | None = None, bracket=(1e-3, 1e6)) -> float:
    """Recovery threshold found by geometric bisection on the tuning parameter.

    The result ``lam`` satisfies: recovery succeeds at ``lam*(1+tol)`` and
    fails at ``lam*(1-tol)``.
    """
    A = as_matrix(A)
    lo, hi = bracket
    if _recovers(A, S, lo, q, trials, seed, cfg):
        raise BracketError(f"recovery already succeeds at lambda={lo}")
    if not _recovers(A, S, hi, q, trials, seed, cfg):
        raise BracketError(f"recovery still fails at lambda={hi}")
    target = (1.0 + tol) / (1.0 - tol)
    while hi / lo > target:
        mid = math.sqrt(lo * hi)
        if _recovers(A, S, mid, q, trials, seed, cfg):
            hi = mid
        else:
            lo = mid
    return math.sqrt(hi / (1.0 + tol) * lo / (1.0 - tol))
