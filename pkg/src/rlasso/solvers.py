"""Primal-dual hybrid gradient engine and the four decoders built on it.

Every decoder is written as ``min_z G(z) + F(A z)`` and solved with the
Chambolle-Pock iteration

    w+ = prox_{sigma F*}(w + sigma A (2 z - z_prev))
    z+ = prox_{tau G}(z - tau A^T w+)

with adaptive restarts to the running average and primal-weight
rebalancing. Termination is certified: the dual iterate is rescaled to an
exactly feasible dual point and the relative duality gap (plus primal
feasibility where the problem has constraints) must drop below ``tol``.

The engine is batched over columns of ``Y`` so many right-hand sides for the
same matrix can be solved at once.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import as_matrix, as_vector, check_q, dual_exponent, lq_norm_cols, operator_norm_estimate, svd
from .errors import DimensionError, DomainError, InfeasibleError, UnsupportedNormError
from .simplex import min_l1_residual


class Status(str, enum.Enum):
    CONVERGED = "converged"
    ITER_LIMIT = "iterlimit"


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 50000
    tol: float = 1e-9
    step_ratio: float = 1.0
    check_every: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if not self.step_ratio > 0:
            raise DomainError("step_ratio must be positive")
        if self.check_every < 1:
            raise DomainError("check_every must be at least 1")


@dataclass
class Solution:
    x_hat: np.ndarray
    objective: float
    residual_norm: float
    l1_norm: float
    iterations: int
    gap: float
    status: Status
    dual: np.ndarray | None = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


# -- proximal maps -----------------------------------------------------------

def prox_l1(v, t):
    """Soft thresholding: the proximal map of ``t * ||.||_1``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def project_l2_ball(v, center, r):
    v = np.asarray(v, dtype=float)
    d = v - center
    n = np.linalg.norm(d)
    if n <= r:
        return v.copy()
    return center + (r / n) * d


def project_linf_ball(v, center, r):
    v = np.asarray(v, dtype=float)
    return center + np.clip(v - center, -r, r)


def project_l1_ball(v, r):
    """Euclidean projection onto ``{z : ||z||_1 <= r}`` by sorted threshold search."""
    v = np.asarray(v, dtype=float)
    return _project_l1_cols(v.reshape(-1, 1), np.array([float(r)])).reshape(v.shape)


def _project_l1_cols(V: np.ndarray, r: np.ndarray) -> np.ndarray:
    a = np.abs(V)
    out = V.copy()
    outside = a.sum(axis=0) > r
    if not np.any(outside):
        return out
    ao = a[:, outside]
    ro = r[outside]
    u = -np.sort(-ao, axis=0)
    css = np.cumsum(u, axis=0)
    j = np.arange(1, u.shape[0] + 1)[:, None]
    cond = u - (css - ro) / j > 0
    cond[0] = True  # exact for r > 0, lost to rounding when r is tiny
    # the last index where cond holds; cond is true for a prefix
    rho = u.shape[0] - 1 - np.argmax(cond[::-1], axis=0)
    theta = (css[rho, np.arange(u.shape[1])] - ro) / (rho + 1)
    theta = np.maximum(theta, 0.0)
    out[:, outside] = np.sign(V[:, outside]) * np.maximum(ao - theta, 0.0)
    zero = outside.copy()
    zero[outside] = ro <= 0
    out[:, zero] = 0.0
    return out


def _project_ball_cols(V: np.ndarray, r: np.ndarray, q: float) -> np.ndarray:
    """Column-wise projection onto the centered l_q ball of radius ``r``."""
    if q == math.inf:
        return np.clip(V, -r, r)
    if q == 2.0:
        n = np.sqrt(np.sum(V * V, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(n > r, r / np.where(n > 0, n, 1.0), 1.0)
        return V * scale
    return _project_l1_cols(V, np.broadcast_to(r, (V.shape[1],)).astype(float))


# -- problem definitions -----------------------------------------------------

@dataclass
class _Problem:
    """Closed-form pieces of one decoder, all column-wise over a batch."""

    Y: np.ndarray
    prox_g: Callable[[np.ndarray, np.ndarray], np.ndarray]
    prox_fstar: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    # (Z, AZ, Y) -> primal objective per column
    primal: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    # (W, ATW, Y) -> lower bound per column after making W feasible
    dual: Callable[[np.ndarray, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    # (Z, AZ, Y) -> relative primal infeasibility per column
    infeas: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _scale_to_box(W, ATW):
    s = np.maximum(1.0, np.max(np.abs(ATW), axis=0)) if ATW.shape[0] else np.ones(W.shape[1])
    return W / s


def _no_infeas(Z, AZ, Y):
    return np.zeros(Z.shape[1])


def _rlasso_problem(Y, lam, q):
    qd = dual_exponent(q)

    def prox_fstar(V, sigma, Yc):
        return _project_ball_cols(V - sigma * Yc, lam, qd)

    def primal(Z, AZ, Yc):
        return np.sum(np.abs(Z), axis=0) + lam * lq_norm_cols(Yc - AZ, q)

    def dual(W, ATW, Yc):
        Wf = _scale_to_box(W, ATW)
        return -np.sum(Wf * Yc, axis=0), Wf

    return _Problem(Y, prox_l1, prox_fstar, primal, dual, _no_infeas)


def _bp_problem(Y):
    def prox_fstar(V, sigma, Yc):
        return V - sigma * Yc

    def primal(Z, AZ, Yc):
        return np.sum(np.abs(Z), axis=0)

    def dual(W, ATW, Yc):
        Wf = _scale_to_box(W, ATW)
        return -np.sum(Wf * Yc, axis=0), Wf

    def infeas(Z, AZ, Yc):
        r = np.sqrt(np.sum((AZ - Yc) ** 2, axis=0))
        yn = np.sqrt(np.sum(Yc * Yc, axis=0))
        return np.where(yn > 0, r / np.where(yn > 0, yn, 1.0), r / 1e-300)

    return _Problem(Y, prox_l1, prox_fstar, primal, dual, infeas)


def _bpdn_problem(Y, eps, q):
    qd = dual_exponent(q)

    def prox_fstar(V, sigma, Yc):
        # Moreau: prox_{s F*}(v) = v - s * P_{B(y, eps)}(v / s)
        U = V / sigma
        return V - sigma * (Yc + _project_ball_cols(U - Yc, eps, q))

    def primal(Z, AZ, Yc):
        return np.sum(np.abs(Z), axis=0)

    def dual(W, ATW, Yc):
        Wf = _scale_to_box(W, ATW)
        return -np.sum(Wf * Yc, axis=0) - eps * lq_norm_cols(Wf, qd), Wf

    def infeas(Z, AZ, Yc):
        res = lq_norm_cols(AZ - Yc, q)
        excess = np.maximum(res - eps * (1.0 + 1e-15), 0.0)
        return excess / (eps + lq_norm_cols(Yc, q) + 1e-300)

    return _Problem(Y, prox_l1, prox_fstar, primal, dual, infeas)


def _clr_problem(Y, tau_budget, q):
    qd = dual_exponent(q)

    def prox_g(V, t):
        return _project_l1_cols(V, np.full(V.shape[1], tau_budget))

    def prox_fstar(V, sigma, Yc):
        return _project_ball_cols(V - sigma * Yc, 1.0, qd)

    def primal(Z, AZ, Yc):
        return lq_norm_cols(AZ - Yc, q)

    def dual(W, ATW, Yc):
        return -np.sum(W * Yc, axis=0) - tau_budget * np.max(np.abs(ATW), axis=0), W

    return _Problem(Y, prox_g, prox_fstar, primal, dual, _no_infeas)


# -- engine ------------------------------------------------------------------

_SUFFICIENT = 0.2
_NECESSARY = 0.8
_ARTIFICIAL = 0.36


def _step_norm(A: np.ndarray) -> float:
    if not np.any(A):
        return 1.0
    # power iteration never overestimates; the margin keeps sigma*tau*||A||^2 < 1
    return 1.01 * operator_norm_estimate(A, tol=1e-8, max_iter=5000)


def _run_pdhg(A: np.ndarray, prob: _Problem, cfg: SolverConfig):
    """Batched restarted PDHG over the columns of ``prob.Y``.

    Returns ``(Z, W, iterations, gap, converged)`` with one entry per column;
    ``W`` is the feasibility-rescaled dual witness.
    """
    M, N = A.shape
    K = prob.Y.shape[1]
    eta = 0.99 / _step_norm(A)

    Z_out = np.zeros((N, K))
    W_out = np.zeros((M, K))
    it_out = np.full(K, cfg.max_iter, dtype=int)
    gap_out = np.full(K, np.inf)
    conv_out = np.zeros(K, dtype=bool)

    def measure(Zx, Wx, AZx, Yx):
        ATW = A.T @ Wx
        P = prob.primal(Zx, AZx, Yx)
        D, Wf = prob.dual(Wx, ATW, Yx)
        gap = (P - D) / (1.0 + np.abs(P))
        return gap, prob.infeas(Zx, AZx, Yx), Wf

    active = np.arange(K)
    Yc = prob.Y.copy()
    Z = np.zeros((N, K))
    W = np.zeros((M, K))
    AZ = np.zeros((M, K))
    AZbar = AZ.copy()
    omega = np.full(K, float(cfg.step_ratio))
    Zsum = np.zeros_like(Z)
    Wsum = np.zeros_like(W)
    n_avg = np.zeros(K)
    Z_anchor, W_anchor = Z.copy(), W.copy()
    err_anchor = np.full(K, np.inf)
    err_prev = np.full(K, np.inf)
    since = np.zeros(K)

    k = 0
    while k < cfg.max_iter and active.size:
        tau = eta / omega
        sigma = eta * omega
        steps = min(cfg.check_every, cfg.max_iter - k)
        for _ in range(steps):
            W = prob.prox_fstar(W + sigma * AZbar, sigma, Yc)
            Zn = prob.prox_g(Z - tau * (A.T @ W), tau)
            AZn = A @ Zn
            AZbar = 2.0 * AZn - AZ
            Z, AZ = Zn, AZn
            Zsum += Z
            Wsum += W
        k += steps
        n_avg += steps
        since += steps

        gap_c, feas_c, Wf_c = measure(Z, W, AZ, Yc)
        Za = Zsum / n_avg
        Wa = Wsum / n_avg
        AZa = A @ Za
        gap_a, feas_a, Wf_a = measure(Za, Wa, AZa, Yc)
        err_c = np.abs(gap_c) + feas_c
        err_a = np.abs(gap_a) + feas_a
        use_avg = err_a < err_c
        err = np.where(use_avg, err_a, err_c)

        ok_c = (gap_c <= cfg.tol) & (feas_c <= cfg.tol)
        ok_a = (gap_a <= cfg.tol) & (feas_a <= cfg.tol)
        done = ok_c | ok_a
        if np.any(done):
            pick_a = ok_a & (~ok_c | (err_a < err_c))
            cols = active[done]
            sel_a = pick_a[done]
            Z_out[:, cols] = np.where(sel_a, Za[:, done], Z[:, done])
            W_out[:, cols] = np.where(sel_a, Wf_a[:, done], Wf_c[:, done])
            gap_out[cols] = np.where(sel_a, gap_a[done], gap_c[done])
            it_out[cols] = k
            conv_out[cols] = True

        if k >= cfg.max_iter:
            last = ~done
            cols = active[last]
            Z_out[:, cols] = np.where(use_avg[last], Za[:, last], Z[:, last])
            W_out[:, cols] = np.where(use_avg[last], Wf_a[:, last], Wf_c[:, last])
            gap_out[cols] = np.where(use_avg[last], gap_a[last], gap_c[last])
            break

        # adaptive restart to the better of current and average iterate
        restart = (
            (err <= _SUFFICIENT * err_anchor)
            | ((err <= _NECESSARY * err_anchor) & (err > err_prev))
            | (since >= _ARTIFICIAL * k)
        )
        err_prev = err
        if np.any(restart):
            Zr = np.where(use_avg, Za, Z)
            Wr = np.where(use_avg, Wa, W)
            dz = np.sqrt(np.sum((Zr - Z_anchor) ** 2, axis=0))
            dw = np.sqrt(np.sum((Wr - W_anchor) ** 2, axis=0))
            upd = restart & (dz > 1e-10) & (dw > 1e-10)
            with np.errstate(divide="ignore", invalid="ignore"):
                new_omega = np.exp(0.5 * np.log(np.where(upd, dw / np.where(upd, dz, 1.0), 1.0)) + 0.5 * np.log(omega))
            omega = np.where(upd, new_omega, omega)
            Z = np.where(restart, Zr, Z)
            W = np.where(restart, Wr, W)
            AZ = np.where(restart, np.where(use_avg, AZa, AZ), AZ)
            AZbar = np.where(restart, AZ, AZbar)
            Zsum = np.where(restart, 0.0, Zsum)
            Wsum = np.where(restart, 0.0, Wsum)
            n_avg = np.where(restart, 0.0, n_avg)
            Z_anchor = np.where(restart, Z, Z_anchor)
            W_anchor = np.where(restart, W, W_anchor)
            err_anchor = np.where(restart, err, err_anchor)
            err_prev = np.where(restart, np.inf, err_prev)
            since = np.where(restart, 0.0, since)

        if np.any(done):
            keep = ~done
            active = active[keep]
            Yc, Z, W, AZ, AZbar = Yc[:, keep], Z[:, keep], W[:, keep], AZ[:, keep], AZbar[:, keep]
            Zsum, Wsum, Z_anchor, W_anchor = Zsum[:, keep], Wsum[:, keep], Z_anchor[:, keep], W_anchor[:, keep]
            omega, n_avg, err_anchor, err_prev, since = (
                omega[keep], n_avg[keep], err_anchor[keep], err_prev[keep], since[keep])
    return Z_out, W_out, it_out, gap_out, conv_out


# -- decoders ----------------------------------------------------------------

def _check_system(A, Y):
    A = as_matrix(A)
    Y = np.asarray(Y, dtype=float)
    single = Y.ndim == 1
    Y2 = Y.reshape(-1, 1) if single else Y
    if Y2.ndim != 2 or Y2.shape[0] != A.shape[0]:
        raise DimensionError(f"y has {Y2.shape[0]} rows but A has {A.shape[0]}")
    if not np.all(np.isfinite(Y2)):
        raise DimensionError("y has non-finite entries")
    return A, Y2, single


def _fidelity_q(q) -> float:
    q = check_q(q)
    if q not in (1.0, 2.0):
        raise UnsupportedNormError("decoders support q in {1, 2}")
    return q


def _package(A, Y, q, Z, W, its, gaps, conv, objective):
    AZ = A @ Z
    res = lq_norm_cols(Y - AZ, q)
    l1 = np.sum(np.abs(Z), axis=0)
    obj = objective(l1, res)
    return [
        Solution(
            x_hat=Z[:, j].copy(),
            objective=float(obj[j]),
            residual_norm=float(res[j]),
            l1_norm=float(l1[j]),
            iterations=int(its[j]),
            gap=float(gaps[j]),
            status=Status.CONVERGED if conv[j] else Status.ITER_LIMIT,
            dual=W[:, j].copy(),
        )
        for j in range(Z.shape[1])
    ]


def solve_rlasso_batch(A, Y, lam: float, q=2, cfg: SolverConfig | None = None) -> list[Solution]:
    """rLASSO for every column of ``Y`` with a shared matrix and tuning parameter."""
    cfg = cfg or SolverConfig()
    q = _fidelity_q(q)
    if lam < 0:
        raise DomainError("lambda must be nonnegative")
    A, Y, _ = _check_system(A, Y)
    lam = float(lam)
    out = _run_pdhg(A, _rlasso_problem(Y, lam, q), cfg)
    return _package(A, Y, q, *out, objective=lambda l1, res: l1 + lam * res)


def solve_rlasso(A, y, lam: float, q=2, cfg: SolverConfig | None = None) -> Solution:
    """Minimise ``||z||_1 + lam * ||y - A z||_q``."""
    return solve_rlasso_batch(A, as_vector(y, "y"), lam, q, cfg)[0]


def solve_bp(A, y, cfg: SolverConfig | None = None) -> Solution:
    """Basis pursuit: minimise ``||z||_1`` subject to ``A z = y``.

    Raises InfeasibleError when ``y`` is detectably outside the range of ``A``.
    """
    cfg = cfg or SolverConfig()
    A, Y, _ = _check_system(A, as_vector(y, "y"))
    fac = svd(A)
    if fac.rank < A.shape[0]:
        y0 = Y[:, 0]
        miss = np.linalg.norm(y0 - fac.U @ (fac.U.T @ y0))
        if miss > max(cfg.tol, 1e-10) * max(1.0, np.linalg.norm(y0)):
            raise InfeasibleError(f"y is outside the range of A (distance {miss:.3e})")
    out = _run_pdhg(A, _bp_problem(Y), cfg)
    return _package(A, Y, 2.0, *out, objective=lambda l1, res: l1)[0]


def _min_residual(A, y, q) -> float:
    fac = svd(A)
    if fac.rank == A.shape[0]:
        return 0.0
    if q == 2.0:
        return float(np.linalg.norm(y - fac.U @ (fac.U.T @ y)))
    return min_l1_residual(A, y)


def solve_bpdn(A, y, epsilon: float, q=2, cfg: SolverConfig | None = None) -> Solution:
    """Minimise ``||z||_1`` subject to ``||A z - y||_q <= epsilon``."""
    cfg = cfg or SolverConfig()
    q = _fidelity_q(q)
    if epsilon < 0:
        raise DomainError("epsilon must be nonnegative")
    A, Y, _ = _check_system(A, as_vector(y, "y"))
    floor = _min_residual(A, Y[:, 0], q)
    if epsilon < floor * (1.0 - 1e-9) - 1e-12:
        raise InfeasibleError(f"epsilon={epsilon} is below the minimal residual {floor:.6g}")
    out = _run_pdhg(A, _bpdn_problem(Y, float(epsilon), q), cfg)
    return _package(A, Y, q, *out, objective=lambda l1, res: l1)[0]


def solve_clr(A, y, tau_budget: float, q=2, cfg: SolverConfig | None = None) -> Solution:
    """Minimise ``||A z - y||_q`` subject to ``||z||_1 <= tau_budget``."""
    cfg = cfg or SolverConfig()
    q = _fidelity_q(q)
    if tau_budget < 0:
        raise DomainError("tau_budget must be nonnegative")
    A, Y, _ = _check_system(A, as_vector(y, "y"))
    out = _run_pdhg(A, _clr_problem(Y, float(tau_budget), q), cfg)
    return _package(A, Y, q, *out, objective=lambda l1, res: res)[0]
