"""Dense linear algebra helpers: norms, supports, S-term approximation, SVD.

Matrices and vectors are plain ``numpy`` float64 arrays. Supports are
0-based index collections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import DimensionError, DomainError, NumericalError, RankDeficientError, UnsupportedNormError

SUPPORTED_Q = (1.0, 2.0, math.inf)


def check_q(q) -> float:
    """Normalise a norm exponent, accepting 1, 2, inf and their string forms."""
    if isinstance(q, str):
        q = q.strip().lower()
        q = math.inf if q in ("inf", "infinity") else q
    try:
        q = float(q)
    except (TypeError, ValueError):
        raise UnsupportedNormError(f"unsupported norm exponent {q!r}") from None
    if q not in SUPPORTED_Q:
        raise UnsupportedNormError(f"unsupported norm exponent {q!r}; use 1, 2 or inf")
    return q


def dual_exponent(q: float) -> float:
    q = check_q(q)
    if q == 1.0:
        return math.inf
    if q == math.inf:
        return 1.0
    return 2.0


def as_vector(v, name: str = "v") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def as_matrix(A, name: str = "A") -> np.ndarray:
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def lq_norm(v, q=2) -> float:
    q = check_q(q)
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    if q == 1.0:
        return float(np.sum(np.abs(v)))
    if q == 2.0:
        return float(np.linalg.norm(v.ravel()))
    return float(np.max(np.abs(v)))


def lq_norm_cols(V: np.ndarray, q) -> np.ndarray:
    """Column-wise l_q norms of a 2-D array."""
    q = check_q(q)
    if q == 1.0:
        return np.sum(np.abs(V), axis=0)
    if q == 2.0:
        return np.sqrt(np.sum(V * V, axis=0))
    return np.max(np.abs(V), axis=0)


def _support_mask(T: Iterable[int], n: int) -> np.ndarray:
    idx = np.asarray(sorted(set(int(t) for t in T)), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise IndexError(f"support {idx.tolist()} out of range for length {n}")
    mask = np.zeros(n, dtype=bool)
    mask[idx] = True
    return mask


def project_support(v, T: Iterable[int]) -> np.ndarray:
    """Keep the entries of ``v`` indexed by ``T`` and zero the rest."""
    v = as_vector(v)
    mask = _support_mask(T, v.size)
    return np.where(mask, v, 0.0)


def complement(T: Iterable[int], n: int) -> list[int]:
    mask = _support_mask(T, n)
    return np.flatnonzero(~mask).tolist()


def best_s_term(v, S: int, q=2) -> tuple[np.ndarray, float]:
    """Best S-term approximation and its l_q distance.

    Keeps the ``S`` entries of largest magnitude; ties go to the lower index.
    """
    v = as_vector(v)
    if not 1 <= S <= v.size:
        raise DimensionError(f"S={S} must lie in [1, {v.size}]")
    order = np.argsort(-np.abs(v), kind="stable")
    approx = np.zeros_like(v)
    keep = order[:S]
    approx[keep] = v[keep]
    return approx, lq_norm(v - approx, q)


@dataclass(frozen=True)
class SvdFactorization:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.singular_values) @ self.V.T


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    # circle method: n-1 rounds of n/2 disjoint pairs; n must be even
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi_columns(G: np.ndarray, max_sweeps: int) -> tuple[np.ndarray, np.ndarray]:
    """One-sided Jacobi: rotate the columns of G to mutual orthogonality.

    Returns the rotated G and the accumulated orthogonal rotation W with
    G_in @ W == G_out.
    """
    m, n = G.shape
    odd = n % 2 == 1
    if odd:
        G = np.hstack([G, np.zeros((m, 1))])
    n_pad = G.shape[1]
    W = np.eye(n_pad)
    eps = np.finfo(float).eps
    threshold = eps * m
    rounds = _round_robin(n_pad) if n_pad > 1 else []
    for _ in range(max_sweeps):
        off = 0.0
        for p, q in rounds:
            gp = G[:, p]
            gq = G[:, q]
            alpha = np.einsum("ij,ij->j", gp, gp)
            beta = np.einsum("ij,ij->j", gq, gq)
            gamma = np.einsum("ij,ij->j", gp, gq)
            scale = np.sqrt(alpha * beta)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(scale > 0, np.abs(gamma) / scale, 0.0)
            if rel.size:
                off = max(off, float(rel.max()))
            active = rel > threshold
            if not np.any(active):
                continue
            zeta = np.where(active, (beta - alpha) / np.where(active, 2.0 * gamma, 1.0), 0.0)
            t = np.where(active, np.sign(zeta + (zeta == 0)) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta)), 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            G[:, p], G[:, q] = c * gp - s * gq, s * gp + c * gq
            wp = W[:, p]
            wq = W[:, q]
            W[:, p], W[:, q] = c * wp - s * wq, s * wp + c * wq
        if off <= threshold:
            break
    else:
        raise NumericalError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")
    if odd:
        G = G[:, :n]
        W = W[:n, :n]
    return G, W


def svd(A, max_sweeps: int = 60) -> SvdFactorization:
    """Thin SVD of ``A`` by one-sided Jacobi on its taller orientation.

    Singular values at or below ``max(M, N) * eps * sigma_max`` are dropped,
    so ``rank`` is the numerical rank.
    """
    A = as_matrix(A)
    M, N = A.shape
    transposed = M < N
    G = (A.T if transposed else A).copy()
    G, W = _jacobi_columns(G, max_sweeps)
    sigma = np.sqrt(np.einsum("ij,ij->j", G, G))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    G = G[:, order]
    W = W[:, order]
    smax = sigma[0] if sigma.size else 0.0
    cutoff = max(M, N) * np.finfo(float).eps * smax
    r = int(np.sum(sigma > cutoff)) if smax > 0 else 0
    left = G[:, :r] / sigma[:r]
    right = W[:, :r]
    if transposed:
        # A.T = left diag(sigma) right.T  =>  A = right diag(sigma) left.T
        return SvdFactorization(U=right, singular_values=sigma[:r].copy(), V=left)
    return SvdFactorization(U=left, singular_values=sigma[:r].copy(), V=right)


def pseudoinverse_of_transpose(A) -> np.ndarray:
    """Moore-Penrose inverse of ``A.T`` for surjective ``A`` (shape M x N)."""
    A = as_matrix(A)
    fac = svd(A)
    if fac.rank < A.shape[0]:
        raise RankDeficientError(f"A has rank {fac.rank} < M={A.shape[0]}")
    return (fac.U / fac.singular_values) @ fac.V.T


def inf_to_inf_norm(B) -> float:
    """Maximum absolute row sum."""
    B = np.asarray(B, dtype=float)
    return float(np.max(np.sum(np.abs(B), axis=1)))


def operator_norm_estimate(A, tol: float = 1e-6, max_iter: int = 1000, seed: int = 0) -> float:
    """Largest singular value by power iteration on ``A.T @ A``.

    The returned value is ``||A v||`` for a unit vector ``v``, hence never
    above the true norm.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    A = np.asarray(A, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    best = 0.0
    prev = 0.0
    for _ in range(max_iter):
        Av = A @ v
        est = float(np.linalg.norm(Av))
        best = max(best, est)
        w = A.T @ Av
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if abs(est - prev) <= tol * est * 1e-2:
            break
        prev = est
    return best


def least_squares_residual(A, y, q=2) -> float:
    """``min_z ||A z - y||_2`` via the SVD range projection (q=2 only meaningful)."""
    A = as_matrix(A)
    y = as_vector(y, "y")
    fac = svd(A)
    r = y - fac.U @ (fac.U.T @ y)
    return lq_norm(r, q)


# -- text I/O ---------------------------------------------------------------

def write_matrix(A, path) -> None:
    """Write ``M N`` then one row per line using shortest round-trip floats."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise DimensionError(f"{path}: missing 'M N' header")
    M, N = int(tokens[0]), int(tokens[1])
    values = tokens[2:]
    if len(values) != M * N:
        raise DimensionError(f"{path}: expected {M * N} entries, found {len(values)}")
    return as_matrix(np.array([float(x) for x in values]).reshape(M, N))


def write_vector(v, path) -> None:
    write_matrix(np.asarray(v, dtype=float).reshape(-1, 1), path)


def read_vector(path) -> np.ndarray:
    A = read_matrix(path)
    if 1 not in A.shape:
        raise DimensionError(f"{path}: a vector file needs a single row or column, got {A.shape}")
    return A.ravel()
