"""Seeded random measurement matrices, sparse signals and noise.

Every generator draws from ``numpy.random.Philox`` (a counter-based
64-bit generator) keyed by the caller's seed, so identical arguments give
bit-identical output regardless of scheduling. Per-trial streams use
``derive_seed(seed, k) = seed XOR k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import check_q
from .errors import DimensionError, DomainError, UnsupportedNormError

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & SEED_MASK))


def derive_seed(seed: int, k: int) -> int:
    return (int(seed) ^ int(k)) & SEED_MASK


@dataclass(frozen=True)
class GraphSpec:
    M: int
    N: int
    D: int

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise DimensionError("M and N must be positive")
        if not 1 <= self.D <= self.M:
            raise DimensionError(f"left degree D={self.D} must lie in [1, M={self.M}]")


def gaussian_matrix(M: int, N: int, seed: int) -> np.ndarray:
    """i.i.d. N(0, 1/M) entries."""
    if M < 1 or N < 1:
        raise DimensionError("M and N must be positive")
    return make_rng(seed).standard_normal((M, N)) / np.sqrt(M)


def lrbg_matrix(spec: GraphSpec, seed: int) -> np.ndarray:
    """Random walk matrix of a uniformly drawn D-left regular bipartite graph.

    Each column gets D distinct rows chosen by a partial Fisher-Yates
    shuffle; those entries are 1/D.
    """
    M, N, D = spec.M, spec.N, spec.D
    rng = make_rng(seed)
    perm = np.tile(np.arange(M), (N, 1))
    cols = np.arange(N)
    for i in range(D):
        j = rng.integers(i, M, size=N)
        perm[cols, i], perm[cols, j] = perm[cols, j], perm[cols, i]
    A = np.zeros((M, N))
    A[perm[:, :D].T, cols] = 1.0 / D
    return A


def _sphere_direction(rng: np.random.Generator, n: int, q: float) -> np.ndarray:
    if q == 2.0:
        g = rng.standard_normal(n)
        return g / np.linalg.norm(g)
    # Dirichlet(1,...,1) magnitudes with independent signs is uniform on the l1 sphere
    e = rng.standard_exponential(n)
    signs = np.where(rng.integers(0, 2, size=n) == 1, 1.0, -1.0)
    return signs * e / np.sum(e)


def _check_sampling_q(q) -> float:
    q = check_q(q)
    if q not in (1.0, 2.0):
        raise UnsupportedNormError("sphere sampling supports q in {1, 2}")
    return q


def sparse_signal_on_sphere(N: int, S: int, q, seed: int) -> np.ndarray:
    """Uniform draw from the S-sparse vectors on the l_q unit sphere."""
    q = _check_sampling_q(q)
    if not 1 <= S <= N:
        raise DimensionError(f"S={S} must lie in [1, N={N}]")
    rng = make_rng(seed)
    support = np.sort(rng.permutation(N)[:S])
    x = np.zeros(N)
    x[support] = _sphere_direction(rng, S, q)
    return x


def noise_on_sphere(M: int, q, radius: float, seed: int) -> np.ndarray:
    """Uniform draw from the l_q sphere of the given radius in R^M."""
    q = _check_sampling_q(q)
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    if radius == 0:
        return np.zeros(M)
    return radius * _sphere_direction(make_rng(seed), M, q)
