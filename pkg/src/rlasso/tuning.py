"""Closed-form tuning parameters, recovery thresholds and error-bound constants."""
from __future__ import annotations

import enum
import math
from decimal import ROUND_CEILING, Decimal
from dataclasses import dataclass, field

from .core import check_q, inf_to_inf_norm, pseudoinverse_of_transpose
from .errors import DomainError, InsufficientMeasurementsError, ThresholdError, UnsupportedNormError


@dataclass(frozen=True)
class NspConstants:
    """Order ``S``, stableness ``rho`` and robustness ``tau`` of an l_q robust NSP."""

    q: float
    S: int
    rho: float
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "q", check_q(self.q))
        if self.S < 1:
            raise DomainError("S must be at least 1")
        if not 0.0 <= self.rho < 1.0:
            raise DomainError(f"rho={self.rho} must lie in [0, 1)")
        if not self.tau > 0:
            raise DomainError(f"tau={self.tau} must be positive")

    @property
    def scale(self) -> float:
        """``tau * S^(1 - 1/q)``, the minimal admissible tuning parameter."""
        return self.tau * self.S ** (1.0 - 1.0 / self.q)


class TuningSource(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPANDER = "expander"
    EQ1 = "eq1"
    FINITE_CONVERGENCE = "lambda-inf"


@dataclass(frozen=True)
class TuningReport:
    lam: float
    source: TuningSource
    inputs: dict = field(default_factory=dict)
    tau: float | None = None

    def to_dict(self) -> dict:
        out = {"lambda": self.lam, "source": self.source.value, **self.inputs}
        if self.tau is not None:
            out["tau"] = self.tau
        return out


def rho_prime(lam: float, c: NspConstants) -> float:
    """Effective stableness constant for an rLASSO run with parameter ``lam``.

    Requires ``lam > tau * S^(1-1/q)``; the result lies in ``[rho, 1)``.
    """
    a = c.scale
    if not lam > a:
        raise ThresholdError(f"lambda={lam} must exceed tau*S^(1-1/q)={a}")
    if c.q == 1.0:
        candidate = 2.0 * c.tau / lam - 1.0
    else:
        candidate = a / (2.0 * lam) * (1.0 + math.sqrt(8.0 * lam / a + 1.0)) - 1.0
    return max(c.rho, candidate)


def lambda_threshold_eq1(c: NspConstants) -> float:
    """Smallest ``lam`` whose effective stableness constant equals ``rho``."""
    if c.q == 1.0:
        return 2.0 * c.tau / (1.0 + c.rho)
    return (3.0 + c.rho) / (1.0 + c.rho) ** 2 * c.scale


def error_bound_coeffs(rho_eff: float, c: NspConstants, lam: float) -> tuple[float, float]:
    """Coefficients ``(C, D)`` of the bound ``C S^(1/q-1) d_1(x) + D ||e||``."""
    if not 0.0 <= rho_eff < 1.0:
        raise DomainError(f"rho_eff={rho_eff} must lie in [0, 1)")
    r = rho_eff
    if c.q == 1.0:
        C = 2.0 * (1.0 + r) / (1.0 - r)
        D = 2.0 * c.tau / (1.0 - r) + (1.0 + r) / (1.0 - r) * lam
    else:
        C = 2.0 * (1.0 + r) ** 2 / (1.0 - r)
        D = (3.0 + r) / (1.0 - r) * c.tau + (1.0 + r) ** 2 / (1.0 - r) * c.S ** (1.0 / c.q - 1.0) * lam
    return C, D


def gordon_constant(M: int) -> float:
    """Expected l2 norm of an M-vector of i.i.d. N(0, 1/M) entries."""
    if M < 1:
        raise DomainError("M must be positive")
    if M < 200:
        return math.sqrt(2.0 / M) * math.exp(math.lgamma((M + 1) / 2.0) - math.lgamma(M / 2.0))
    # lgamma differences cancel badly for large M; the asymptotic series is exact to rounding here
    t = 1.0 / M
    return 1.0 + t * (-1 / 4 + t * (1 / 32 + t * (5 / 128 + t * (-21 / 2048 + t * (-399 / 8192)))))


def gaussian_tau(M: int, N: int, S: int, rho: float, eta: float) -> float:
    """Robustness constant of the l2-RNSP that a Gaussian matrix has with probability 1 - eta."""
    if not 0.0 < rho < 1.0:
        raise DomainError("rho must lie in (0, 1)")
    if not 0.0 < eta < 1.0:
        raise DomainError("eta must lie in (0, 1)")
    if not 1 <= S <= N:
        raise DomainError("S must lie in [1, N]")
    ratio = S / M
    spread = math.sqrt(1.0 + (1.0 + 1.0 / rho) ** 2)
    inner = (
        gordon_constant(M)
        - spread * (math.sqrt(2.0 * ratio * math.log(math.e * N / S)) + math.sqrt(ratio))
        - math.sqrt(2.0 / M * math.log(1.0 / eta))
    )
    if not inner > 0:
        raise InsufficientMeasurementsError(
            f"phase-transition expression is {inner:.4g} <= 0 for M={M}, N={N}, S={S}")
    return 1.0 / inner


def gaussian_lambda(M: int, N: int, S: int, rho: float, eta: float) -> TuningReport:
    """Tuning parameter for N(0, 1/M) matrices from the dimensions alone."""
    tau = gaussian_tau(M, N, S, rho, eta)
    lam = (3.0 + rho) / (1.0 + rho) ** 2 * tau * math.sqrt(S)
    return TuningReport(lam, TuningSource.GAUSSIAN,
                        {"M": M, "N": N, "S": S, "rho": rho, "eta": eta}, tau=tau)


def eq1_lambda(c: NspConstants) -> TuningReport:
    return TuningReport(lambda_threshold_eq1(c), TuningSource.EQ1,
                        {"q": c.q, "S": c.S, "rho": c.rho, "tau": c.tau})


def lambda_infinity_bound(A, p=2) -> float:
    """Computable upper bound ``M^(1/p) ||(A^T)^+||_{inf->inf}`` on the finite-convergence level."""
    p = check_q(p)
    if p not in (1.0, 2.0):
        raise UnsupportedNormError("p must be 1 or 2")
    B = pseudoinverse_of_transpose(A)
    return B.shape[0] ** (1.0 / p) * inf_to_inf_norm(B)


@dataclass(frozen=True)
class ExpanderTuning:
    constants: NspConstants
    lam: float
    D: int
    M_min: int


def expander_constants(theta: float, N: int, S: int) -> ExpanderTuning:
    """Constants for random D-left regular bipartite graphs with expansion ``theta``."""
    if not 0.0 < theta < 1.0 / 6.0:
        raise DomainError("theta must lie in (0, 1/6)")
    if not 1 <= S or 2 * S > N:
        raise DomainError("need 1 <= S and 2S <= N")
    rho = 2.0 * theta / (1.0 - 4.0 * theta)
    tau = 1.0 / (1.0 - 4.0 * theta)
    log_term = math.log(math.e * N / (2.0 * S))
    D = math.ceil(2.0 / theta * log_term)
    # exp(2/theta) leaves the float range for theta below ~0.003
    big = Decimal(4.0 / theta) * Decimal(2.0 / theta).exp() * S * Decimal(log_term)
    M_min = int(big.to_integral_value(rounding=ROUND_CEILING))
    return ExpanderTuning(NspConstants(1.0, S, rho, tau), 2.0 / (1.0 - 2.0 * theta), D, M_min)


def expander_report(theta: float, N: int, S: int) -> TuningReport:
    t = expander_constants(theta, N, S)
    return TuningReport(t.lam, TuningSource.EXPANDER,
                        {"theta": theta, "N": N, "S": S, "rho": t.constants.rho,
                         "D": t.D, "M_min": t.M_min}, tau=t.constants.tau)


def lambda_infinity_report(A, p=2) -> TuningReport:
    return TuningReport(lambda_infinity_bound(A, p), TuningSource.FINITE_CONVERGENCE,
                        {"M": int(A.shape[0]), "N": int(A.shape[1]), "p": check_q(p)})
