import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from rlasso.errors import (
    DomainError,
    InsufficientMeasurementsError,
    RankDeficientError,
    ThresholdError,
    UnsupportedNormError,
)
from rlasso.tuning import (
    NspConstants,
    TuningSource,
    error_bound_coeffs,
    expander_constants,
    expander_report,
    gaussian_lambda,
    gaussian_tau,
    gordon_constant,
    lambda_infinity_bound,
    lambda_threshold_eq1,
    rho_prime,
)


@pytest.mark.parametrize("q,S,rho,tau,lam,expected", [
    (1, 1, 0.0, 1.0, 2.0, 0.0),
    (1, 1, 0.2, 1.0, 1.5, 1 / 3),
    (2, 1, 0.0, 1.0, 3.0, 0.0),
])
def test_rho_prime_examples(q, S, rho, tau, lam, expected):
    assert rho_prime(lam, NspConstants(q, S, rho, tau)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("q", [1, 2])
def test_rho_prime_threshold(q):
    c = NspConstants(q, 4, 0.1, 1.0)
    with pytest.raises(ThresholdError):
        rho_prime(c.scale, c)


@pytest.mark.parametrize("q,rho,tau,S,expected", [
    (1, 1 / 3, 5 / 3, 1, 2.5),
    (2, 0.0, 1.0, 4, 6.0),
    (1, 0.999999, 1.0, 1, 1.0),
])
def test_eq1_threshold_examples(q, rho, tau, S, expected):
    assert lambda_threshold_eq1(NspConstants(q, S, rho, tau)) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("q,rho,tau,S,lam,C,D", [
    (1, 1 / 3, 5 / 3, 1, 2.5, 4.0, 10.0),
    (1, 0.0, 1.0, 1, 2.0, 2.0, 4.0),
    (2, 0.0, 1.0, 1, 3.0, 2.0, 6.0),
])
def test_error_bound_examples(q, rho, tau, S, lam, C, D):
    got = error_bound_coeffs(rho, NspConstants(q, S, rho, tau), lam)
    assert got == pytest.approx((C, D), rel=1e-14)


def test_error_bound_domain():
    with pytest.raises(DomainError):
        error_bound_coeffs(1.0, NspConstants(1, 1, 0.5, 1.0), 3.0)


@given(st.sampled_from([1, 2, math.inf]), st.integers(1, 64), st.floats(0, 0.99), st.floats(0.01, 10),
       st.floats(1.0001, 20))
def test_eq1_is_exactly_where_rho_prime_stops_moving(q, S, rho, tau, factor):
    c = NspConstants(q, S, rho, tau)
    lam = factor * c.scale
    thr = lambda_threshold_eq1(c)
    assume(abs(lam - thr) > 1e-9 * thr)
    rp = rho_prime(lam, c)
    assert rho <= rp < 1
    assert (lam > thr) == (rp == rho)


@pytest.mark.parametrize("q", [1, 2])
def test_rho_prime_tends_to_one_at_threshold(q):
    c = NspConstants(q, 9, 0.0, 1.0)
    assert rho_prime(c.scale * (1 + 1e-9), c) > 1 - 1e-6


def test_gordon_examples():
    assert gordon_constant(1) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-10)
    assert gordon_constant(4) == pytest.approx(0.939986, abs=1e-6)
    assert math.sqrt(256 / 257) <= gordon_constant(256) <= 1


def test_gordon_bounds_and_monotone():
    Ms = np.unique(np.logspace(0, 6, 400).astype(int))
    vals = [gordon_constant(int(M)) for M in Ms]
    for M, E in zip(Ms, vals):
        assert math.sqrt(M / (M + 1)) <= E <= 1
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_gordon_is_expected_norm():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((200000, 5)) / math.sqrt(5)
    assert np.linalg.norm(g, axis=1).mean() == pytest.approx(gordon_constant(5), abs=3e-3)


def _gaussian_lambda_mp(M, N, S, rho, eta):
    mp.mp.dps = 40
    E = mp.sqrt(mp.mpf(2) / M) * mp.gamma(mp.mpf(M + 1) / 2) / mp.gamma(mp.mpf(M) / 2)
    spread = mp.sqrt(1 + (1 + 1 / mp.mpf(rho)) ** 2)
    r = mp.mpf(S) / M
    inner = E - spread * (mp.sqrt(2 * r * mp.log(mp.e * N / S)) + mp.sqrt(r)) - mp.sqrt(2 * mp.log(1 / mp.mpf(eta)) / M)
    return inner, (3 + mp.mpf(rho)) / (1 + mp.mpf(rho)) ** 2 / inner * mp.sqrt(S)


def test_gordon_against_high_precision():
    mp.mp.dps = 40
    for M in (1, 2, 3, 10, 199, 200, 257, 10**5, 10**8):
        exact = mp.sqrt(mp.mpf(2) / M) * mp.gamma(mp.mpf(M + 1) / 2) / mp.gamma(mp.mpf(M) / 2)
        assert gordon_constant(M) == pytest.approx(float(exact), rel=1e-12)


def test_gaussian_lambda_regression_anchor():
    rep = gaussian_lambda(256, 1024, 1, 0.9, 0.5)
    _, lam_mp = _gaussian_lambda_mp(256, 1024, 1, 0.9, 0.5)
    assert rep.lam == pytest.approx(float(lam_mp), rel=1e-12)
    assert rep.lam == pytest.approx(5.457616081594426, rel=1e-12)  # frozen
    assert rep.tau == pytest.approx(gaussian_tau(256, 1024, 1, 0.9, 0.5), rel=1e-15)
    assert rep.lam == pytest.approx(3.9 / 1.9**2 * rep.tau, rel=1e-14)
    assert rep.source is TuningSource.GAUSSIAN
    assert rep.to_dict()["eta"] == 0.5


def test_gaussian_lambda_two_sparse_is_infeasible_at_this_size():
    # the bracketed expression is about -0.0666 here, so no lambda is implied
    inner, _ = _gaussian_lambda_mp(256, 1024, 2, 0.9, 0.5)
    assert float(inner) == pytest.approx(-0.0666, abs=1e-3)
    with pytest.raises(InsufficientMeasurementsError):
        gaussian_lambda(256, 1024, 2, 0.9, 0.5)


@pytest.mark.parametrize("args", [(16, 1024, 8, 0.5, 0.01), (4, 4, 4, 0.999, 0.5)])
def test_gaussian_lambda_infeasible(args):
    with pytest.raises(InsufficientMeasurementsError):
        gaussian_lambda(*args)


@pytest.mark.parametrize("A,p,expected", [
    (np.eye(2), 1, 2.0),
    (np.eye(2), 2, math.sqrt(2)),
    (2 * np.eye(3), 1, 1.5),
])
def test_lambda_infinity_examples(A, p, expected):
    assert lambda_infinity_bound(A, p) == pytest.approx(expected, rel=1e-14)


def test_lambda_infinity_errors():
    with pytest.raises(RankDeficientError):
        lambda_infinity_bound(np.ones((2, 3)), 1)
    with pytest.raises(UnsupportedNormError):
        lambda_infinity_bound(np.eye(2), math.inf)


def test_expander_examples():
    t = expander_constants(0.1, 1024, 4)
    assert t.constants.rho == pytest.approx(1 / 3, rel=1e-15)
    assert t.constants.tau == pytest.approx(5 / 3, rel=1e-15)
    assert t.lam == pytest.approx(2.5, rel=1e-15)
    assert t.D == 118
    assert t.M_min == math.ceil(40 * math.exp(20) * 4 * math.log(128 * math.e))
    assert expander_constants(1 / 6 - 1e-12, 1024, 4).lam == pytest.approx(3, rel=1e-9)
    rep = expander_report(0.1, 1024, 4).to_dict()
    assert rep["lambda"] == 2.5 and rep["D"] == 118 and rep["source"] == "expander"


@pytest.mark.parametrize("theta", [0.0, 1 / 6, 0.3, -0.1])
def test_expander_theta_domain(theta):
    with pytest.raises(DomainError):
        expander_constants(theta, 1024, 4)


def test_expander_needs_room():
    with pytest.raises(DomainError):
        expander_constants(0.1, 6, 4)


@given(st.floats(1e-3, 1 / 6 - 1e-3))
def test_expander_bound_matches_general_theorem(theta):
    t = expander_constants(theta, 1024, 4)
    c = t.constants
    assert lambda_threshold_eq1(c) == pytest.approx(t.lam, rel=1e-12)
    C, D = error_bound_coeffs(rho_prime(t.lam, c), c, t.lam)
    assert C == pytest.approx(2 * (1 - 2 * theta) / (1 - 6 * theta), rel=1e-12)
    assert D == pytest.approx(4 / (1 - 6 * theta), rel=1e-12)


@pytest.mark.parametrize("kw", [dict(rho=1.0), dict(rho=-0.1), dict(tau=0.0), dict(S=0)])
def test_nsp_constants_validation(kw):
    base = dict(q=2, S=1, rho=0.5, tau=1.0)
    base.update(kw)
    with pytest.raises(DomainError):
        NspConstants(**base)
