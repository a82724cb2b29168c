import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twistrmt.special import (
    ZETA_PRIME_MINUS_ONE,
    DomainError,
    PoleError,
    barnes_g,
    log_barnes_g,
    log_gamma_complex,
    log_gamma_real,
)



@given(st.floats(0.01, 300.0))
def test_log_gamma_real_matches_mpmath(x):
    assert log_gamma_real(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-13, abs=1e-13)


@given(st.floats(-40.0, 60.0), st.floats(-200.0, 200.0))
def test_log_gamma_complex_matches_mpmath(re, im):
    z = complex(re, im)
    if abs(im) < 1e-3 and re <= 0 and abs(re - round(re)) < 1e-3:
        return
    got = log_gamma_complex(z)
    want = complex(mp.loggamma(mp.mpc(re, im)))
    # equal up to a multiple of 2 pi i
    diff = got - want
    assert abs(diff.real) <= 1e-11 * max(1.0, abs(want.real))
    k = round(diff.imag / (2 * math.pi))
    assert abs(diff.imag - 2 * math.pi * k) <= 1e-9 * max(1.0, abs(want))


def test_log_gamma_complex_vectorised():
    zs = np.array([0.5 + 1j, 3.0 - 2j, -2.5 + 0.1j])
    got = log_gamma_complex(zs)
    for z, g in zip(zs, got):
        assert np.exp(g) == pytest.approx(complex(mp.gamma(z)), rel=1e-12)


def test_gamma_poles():
    with pytest.raises(PoleError):
        log_gamma_complex(-3.0)
    with pytest.raises(PoleError):
        log_gamma_complex(0.0)


def test_log_gamma_real_domain():
    with pytest.raises((DomainError, PoleError)):
        log_gamma_real(-1.0)


@given(st.floats(0.05, 40.0))
def test_barnes_g_matches_mpmath(x):
    want = float(mp.log(mp.barnesg(x)))
    assert log_barnes_g(x) == pytest.approx(want, abs=1e-11 * max(1.0, abs(want)))


@given(st.floats(0.1, 30.0))
def test_barnes_functional_equation(x):
    # G(x + 1) = Gamma(x) G(x)
    lhs = log_barnes_g(x + 1.0)
    rhs = float(mp.loggamma(x)) + log_barnes_g(x)
    assert lhs == pytest.approx(rhs, abs=1e-10 * max(1.0, abs(lhs)))


def test_barnes_small_values():
    assert barnes_g(1.0) == pytest.approx(1.0, abs=1e-12)
    assert barnes_g(2.0) == pytest.approx(1.0, abs=1e-12)
    assert barnes_g(4.0) == pytest.approx(2.0, rel=1e-13)
    assert barnes_g(0.5) == pytest.approx(0.603244281209446, rel=1e-12)


def test_zeta_prime_constant():
    assert ZETA_PRIME_MINUS_ONE == pytest.approx(float(mp.zeta(-1, derivative=1)), rel=1e-14)
