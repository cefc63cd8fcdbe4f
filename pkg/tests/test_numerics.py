from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from painleve_tau.errors import CertificationError
from painleve_tau.numerics import (
    PrecisionContext,
    RationalSeries,
    as_fraction,
    certify,
    gamma,
    integrate_unit_interval,
    integrate_zero_to_infinity,
    lue_normalization,
    parse_number,
    to_mp,
)

from conftest import rel


def test_context_validation():
    with pytest.raises(ValueError):
        PrecisionContext(bits=32)
    with pytest.raises(ValueError):
        PrecisionContext(bits=256, max_bits=128)
    with pytest.raises(ValueError):
        PrecisionContext(tol=0)


def test_context_env_override(monkeypatch):
    monkeypatch.setenv("PAINLEVE_TAU_BITS", "512")
    assert PrecisionContext.from_env().bits == 512
    monkeypatch.setenv("PAINLEVE_TAU_BITS", "-3")
    with pytest.raises(ValueError):
        PrecisionContext.from_env()


def test_parse_and_convert():
    assert parse_number("-1/2") == Fraction(-1, 2)
    assert parse_number("1e-3") == Fraction(1, 1000)
    assert as_fraction(0.3) == Fraction(3, 10)
    with pytest.raises(ValueError):
        parse_number("abc")
    assert to_mp(Fraction(1, 3)) == mp.mpf(1) / 3


def test_certify_escalates_and_fails():
    ctx = PrecisionContext(bits=64, tol=1e-30, max_bits=1024)
    out = certify(lambda b: mp.mpf(1) / 3 if b < 200 else mp.mpf(1) / 3, ctx)
    assert out.bits >= 128

    # a result that keeps changing with precision never certifies
    with pytest.raises(CertificationError):
        certify(lambda b: mp.mpf(b), PrecisionContext(bits=64, tol=1e-10, max_bits=256))


def test_gamma_values(ctx):
    assert gamma(1, ctx) == 1
    assert gamma(5, ctx) == 24
    assert rel(gamma(Fraction(1, 2), ctx), mp.sqrt(mp.pi)) < 1e-20
    with pytest.raises(ValueError):
        gamma(0, ctx)
    with pytest.raises(ValueError):
        gamma(-3, ctx)


@pytest.mark.parametrize("x", ["0.5", "1.3", "7.25"])
def test_gamma_recurrence(ctx, x):
    xv = to_mp(x)
    assert rel(gamma(parse_number(x) + 1, ctx), xv * gamma(x, ctx)) < 1e-20


def test_lue_normalization(ctx):
    assert lue_normalization(1, 0, ctx) == 1
    assert lue_normalization(2, 0, ctx) == 1
    # direct product oracle: (1! G(1) 2! G(2) 3! G(3)) / 3! at alpha = 0, and alpha = 1 shifts G
    assert lue_normalization(3, 0, ctx) == mp.mpf(1 * 2 * 6 * 1 * 1 * 2) / 6
    assert lue_normalization(3, 1, ctx) == mp.mpf(1 * 1 * 2 * 2 * 6 * 6) / 6
    with pytest.raises(ValueError):
        lue_normalization(0, 0, ctx)
    with pytest.raises(ValueError):
        lue_normalization(2, -1, ctx)


def test_lue_normalization_matches_quadrature(ctx):
    # D_3(0) at alpha = 1 is the Hankel determinant of Gamma moments
    from painleve_tau.oracle import WeightSpec, moment_quadrature

    w = WeightSpec("laguerre_deformed", 1)
    q = PrecisionContext(bits=256, tol=1e-25)
    mus = [moment_quadrature(w, m, q) for m in range(5)]
    det = mp.det(mp.matrix([[mus[j + k] for k in range(3)] for j in range(3)]))
    # D_n(0) includes the 1/n! of the ordered-eigenvalue integral
    assert rel(det, lue_normalization(3, 1, ctx)) < 1e-20


def test_integrate_elementary(ctx):
    assert rel(integrate_zero_to_infinity(lambda x: mp.exp(-x), ctx).value, 1) < 1e-20
    assert rel(integrate_zero_to_infinity(lambda x: x * mp.exp(-x), ctx).value, 1) < 1e-20
    # algebraic endpoint singularity x^{-1/2}
    assert rel(integrate_zero_to_infinity(lambda x: mp.exp(-x) / mp.sqrt(x), ctx).value, mp.sqrt(mp.pi)) < 1e-20
    beta22 = integrate_unit_interval(lambda x, xc: x * xc, ctx).value
    assert rel(beta22, mp.mpf(1) / 6) < 1e-20


def test_integrate_against_bessel_k(ctx):
    # int x^{1/2} e^{-x-1/x} dx = 2 K_{3/2}(2)
    val = integrate_zero_to_infinity(lambda x: mp.sqrt(x) * mp.exp(-x - 1 / x), ctx)
    assert rel(val.value, 2 * mp.besselk(1.5, 2)) < 1e-20
    assert val.error < 1e-20


def test_integrate_precision_escalation():
    f = lambda x: x**2 * mp.exp(-x - 2 / x)
    lo = integrate_zero_to_infinity(f, PrecisionContext(bits=128, tol=1e-30)).value
    hi = integrate_zero_to_infinity(f, PrecisionContext(bits=256, tol=1e-30)).value
    assert rel(lo, hi) < 1e-30


fractions = st.fractions(min_value=-5, max_value=5, max_denominator=12)
series = st.lists(fractions, min_size=1, max_size=6).map(RationalSeries)


@given(series, series)
@settings(max_examples=60, deadline=None)
def test_series_product_commutes(a, b):
    assert a * b == b * a


@given(series, series, series)
@settings(max_examples=60, deadline=None)
def test_series_product_associates(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(series, series)
@settings(max_examples=60, deadline=None)
def test_series_product_order_is_min(a, b):
    assert (a * b).order == min(a.order, b.order)


@given(series, series)
@settings(max_examples=60, deadline=None)
def test_series_leibniz(a, b):
    order = min(a.order, b.order)
    if order == 0:
        return
    assert (a * b).deriv() == (a.deriv() * b + a * b.deriv()).truncate(order - 1)


@given(st.lists(fractions, min_size=2, max_size=6))
@settings(max_examples=60, deadline=None)
def test_series_exp_log_roundtrip(cs):
    s = RationalSeries([Fraction(0)] + cs)
    assert s.exp().log() == s


def test_series_misc():
    s = RationalSeries([1, 2, 3])
    assert s.rescale_arg(2) == RationalSeries([1, 4, 12])
    assert s.integrate(5) == RationalSeries([5, 1, 1, 1])
    assert (s * s.reciprocal()) == RationalSeries([1, 0, 0])
    with pytest.raises(ValueError):
        s.div_t()
    assert s.evaluate(mp.mpf(2)) == 17
