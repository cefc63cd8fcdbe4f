from fractions import Fraction

import mpmath as mp
import pytest

from painleve_tau.bessel import BesselCombination
from painleve_tau.detkit import (
    EnsembleParams,
    gap_det,
    hankel_det,
    hard_edge_det,
    jacobi_hankel_det,
    max_pairwise_deviation,
    mgf,
    mgf_all,
    moment_mu,
    toeplitz_l_det,
    wronskian_det,
)
from painleve_tau.numerics import PrecisionContext, lue_normalization, to_mp
from painleve_tau.oracle import WeightSpec, moment_quadrature

from conftest import rel

HALF = Fraction(1, 2)


def test_params_validation():
    assert EnsembleParams(2, "1/2").alpha == HALF
    for bad in (dict(n=0), dict(n=2, alpha=-1), dict(n=2, beta=0), dict(n=2, mu=-2)):
        with pytest.raises(ValueError):
            EnsembleParams(**bad)
    assert EnsembleParams(2, 3).cumulant_valid(3)
    assert not EnsembleParams(2, 3).cumulant_valid(4)


def test_moment_mu(ctx):
    q = PrecisionContext(bits=256, tol=1e-25)
    assert rel(moment_mu(0, 0, 1, ctx), 2 * mp.besselk(1, 2)) < 1e-20
    assert rel(moment_mu(0, 0, 1, ctx), moment_quadrature(WeightSpec("laguerre_deformed", 0, t=1), 0, q)) < 1e-20
    assert rel(moment_mu(1, 0, 1, ctx), moment_quadrature(WeightSpec("laguerre_deformed", 0, t=1), 1, q)) < 1e-20
    assert abs(moment_mu(0, 0, mp.mpf(10) ** -10, ctx) - 1) < 1e-4
    with pytest.raises(ValueError):
        moment_mu(0, 0, 0, ctx)


@pytest.mark.parametrize("alpha", [0, HALF, Fraction(5, 2)])
def test_hankel_n1_is_mu0(ctx, alpha):
    p = EnsembleParams(1, alpha)
    a = hankel_det(p, 2, ctx, "moments")
    b = hankel_det(p, 2, ctx, "toeplitz")
    mu0 = moment_mu(0, alpha, 2, ctx)
    assert rel(a.value, mu0) < 1e-20 and rel(b.value, mu0) < 1e-20


def test_hankel_n2_methods_and_quadrature(ctx):
    p = EnsembleParams(2, 0)
    a = hankel_det(p, 1, ctx, "moments")
    b = hankel_det(p, 1, ctx, "toeplitz")
    assert rel(a.value, b.value) < 1e-20
    assert rel(a.log_deriv, b.log_deriv) < 1e-20
    quad = mgf(p, 1, PrecisionContext(bits=256, tol=1e-15), "quadrature") * lue_normalization(2, 0, ctx)
    assert rel(a.value, quad) < 1e-12


def test_toeplitz_sign_factor(ctx):
    # det[K_{j-k+2}(2)] alone is negative for n = 2; the (-1)^{n(n-1)/2} factor makes D_2 positive
    with mp.workprec(256):
        k = lambda o: mp.besselk(o, 2)
        raw = k(2) * k(2) - k(3) * k(1)
    assert raw < 0
    assert hankel_det(EnsembleParams(2, 0), 1, ctx, "toeplitz").value > 0


def test_toeplitz_l_small_sizes(ctx):
    c = BesselCombination(2, -3, 1)
    assert toeplitz_l_det(c, 0, 2, ctx).value == 1
    with mp.workprec(256):
        direct = c.value(0, mp.sqrt(2))
    assert rel(toeplitz_l_det(c, 1, 2, ctx).value, direct) < 1e-20


def test_toeplitz_l_relates_to_hankel(ctx):
    # D_n(t) = (-1)^{n(n-1)/2} 2^n t^{n(n+alpha)/2} e^{-n v pi i} tau_hat[n](4t), v = n + alpha
    n, alpha, t = 3, HALF, 2
    v = n + alpha
    tau = toeplitz_l_det(BesselCombination(0, 1, v), n, 4 * t, ctx)
    d = hankel_det(EnsembleParams(n, alpha), t, ctx)
    with mp.workprec(256):
        pref = (-1) ** (n * (n - 1) // 2) * 2**n * mp.mpf(t) ** (n * (n + to_mp(alpha)) / 2) * mp.expjpi(-n * to_mp(v))
        assert rel(pref * tau.value, d.value) < 1e-20
        assert rel(tau.d1 + n * (n + to_mp(alpha)) / 2, d.d1) < 1e-20


@pytest.mark.parametrize("ab,v", [((1, 0), 1), ((2, 3), Fraction(7, 10)), ((0, 1), Fraction(3, 2))])
def test_wronskian_identity(ctx, ab, v):
    c = BesselCombination(*ab, v)
    n, t = 3, 2
    w = wronskian_det(c, n, t, ctx)
    d = toeplitz_l_det(c, n, t, ctx)
    assert abs(w.value - mp.mpf(t / 4) ** 3 * d.value) < 1e-20 * abs(w.value)
    assert rel(wronskian_det(c, 1, t, ctx).value, toeplitz_l_det(c, 1, t, ctx).value) < 1e-20


def test_hard_edge(ctx):
    with mp.workprec(256):
        i = lambda v, x: mp.besseli(v, x)
        one = mp.exp(-1) * i(0, 2)
        two = mp.exp(-mp.mpf(1) / 4) * (i(1, 1) ** 2 - i(2, 1) * i(0, 1))
        mu3 = mp.exp(-mp.mpf(3) / 4) * mp.mpf(3) ** (-1.5) * i(3, mp.sqrt(3))
    assert rel(hard_edge_det(1, 0, 4, ctx).value, one) < 1e-20
    assert rel(hard_edge_det(2, 1, 1, ctx).value, two) < 1e-20
    assert rel(hard_edge_det(1, 3, 3, ctx).value, mu3) < 1e-20
    with pytest.raises(ValueError):
        hard_edge_det(HALF, 1, 1, ctx)


def test_jacobi_at_zero(ctx):
    q = PrecisionContext(bits=128, tol=1e-25)
    assert rel(jacobi_hankel_det(EnsembleParams(1, 1, beta=1), 0, q).value, mp.mpf(1) / 6) < 1e-25
    # Beta moments B(a+j+1, b+1) with a = 1, b = 2
    with mp.workprec(256):
        m = [mp.beta(2 + j, 3) for j in range(3)]
        det = m[0] * m[2] - m[1] ** 2
    assert rel(jacobi_hankel_det(EnsembleParams(2, 1, beta=2), 0, q).value, det) < 1e-25
    with pytest.raises(ValueError):
        jacobi_hankel_det(EnsembleParams(2, 1), 1, q)


def test_gap_elementary(ctx):
    q = PrecisionContext(bits=128, tol=1e-25)
    assert abs(gap_det(EnsembleParams(2, 1, mu=0), mp.mpf(10) ** -8, q).value - 1) < 1e-4
    for s in (HALF, 3):
        assert rel(gap_det(EnsembleParams(1, 0, mu=0), s, q).value, mp.exp(-to_mp(s))) < 1e-25
        assert rel(gap_det(EnsembleParams(1, 0, mu=1), s, q).value, mp.exp(-to_mp(s))) < 1e-25


def test_gap_closed_form_vs_quadrature_moments(ctx):
    # the integer-exponent closed form inside gap_det against oracle quadrature
    q = PrecisionContext(bits=128, tol=1e-25)
    n, alpha, mu, s = 2, 1, HALF, 1
    w = WeightSpec("gap", alpha, mu=mu, s=s)
    g = [moment_quadrature(w, m, q) for m in range(3)]
    det = (g[0] * g[2] - g[1] ** 2) / lue_normalization(n, alpha, ctx)
    assert rel(gap_det(EnsembleParams(n, alpha, mu=mu), s, q).value, det) < 1e-20


def test_mgf_examples(ctx):
    p = EnsembleParams(1, 0)
    assert abs(mgf(p, mp.mpf(10) ** -12, ctx) - 1) < 1e-6
    assert rel(mgf(p, 1, ctx), 2 * mp.besselk(1, 2)) < 1e-20
    with pytest.raises(ValueError):
        mgf(p, 1, ctx, "nope")
    with pytest.raises(ValueError):
        mgf(p, 0, ctx)


def test_mgf_five_methods(ctx):
    p = EnsembleParams(2, 1)
    vals = mgf_all(p, 1, ctx, ("hankel", "toeplitz", "toda", "dpii"))
    assert max_pairwise_deviation(vals) < 1e-20
    quad = mgf(p, 1, PrecisionContext(bits=256, tol=1e-15), "quadrature")
    assert rel(quad, vals["hankel"]) < 1e-10
    full = mgf(p, 1, ctx, full=True)
    assert full.bits >= ctx.bits and full.tol_achieved <= ctx.tol


def test_mgf_monotone(ctx):
    p = EnsembleParams(3, HALF)
    vals = [mgf(p, t, ctx) for t in (Fraction(1, 10), HALF, 1, 2, 5)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(0 < v < 1 for v in vals)


@pytest.mark.parametrize(
    "build",
    [
        lambda ctx, t: hankel_det(EnsembleParams(3, HALF), t, ctx),
        lambda ctx, t: toeplitz_l_det(BesselCombination(2, -3, 1), 2, t, ctx),
        lambda ctx, t: hard_edge_det(2, 1, t, ctx),
    ],
)
def test_log_derivative_vs_finite_difference(ctx, build):
    with mp.workprec(256):
        t = mp.mpf(3) / 2
        h = t * mp.mpf(2) ** (-256 // 4)
        res = build(ctx, t)
        up, dn = build(ctx, t + h), build(ctx, t - h)
        fd1 = t * (mp.log(up.value) - mp.log(dn.value)) / (2 * h)
        fd2 = (mp.log(up.value) - 2 * mp.log(res.value) + mp.log(dn.value)) / h**2
    assert abs(res.log_deriv - fd1) < 1e3 * 1e-20 * max(1, abs(fd1))
    assert abs(res.second_deriv - fd2) < 1e-10 * max(1, abs(fd2))


def test_realness(ctx):
    for c in (BesselCombination(1, 0, Fraction(3, 10)), BesselCombination(0, 1, 2)):
        val = toeplitz_l_det(c, 3, 2, ctx).value
        assert not isinstance(val, mp.mpc) or abs(val.imag) <= 1e-20 * abs(val.real)
