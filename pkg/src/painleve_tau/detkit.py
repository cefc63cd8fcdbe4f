"""Structured determinants and their logarithmic derivatives.

Every determinant is returned with the jet of ``log det`` under the Euler
operator ``delta = t d/dt`` up to third order, obtained from Jacobi's formula

    delta log det A   = tr(A^{-1} dA)
    delta^2 log det A = tr(A^{-1} d2A) - tr(B^2)
    delta^3 log det A = tr(A^{-1} d3A) - 3 tr(B C) + 2 tr(B^3)

with ``B = A^{-1} dA`` and ``C = A^{-1} d2A``; entry derivatives come from
Bessel ladders or exact moment relations, never from differencing the
determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath as mp

from . import bessel
from .bessel import BesselCombination
from .errors import SingularityError
from .numerics import (
    Certified,
    PrecisionContext,
    as_fraction,
    certify,
    integrate_unit_interval,
    integrate_zero_to_infinity,
    is_integer,
    lue_normalization,
    to_mp,
)

MGF_METHODS = ("hankel", "toeplitz", "toda", "dpii", "quadrature")


@dataclass(frozen=True)
class EnsembleParams:
    """Size ``n`` and exponents of the Laguerre (``alpha``), Jacobi (``beta``) and gap (``mu``) weights."""

    n: int
    alpha: object = 0
    beta: Optional[object] = None
    mu: Optional[object] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "mu"):
            val = getattr(self, name)
            if isinstance(val, str):
                object.__setattr__(self, name, as_fraction(val))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.alpha > -1:
            raise ValueError(f"alpha must exceed -1, got {self.alpha!r}")
        if self.beta is not None and not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta!r}")
        if self.mu is not None and not self.mu > -1:
            raise ValueError(f"mu must exceed -1, got {self.mu!r}")

    def cumulant_valid(self, p: int) -> bool:
        return self.alpha > p - 1


@dataclass(frozen=True)
class DetResult:
    """Determinant value with the ``delta``-jet of its logarithm at ``t``.

    ``d1, d2, d3`` are ``delta^k log value`` for ``k = 1, 2, 3``.
    """

    value: object
    d1: object
    d2: object
    d3: object
    t: object
    method: str
    bits: int = 0
    tol_achieved: float = 0.0

    @property
    def log_deriv(self):
        """``t d/dt log value``."""
        return self.d1

    @property
    def second_deriv(self):
        """``d^2/dt^2 log value``."""
        return (self.d2 - self.d1) / self.t**2

    def jet(self):
        """``(f, f', f'')`` for ``f(t) = t d/dt log value``."""
        t = self.t
        return self.d1, self.d2 / t, (self.d3 - self.d2) / t**2

    def certified_fields(self):
        return (self.value, self.d1, self.d2, self.d3)

    def shifted(self, log_factor_jet, value_factor=1, method=None) -> "DetResult":
        """Multiply by a prefactor whose ``delta``-log-jet is ``log_factor_jet``."""
        e1, e2, e3 = log_factor_jet
        return DetResult(
            self.value * value_factor,
            self.d1 + e1,
            self.d2 + e2,
            self.d3 + e3,
            self.t,
            method or self.method,
            self.bits,
            self.tol_achieved,
        )


# --------------------------------------------------------------------------
# Jacobi-formula core


def _trace(m):
    return mp.fsum(m[i, i] for i in range(m.rows))


def _hadamard(a):
    acc = mp.mpf(1)
    for i in range(a.rows):
        acc *= mp.sqrt(mp.fsum(abs(a[i, j]) ** 2 for j in range(a.cols)))
    return acc


def log_jet(a, da, d2a, d3a, what: str = "determinant"):
    """``(det, delta log det, delta^2 log det, delta^3 log det)`` for square mp matrices."""
    det = mp.det(a)
    bound = _hadamard(a)
    if det == 0 or abs(det) <= mp.ldexp(bound, -(mp.mp.prec - 8)):
        raise SingularityError(what, mp.nstr(abs(det), 5), "indistinguishable from rounding at working precision")
    inv = mp.inverse(a)
    b = inv * da
    c = inv * d2a
    e = inv * d3a
    bb = b * b
    d1 = _trace(b)
    d2 = _trace(c) - _trace(bb)
    d3 = _trace(e) - 3 * _trace(b * c) + 2 * _trace(bb * b)
    return det, d1, d2, d3


def _matrices(n, entry_jet: Callable[[int, int], list]):
    mats = [mp.matrix(n, n) for _ in range(4)]
    for j in range(n):
        for k in range(n):
            jet = entry_jet(j, k)
            for r in range(4):
                mats[r][j, k] = jet[r]
    return mats


def _delta_from_ordinary(t, f0, f1, f2, f3):
    """Convert ordinary t-derivatives to ``delta``-derivatives."""
    return [f0, t * f1, t * f1 + t * t * f2, t * f1 + 3 * t * t * f2 + t**3 * f3]


def _realify(z, tol, what):
    """Return the real part when the imaginary part is rounding noise."""
    if not isinstance(z, mp.mpc):
        return z
    if abs(z.imag) <= tol * max(abs(z.real), mp.eps):
        return z.real
    raise ArithmeticError(f"{what} expected real, imaginary part {mp.nstr(z.imag, 5)}")


def _finish(compute, ctx, method, t, name, real: bool):
    # an ill-conditioned matrix whose determinant drowns in rounding is retried higher up
    bits = ctx.bits
    while True:
        try:
            cert = certify(compute, ctx.with_bits(bits), name)
            break
        except SingularityError:
            if 2 * bits > ctx.max_bits:
                raise
            bits *= 2
    det, d1, d2, d3 = cert.value
    if real:
        det, d1, d2, d3 = (_realify(z, max(ctx.tol, mp.mpf(2) ** (-cert.bits // 2)), name) for z in (det, d1, d2, d3))
    with mp.workprec(cert.bits):
        tv = to_mp(t)
    return DetResult(det, d1, d2, d3, tv, method, cert.bits, cert.tol_achieved)


def _check_t(t):
    if not to_mp(t) > 0:
        raise ValueError("t must be positive")


# --------------------------------------------------------------------------
# deformed Laguerre weight


def _mu_closed(j, alpha, t):
    """``mu_j(t) = 2 t^{(j+alpha+1)/2} K_{j+1+alpha}(2 sqrt t)`` at the current precision."""
    return 2 * t ** ((j + alpha + 1) / 2) * mp.besselk(j + 1 + alpha, 2 * mp.sqrt(t))


def moment_mu(j: int, alpha, t, ctx: PrecisionContext):
    """Moment ``int_0^inf x^{j+alpha} e^{-x-t/x} dx`` via the K-Bessel closed form."""
    _check_t(t)

    def run(bits):
        with mp.workprec(bits):
            return _mu_closed(j, to_mp(alpha), to_mp(t))

    return certify(run, ctx, f"mu_{j}").value


def _hankel_moments(n, alpha, t):
    a, tv = to_mp(alpha), to_mp(t)
    mus = {i: _mu_closed(i, a, tv) for i in range(-3, 2 * n - 1)}

    def entry(j, k):
        i = j + k
        # d/dt mu_i = -mu_{i-1}
        return _delta_from_ordinary(tv, mus[i], -mus[i - 1], mus[i - 2], -mus[i - 3])

    return log_jet(*_matrices(n, entry), what="Hankel determinant D_n(t)")


def _hankel_toeplitz(n, alpha, t):
    aq = as_fraction(alpha)
    tv = to_mp(t)
    u = 2 * mp.sqrt(tv)
    cache = {}

    def kjet(offset):
        if offset not in cache:
            nu = aq + n + offset
            cache[offset] = bessel.delta_jet(lambda o: mp.besselk(o, u), nu, u, 3, sign=-1)
        return cache[offset]

    det, d1, d2, d3 = log_jet(*_matrices(n, lambda j, k: kjet(j - k)), what="K-Bessel Toeplitz determinant")
    pref = (-1) ** (n * (n - 1) // 2) * mp.mpf(2) ** n * tv ** (n * (n + to_mp(aq)) / 2)
    return det * pref, d1 + n * (n + to_mp(aq)) / 2, d2, d3


def hankel_det(p: EnsembleParams, t, ctx: PrecisionContext, method: str = "moments") -> DetResult:
    """``D_n(t) = det[mu_{j+k}(t)]`` for the weight ``x^alpha e^{-x-t/x}``.

    ``method="moments"`` builds the Hankel matrix of K-Bessel moments;
    ``method="toeplitz"`` uses ``(-1)^{n(n-1)/2} 2^n t^{n(n+alpha)/2}
    det[K_{j-k+n+alpha}(2 sqrt t)]``.  The order offsets require rational alpha
    for the toeplitz route.
    """
    _check_t(t)
    n, alpha = p.n, p.alpha
    if method == "moments":
        fn = _hankel_moments
    elif method == "toeplitz":
        fn = _hankel_toeplitz
    else:
        raise ValueError(f"unknown hankel_det method {method!r}")

    def run(bits):
        with mp.workprec(bits):
            return fn(n, alpha, t)

    return _finish(run, ctx, method, t, f"D_{n}({t})", real=True)


# --------------------------------------------------------------------------
# general L-combination determinants


def _toeplitz_l(c: BesselCombination, n, t):
    tv = to_mp(t)
    u = mp.sqrt(tv)
    vq = as_fraction(c.v)
    cache = {}

    def ljet(offset):
        if offset not in cache:
            cache[offset] = bessel.delta_jet(lambda o: c.value_at_order(o, u), vq + offset, u, 3)
        return cache[offset]

    return log_jet(*_matrices(n, lambda j, k: ljet(j - k)), what="L-Bessel Toeplitz determinant")


def toeplitz_l_det(c: BesselCombination, n: int, t, ctx: PrecisionContext) -> DetResult:
    """``tau_hat[n](t) = det[L_{j-k+v}(sqrt t)]_{j,k<n}`` with its ``delta``-log jet.

    Complex-valued when the phase ``e^{v pi i}`` is; real otherwise.
    """
    _check_t(t)
    if n == 0:
        with mp.workprec(ctx.bits):
            return DetResult(mp.mpf(1), mp.mpf(0), mp.mpf(0), mp.mpf(0), to_mp(t), "toeplitz_l", ctx.bits, 0.0)

    def run(bits):
        with mp.workprec(bits):
            return _toeplitz_l(c, n, t)

    return _finish(run, ctx, "toeplitz_l", t, f"tau_hat[{n}]", real=c.is_real)


def delta_powers(c: BesselCombination, t, count: int, gauge=0) -> list:
    """``[delta^m (t^gauge L_v(sqrt t))]_{m < count}`` at the current precision."""
    tv = to_mp(t)
    u = mp.sqrt(tv)
    cache = {}

    def at(order):
        if order not in cache:
            cache[order] = c.value_at_order(order, u)
        return cache[order]

    vq = as_fraction(c.v)
    base = [bessel.delta_expansion(m, vq).evaluate(lambda k: at(to_mp(vq) + k), u) for m in range(count)]
    if gauge == 0:
        return base
    # Leibniz: delta^m (t^g f) = t^g sum_i C(m,i) g^{m-i} delta^i f
    g = to_mp(gauge)
    tg = tv**g
    return [tg * mp.fsum(math.comb(m, i) * g ** (m - i) * base[i] for i in range(m + 1)) for m in range(count)]


def _wronskian(c, n, t, gauge=0):
    powers = delta_powers(c, t, 2 * n + 2, gauge)
    return log_jet(*_matrices(n, lambda j, k: powers[j + k : j + k + 4]), what="double Wronskian")


def wronskian_det(c: BesselCombination, n: int, t, ctx: PrecisionContext, gauge=0) -> DetResult:
    """Double Wronskian ``det[delta^{j+k} (t^gauge L_v(sqrt t))]_{j,k<n}``."""
    _check_t(t)
    if n == 0:
        with mp.workprec(ctx.bits):
            return DetResult(mp.mpf(1), mp.mpf(0), mp.mpf(0), mp.mpf(0), to_mp(t), "wronskian", ctx.bits, 0.0)

    def run(bits):
        with mp.workprec(bits):
            return _wronskian(c, n, t, gauge)

    return _finish(run, ctx, "wronskian", t, f"W[{n}]", real=c.is_real)


def hard_edge_det(alpha: int, mu, t, ctx: PrecisionContext) -> DetResult:
    """``e^{-t/4} t^{-mu alpha/2} det[I_{j-k+mu}(sqrt t)]_{j,k<alpha}``."""
    if int(alpha) != alpha or alpha < 1:
        raise ValueError("alpha must be a positive integer (it is the determinant size)")
    base = toeplitz_l_det(BesselCombination(1, 0, mu), int(alpha), t, ctx)
    with mp.workprec(base.bits):
        tv = to_mp(t)
        m = to_mp(mu)
        factor = mp.exp(-tv / 4) * tv ** (-m * alpha / 2)
        q = -tv / 4
        return base.shifted((q - m * alpha / 2, q, q), factor, "hard_edge")


# --------------------------------------------------------------------------
# quadrature-entry determinants


def jacobi_moment(j: int, alpha, beta, t, ctx: PrecisionContext):
    """``int_0^1 x^{j+alpha} (1-x)^beta e^{-t/x} dx`` by tanh-sinh quadrature."""
    a, b, tv = to_mp(alpha), to_mp(beta), to_mp(t)
    if tv == 0:
        f = lambda x, xc: x ** (j + a) * xc**b
    else:
        f = lambda x, xc: x ** (j + a) * xc**b * mp.exp(-tv / x)
    return integrate_unit_interval(f, ctx).value


def _quad_ctx(bits):
    return PrecisionContext(bits=bits, tol=max(float(mp.mpf(2) ** (-(bits - 40))), 1e-300), max_bits=bits)


def _jacobi(n, alpha, beta, t, bits):
    tv = to_mp(t)
    qctx = _quad_ctx(bits)
    lo = -3 if tv > 0 else 0
    nus = {i: jacobi_moment(i, alpha, beta, t, qctx) for i in range(lo, 2 * n - 1)}
    if tv == 0:
        a = mp.matrix(n, n)
        for j in range(n):
            for k in range(n):
                a[j, k] = nus[j + k]
        z = mp.mpf(0)
        return mp.det(a), z, z, z

    def entry(j, k):
        i = j + k
        return _delta_from_ordinary(tv, nus[i], -nus[i - 1], nus[i - 2], -nus[i - 3])

    return log_jet(*_matrices(n, entry), what="Jacobi Hankel determinant")


def jacobi_hankel_det(p: EnsembleParams, t, ctx: PrecisionContext) -> DetResult:
    """Hankel determinant of ``x^alpha (1-x)^beta e^{-t/x}`` on ``[0, 1]`` (``t >= 0``).

    ``log_deriv`` is ``H_n(t) = t d/dt log D_n(t)``; at ``t = 0`` only the value is meaningful.
    """
    if p.beta is None:
        raise ValueError("jacobi_hankel_det needs beta")
    if not (p.alpha > 0 and p.beta > 0):
        raise ValueError("alpha and beta must be positive")
    if to_mp(t) < 0:
        raise ValueError("t must be non-negative")

    def run(bits):
        with mp.workprec(bits):
            return _jacobi(p.n, p.alpha, p.beta, t, bits)

    res = _finish(run, ctx, "jacobi_quadrature", t, f"Jacobi D_{p.n}({t})", real=True)
    return res


def gap_moment(m: int, alpha, mu, s, ctx: PrecisionContext):
    """``g_m(s) = int_s^inf lam^{m+alpha} e^{-lam} (lam-s)^mu d lam``.

    Exact binomial sum when ``m + alpha`` is a non-negative integer; otherwise
    double-exponential quadrature after ``lam = s + y``.
    """
    a, m_, sv = to_mp(alpha), to_mp(mu), to_mp(s)
    e = m + a
    if is_integer(e) and e >= 0:
        e = int(e)
        return mp.exp(-sv) * mp.fsum(math.comb(e, i) * sv ** (e - i) * mp.gamma(i + m_ + 1) for i in range(e + 1))
    f = lambda y: (sv + y) ** e * mp.exp(-y) * y**m_
    return mp.exp(-sv) * integrate_zero_to_infinity(f, ctx).value


def _gap_d(m, alpha, r, g):
    """``r``-th s-derivative of ``g_m`` through ``g_m' = -g_m + (m+alpha) g_{m-1}``."""
    if r == 0:
        return g(m)
    out = -_gap_d(m, alpha, r - 1, g)
    c = m + alpha
    # skipping c = 0 keeps g_{m-1} (a divergent-exponent moment for integer alpha) out of the sum
    if c != 0:
        out += c * _gap_d(m - 1, alpha, r - 1, g)
    return out


def _gap(n, alpha, mu, s, bits):
    sv = to_mp(s)
    a = to_mp(alpha)
    qctx = _quad_ctx(bits)
    cache = {}

    def g(m):
        if m not in cache:
            cache[m] = gap_moment(m, alpha, mu, s, qctx)
        return cache[m]

    def entry(j, k):
        i = j + k
        return _delta_from_ordinary(sv, *(_gap_d(i, a, r, g) for r in range(4)))

    det, d1, d2, d3 = log_jet(*_matrices(n, entry), what="gap determinant")
    return det, d1, d2, d3


def gap_det(p: EnsembleParams, s, ctx: PrecisionContext) -> DetResult:
    """Generalised gap probability ``E_n(s; alpha, mu) = (n!/C_n) det[g_{j+k}(s)]``."""
    if p.mu is None:
        raise ValueError("gap_det needs mu")
    _check_t(s)

    def run(bits):
        with mp.workprec(bits):
            det, d1, d2, d3 = _gap(p.n, p.alpha, p.mu, s, bits)
            return det / lue_normalization(p.n, p.alpha, PrecisionContext(bits=bits, tol=1.0, max_bits=2 * bits)), d1, d2, d3

    return _finish(run, ctx, "gap", s, f"E_{p.n}({s})", real=True)


# --------------------------------------------------------------------------
# moment generating function


def mgf(p: EnsembleParams, t, ctx: PrecisionContext, method: str = "hankel", full: bool = False):
    """``M_n(t) = D_n(t) / D_n(0)`` by one of :data:`MGF_METHODS`.

    With ``full=True`` a :class:`~painleve_tau.numerics.Certified` carrying the
    bits used and the achieved tolerance is returned instead of the value.
    """
    _check_t(t)
    if method in ("hankel", "toeplitz"):
        d = hankel_det(p, t, ctx, "moments" if method == "hankel" else "toeplitz")
        with mp.workprec(d.bits):
            out = Certified(d.value / lue_normalization(p.n, p.alpha, ctx.with_bits(d.bits)), d.bits, d.tol_achieved)
        return out if full else out.value
    if method in ("toda", "dpii"):
        from . import discrete

        return discrete.mgf_from_recursion(p, t, ctx, method, full=full)
    if method == "quadrature":
        from . import oracle

        return oracle.mgf_quadrature(p, t, ctx, full=full)
    raise ValueError(f"unknown mgf method {method!r}; choose from {MGF_METHODS}")


def mgf_all(p: EnsembleParams, t, ctx: PrecisionContext, methods=MGF_METHODS) -> dict:
    """Evaluate every requested method; returns ``{method: value}``."""
    return {m: mgf(p, t, ctx, m) for m in methods}


def max_pairwise_deviation(values: dict) -> float:
    vals = list(values.values())
    worst = 0.0
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            worst = max(worst, float(abs(vals[i] / vals[j] - 1)))
    return worst
