"""Modified Bessel functions and the combination ``L_v = a I_v + b e^{v pi i} K_v``.

Point values of ``I_v`` and ``K_v`` come from mpmath.  The ascending series
:func:`bessel_i_series` is kept as an independent check on the ``I`` branch.

Both ``I_v`` and ``e^{v pi i} K_v`` obey the same ladder

    L_v'(x) = L_{v+1}(x) + (v/x) L_v(x) = L_{v-1}(x) - (v/x) L_v(x),

so everything here holds for arbitrary constants ``a, b``.  With ``u = sqrt(t)``
and ``delta = t d/dt`` this gives

    delta L_v(u) = (u/2) L_{v+1}(u) + (v/2) L_v(u),

which :func:`delta_expansion` iterates symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp

from .numerics import PrecisionContext, as_fraction, certify, is_integer, to_mp


def _i(v, x):
    return mp.besseli(v, x)


def _k(v, x):
    return mp.besselk(v, x)


def bessel(kind: str, v, x, ctx: PrecisionContext):
    """``I_v(x)`` or ``K_v(x)`` for real order and ``x > 0``, certified to ``ctx.tol``."""
    if kind not in ("I", "K"):
        raise ValueError(f"kind must be 'I' or 'K', got {kind!r}")
    fn = _i if kind == "I" else _k

    def run(bits):
        with mp.workprec(bits):
            xv = to_mp(x)
            if not xv > 0:
                raise ValueError("x must be positive")
            return fn(to_mp(v), xv)

    return certify(run, ctx, f"{kind}_{v}({x})").value


def bessel_i_series(v, x, max_terms: int = 100000):
    """``I_v(x)`` from ``sum_k (x/2)^{v+2k} / (k! Gamma(v+k+1))`` at the current precision."""
    v, x = to_mp(v), to_mp(x)
    half = x / 2
    term = half**v / mp.gamma(v + 1)
    total = term
    q = half * half
    eps = mp.eps
    for k in range(1, max_terms):
        term = term * q / (k * (v + k))
        total += term
        if abs(term) <= eps * abs(total) and k > q:
            return total
    raise ArithmeticError("I_v series did not converge")


@dataclass(frozen=True)
class BesselCombination:
    """Coefficients ``(a, b)`` and base order ``v`` of ``L_v = a I_v + b e^{v pi i} K_v``."""

    a: object = 1
    b: object = 0
    v: object = 0

    def __post_init__(self):
        if self.a == 0 and self.b == 0:
            raise ValueError("(a, b) must not both vanish")

    def value(self, k, x):
        """``L_{v+k}(x)`` at the current mp precision (complex when the phase is)."""
        nu = to_mp(self.v) + to_mp(k)
        return self.value_at_order(nu, x)

    def value_at_order(self, nu, x):
        out = mp.mpf(0)
        if self.a != 0:
            out += to_mp(self.a) * _i(nu, x)
        if self.b != 0:
            out += to_mp(self.b) * mp.expjpi(nu) * _k(nu, x)
        return out

    @property
    def is_real(self) -> bool:
        """True when every ``L_{v+k}``, ``k`` integer, is real."""
        return self.b == 0 or is_integer(self.v)

    def shifted(self, v) -> "BesselCombination":
        return BesselCombination(self.a, self.b, v)


def combo_l(c: BesselCombination, order_shift, x, ctx: PrecisionContext):
    """``L_{v+k}(x)`` with the phase ``e^{(v+k) pi i}``, certified."""

    def run(bits):
        with mp.workprec(bits):
            return c.value(order_shift, to_mp(x))

    return certify(run, ctx, "L").value


def ladder_derivative(c: BesselCombination, k, x, form: str = "raise"):
    """``d/dx L_{v+k}(x)`` at the current precision from a ladder relation."""
    nu = to_mp(c.v) + to_mp(k)
    here = c.value_at_order(nu, x)
    if form == "raise":
        return c.value_at_order(nu + 1, x) + nu / x * here
    if form == "lower":
        return c.value_at_order(nu - 1, x) - nu / x * here
    raise ValueError(f"unknown ladder form {form!r}")


def l_derivative(c: BesselCombination, k, x, ctx: PrecisionContext, form: str = "raise"):
    """``d/dx L_{v+k}(x)`` via the raising (default) or lowering ladder; certified."""

    def run(bits):
        with mp.workprec(bits):
            return ladder_derivative(c, k, to_mp(x), form)

    return certify(run, ctx, "L'").value


# --------------------------------------------------------------------------
# symbolic delta powers


@dataclass(frozen=True)
class DeltaExpansion:
    """``delta^m L_v(sqrt t) = sum_k c_{m,k}(sqrt t) L_{v+k}(sqrt t)``.

    ``table[k]`` maps powers of ``u = sqrt t`` to exact rational coefficients.
    """

    m: int
    v: Fraction
    table: tuple

    def coefficient(self, k: int) -> dict:
        return dict(self.table[k])

    def evaluate(self, family, u, sign: int = 1):
        """Numerically sum the expansion.

        ``family(j)`` must return ``F_{v+j}(u)`` for the Bessel-type family.
        ``sign=-1`` gives the expansion for ``K`` itself, whose raising ladder
        carries the opposite sign (``(-1)^k`` weights).
        """
        total = mp.mpf(0)
        for k, poly in enumerate(self.table):
            if not poly:
                continue
            coef = mp.mpf(0)
            for power, c in poly:
                coef += to_mp(c) * u**power
            if sign < 0 and k % 2:
                coef = -coef
            total += coef * family(k)
        return total


@lru_cache(maxsize=None)
def _delta_table(m: int, v: Fraction) -> tuple:
    if m == 0:
        return (((0, Fraction(1)),),)
    prev = _delta_table(m - 1, v)
    nxt = [dict() for _ in range(m + 1)]
    for k, poly in enumerate(prev):
        for power, c in poly:
            # delta u^p = (p/2) u^p
            if power:
                nxt[k][power] = nxt[k].get(power, 0) + c * Fraction(power, 2)
            # c * delta L_{v+k} = c * ((u/2) L_{v+k+1} + ((v+k)/2) L_{v+k})
            nxt[k + 1][power + 1] = nxt[k + 1].get(power + 1, 0) + c / 2
            shift = (v + k) / 2
            if shift:
                nxt[k][power] = nxt[k].get(power, 0) + c * shift
    return tuple(tuple(sorted((p, c) for p, c in poly.items() if c != 0)) for poly in nxt)


def delta_expansion(m: int, v) -> DeltaExpansion:
    """Exact table of ``delta^m L_v(sqrt t)`` in terms of ``L_{v+k}(sqrt t)``, ``k = 0..m``."""
    if m < 0:
        raise ValueError("m must be non-negative")
    vq = as_fraction(v)
    return DeltaExpansion(m, vq, _delta_table(m, vq))


def delta_jet(family, nu, u, order: int, sign: int = 1) -> list:
    """``[delta^m F_nu(u^2 ...)]_{m=0..order}`` for a ladder family.

    ``family(order) -> value`` evaluates ``F`` at the fixed argument ``u``;
    ``nu`` must be rational.  ``delta`` is scale invariant, so ``u`` may be any
    multiple of ``sqrt t``.
    """
    cache = {}

    def at(j):
        if j not in cache:
            cache[j] = family(to_mp(as_fraction(nu)) + j)
        return cache[j]

    return [delta_expansion(m, nu).evaluate(at, u, sign) for m in range(order + 1)]
