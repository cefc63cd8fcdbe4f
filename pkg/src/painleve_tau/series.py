"""Exact formal power series: cumulants, the large-``n`` limits ``Y``, ``F`` and ``r``.

Every series here solves a polynomial ODE order by order.  For each unknown
coefficient the residual coefficient that first depends on it is sampled at a
few trial values and interpolated exactly, so the coefficient equation is an
explicit polynomial.  Linear equations are solved, a double root of a
quadratic is taken, and anything else raises.

Coefficients are :class:`fractions.Fraction` for numeric parameters and
elements of ``QQ(n)`` (sympy) when ``n`` is kept symbolic for large-``n``
limits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Sequence

import mpmath as mp
from sympy import QQ, symbols

from .errors import BranchObstructionError, DenominatorError, TruncationWarning
from .numerics import PrecisionContext, RationalSeries, as_fraction, lagrange_through, to_mp

_N = symbols("n")
NFIELD = QQ.frac_field(_N)
N_SYMBOL = NFIELD.gens[0]

_SAMPLES = 5
_SLACK = 4


def _frac(q):
    return Fraction(int(q.numerator), int(q.denominator))


# --------------------------------------------------------------------------
# order-by-order solver


def _lowest_dependent(residual, known, zero, p, length):
    """Order ``k`` of the first residual coefficient depending on the ``p``-th unknown."""
    rows = []
    for x in range(_SAMPLES):
        cs = list(known) + [zero + x]
        rows.append(residual(RationalSeries(cs, length)))
    valid = min(r.order for r in rows)
    for k in range(valid + 1):
        vals = [r[k] for r in rows]
        if all(v == vals[0] for v in vals):
            if vals[0] != 0:
                raise DenominatorError(
                    f"coefficient {p}: residual order {k} is {vals[0]} regardless of the unknown"
                )
            continue
        return k, vals
    raise BranchObstructionError(f"coefficient {p} is not fixed by orders 0..{valid}")


def _is_exact_solution(residual, cs, length):
    return residual(RationalSeries(cs, length)).is_zero()


def _solve_poly(coeffs, p, residual, cs, length, events):
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    deg = len(coeffs) - 1
    if deg == 1:
        return -coeffs[0] / coeffs[1]
    if deg == 2:
        c0, c1, c2 = coeffs
        if c1 * c1 - 4 * c0 * c2 == 0:
            return -c1 / (2 * c2)
        # Roots {0, -c1/c2}: the zero root is rejected only when it closes the
        # series into an exact polynomial solution (a degenerate branch).
        if c0 == 0 and _is_exact_solution(residual, cs + [c0 * 0], length):
            root = -c1 / c2
            if events is not None:
                events.append(f"coefficient {p}: rejected root 0 (exact polynomial solution), took {root}")
            return root
        raise BranchObstructionError(f"coefficient {p}: quadratic with distinct roots")
    raise BranchObstructionError(f"coefficient {p}: equation of degree {deg}")


def solve_formal(residual: Callable, P: int, zero, known: Sequence = (), events: list | None = None) -> RationalSeries:
    """Coefficients ``c_{len(known)}..c_P`` of the series annihilating ``residual``.

    ``residual(series) -> RationalSeries`` must be exact; ``known`` fixes the
    leading coefficients.  A quadratic coefficient equation with distinct
    roots raises :class:`BranchObstructionError`, except when one root is zero
    and truncating there gives an exact polynomial solution; that degenerate
    branch is rejected and the choice is appended to ``events``.
    """
    cs = list(known)
    length = P + _SLACK
    for p in range(len(cs), P + 1):
        k, vals = _lowest_dependent(residual, cs, zero, p, length)
        # the next unknown must not enter the deciding order
        probe = residual(RationalSeries(cs + [zero, zero + 1], length))
        if probe[k] != vals[0]:
            raise BranchObstructionError(f"coefficient {p} is coupled to coefficient {p + 1} at order {k}")
        poly = lagrange_through([(zero + x, v) for x, v in enumerate(vals)])
        cs.append(_solve_poly(poly, p, residual, cs, length, events))
    return RationalSeries(cs, P)


# --------------------------------------------------------------------------
# residual series of the ODEs


def h_equation_residual(y: RationalSeries, n, alpha) -> RationalSeries:
    """``(t y'')^2 - (n - (2n+alpha) y')^2 + 4 (n(n+alpha) + t y' - y) y' (y' - 1)``."""
    d1 = y.deriv()
    tdd = d1.deriv().mul_t()
    return tdd * tdd - (n - (2 * n + alpha) * d1) ** 2 + 4 * (n * (n + alpha) + d1.mul_t() - y) * d1 * (d1 - 1)


def y_equation_residual(Y: RationalSeries, alpha) -> RationalSeries:
    """``(t Y'')^2 - 1 - alpha^2 Y'^2 - 2 alpha Y' + 4 (t Y' - Y) Y'^2``."""
    d1 = Y.deriv()
    tdd = d1.deriv().mul_t()
    return tdd * tdd - 1 - alpha * alpha * d1 * d1 - 2 * alpha * d1 + 4 * (d1.mul_t() - Y) * d1 * d1


def ff_residual(F: RationalSeries) -> RationalSeries:
    """``2F + F' - 4tF' - 6t F'^2 + 4F F' - 1``."""
    d = F.deriv()
    return 2 * F + d - 4 * d.mul_t() - 6 * (d * d).mul_t() + 4 * F * d - 1


def ff2_residual(F: RationalSeries) -> RationalSeries:
    """``(1 - F')^2 - 4F'(F'+1)(tF' - F)``."""
    d = F.deriv()
    return (1 - d) ** 2 - 4 * d * (d + 1) * (d.mul_t() - F)


def ff3_residual(F: RationalSeries) -> RationalSeries:
    """``(4 - 8F)F' - F'^2 - 4F F'^2 + 4t F'^2 - 3``."""
    d = F.deriv()
    d2 = d * d
    return (4 - 8 * F) * d - d2 - 4 * F * d2 + 4 * d2.mul_t() - 3


def rs4_residual(r: RationalSeries, alpha) -> RationalSeries:
    """``s^2 r''^2 - 2s r'^3 + (8r-1)/4 r'^2 + 2 alpha r' - 1``."""
    d1 = r.deriv()
    sdd = d1.deriv().mul_t()
    return sdd * sdd - 2 * (d1**3).mul_t() + (8 * r - 1) * d1 * d1 * Fraction(1, 4) + 2 * alpha * d1 - 1


def rs1_residual(r: RationalSeries) -> RationalSeries:
    """``2s^2 r' r''' - s^2 r''^2 + 2s r' r'' - 4s r'^3 + (2r - 1/4) r'^2 + 1``."""
    d1 = r.deriv()
    d2 = d1.deriv()
    d3 = d2.deriv()
    return (
        2 * (d1 * d3).mul_t(2)
        - (d2 * d2).mul_t(2)
        + 2 * (d1 * d2).mul_t()
        - 4 * (d1**3).mul_t()
        + (2 * r - Fraction(1, 4)) * d1 * d1
        + 1
    )


# --------------------------------------------------------------------------
# cumulants


@dataclass(frozen=True)
class CumulantSeries:
    """Formal cumulants ``kappa_1..kappa_P`` of ``L`` for ``(n, alpha)``.

    ``valid[p-1]`` is true iff ``alpha > p - 1``; beyond that the coefficient
    is formal only.
    """

    n: Fraction
    alpha: Fraction
    order: int
    kappas: tuple
    valid: tuple

    @property
    def a(self) -> tuple:
        """Coefficients ``a_p = (-1)^p kappa_p / (p-1)!`` of ``y_n(t)``."""
        return tuple((-1) ** p * k / math.factorial(p - 1) for p, k in enumerate(self.kappas, 1))


def _nondegenerate(series: RationalSeries, residual, what):
    """Reject the exact linear solution when it is the only power series left."""
    if series.order >= 2 and all(c == 0 for c in series.coeffs[2:]) and residual(series).is_zero():
        raise DenominatorError(
            f"{what}: only the degenerate linear solution survives (the order-2 coefficient has a pole)"
        )
    return series


def _y_coefficients(n, alpha, P, zero):
    res = lambda s: h_equation_residual(s, n, alpha)
    return _nondegenerate(solve_formal(res, P, zero, known=[zero]), res, "y_n series")


def cumulants_exact(n, alpha, P: int, strict: bool = False) -> CumulantSeries:
    """Exact ``kappa_1..kappa_P`` from the power-series solution of the ``y_n`` equation."""
    nq, aq = as_fraction(n), as_fraction(alpha)
    if P < 1:
        raise ValueError("P must be at least 1")
    if aq == 0:
        raise DenominatorError("alpha = 0: kappa_1 = n/alpha is undefined")
    if strict and not aq > P - 1:
        raise ValueError(f"strict mode needs alpha > P - 1 = {P - 1}")
    y = _y_coefficients(nq, aq, P, Fraction(0))
    kappas = tuple((-1) ** p * math.factorial(p - 1) * y[p] for p in range(1, P + 1))
    return CumulantSeries(nq, aq, P, kappas, tuple(aq > p - 1 for p in range(1, P + 1)))


@lru_cache(maxsize=None)
def a_coefficients_symbolic(alpha, P: int) -> tuple:
    """``a_1..a_P`` as exact rational functions of ``n``.

    ``alpha=None`` sets ``alpha = n``.
    """
    zero = NFIELD.zero
    n = N_SYMBOL
    a = n if alpha is None else zero + _field_const(as_fraction(alpha))
    y = _y_coefficients(n, a, P, zero)
    return tuple(y[p] for p in range(1, P + 1))


def _field_const(q: Fraction):
    return NFIELD(q.numerator) / NFIELD(q.denominator)


def limit_at_infinity(f, power: int) -> Fraction:
    """``lim_{n -> inf} f(n) n^power`` for ``f`` in ``QQ(n)``, by degree comparison."""
    if f == 0:
        return Fraction(0)
    excess = f.numer.degree() - f.denom.degree() + power
    if excess > 0:
        raise ArithmeticError(f"f(n) n^{power} diverges (degree excess {excess})")
    if excess < 0:
        return Fraction(0)
    return _frac(f.numer.LC) / _frac(f.denom.LC)


def moments_from_cumulants(kappas: Sequence) -> list:
    """``m_1..m_P`` from ``sum (-t)^p m_p/p! = exp(sum (-t)^p kappa_p/p!)``."""
    P = len(kappas)
    zero = Fraction(0)
    log = RationalSeries([zero] + [(-1) ** p * k / math.factorial(p) for p, k in enumerate(kappas, 1)], P)
    e = log.exp()
    return [(-1) ** p * math.factorial(p) * e[p] for p in range(1, P + 1)]


# --------------------------------------------------------------------------
# limit series


def y_limit_series(alpha, P: int) -> RationalSeries:
    """``Y(t) = sum_{p>=1} y_p t^p``, the power-series solution of the large-``n`` equation."""
    aq = as_fraction(alpha)
    if aq == 0:
        raise DenominatorError("alpha = 0")
    res = lambda s: y_equation_residual(s, aq)
    return _nondegenerate(solve_formal(res, P, Fraction(0), known=[Fraction(0)]), res, "Y series")


def f_limit_series(P: int) -> RationalSeries:
    """``F(t) = sum_{p>=1} f_p t^p`` solving the first-order equation with ``F(0) = 0``."""
    return solve_formal(ff_residual, P, Fraction(0), known=[Fraction(0)])


def r_series(alpha, P: int) -> RationalSeries:
    """Series solution of the second-order ``r`` equation with ``r(0) = (1 - 4 alpha^2)/8``."""
    aq = as_fraction(alpha)
    if aq == 0:
        raise DenominatorError("alpha = 0: r'(0) = 1/alpha is undefined")
    r0 = (1 - 4 * aq * aq) / 8
    return solve_formal(lambda s: rs4_residual(s, aq), P, Fraction(0), known=[r0])


def r_from_y(Y: RationalSeries, alpha) -> RationalSeries:
    """``r(s) = -2 Y(s/2) + (1 - 4 alpha^2)/8``."""
    aq = as_fraction(alpha)
    return -2 * Y.rescale_arg(Fraction(1, 2)) + (1 - 4 * aq * aq) / 8


def y_from_r(r: RationalSeries, alpha) -> RationalSeries:
    """Inverse of :func:`r_from_y`: ``Y(s) = ((1 - 4 alpha^2)/8 - r(2s)) / 2``."""
    aq = as_fraction(alpha)
    return ((1 - 4 * aq * aq) / 8 - r.rescale_arg(2)) * Fraction(1, 2)


def exponent_from_y(Y: RationalSeries) -> RationalSeries:
    """``int_0^t Y(x)/x dx``."""
    return Y.div_t().integrate(0)


def exponent_from_r(r: RationalSeries, alpha) -> RationalSeries:
    """``int_0^t (1 - 4 alpha^2 - 8 r(2x)) / (16 x) dx``."""
    aq = as_fraction(alpha)
    integrand = ((1 - 4 * aq * aq) - 8 * r.rescale_arg(2)) * Fraction(1, 16)
    return integrand.div_t().integrate(0)


def limit_mgf(alpha, t, P: int, ctx: PrecisionContext):
    """``lim M_n(t/n) = exp(sum_p y_p t^p / p)`` from the truncated ``Y`` series.

    Warns with :class:`TruncationWarning` when the last retained term exceeds
    ``ctx.tol`` relative to the sum.
    """
    expo = exponent_from_y(y_limit_series(alpha, P))
    with mp.workprec(ctx.bits):
        tv = to_mp(t)
        s = expo.evaluate(tv)
        last = abs(to_mp(expo[P]) * tv**P)
        if last > ctx.tol * max(abs(s), 1):
            warnings.warn(
                f"limit_mgf: last term {mp.nstr(last, 3)} exceeds tol {ctx.tol:g}; increase P or reduce t",
                TruncationWarning,
                stacklevel=2,
            )
        return mp.exp(s)


def coefficient_growth(series: RationalSeries) -> List[float]:
    """``|c_p|^{1/p}``, a root-test proxy for the inverse convergence radius."""
    return [float(abs(c)) ** (1.0 / p) if c else 0.0 for p, c in enumerate(series.coeffs) if p]
