"""Extended-precision plumbing shared by every other module.

Working precision is carried by an immutable :class:`PrecisionContext`; all
floating work runs on :mod:`mpmath` numbers inside ``mp.workprec``.  Results
are certified by recomputing at doubled precision rather than by interval
arithmetic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Sequence

import mpmath as mp

from .errors import CertificationError, DivergenceError

DEFAULT_BITS = 256
DEFAULT_TOL = 1e-20
DEFAULT_MAX_BITS = 4096
BITS_ENV = "PAINLEVE_TAU_BITS"


@dataclass(frozen=True)
class PrecisionContext:
    """Binary working precision, target relative tolerance and escalation ceiling."""

    bits: int = DEFAULT_BITS
    tol: float = DEFAULT_TOL
    max_bits: int = DEFAULT_MAX_BITS

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 64:
            raise ValueError(f"bits must be an integer >= 64, got {self.bits!r}")
        if self.max_bits < self.bits:
            raise ValueError(f"max_bits ({self.max_bits}) < bits ({self.bits})")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")

    @classmethod
    def from_env(cls, **overrides) -> "PrecisionContext":
        """Default context, honouring ``PAINLEVE_TAU_BITS`` when set."""
        raw = os.environ.get(BITS_ENV)
        if raw is not None and "bits" not in overrides:
            try:
                bits = int(raw)
            except ValueError:
                raise ValueError(f"{BITS_ENV} must be a positive integer, got {raw!r}") from None
            if bits <= 0:
                raise ValueError(f"{BITS_ENV} must be a positive integer, got {raw!r}")
            overrides["bits"] = bits
            overrides.setdefault("max_bits", max(DEFAULT_MAX_BITS, bits))
        return cls(**overrides)

    def with_bits(self, bits: int) -> "PrecisionContext":
        return replace(self, bits=bits, max_bits=max(self.max_bits, bits))

    def doubled(self) -> "PrecisionContext":
        return self.with_bits(2 * self.bits)

    @property
    def eps(self):
        """Unit roundoff at this precision, as a Python float (may underflow to 0)."""
        return 2.0 ** (-self.bits)

    def workprec(self):
        return mp.workprec(self.bits)


# --------------------------------------------------------------------------
# conversions


def to_mp(x):
    """Convert ints, Fractions, decimal strings, floats and mp numbers at the
    current working precision, exactly where the input is exact."""
    if isinstance(x, (mp.mpf, mp.mpc)):
        return +x
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, int):
        return mp.mpf(x)
    if isinstance(x, Rational):
        return mp.mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return to_mp(parse_number(x))
    if isinstance(x, complex):
        return mp.mpc(x)
    return mp.mpf(x)


def parse_number(text: str):
    """Parse ``"3"``, ``"-1/2"``, ``"0.1"`` or ``"1e-3"`` to an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a real number: {text!r}") from None


def as_fraction(x) -> Fraction:
    """Exact rational for ints, Fractions, decimal strings and (binary-exact) floats.

    Floats are read through their shortest repr, so ``0.3`` becomes ``3/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return parse_number(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def is_integer(x) -> bool:
    if isinstance(x, (mp.mpf, float)):
        return x == int(x)
    if isinstance(x, Rational):
        return x.denominator == 1
    return False


def _flatten(value) -> list:
    if isinstance(value, (list, tuple)):
        out = []
        for item in value:
            out.extend(_flatten(item))
        return out
    if hasattr(value, "certified_fields"):
        return _flatten(value.certified_fields())
    return [value]


def rel_diff(a, b) -> float:
    """Largest componentwise relative discrepancy between two nested results."""
    xs, ys = _flatten(a), _flatten(b)
    if len(xs) != len(ys):
        raise ValueError("results have different shapes")
    worst = 0.0
    for x, y in zip(xs, ys):
        if x is None and y is None:
            continue
        scale = max(abs(y), abs(x))
        if scale == 0:
            continue
        worst = max(worst, float(abs(x - y) / scale))
    return worst


@dataclass(frozen=True)
class Certified:
    """A value reproduced at doubled precision."""

    value: object
    bits: int
    tol_achieved: float


def certify(compute: Callable[[int], object], ctx: PrecisionContext, name: str = "result") -> Certified:
    """Run ``compute(bits)`` at ``bits`` and ``2*bits``; escalate until they agree.

    ``compute`` must return a number or a nested tuple of numbers.  The value
    from the higher precision is returned.
    """
    bits = ctx.bits
    low = compute(bits)
    last_err = None
    while 2 * bits <= max(ctx.max_bits, 2 * ctx.bits):
        high = compute(2 * bits)
        err = rel_diff(low, high)
        if err <= ctx.tol:
            return Certified(high, 2 * bits, err)
        last_err = err
        bits *= 2
        if bits > ctx.max_bits:
            break
        low = high
    raise CertificationError(
        f"{name} not reproducible to tol={ctx.tol:g} below max_bits={ctx.max_bits} "
        f"(last discrepancy {last_err:.3g})"
    )


# --------------------------------------------------------------------------
# gamma and the LUE normalisation


def _check_gamma_arg(x):
    if is_integer(x) and x <= 0:
        raise ValueError(f"gamma has a pole at {x}")


def gamma(x, ctx: PrecisionContext):
    """Gamma function of a real argument, certified to ``ctx.tol``."""
    _check_gamma_arg(x if not isinstance(x, str) else parse_number(x))

    def run(bits):
        with mp.workprec(bits):
            return mp.gamma(to_mp(x))

    return certify(run, ctx, "gamma").value


def lue_normalization(n: int, alpha, ctx: PrecisionContext):
    """``D_n(0) = C_n / n! = (1/n!) prod_{j=1}^n j! Gamma(j + alpha)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    a = as_fraction(alpha) if not isinstance(alpha, mp.mpf) else alpha
    if not a > -1:
        raise ValueError("alpha must exceed -1")

    def run(bits):
        with mp.workprec(bits + 16):
            av = to_mp(a)
            acc = mp.mpf(1)
            for j in range(1, n + 1):
                acc *= mp.factorial(j) * mp.gamma(j + av)
            return acc / mp.factorial(n)

    return certify(run, ctx, "D_n(0)").value


# --------------------------------------------------------------------------
# double-exponential quadrature

_GUARD_BITS = 24
_MAX_LEVEL = 14


@dataclass(frozen=True)
class QuadResult:
    value: object
    error: float
    bits: int
    levels: int


def _de_sum(node: Callable, f: Callable, h, offset_odd: bool, eps, scale, support: dict):
    """Trapezoid contribution of nodes s = k*h (all k, or odd k only).

    ``support[sign]`` is the largest ``|s|`` on that side where a term was
    significant at any level; a side is only cut off beyond it, so interior
    peaks found on a coarse level are never skipped on finer ones.
    """
    total = mp.mpf(0)
    if not offset_odd:
        total += _term(node, f, mp.mpf(0))
    for sign in (1, -1):
        k = 1
        small = 0
        while True:
            s = sign * k * h
            term = _term(node, f, s)
            total += term
            mag = abs(term)
            ref = max(abs(total), scale)
            if mag <= eps * ref:
                if abs(s) > support[sign]:
                    small += 1
                    if small >= 3:
                        break
            else:
                small = 0
                support[sign] = max(support[sign], abs(s))
            if abs(s) > 12:
                break
            k += 2 if offset_odd else 1
    return total


def _term(node, f, s):
    args, weight = node(s)
    if weight == 0:
        return mp.mpf(0)
    return f(*args) * weight


def _run_de(node: Callable, f: Callable, bits: int, h0=1):
    with mp.workprec(bits + _GUARD_BITS):
        eps = mp.ldexp(1, -(bits + 8))
        target = mp.ldexp(1, -(bits - _GUARD_BITS))
        h = mp.mpf(h0)
        support = {1: 0, -1: 0}
        raw = _de_sum(node, f, h, False, eps, mp.mpf(0), support)
        prev = raw * h
        for level in range(1, _MAX_LEVEL + 1):
            h /= 2
            raw += _de_sum(node, f, h, True, eps, abs(prev) / h, support)
            cur = raw * h
            diff = abs(cur - prev)
            scale = abs(cur)
            if level >= 3 and diff <= target * max(scale, mp.mpf(0)):
                return cur, float(diff / scale) if scale else 0.0, level
            prev = cur
        return cur, float(diff / scale) if scale else float("inf"), _MAX_LEVEL


def _escalating(node_factory, f, ctx: PrecisionContext, what: str) -> QuadResult:
    bits = ctx.bits
    last = None
    while bits <= ctx.max_bits:
        value, err, levels = _run_de(node_factory(), f, bits)
        if err <= ctx.tol:
            return QuadResult(value, max(err, 2.0 ** (-bits)), bits, levels)
        last = err
        bits *= 2
    raise DivergenceError(f"{what}: no convergence to tol={ctx.tol:g} by {ctx.max_bits} bits (estimate {last})")


def _exp_sinh_node():
    c = mp.pi / 2

    def node(s):
        u = c * mp.sinh(s)
        x = mp.exp(u)
        return (x,), x * c * mp.cosh(s)

    return node


def _tanh_sinh_node():
    c = mp.pi / 2

    def node(s):
        u = c * mp.sinh(s)
        # x = (1 + tanh u)/2 = 1/(1+e^{-2u}); 1 - x = 1/(1+e^{2u}), both without cancellation
        e = mp.exp(-2 * u)
        x = 1 / (1 + e)
        xc = e / (1 + e)
        w = c * mp.cosh(s) / (2 * mp.cosh(u) ** 2)
        return (x, xc), w

    return node


def integrate_zero_to_infinity(f: Callable, ctx: PrecisionContext) -> QuadResult:
    """Integrate ``f(x)`` over ``(0, inf)`` by the exp-sinh double-exponential rule.

    The substitution ``x = exp((pi/2) sinh s)`` composes the logarithmic map
    ``x = e^u`` with a sinh stretch, so integrands such as ``x^g e^{-x-t/x}``
    (and ``x^g e^{-x}`` with ``g > -1``) decay double-exponentially in ``s``.
    Trapezoid steps are halved until successive sums agree to working precision.

    Returns
    -------
    QuadResult
        ``value`` at the precision used and a relative ``error`` estimate.

    Raises
    ------
    DivergenceError
        if the estimate never falls below ``ctx.tol`` up to ``ctx.max_bits``.
    """
    return _escalating(_exp_sinh_node, f, ctx, "integral over (0, inf)")


def integrate_unit_interval(f: Callable, ctx: PrecisionContext) -> QuadResult:
    """Integrate over ``(0, 1)`` by tanh-sinh; ``f`` receives ``(x, 1 - x)``."""
    return _escalating(_tanh_sinh_node, f, ctx, "integral over (0, 1)")


# --------------------------------------------------------------------------
# exact power series


class RationalSeries:
    """Truncated power series ``sum_{p<=order} c_p t^p`` with exact coefficients.

    Coefficients are Fractions by default, but any exact field element
    supporting ``+ - * /`` and equality (e.g. sympy rational-function field
    elements) works.  Arithmetic never falls back to floating point.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable, order: int | None = None):
        cs = [c if not isinstance(c, int) else Fraction(c) for c in coeffs]
        if order is not None:
            zero = cs[0] * 0 if cs else Fraction(0)
            cs = (cs + [zero] * (order + 1 - len(cs)))[: order + 1]
        if not cs:
            raise ValueError("a series needs at least one coefficient")
        self.coeffs = tuple(cs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, p):
        return self.coeffs[p]

    def __len__(self):
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __repr__(self):
        return f"RationalSeries({[str(c) for c in self.coeffs]})"

    def __eq__(self, other):
        if not isinstance(other, RationalSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    def _zero(self):
        return self.coeffs[0] * 0

    def _lift(self, other, order):
        if isinstance(other, RationalSeries):
            return other
        return RationalSeries([other], order)

    def __add__(self, other):
        other = self._lift(other, self.order)
        order = min(self.order, other.order)
        return RationalSeries([self[p] + other[p] for p in range(order + 1)])

    __radd__ = __add__

    def __neg__(self):
        return RationalSeries([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._lift(other, self.order))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalSeries):
            return RationalSeries([c * other for c in self.coeffs])
        order = min(self.order, other.order)
        a, b = self.coeffs, other.coeffs
        out = []
        for p in range(order + 1):
            acc = a[0] * b[p]
            for i in range(1, p + 1):
                acc += a[i] * b[p - i]
            out.append(acc)
        return RationalSeries(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        out = RationalSeries([self._zero() + 1], self.order)
        for _ in range(k):
            out = out * self
        return out

    def scale(self, c):
        return RationalSeries([c * x for x in self.coeffs])

    def deriv(self):
        """Derivative; the truncation order drops by one."""
        if self.order == 0:
            return RationalSeries([self._zero()])
        return RationalSeries([p * self[p] for p in range(1, self.order + 1)])

    def integrate(self, constant=0):
        """Antiderivative with the given constant term; order rises by one."""
        return RationalSeries([self._zero() + constant] + [self[p] / (p + 1) for p in range(self.order + 1)])

    def mul_t(self, k: int = 1):
        """Multiply by ``t^k``; the truncation order rises by ``k``."""
        return RationalSeries([self._zero()] * k + list(self.coeffs))

    def div_t(self, k: int = 1):
        """Divide by ``t^k``; the dropped coefficients must vanish."""
        if any(c != 0 for c in self.coeffs[:k]):
            raise ValueError("series is not divisible by t^%d" % k)
        return RationalSeries(self.coeffs[k:])

    def truncate(self, order: int):
        return RationalSeries(self.coeffs[: order + 1], order)

    def rescale_arg(self, c):
        """Series of ``f(c t)``."""
        out, power = [], self._zero() + 1
        for x in self.coeffs:
            out.append(x * power)
            power = power * c
        return RationalSeries(out)

    def exp(self):
        """``exp`` of a series with zero constant term, via ``g' = f' g``."""
        if self[0] != 0:
            raise ValueError("exp needs a zero constant term to stay exact")
        one = self._zero() + 1
        g = [one]
        df = self.deriv().coeffs
        for p in range(1, self.order + 1):
            acc = self._zero()
            for i in range(p):
                acc += df[i] * g[p - 1 - i]
            g.append(acc / p)
        return RationalSeries(g)

    def log(self):
        """``log`` of a series with constant term one."""
        if self[0] != 1:
            raise ValueError("log needs constant term one to stay exact")
        return (self.deriv() * self.reciprocal().truncate(self.order - 1)).integrate(0) if self.order else RationalSeries([self._zero()])

    def reciprocal(self):
        if self[0] == 0:
            raise ZeroDivisionError("series with zero constant term has no reciprocal")
        inv = [1 / self[0] if not isinstance(self[0], Fraction) else Fraction(1) / self[0]]
        for p in range(1, self.order + 1):
            acc = self._zero()
            for i in range(1, p + 1):
                acc += self[i] * inv[p - i]
            inv.append(-acc * inv[0])
        return RationalSeries(inv)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def evaluate(self, t):
        """Horner evaluation at an mp number (coefficients converted exactly)."""
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * t + to_mp(c)
        return acc


def lagrange_through(points: Sequence[tuple]) -> list:
    """Exact coefficients (low to high) of the interpolating polynomial."""
    n = len(points)
    zero = points[0][1] * 0
    coeffs = [zero] * n
    for i, (xi, yi) in enumerate(points):
        basis = [zero + 1]
        denom = zero + 1
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            nxt = [zero] * (len(basis) + 1)
            for k, b in enumerate(basis):
                nxt[k] -= b * xj
                nxt[k + 1] += b
            basis = nxt
            denom = denom * (xi - xj)
        scale = yi / denom
        for k, b in enumerate(basis):
            coeffs[k] += b * scale
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
    return coeffs

