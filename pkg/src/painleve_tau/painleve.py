"""Okamoto's PIII' Hamiltonian, its Backlund symmetries, and ODE residuals.

Residuals are evaluated on 2-jets ``(t, f, f', f'')`` supplied by the
determinant code; nothing here integrates an ODE.  Each residual reports the
sum of absolute values of its individual terms so callers can apply a
relative criterion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import NamedTuple, Sequence

import mpmath as mp

from .bessel import BesselCombination
from .errors import SingularityError
from .numerics import PrecisionContext, as_fraction, to_mp


@dataclass(frozen=True)
class SigmaParameters:
    v1: object
    v2: object


@dataclass(frozen=True)
class HamiltonianState:
    p: object
    q: object
    t: object
    params: SigmaParameters


@dataclass(frozen=True)
class JetPoint:
    """A 2-jet ``(f, f', f'')`` of a function at ``t``."""

    t: object
    f: object
    df: object
    d2f: object


class Residual(NamedTuple):
    """ODE residual with the absolute sum of its terms.

    ``floor`` is the squared magnitude of the jet and parameters; it keeps the
    relative measure meaningful when every term vanishes identically.
    """

    value: object
    scale: object
    floor: object = 0

    @property
    def relative(self):
        denom = max(self.scale, self.floor)
        if denom == 0:
            return abs(self.value)
        return abs(self.value) / denom


def hamiltonian(s: HamiltonianState):
    """``H = [p^2 q^2 - (q^2 + v1 q - t) p + (v1+v2) q / 2] / t``."""
    p, q, t = s.p, s.q, s.t
    v1, v2 = s.params.v1, s.params.v2
    if t == 0:
        raise ValueError("the Hamiltonian is singular at t = 0")
    return (p * p * q * q - (q * q + v1 * q - t) * p + _half((v1 + v2) * q)) / t


def _half(x):
    return x / 2 if not isinstance(x, int) else Fraction(x, 2)


def apply_backlund(op: str, s: HamiltonianState) -> HamiltonianState:
    """Apply one of ``s0, s1, s2, T1`` to a state.

    ``T1 = s0 s2 s1 s2`` composes automorphisms, so on states ``s0`` acts
    first; it shifts ``(v1, v2)`` by ``(1, 1)``.
    """
    p, q, t = s.p, s.q, s.t
    v1, v2 = s.params.v1, s.params.v2
    if op == "s0":
        if q == 0:
            raise SingularityError("q", 0, "s0 divides by q")
        np_ = q / t * (q * (p - 1) - _half(v1 - v2)) + 1
        return HamiltonianState(np_, -t / q, t, SigmaParameters(-1 - v2, -1 - v1))
    if op == "s1":
        if p == 1:
            raise SingularityError("p - 1", 0, "s1 divides by p - 1")
        return HamiltonianState(p, q + (v2 - v1) / (2 * (p - 1)), t, SigmaParameters(v2, v1))
    if op == "s2":
        return HamiltonianState(1 - p, -q, -t, SigmaParameters(v1, -v2))
    if op == "T1":
        for step in ("s0", "s2", "s1", "s2"):
            s = apply_backlund(step, s)
        return s
    raise ValueError(f"unknown Backlund operator {op!r}")


# --------------------------------------------------------------------------
# residuals

RESIDUAL_KINDS = ("sigma_iii", "h_form", "y_form", "piii_q", "sigma_v", "jacobi_H")


def _res(terms: Sequence, jet: JetPoint, params) -> Residual:
    t = jet.t
    base = max([1, abs(jet.f), abs(t * jet.df), abs(t * t * jet.d2f)] + [abs(x) for x in params])
    return Residual(sum(terms), sum(abs(x) for x in terms), base * base)


def ode_residual(kind: str, jet: JetPoint, params) -> Residual:
    """Left-minus-right residual of one of the ODEs, as printed.

    ``params`` by kind: ``sigma_iii``, ``h_form``, ``piii_q`` take ``(v1, v2)``;
    ``y_form`` takes ``(n, alpha)``; ``sigma_v`` takes ``(nu0, nu1, nu2, nu3)``;
    ``jacobi_H`` takes ``(n, alpha, beta)``.
    """
    t, f, d1, d2 = jet.t, jet.f, jet.df, jet.d2f
    if any(isinstance(x, (mp.mpf, mp.mpc)) for x in (t, f, d1, d2)):
        params = tuple(to_mp(x) for x in params)
    else:
        params = tuple(Fraction(x) if isinstance(x, int) else x for x in params)
    res = lambda terms: _res(terms, jet, params)
    if kind == "sigma_iii":
        v1, v2 = params
        return res([(t * d2) ** 2, -v1 * v2 * d1**2, d1 * (4 * d1 - 1) * (f - t * d1), -((v1 - v2) ** 2) / 64])
    if kind == "h_form":
        v1, v2 = params
        return res([(t * d2) ** 2, (4 * d1**2 - 1) * (t * d1 - f), v1 * v2 * d1, -(v1**2 + v2**2) / 4])
    if kind == "y_form":
        n, a = params
        return res([(t * d2) ** 2, -((n - (2 * n + a) * d1) ** 2), 4 * (n * (n + a) + t * d1 - f) * d1 * (d1 - 1)])
    if kind == "piii_q":
        v1, v2 = params
        q = f
        return res([d2, -(d1**2) / q, d1 / t, -(q**2) / t**2 * (q - v2), 1 / q, -(v1 + 1) / t])
    if kind == "sigma_v":
        nu = list(params)
        prod = 4
        for x in nu:
            prod = prod * (x + d1)
        return res([(t * d2) ** 2, -((f - t * d1 + 2 * d1**2 + sum(nu) * d1) ** 2), prod])
    if kind == "jacobi_H":
        n, a, b = params
        return res([(t * d2) ** 2, -((n * (n + a + b) - f + (a + t) * d1) ** 2), -4 * d1 * (t * d1 - f) * (b - d1)])
    raise ValueError(f"unknown residual kind {kind!r}; choose from {RESIDUAL_KINDS}")


# --------------------------------------------------------------------------
# transformations


TRANSFORM_KINDS = (
    "params_mgf",
    "params_hardedge",
    "params_jacobi",
    "params_gap",
    "y_from_h",
    "h_from_y",
    "sigma_from_h",
    "sigmahat_from_sigma",
    "y_from_sigmahat",
    "sigmahat_from_y",
)


def transform(kind: str, data, **kw):
    """Variable and parameter maps between the equations.

    Jet kinds (``data`` is a :class:`JetPoint`):

    ``y_from_h``
        ``y = h + t/2 - alpha^2/4`` (needs ``alpha=``).
    ``h_from_y``
        inverse of ``y_from_h``.
    ``sigma_from_h``
        ``sigma(t) = -h(t/4) + t/8 + v1 v2/4``; input jet at ``t/4`` (needs ``v1=, v2=``).
    ``sigmahat_from_sigma``
        ``sigma_hat(t) = -sigma(t/4) + t/8 + (n^2 - v^2)/4``; input at ``t/4`` (needs ``n=, v=``).
    ``y_from_sigmahat``
        ``y(t) = -sigma_hat(4t) + t - (n+alpha) alpha/2``; input at ``4t`` (needs ``n=, alpha=``).
    ``sigmahat_from_y``
        inverse of ``y_from_sigmahat``; input at ``t/4``.

    Parameter kinds: ``params_mgf (n, alpha)``, ``params_hardedge (alpha, mu)``,
    ``params_jacobi (n, alpha, beta)``, ``params_gap (n, alpha, mu)``.
    """
    if kind not in TRANSFORM_KINDS:
        raise ValueError(f"unknown transform {kind!r}; choose from {TRANSFORM_KINDS}")
    if kind == "params_mgf":
        n, a = data
        return SigmaParameters(2 * n + a, -a)
    if kind == "params_hardedge":
        a, mu = data
        return SigmaParameters(a + mu, a - mu)
    if kind == "params_jacobi":
        n, a, b = data
        return (0, -(n + a + b), n, -b)
    if kind == "params_gap":
        n, a, mu = data
        return (0, -mu, n + a, n)

    j = data
    t, f, d1, d2 = j.t, j.f, j.df, j.d2f
    four = 4
    if kind == "y_from_h":
        a = kw["alpha"]
        return JetPoint(t, f + t / 2 - a * a / four, d1 + Fraction(1, 2), d2)
    if kind == "h_from_y":
        a = kw["alpha"]
        return JetPoint(t, f - t / 2 + a * a / four, d1 - Fraction(1, 2), d2)
    if kind == "sigma_from_h":
        v1, v2 = kw["v1"], kw["v2"]
        T = four * t
        return JetPoint(T, -f + T / 8 + v1 * v2 / four, -d1 / four + Fraction(1, 8), -d2 / 16)
    if kind == "sigmahat_from_sigma":
        n, v = kw["n"], kw["v"]
        T = four * t
        return JetPoint(T, -f + T / 8 + (n * n - v * v) / four, -d1 / four + Fraction(1, 8), -d2 / 16)
    if kind == "y_from_sigmahat":
        n, a = kw["n"], kw["alpha"]
        T = t / four
        return JetPoint(T, -f + T - (n + a) * a / 2, -four * d1 + 1, -16 * d2)
    if kind == "sigmahat_from_y":
        n, a = kw["n"], kw["alpha"]
        T = four * t
        return JetPoint(T, -f + t - (n + a) * a / 2, (1 - d1) / four, -d2 / 16)
    raise ValueError(f"unknown transform {kind!r}")


# --------------------------------------------------------------------------
# sigma_hat from determinants


def sigmahat_jet(c: BesselCombination, n: int, t, ctx: PrecisionContext) -> JetPoint:
    """Jet of ``sigma_hat_n(t; v) = -delta log(e^{-t/4} t^{v^2/2} det[L_{j-k+v}(sqrt t)])``."""
    from .detkit import toeplitz_l_det

    d = toeplitz_l_det(c, n, t, ctx)
    with mp.workprec(d.bits):
        tv = to_mp(t)
        v = to_mp(c.v)
        f = tv / 4 - v * v / 2 - d.d1
        # delta f = t/4 - d2, delta^2 f = t/4 - d3
        df = (tv / 4 - d.d2) / tv
        d2f = ((tv / 4 - d.d3) - (tv / 4 - d.d2)) / tv**2
        return JetPoint(tv, f, df, d2f)


def boundary_constant(c: BesselCombination, n: int, alpha, ctx: PrecisionContext, t_large):
    """``sigma_hat_n(t; v) - t/4 - (n/2) sqrt t`` at ``t_large`` with ``a = 0`` and ``v = n + alpha``.

    Tends to ``n^2/4 - v^2/2`` as ``t -> inf``.
    """
    if c.a != 0:
        raise ValueError("boundary_constant needs a = 0")
    if to_mp(t_large) < 10**4:
        raise ValueError("t_large must be at least 1e4")
    v = as_fraction(n) + as_fraction(alpha)
    jet = sigmahat_jet(replace(c, v=v), n, t_large, ctx)
    with mp.workprec(ctx.bits * 2):
        tv = to_mp(t_large)
        return jet.f - tv / 4 - n * mp.sqrt(tv) / 2
