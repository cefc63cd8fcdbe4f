"""Toda-lattice recursion and the coupled (p_n, q_n) Backlund recurrences.

For ``tau_hat[n](t) = det[L_{j-k+v}(sqrt t)]`` the recurrence variables obey

    tau_hat[n+1] tau_hat[n-1] / tau_hat[n]^2 |_{t -> 4t} = p_n
    p_{n+1} = (q_n^2/t)(p_n - 1) - v q_n/t + 1
    q_{n+1} = -t/q_n + (1+n) t / (q_n (q_n (p_n - 1) - v) + t)

from ``p_0 = 0`` and ``q_0 = t d/dt log(t^{-v/2} L_v(2 sqrt t))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import mpmath as mp

from .bessel import BesselCombination, ladder_derivative
from .detkit import EnsembleParams, delta_powers, wronskian_det
from .errors import SingularityError
from .numerics import PrecisionContext, as_fraction, certify, lue_normalization, to_mp


@dataclass(frozen=True)
class RecurrenceState:
    n: int
    p: object
    q: object
    t: object
    v: object
    comb: BesselCombination


@dataclass(frozen=True)
class TauSequence:
    values: tuple
    t: object
    method: str


def _guard(name, value, scale=1):
    """Raise when ``value`` is below ``2^{-prec/2}`` relative to ``scale``."""
    if abs(value) <= mp.ldexp(max(abs(scale), mp.mpf(1)), -(mp.mp.prec // 2)):
        raise SingularityError(name, mp.nstr(abs(value), 5))


def _init(comb: BesselCombination, v, t) -> RecurrenceState:
    c = comb if comb.v == v else comb.shifted(v)
    tv = to_mp(t)
    x = 2 * mp.sqrt(tv)
    lv = c.value(0, x)
    _guard("L_v(2 sqrt t)", lv, max(abs(c.value(1, x)), 1))
    dl = ladder_derivative(c, 0, x)
    q0 = -to_mp(v) / 2 + mp.sqrt(tv) * dl / lv
    return RecurrenceState(0, mp.mpf(0), q0, tv, to_mp(v), c)


def init_state(comb: BesselCombination, v, t, ctx: PrecisionContext) -> RecurrenceState:
    """Seed ``(p_0, q_0) = (0, -v/2 + sqrt t L_v'(2 sqrt t)/L_v(2 sqrt t))`` at ``ctx.bits``."""
    with mp.workprec(ctx.bits):
        return _init(comb, v, t)


def step_forward(s: RecurrenceState) -> RecurrenceState:
    """``(p_n, q_n) -> (p_{n+1}, q_{n+1})`` at the current mp precision."""
    p, q, t, v, n = s.p, s.q, s.t, s.v, s.n
    _guard("q_n", q, t)
    den = q * (q * (p - 1) - v) + t
    _guard("q_n (q_n (p_n - 1) - v) + t", den, t)
    p1 = q * q / t * (p - 1) - v * q / t + 1
    q1 = -t / q + (1 + n) * t / den
    return RecurrenceState(n + 1, p1, q1, t, v, s.comb)


def step_backward(s: RecurrenceState) -> RecurrenceState:
    """``(p_n, q_n) -> (p_{n-1}, q_{n-1})``.

    ``q_{n-1} = t / (n/p_n - q_n)``; ``p_{n-1}`` follows by inverting the
    forward ``p`` equation.
    """
    if s.n < 1:
        raise ValueError("cannot step below n = 0")
    p, q, t, v, n = s.p, s.q, s.t, s.v, s.n
    _guard("p_n", p)
    den = n / p - q
    _guard("n/p_n - q_n", den, max(abs(q), 1))
    qm = t / den
    pm = 1 + (t * (p - 1) + v * qm) / (qm * qm)
    return RecurrenceState(n - 1, pm, qm, t, v, s.comb)


def _orbit(comb, v, t, steps) -> List[RecurrenceState]:
    states = [_init(comb, v, t)]
    for _ in range(steps):
        states.append(step_forward(states[-1]))
    return states


def orbit(comb: BesselCombination, v, t, steps: int, ctx: PrecisionContext) -> List[RecurrenceState]:
    """States ``0..steps``, certified by rerunning at doubled precision.

    A near-zero denominator at the starting precision triggers escalation
    before it is reported.
    """

    def run(bits):
        with mp.workprec(bits):
            try:
                states = _orbit(comb, v, t, steps)
            except SingularityError:
                if 2 * bits > ctx.max_bits:
                    raise
                return None
            return tuple((st.p, st.q) for st in states)

    bits = ctx.bits
    while True:
        try:
            cert = certify(lambda b: _or_fail(run, b), ctx.with_bits(bits), "recurrence orbit")
            break
        except _Retry:
            bits *= 2
            if bits > ctx.max_bits:
                with mp.workprec(ctx.max_bits):
                    _orbit(comb, v, t, steps)  # re-raise the singularity
                raise
    with mp.workprec(cert.bits):
        tv = to_mp(t)
        vv = to_mp(v)
        c = comb if comb.v == v else comb.shifted(v)
        return [RecurrenceState(i, pq[0], pq[1], tv, vv, c) for i, pq in enumerate(cert.value)]


class _Retry(Exception):
    pass


def _or_fail(run, bits):
    out = run(bits)
    if out is None:
        raise _Retry
    return out


def pq_relation_residual(prev: RecurrenceState, nxt: RecurrenceState):
    """``q_{n+1} + t/q_n - (1+n)/p_{n+1}``, relative to its largest term."""
    lhs = nxt.q + prev.t / prev.q
    rhs = (1 + prev.n) / nxt.p
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def alt_dp2_residual(q_prev, q_cur, q_next, n: int, v, t):
    """Alternate discrete Painleve II, left minus right.

    ``(1+n)/(q_n q_{n+1} + t) + n/(q_n q_{n-1} + t) = 1/q_n - q_n/t + (n-v)/t``;
    ``q_prev`` is ignored when ``n = 0``.
    """
    lhs = (1 + n) / (q_cur * q_next + t)
    if n:
        lhs += n / (q_cur * q_prev + t)
    rhs = 1 / q_cur - q_cur / t + (n - v) / t
    return lhs - rhs


def alt_dp2_relative(q_prev, q_cur, q_next, n, v, t):
    terms = [(1 + n) / (q_cur * q_next + t), 1 / q_cur, q_cur / t, (n - v) / t]
    if n:
        terms.append(n / (q_cur * q_prev + t))
    return abs(alt_dp2_residual(q_prev, q_cur, q_next, n, v, t)) / max(abs(x) for x in terms)


def _q0_delta_jet(c: BesselCombination, v, t):
    """``[q_0, delta q_0, delta^2 q_0]`` with ``q_0 = delta log(t^{-v/2} L_v(2 sqrt t))``."""
    g = delta_powers(c, 4 * to_mp(t), 4, gauge=-as_fraction(v) / 2)
    r1, r2, r3 = g[1] / g[0], g[2] / g[0], g[3] / g[0]
    return r1, r2 - r1 * r1, r3 - 3 * r2 * r1 + 2 * r1**3


def q_jet(comb: BesselCombination, v, t, n: int, ctx: PrecisionContext):
    """2-jet ``(q_n, q_n', q_n'')`` in ``t``, propagated through the forward recurrence.

    The seed jet of ``q_0`` comes from Bessel ladders, so no step differences
    anything numerically.
    """
    from .painleve import JetPoint

    c = comb if comb.v == v else comb.shifted(v)

    def run(bits):
        with mp.workprec(bits):
            tv = to_mp(t)
            vv = to_mp(v)
            d0, d1, d2 = _q0_delta_jet(c, v, tv)
            # Taylor coefficients in (t - t0): f, f', f''/2
            q = [d0, d1 / tv, (d2 - d1) / tv**2 / 2]
            p = [mp.mpf(0)] * 3
            tj = [tv, mp.mpf(1), mp.mpf(0)]
            one = [mp.mpf(1), mp.mpf(0), mp.mpf(0)]
            for k in range(n):
                _guard("q_n", q[0], tv)
                qq_t = _jet_div(_jet_mul(q, q), tj)
                pm1 = [x - y for x, y in zip(p, one)]
                p_new = [a - b + c_ for a, b, c_ in zip(_jet_mul(qq_t, pm1), _jet_div([vv * x for x in q], tj), one)]
                den = [a + b for a, b in zip(_jet_mul(q, [x - vv * y for x, y in zip(_jet_mul(q, pm1), one)]), tj)]
                _guard("q_n (q_n (p_n - 1) - v) + t", den[0], tv)
                q_new = [
                    -a + (1 + k) * b
                    for a, b in zip(_jet_div(tj, q), _jet_div(tj, den))
                ]
                p, q = p_new, q_new
            return q[0], q[1], 2 * q[2]

    f, df, d2f = certify(run, ctx, f"q_{n} jet").value
    return JetPoint(to_mp(t), f, df, d2f)


# --------------------------------------------------------------------------
# Toda lattice


def tau_bar(c: BesselCombination, n: int, t, ctx: PrecisionContext, kappa=0):
    """``tau_bar[n](t) = det[delta^{j+k} tau_bar[1]]`` with ``tau_bar[1] = t^{(1-v)/2 + kappa} L_v(sqrt t)``."""
    gauge = (1 - as_fraction(c.v)) / 2 + as_fraction(kappa)
    return wronskian_det(c, n, t, ctx, gauge=gauge)


def toda_verify(c: BesselCombination, n: int, t, ctx: PrecisionContext, kappa=0):
    """Relative residual of ``delta^2 ln tau_bar[n] = tau_bar[n-1] tau_bar[n+1] / tau_bar[n]^2``.

    ``delta^2 ln tau_bar[n]`` comes from the analytic double-Wronskian jet;
    ``kappa`` applies the gauge ``tau_bar[1] -> t^kappa tau_bar[1]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, mid, hi = (tau_bar(c, k, t, ctx, kappa) for k in (n - 1, n, n + 1))
    with mp.workprec(min(lo.bits, mid.bits, hi.bits)):
        lhs = mid.d2
        rhs = lo.value * hi.value / mid.value**2
        return abs(lhs - rhs) / (abs(lhs) + abs(rhs))


# --------------------------------------------------------------------------
# M_n(t) by recursion


def _jet_mul(a, b):
    m = min(len(a), len(b))
    return [mp.fsum(a[i] * b[k - i] for i in range(k + 1)) for k in range(m)]


def _jet_div(a, b):
    m = min(len(a), len(b))
    out = []
    for k in range(m):
        acc = a[k] - mp.fsum(out[i] * b[k - i] for i in range(k))
        out.append(acc / b[0])
    return out


def _jet_d(a):
    return [(k + 1) * a[k + 1] for k in range(len(a) - 1)]


def toda_sequence(c: BesselCombination, n: int, t) -> list:
    """``tau_bar[0..n](t)`` from the Toda recursion on Taylor jets in ``log t``.

    ``tau_bar[k+1] = (tau_bar[k] D^2 tau_bar[k] - (D tau_bar[k])^2) / tau_bar[k-1]``
    with ``D = delta``; each step consumes two jet orders.  Runs at the current
    precision.
    """
    gauge = (1 - as_fraction(c.v)) / 2
    order = max(2 * n - 2, 0)
    powers = delta_powers(c, t, order + 1, gauge)
    seed = [powers[m] / mp.factorial(m) for m in range(order + 1)]
    one = [mp.mpf(1)] + [mp.mpf(0)] * order
    seq = [one, seed]
    for k in range(1, n):
        cur, prev = seq[k], seq[k - 1]
        dcur = _jet_d(cur)
        ddcur = _jet_d(dcur)
        num = [x - y for x, y in zip(_jet_mul(cur, ddcur), _jet_mul(dcur, dcur))]
        if abs(prev[0]) == 0:
            raise SingularityError(f"tau_bar[{k - 1}]", 0)
        seq.append(_jet_div(num, prev))
    return [jet[0] for jet in seq[: n + 1]]


def _d_n_from_tau_hat_4t(n, alpha, v, t, tau_hat_4t):
    """``D_n(t)`` from ``tau_hat[n](4t)`` with ``(a, b) = (0, 1)``, ``v = n + alpha``."""
    return (-1) ** (n * (n - 1) // 2) * mp.mpf(2) ** n * t ** (n * (n + alpha) / 2) * mp.expjpi(-n * v) * tau_hat_4t


def _mgf_toda(n, alpha, t):
    aq = as_fraction(alpha)
    vq = n + aq
    tv = to_mp(t)
    big = 4 * tv
    c = BesselCombination(0, 1, vq)
    tb = toda_sequence(c, n, big)[n]
    v = to_mp(vq)
    tau_hat = big ** (n * (v - 1) / 2) * tb / (big / 4) ** (n * (n - 1) // 2)
    return _d_n_from_tau_hat_4t(n, to_mp(aq), v, tv, tau_hat)


def _mgf_dpii(n, alpha, t):
    aq = as_fraction(alpha)
    vq = n + aq
    tv = to_mp(t)
    c = BesselCombination(0, 1, vq)
    states = _orbit(c, vq, tv, n - 1) if n > 1 else [None]
    r1 = c.value(0, 2 * mp.sqrt(tv))
    tau_hat = r1**n
    for k in range(1, n):
        tau_hat *= states[k].p ** (n - k)
    return _d_n_from_tau_hat_4t(n, to_mp(aq), to_mp(vq), tv, tau_hat)


def mgf_from_recursion(p: EnsembleParams, t, ctx: PrecisionContext, method: str = "dpii", full: bool = False):
    """``M_n(t)`` through the Toda jets (``"toda"``) or the ``(p_n, q_n)`` orbit (``"dpii"``)."""
    fn = {"toda": _mgf_toda, "dpii": _mgf_dpii}[method]

    def run(bits):
        with mp.workprec(bits):
            d = fn(p.n, p.alpha, t)
            if isinstance(d, mp.mpc):
                if abs(d.imag) > mp.ldexp(abs(d.real), -(bits // 2)):
                    raise ArithmeticError(f"{method}: D_n(t) has a non-negligible imaginary part")
                d = d.real
            return d / lue_normalization(p.n, p.alpha, PrecisionContext(bits=bits, tol=1.0, max_bits=2 * bits))

    out = certify(run, ctx, f"M_{p.n} via {method}")
    return out if full else out.value
