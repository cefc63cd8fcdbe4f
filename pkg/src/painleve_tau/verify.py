"""Cross-check suites run by ``painleve-tau verify``.

Each check returns ``(name, passed, detail)``; suites are ordered by name so
the report does not depend on execution order.
"""

from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, List, Tuple

import mpmath as mp

from .bessel import BesselCombination
from .detkit import EnsembleParams, gap_det, hankel_det, jacobi_hankel_det, mgf, toeplitz_l_det, wronskian_det
from .discrete import alt_dp2_relative, orbit, pq_relation_residual, q_jet, toda_verify
from .numerics import PrecisionContext, to_mp
from .painleve import HamiltonianState, JetPoint, SigmaParameters, apply_backlund, ode_residual, sigmahat_jet, transform
from . import series as S

Check = Tuple[str, bool, str]


def _f(x) -> str:
    return mp.nstr(x, 4)


def mgf_consensus(ctx, n, alpha, t) -> Check:
    p = EnsembleParams(n, alpha)
    vals = {m: mgf(p, t, ctx, m) for m in ("hankel", "toeplitz", "toda", "dpii")}
    names = sorted(vals)
    worst = max(abs(vals[a] / vals[b] - 1) for a in names for b in names if a < b)
    qv = mgf(p, t, PrecisionContext(ctx.bits, 1e-12, ctx.max_bits), "quadrature")
    qdev = max(abs(qv / x - 1) for x in vals.values())
    ok = worst <= 10 * ctx.tol and qdev <= 1e-10
    return f"mgf consensus n={n} alpha={alpha} t={t}", ok, f"pairwise {_f(worst)}, quadrature {_f(qdev)}"


def y_residual(ctx, n, alpha, t) -> Check:
    d = hankel_det(EnsembleParams(n, alpha), t, ctx)
    with mp.workprec(d.bits):
        f, df, d2f = d.jet()
        rel = ode_residual("y_form", JetPoint(d.t, f, df, d2f), (n, alpha)).relative
    return f"y equation n={n} alpha={alpha} t={t}", rel <= 1e-15, _f(rel)


def sigma_residual(ctx, a, b, n, v, t) -> Check:
    jet = sigmahat_jet(BesselCombination(a, b, v), n, t, ctx)
    with mp.workprec(ctx.bits):
        vv = to_mp(v)
        rel = ode_residual("sigma_iii", jet, (vv + n, -vv + n)).relative
    return f"sigma PIII' (a,b)=({a},{b}) n={n} v={v} t={t}", rel <= 1e-12, _f(rel)


def q_residual(ctx, a, b, n, v, t) -> Check:
    jet = q_jet(BesselCombination(a, b, v), v, t, n, ctx)
    with mp.workprec(ctx.bits):
        vv = to_mp(v)
        rel = ode_residual("piii_q", jet, (vv + n, -vv + n)).relative
    return f"PIII' for q_n (a,b)=({a},{b}) n={n} v={v} t={t}", rel <= 1e-12, _f(rel)


def wronskian_identity(ctx, a, b, n, v, t) -> Check:
    c = BesselCombination(a, b, v)
    w = wronskian_det(c, n, t, ctx)
    d = toeplitz_l_det(c, n, t, ctx)
    with mp.workprec(min(w.bits, d.bits)):
        tv = to_mp(t)
        rel = abs(w.value / ((tv / 4) ** (n * (n - 1) // 2) * d.value) - 1)
    return f"wronskian = (t/4)^(n(n-1)/2) toeplitz (a,b)=({a},{b}) n={n}", rel <= 10 * ctx.tol, _f(rel)


def toda_check(ctx, a, b, n, v, t, kappa=0) -> Check:
    rel = toda_verify(BesselCombination(a, b, v), n, t, ctx, kappa)
    return f"toda (a,b)=({a},{b}) n={n} kappa={kappa}", rel <= 1e-12, _f(rel)


def dpii_orbit(ctx, a, b, v, t, steps=6) -> Check:
    states = orbit(BesselCombination(a, b, v), v, t, steps + 1, ctx)
    with mp.workprec(2 * ctx.bits):
        dp = max(
            alt_dp2_relative(states[k - 1].q if k else None, states[k].q, states[k + 1].q, k, states[k].v, states[k].t)
            for k in range(steps + 1)
        )
        pq = max(pq_relation_residual(states[k], states[k + 1]) for k in range(steps + 1))
    return f"dPII orbit (a,b)=({a},{b}) v={v} t={t}", dp <= 1e-18 and pq <= 1e-20, f"dPII {_f(dp)}, pq {_f(pq)}"


def cumulant_formulas(ctx, seed=1) -> Check:
    rng = random.Random(seed)
    bad = []
    for _ in range(10):
        n = Fraction(rng.randint(1, 12), rng.randint(1, 3))
        a = Fraction(rng.randint(5, 40), rng.randint(2, 4))
        cs = S.cumulants_exact(n, a, 2)
        if cs.kappas != (n / a, (n * n + n * a) / (a * a * (a * a - 1))):
            bad.append((n, a))
    return "exact kappa_1, kappa_2 on random rationals", not bad, f"mismatches {bad}"


def series_web(ctx) -> Check:
    msgs = []
    F = S.f_limit_series(8)
    if (F[1], F[2]) != (1, 2):
        msgs.append("f_1, f_2")
    if not (all(c == 0 for c in S.ff2_residual(F).coeffs[:8]) and all(c == 0 for c in S.ff3_residual(F).coeffs[:8])):
        msgs.append("FF2/FF3")
    r = S.r_series(Fraction(1, 2), 8)
    if not all(c == 0 for c in S.rs1_residual(r).coeffs[:7]):
        msgs.append("third-order r equation")
    alpha = Fraction(7, 2)
    Y = S.y_limit_series(alpha, 4)
    lims = [S.limit_at_infinity(a, -p) for p, a in enumerate(S.a_coefficients_symbolic(alpha, 4), 1)]
    if lims != list(Y.coeffs[1:]):
        msgs.append("Y vs n -> inf cumulants")
    return "series identities", not msgs, ", ".join(msgs) or "all exact"


def backlund_algebra(ctx, seed=2) -> Check:
    rng = random.Random(seed)
    bad = 0
    for _ in range(20):
        fr = lambda: Fraction(rng.randint(-20, 20), rng.randint(1, 7))
        s = HamiltonianState(fr() or Fraction(1, 3), fr() or Fraction(2, 5), fr() or Fraction(3), SigmaParameters(fr(), fr()))
        if s.p == 1:
            continue
        ok = apply_backlund("s2", apply_backlund("s2", s)) == s
        if s.params.v1 != s.params.v2:
            ok &= apply_backlund("s1", apply_backlund("s1", s)) == s
        t1 = apply_backlund("T1", s)
        ok &= (t1.params.v1, t1.params.v2) == (s.params.v1 + 1, s.params.v2 + 1)
        bad += not ok
    return "Backlund algebra on random rational states", bad == 0, f"{bad} failures"


def gap_pv(ctx, n, alpha, mu, s) -> Check:
    p = EnsembleParams(n, alpha, mu=mu)
    d = gap_det(p, s, ctx)
    with mp.workprec(d.bits):
        f, df, d2f = d.jet()
        jet = JetPoint(d.t, f - to_mp(mu) * n, df, d2f)
        rel = ode_residual("sigma_v", jet, transform("params_gap", (n, alpha, mu))).relative
    return f"gap sigma-PV n={n} alpha={alpha} mu={mu} s={s}", rel <= 1e-8, _f(rel)


def jacobi_pv(ctx, n, alpha, beta, t) -> Check:
    d = jacobi_hankel_det(EnsembleParams(n, alpha, beta=beta), t, ctx)
    with mp.workprec(d.bits):
        f, df, d2f = d.jet()
        rel = ode_residual("jacobi_H", JetPoint(d.t, f, df, d2f), (n, alpha, beta)).relative
    return f"Jacobi sigma-PV n={n} alpha={alpha} beta={beta} t={t}", rel <= 1e-8, _f(rel)


def jacobi_degeneration(ctx, n, alpha, t, betas=(100, 1000, 10000)) -> Check:
    """y-form residual of the Jacobi quantity at ``t/beta``; must fall as ``beta`` grows."""
    rels = []
    for beta in betas:
        tau = to_mp(t) / beta
        d = jacobi_hankel_det(EnsembleParams(n, alpha, beta=beta), tau, PrecisionContext(128, 1e-15, 1024))
        with mp.workprec(d.bits):
            tv = to_mp(t)
            # delta-jets are scale invariant, so d1..d3 at tau are the jets at t
            jet = JetPoint(tv, d.d1, d.d2 / tv, (d.d3 - d.d2) / tv**2)
            rels.append(ode_residual("y_form", jet, (n, alpha)).relative)
    ok = all(a > b for a, b in zip(rels, rels[1:]))
    return f"PV -> PIII' degeneration n={n} alpha={alpha} t={t}", ok, ", ".join(_f(r) for r in rels)


def _quick() -> List[Tuple[Callable, tuple]]:
    h = Fraction(1, 2)
    return [
        (mgf_consensus, (2, 1, 1)),
        (y_residual, (3, h, 1)),
        (sigma_residual, (1, 1, 2, h, 1)),
        (q_residual, (1, 1, 2, h, 2)),
        (wronskian_identity, (1, 1, 3, h, 2)),
        (toda_check, (1, 1, 2, h, 2)),
        (dpii_orbit, (1, 0, 1, 2)),
        (cumulant_formulas, ()),
        (series_web, ()),
        (backlund_algebra, ()),
    ]


def _full() -> List[Tuple[Callable, tuple]]:
    h = Fraction(1, 2)
    extra = []
    for n in (1, 3, 5):
        for alpha in (0, h, Fraction(5, 2)):
            extra.append((mgf_consensus, (n, alpha, Fraction(1, 10))))
            extra.append((y_residual, (n, alpha, 5)))
    for ab in ((1, 0), (0, 1), (2, -3)):
        extra.append((sigma_residual, (*ab, 3, Fraction(3, 2), 4)))
        extra.append((wronskian_identity, (*ab, 4, 1, 1)))
        extra.append((toda_check, (*ab, 3, Fraction(1, 3), 1, 1)))
        extra.append((dpii_orbit, (*ab, Fraction(1, 3), 3)))
    extra += [
        (gap_pv, (1, 1, 2, 1)),
        (gap_pv, (2, 0, 1, Fraction(3, 2))),
        (jacobi_pv, (1, 1, 2, 1)),
        (jacobi_pv, (2, 2, 1, Fraction(1, 2))),
        (jacobi_degeneration, (2, 1, 1)),
    ]
    return _quick() + extra


def _run(job):
    fn, args, ctx = job
    return fn(ctx, *args)


def run_suite(suite: str, ctx: PrecisionContext, workers: int = 1) -> List[Check]:
    """Run the ``quick`` or ``full`` suite; results sorted by check name."""
    jobs = [(fn, args, ctx) for fn, args in (_quick() if suite == "quick" else _full())]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            out = list(pool.map(_run, jobs))
    else:
        out = [_run(j) for j in jobs]
    return sorted(out, key=lambda c: c[0])
