"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line that the conftest hook prints in the
terminal summary.  Run ``python tests/test_acceptance.py`` to get the same
lines without pytest's own output.
"""

from fractions import Fraction as F

import mpmath as mp
import pytest

from painleve_tau import series as S
from painleve_tau import verify as V
from painleve_tau.bessel import BesselCombination
from painleve_tau.detkit import EnsembleParams, gap_det, hard_edge_det, mgf
from painleve_tau.numerics import PrecisionContext, lagrange_through, to_mp
from painleve_tau.oracle import mgf_quadrature, sample_lue
from painleve_tau.painleve import boundary_constant

H = F(1, 2)
GRID = [(n, a, t) for n in range(1, 7) for a in (0, H, 1, F(5, 2)) for t in (F(1, 10), 1, 5)]
COMBOS = ((1, 0), (0, 1), (1, 1), (2, -3))


def _ctx(tol=1e-24, bits=256, max_bits=4096):
    return PrecisionContext(bits=bits, tol=tol, max_bits=max_bits)


def _report(log, num, title, ok, detail):
    log.append((num, title, bool(ok), detail))
    assert ok, f"{title}: {detail}"


def _checks(log, num, title, checks):
    bad = [c for c in checks if not c[1]]
    detail = f"{len(checks) - len(bad)}/{len(checks)} checks"
    if bad:
        detail += "; first failure " + f"{bad[0][0]} ({bad[0][2]})"
    _report(log, num, title, not bad, detail)


def test_01_method_consensus(acceptance_log):
    ctx = _ctx()
    qctx = _ctx(tol=1e-12)
    worst_pair = worst_quad = 0
    for n, a, t in GRID:
        p = EnsembleParams(n, a)
        vals = [mgf(p, t, ctx, m) for m in ("hankel", "toeplitz", "toda", "dpii")]
        q = mgf_quadrature(p, t, qctx)
        # certified values carry more than ctx.bits; compare above that so deviations do not round to 0
        with mp.workprec(4 * ctx.bits):
            worst_pair = max([worst_pair] + [abs(x / y - 1) for x in vals for y in vals])
            worst_quad = max([worst_quad] + [abs(q / x - 1) for x in vals])
    ok = worst_pair <= 1e-20 and worst_quad <= 1e-10
    detail = f"{len(GRID)} points, pairwise {mp.nstr(worst_pair, 3)}, quadrature {mp.nstr(worst_quad, 3)}"
    _report(acceptance_log, 1, "method consensus", ok, detail)


def test_02_y_equation(acceptance_log):
    ctx = _ctx()
    _checks(acceptance_log, 2, "y equation on hankel jets", [V.y_residual(ctx, n, a, t) for n, a, t in GRID])


def test_03_sigma_equation(acceptance_log):
    ctx = _ctx()
    checks = [
        V.sigma_residual(ctx, a, b, n, v, t)
        for a, b in COMBOS
        for n in (1, 2, 3)
        for v in (H, 1, F(3, 2))
        for t in (1, 4)
    ]
    _checks(acceptance_log, 3, "sigma-PIII' for general combinations", checks)


def test_04_wronskian_identity(acceptance_log):
    ctx = _ctx(tol=1e-22)
    checks = [
        V.wronskian_identity(ctx, a, b, n, v, 2)
        for a, b in ((1, 0), (0, 1), (1, 1), (2, -3))
        for n in (2, 3, 4)
        for v in (H, F(4, 3))
    ]
    _checks(acceptance_log, 4, "wronskian = (t/4)^(n(n-1)/2) toeplitz", checks)


def test_05_toda(acceptance_log):
    ctx = _ctx()
    checks = [
        V.toda_check(ctx, a, b, n, v, t, kappa)
        for a, b in COMBOS
        for n in (1, 2, 3)
        for v, t in ((H, 2), (F(1, 3), 1))
        for kappa in (0, F(2, 5))
    ]
    _checks(acceptance_log, 5, "Toda equation with and without gauge", checks)


def test_06_exact_cumulants(acceptance_log):
    exact = V.cumulant_formulas(None, seed=2024)
    k3 = S.cumulants_exact(1, 4, 3).kappas[2]
    ctx = PrecisionContext(bits=192, tol=1e-40, max_bits=1024)
    p = EnsembleParams(1, 4)
    with mp.workprec(192):
        h = mp.mpf(10) ** -4
        pts = [(k * h, mp.log(mgf_quadrature(p, k * h, ctx)) if k else mp.mpf(0)) for k in range(9)]
        numeric = -6 * lagrange_through(pts)[3]
        err = abs(numeric / to_mp(k3) - 1)
    ok = exact[1] and err <= 1e-6
    detail = f"{exact[2]}; kappa_3(n=1, alpha=4) = {k3}, quadrature differentiation rel. error {mp.nstr(err, 3)}"
    _report(acceptance_log, 6, "exact cumulants", ok, detail)


def test_07_boundary_condition(acceptance_log):
    ctx = _ctx(tol=1e-20)
    parts = []
    ok = True
    for n, alpha in ((1, 0), (2, 1), (3, H)):
        v = n + F(alpha)
        target = F(n * n, 4) - v * v / 2
        c = BesselCombination(0, 1, v)
        e6 = abs(boundary_constant(c, n, alpha, ctx, 10**6) - to_mp(target))
        e8 = abs(boundary_constant(c, n, alpha, ctx, 10**8) - to_mp(target))
        ok &= e6 <= 1e-2 and e6 / e8 >= 8
        parts.append(f"n={n}: {mp.nstr(e6, 3)} -> {mp.nstr(e8, 3)}")
    _report(acceptance_log, 7, "boundary constant at large t", ok, ", ".join(parts))


def test_08_dpii_orbits(acceptance_log):
    ctx = _ctx()
    checks = [
        V.dpii_orbit(ctx, 1, 0, F(1, 3), 3),
        V.dpii_orbit(ctx, 0, 1, H, 2),
        V.dpii_orbit(ctx, 2, -3, F(3, 4), 1),
    ]
    _checks(acceptance_log, 8, "alternate dPII and pq relation along orbits", checks)


def test_09_sigma_pv(acceptance_log):
    ctx = _ctx(tol=1e-15)
    checks = [
        V.jacobi_pv(ctx, 1, 1, 2, 1),
        V.jacobi_pv(ctx, 2, 2, 1, H),
        V.jacobi_pv(ctx, 2, F(3, 2), F(5, 2), 2),
        V.gap_pv(ctx, 1, 1, 2, 1),
        V.gap_pv(ctx, 2, 0, 1, F(3, 2)),
        V.gap_pv(ctx, 2, H, F(3, 2), 1),
    ]
    _checks(acceptance_log, 9, "sigma-PV for Jacobi and gap determinants", checks)


def test_10_degeneration(acceptance_log):
    checks = [V.jacobi_degeneration(None, 2, 1, 1), V.jacobi_degeneration(None, 1, H, 2)]
    _checks(acceptance_log, 10, "PV -> PIII' degeneration", checks)


def test_11_hard_edge(acceptance_log):
    ctx = PrecisionContext(bits=256, tol=1e-15, max_bits=8192)
    ok = True
    parts = []
    for alpha, mu, t in ((1, 2, 1), (2, 1, 1)):
        limit = hard_edge_det(alpha, mu, t, ctx).d1
        diffs = [abs(gap_det(EnsembleParams(n, alpha, mu=mu), F(t, 4 * n), ctx).d1 - limit) for n in (10, 20, 40)]
        ok &= all(x > y for x, y in zip(diffs, diffs[1:]))
        parts.append(f"(alpha,mu)=({alpha},{mu}): " + ", ".join(mp.nstr(d, 3) for d in diffs))
    _report(acceptance_log, 11, "hard-edge trend over n = 10, 20, 40", ok, "; ".join(parts))


def test_12_series_web(acceptance_log):
    web = V.series_web(None)
    r = S.r_series(H, 8)
    rs4 = all(c == 0 for c in S.rs4_residual(r, H).coeffs[:8])
    limit = S.limit_mgf(2, F(1, 10), 2, PrecisionContext(256, 1e-3))
    ctx = PrecisionContext(bits=8192, tol=1e-20, max_bits=16384)
    finite = mgf(EnsembleParams(200, 2), F(1, 2000), ctx, "dpii")
    err = abs(finite / limit - 1)
    ok = web[1] and rs4 and err <= 1e-3
    detail = f"{web[2]}; rs4 {'exact' if rs4 else 'fails'}; limit_mgf vs M_200 rel. {mp.nstr(err, 3)}"
    _report(acceptance_log, 12, "series web", ok, detail)


def test_13_backlund(acceptance_log):
    name, ok, detail = V.backlund_algebra(None, seed=13)
    _report(acceptance_log, 13, "Backlund algebra", ok, detail)


def test_14_monte_carlo(acceptance_log):
    n, alpha = 4, 6
    mc = sample_lue(n, alpha, 10**5, seed=20240601, t_grid=(0.25, 0.5))
    ok = abs(mc.mean_L - n / alpha) <= 3 * mc.se_L
    parts = [f"<L> {mc.mean_L:.5f} vs {n / alpha:.5f} (se {mc.se_L:.1e})"]
    ctx = _ctx(tol=1e-20)
    for t, (m, se) in mc.mgf.items():
        exact = float(mgf(EnsembleParams(n, alpha), F(t), ctx))
        ok &= abs(m - exact) <= 3 * se
        parts.append(f"t={t}: {m:.5f} vs {exact:.5f} (se {se:.1e})")
    _report(acceptance_log, 14, "Monte-Carlo sanity", ok, "; ".join(parts))


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
