"""Command-line front end: every computation emits machine-diffable JSON or CSV.

Exit codes: 0 success, 2 invalid input, 3 certification failure,
4 failed check or consensus.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import List, Optional

import mpmath as mp

from . import __version__
from .bessel import BesselCombination
from .detkit import MGF_METHODS, EnsembleParams, gap_det, hankel_det, hard_edge_det, jacobi_hankel_det, mgf
from .discrete import alt_dp2_relative, orbit, pq_relation_residual, q_jet, tau_bar, toda_verify
from .errors import (
    BranchObstructionError,
    CertificationError,
    ConsensusError,
    DenominatorError,
    PainleveTauError,
    SingularityError,
)
from .numerics import DEFAULT_MAX_BITS, DEFAULT_TOL, PrecisionContext, parse_number, to_mp
from .painleve import (
    HamiltonianState,
    JetPoint,
    SigmaParameters,
    apply_backlund,
    hamiltonian,
    ode_residual,
    sigmahat_jet,
    transform,
)

EXIT_OK, EXIT_INPUT, EXIT_CERT, EXIT_CHECK = 0, 2, 3, 4
RESIDUAL_CHOICES = ("siii", "sv", "y", "piii", "h", "jacobi")
QUADRATURE_TOL = 1e-10


class Report:
    """Accumulates results and checks for one command."""

    def __init__(self, command: str, inputs: dict):
        self.command = command
        self.inputs = {k: _ser(v) for k, v in sorted(inputs.items()) if v is not None}
        self.results: List[dict] = []
        self.checks: List[dict] = []

    def result(self, name, value, method, bits=0, tol=0.0):
        self.results.append(
            {"name": name, "value": _ser(value, bits), "method": method, "bits": int(bits), "tol_achieved": _ser(tol)}
        )

    def check(self, name, ok: bool, detail: str = ""):
        self.checks.append({"name": name, "pass": bool(ok), "detail": detail})

    @property
    def failed(self):
        return [c for c in self.checks if not c["pass"]]

    def as_dict(self):
        return {
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "checks": self.checks,
            "version": __version__,
        }


def _ser(x, bits: int = 0):
    """Deterministic string/number form: rationals as ``p/q``, mp numbers at full precision."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return x
    if isinstance(x, (mp.mpf, mp.mpc)):
        dps = max(int(max(bits, x.context.prec) * math.log10(2)), 15)
        return mp.nstr(x, dps)
    if isinstance(x, (list, tuple)):
        return [_ser(y, bits) for y in x]
    return str(x)


def _fmt(x):
    return mp.nstr(x, 6)


# --------------------------------------------------------------------------
# argument parsing


def _number(text: str) -> Fraction:
    try:
        return parse_number(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _grid(text: str) -> List[Fraction]:
    """``a,b,c`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    try:
        if ":" in text:
            lo, hi, k = text.split(":")
            lo, hi, k = parse_number(lo), parse_number(hi), int(k)
            if k < 2:
                return [lo]
            return [lo + (hi - lo) * i / (k - 1) for i in range(k)]
        return [parse_number(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad grid: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("inputs")
    g.add_argument("--n", type=int)
    g.add_argument("--alpha", type=_number)
    g.add_argument("--beta", type=_number)
    g.add_argument("--mu", type=_number)
    g.add_argument("--t", type=_number)
    g.add_argument("--t-grid", type=_grid, dest="t_grid")
    g.add_argument("--v", type=_number)
    g.add_argument("--a", type=_number, default=Fraction(1))
    g.add_argument("--b", type=_number, default=Fraction(0))
    g.add_argument("--order", type=int)
    g.add_argument("--steps", type=int)
    g.add_argument("--method", default=None)
    g.add_argument("--count", type=int, default=100_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--workers", type=int, default=1)
    p = common.add_argument_group("precision and output")
    p.add_argument("--bits", type=int)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-bits", type=int, dest="max_bits")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out")

    parser = argparse.ArgumentParser(prog="painleve-tau", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mgf", parents=[common], help="M_n(t) by one or all methods")
    c = sub.add_parser("cumulants", parents=[common], help="exact cumulants")
    c.add_argument("--strict", action="store_true")
    ls = sub.add_parser("limit-series", parents=[common], help="large-n series Y, F or r")
    ls.add_argument("which", choices=("Y", "F", "r"))
    sub.add_parser("recurrence", parents=[common], help="(p_n, q_n) orbit")
    sub.add_parser("toda", parents=[common], help="Toda-lattice residual")
    r = sub.add_parser("residual", parents=[common], help="ODE residual on a determinant jet")
    r.add_argument("kind", choices=RESIDUAL_CHOICES)
    sub.add_parser("hard-edge", parents=[common], help="hard-edge Bessel determinant")
    sub.add_parser("gap", parents=[common], help="generalised gap probability")
    b = sub.add_parser("backlund", parents=[common], help="apply a Backlund operator to an exact state")
    b.add_argument("op", choices=("s0", "s1", "s2", "T1"))
    b.add_argument("--p", type=_number, required=True)
    b.add_argument("--q", type=_number, required=True)
    b.add_argument("--v1", type=_number, required=True)
    b.add_argument("--v2", type=_number, required=True)
    sub.add_parser("sample", parents=[common], help="Monte-Carlo LUE sampler")
    v = sub.add_parser("verify", parents=[common], help="run a cross-check suite")
    v.add_argument("--suite", choices=("quick", "full"), default="quick")
    sub.add_parser("sweep", parents=[common], help="M_n on a t grid (data for plots)")
    return parser


def _ctx(args) -> PrecisionContext:
    kw = {"tol": args.tol}
    if args.bits is not None:
        kw["bits"] = args.bits
    if args.max_bits is not None:
        kw["max_bits"] = args.max_bits
    elif args.bits is not None:
        kw["max_bits"] = max(DEFAULT_MAX_BITS, args.bits)
    return PrecisionContext.from_env(**kw)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ValueError("missing required flag(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _params(args) -> EnsembleParams:
    _need(args, "n")
    return EnsembleParams(args.n, args.alpha if args.alpha is not None else Fraction(0), args.beta, args.mu)


def _comb(args) -> BesselCombination:
    _need(args, "v")
    return BesselCombination(args.a, args.b, args.v)


def _ts(args) -> List[Fraction]:
    if args.t_grid:
        return sorted(args.t_grid)
    _need(args, "t")
    return [args.t]


def _inputs(args, *names) -> dict:
    return {k: getattr(args, k) for k in names}


# --------------------------------------------------------------------------
# commands


def _mgf_point(task):
    p, t, ctx, methods = task
    out = {}
    for m in methods:
        c = ctx if m != "quadrature" else PrecisionContext(ctx.bits, max(ctx.tol, QUADRATURE_TOL / 10), ctx.max_bits)
        out[m] = mgf(p, t, c, m, full=True)
    return t, out


def _mgf_records(rep: Report, p, ts, ctx, methods, workers):
    tasks = [(p, t, ctx, methods) for t in ts]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(workers) as pool:
            points = list(pool.map(_mgf_point, tasks))
    else:
        points = [_mgf_point(task) for task in tasks]
    for t, vals in sorted(points, key=lambda x: x[0]):
        for m, cert in vals.items():
            rep.result(f"M_{p.n}(t={t})", cert.value, m, cert.bits, cert.tol_achieved)
        if len(vals) > 1:
            _consensus(rep, t, vals, ctx)


def _consensus(rep, t, vals, ctx):
    exact = {m: c.value for m, c in vals.items() if m != "quadrature"}
    worst = 0.0
    names = sorted(exact)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            worst = max(worst, float(abs(exact[a] / exact[b] - 1)))
    rep.result(f"max_pairwise_deviation(t={t})", worst, "consensus")
    rep.check(f"consensus(t={t})", worst <= 10 * ctx.tol, f"max deviation {worst:.3g} over {names}")
    if "quadrature" in vals:
        dev = max(float(abs(vals["quadrature"].value / x - 1)) for x in exact.values()) if exact else 0.0
        rep.check(f"quadrature(t={t})", dev <= QUADRATURE_TOL, f"max deviation {dev:.3g}")


def cmd_mgf(args, ctx, rep):
    p = _params(args)
    method = args.method or "hankel"
    methods = MGF_METHODS if method == "all" else (method,)
    for m in methods:
        if m not in MGF_METHODS:
            raise ValueError(f"unknown method {m!r}")
    _mgf_records(rep, p, _ts(args), ctx, methods, args.workers)


def cmd_sweep(args, ctx, rep):
    p = _params(args)
    if not args.t_grid:
        raise ValueError("sweep needs --t-grid")
    method = args.method or "hankel"
    methods = MGF_METHODS if method == "all" else (method,)
    _mgf_records(rep, p, _ts(args), ctx, methods, args.workers)


def cmd_cumulants(args, ctx, rep):
    from .series import cumulants_exact, moments_from_cumulants

    _need(args, "n", "alpha", "order")
    cs = cumulants_exact(args.n, args.alpha, args.order, strict=args.strict)
    for p, (k, ok) in enumerate(zip(cs.kappas, cs.valid), 1):
        rep.result(f"kappa_{p}", k, "exact_series")
        rep.check(f"kappa_{p} is a cumulant", True, "valid" if ok else f"formal only (needs alpha > {p - 1})")
    for p, m in enumerate(moments_from_cumulants(cs.kappas), 1):
        rep.result(f"m_{p}", m, "exact_series")


def cmd_limit_series(args, ctx, rep):
    from . import series as S

    _need(args, "order")
    P = args.order
    if args.which == "F":
        F = S.f_limit_series(P)
        for p in range(1, P + 1):
            rep.result(f"f_{p}", F[p], "exact_series")
        for name, res in (("FF2", S.ff2_residual(F)), ("FF3", S.ff3_residual(F))):
            ok = all(c == 0 for c in res.coeffs[:P])
            rep.check(f"{name} through order {P - 1}", ok, "zero series" if ok else str(res))
        return
    _need(args, "alpha")
    if args.which == "Y":
        Y = S.y_limit_series(args.alpha, P)
        for p in range(1, P + 1):
            rep.result(f"y_{p}", Y[p], "exact_series")
        r = S.r_from_y(Y, args.alpha)
        res = S.rs4_residual(r, args.alpha)
        rep.check("r-map solves the r equation", all(c == 0 for c in res.coeffs[:P]), "")
        return
    r = S.r_series(args.alpha, P)
    for p in range(P + 1):
        rep.result(f"r_{p}", r[p], "exact_series")
    res = S.rs1_residual(r)
    rep.check(f"third-order r equation through order {P - 2}", all(c == 0 for c in res.coeffs[: P - 1]), "")


def cmd_recurrence(args, ctx, rep):
    _need(args, "t", "steps")
    c = _comb(args)
    states = orbit(c, args.v, args.t, args.steps + 1, ctx)
    bits = 2 * ctx.bits
    with mp.workprec(bits):
        for s in states[:-1]:
            rep.result(f"p_{s.n}", s.p, "recurrence", bits)
            rep.result(f"q_{s.n}", s.q, "recurrence", bits)
        worst_dp = worst_pq = 0
        for k in range(args.steps):
            prev = states[k - 1].q if k else None
            worst_dp = max(worst_dp, alt_dp2_relative(prev, states[k].q, states[k + 1].q, k, states[k].v, states[k].t))
            worst_pq = max(worst_pq, pq_relation_residual(states[k], states[k + 1]))
    rep.check("alternate dPII", worst_dp <= ctx.tol, f"max relative residual {_fmt(worst_dp)}")
    rep.check("pq relation", worst_pq <= ctx.tol, f"max relative residual {_fmt(worst_pq)}")


def cmd_toda(args, ctx, rep):
    _need(args, "n", "t")
    c = _comb(args)
    for k in range(max(args.n - 1, 0), args.n + 2):
        d = tau_bar(c, k, args.t, ctx)
        rep.result(f"tau_bar[{k}]", d.value, "wronskian", d.bits, d.tol_achieved)
    res = toda_verify(c, args.n, args.t, ctx)
    rep.result("toda_residual", res, "wronskian")
    rep.check("toda", res <= ctx.tol, f"relative residual {_fmt(res)}")


def _jet(d) -> JetPoint:
    f, df, d2f = d.jet()
    return JetPoint(d.t, f, df, d2f)


def cmd_residual(args, ctx, rep):
    kind = args.kind
    _need(args, "t")
    t = args.t
    if kind in ("y", "h"):
        p = _params(args)
        d = hankel_det(p, t, ctx)
        with mp.workprec(d.bits):
            jet = _jet(d)
            if kind == "y":
                res = ode_residual("y_form", jet, (p.n, p.alpha))
            else:
                sp = transform("params_mgf", (p.n, p.alpha))
                res = ode_residual("h_form", transform("h_from_y", jet, alpha=to_mp(p.alpha)), (sp.v1, sp.v2))
        bits = d.bits
    elif kind in ("siii", "piii"):
        _need(args, "n")
        c = _comb(args)
        jet = sigmahat_jet(c, args.n, t, ctx) if kind == "siii" else q_jet(c, args.v, t, args.n, ctx)
        bits = 2 * ctx.bits
        with mp.workprec(bits):
            v = to_mp(args.v)
            res = ode_residual("sigma_iii" if kind == "siii" else "piii_q", jet, (v + args.n, -v + args.n))
    elif kind == "jacobi":
        p = _params(args)
        if p.beta is None:
            raise ValueError("jacobi residual needs --beta")
        d = jacobi_hankel_det(p, t, ctx)
        with mp.workprec(d.bits):
            jet = _jet(d)
            res = ode_residual("jacobi_H", jet, (p.n, p.alpha, p.beta))
        bits = d.bits
    else:
        p = _params(args)
        if p.mu is None:
            raise ValueError("sv residual needs --mu")
        d = gap_det(p, t, ctx)
        with mp.workprec(d.bits):
            f, df, d2f = d.jet()
            jet = JetPoint(d.t, f - to_mp(p.mu) * p.n, df, d2f)
            res = ode_residual("sigma_v", jet, transform("params_gap", (p.n, p.alpha, p.mu)))
        bits = d.bits
    with mp.workprec(max(bits, ctx.bits)):
        rel = res.relative
        rep.result("f", jet.f, kind, bits)
        rep.result("residual", rel, kind, bits)
    rep.check(f"{kind} residual", rel <= ctx.tol, f"relative residual {_fmt(rel)}")


def cmd_hard_edge(args, ctx, rep):
    _need(args, "alpha", "mu", "t")
    if args.alpha.denominator != 1:
        raise ValueError("hard-edge needs an integer --alpha")
    d = hard_edge_det(int(args.alpha), args.mu, args.t, ctx)
    rep.result("value", d.value, "hard_edge", d.bits, d.tol_achieved)
    rep.result("log_derivative", d.d1, "hard_edge", d.bits, d.tol_achieved)


def cmd_gap(args, ctx, rep):
    p = _params(args)
    _need(args, "mu", "t")
    d = gap_det(p, args.t, ctx)
    rep.result("value", d.value, "gap", d.bits, d.tol_achieved)
    rep.result("log_derivative", d.d1, "gap", d.bits, d.tol_achieved)


def cmd_backlund(args, ctx, rep):
    _need(args, "t")
    s = HamiltonianState(args.p, args.q, args.t, SigmaParameters(args.v1, args.v2))
    out = apply_backlund(args.op, s)
    for name in ("p", "q", "t"):
        rep.result(name, getattr(out, name), args.op)
    rep.result("v1", out.params.v1, args.op)
    rep.result("v2", out.params.v2, args.op)
    rep.result("H", hamiltonian(out), args.op)
    if args.op == "T1":
        ok = (out.params.v1, out.params.v2) == (s.params.v1 + 1, s.params.v2 + 1)
        rep.check("T1 shifts (v1, v2) by (1, 1)", ok, "")


def cmd_sample(args, ctx, rep):
    from .oracle import sample_lue

    _need(args, "n", "alpha")
    if args.alpha.denominator != 1:
        raise ValueError("sample needs an integer --alpha")
    grid = [float(t) for t in (args.t_grid or [Fraction(1, 4), Fraction(1, 2)])]
    s = sample_lue(args.n, int(args.alpha), args.count, args.seed, grid, workers=args.workers)
    rep.result("mean_L", s.mean_L, "monte_carlo", 53, s.se_L)
    for t, (m, se) in sorted(s.mgf.items()):
        rep.result(f"M_{args.n}(t={t})", m, "monte_carlo", 53, se)


def cmd_verify(args, ctx, rep):
    from .verify import run_suite

    for name, ok, detail in run_suite(args.suite, ctx, workers=args.workers):
        rep.check(name, ok, detail)


COMMANDS = {
    "mgf": cmd_mgf,
    "sweep": cmd_sweep,
    "cumulants": cmd_cumulants,
    "limit-series": cmd_limit_series,
    "recurrence": cmd_recurrence,
    "toda": cmd_toda,
    "residual": cmd_residual,
    "hard-edge": cmd_hard_edge,
    "gap": cmd_gap,
    "backlund": cmd_backlund,
    "sample": cmd_sample,
    "verify": cmd_verify,
}


def _emit(rep: Report, fmt: str, out: Optional[str]):
    if fmt == "json":
        text = json.dumps(rep.as_dict(), indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["command", "name", "value", "method", "bits", "tol_achieved"])
        for r in rep.results:
            w.writerow([rep.command, r["name"], r["value"], r["method"], r["bits"], r["tol_achieved"]])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv``, run the command, write the report; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    names = [k for k in vars(args) if k not in ("command", "format", "out", "workers")]
    rep = Report(args.command, _inputs(args, *names))
    try:
        ctx = _ctx(args)
        COMMANDS[args.command](args, ctx, rep)
    except (ValueError, DenominatorError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConsensusError as exc:
        print(f"consensus failure: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (CertificationError, SingularityError, BranchObstructionError, PainleveTauError) as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    _emit(rep, args.format, args.out)
    if rep.failed:
        for c in rep.failed:
            print(f"check failed: {c['name']}: {c['detail']}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def main() -> None:
    sys.exit(run())
