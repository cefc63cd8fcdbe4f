"""Implementation-independent ground truth.

Moments come from double-exponential quadrature of the weights themselves and
the LUE sampler draws matrices from the tridiagonal model, so neither shares
code with the Bessel or determinant modules.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import mpmath as mp
import numpy as np

from .numerics import (
    PrecisionContext,
    certify,
    integrate_unit_interval,
    integrate_zero_to_infinity,
    is_integer,
    to_mp,
)

WEIGHT_KINDS = ("laguerre_deformed", "jacobi_deformed", "gap")
SHARD_SIZE = 1 << 14


@dataclass(frozen=True)
class WeightSpec:
    """A weight on the half line or the unit interval.

    ``laguerre_deformed``: ``x^alpha e^{-x - t/x}`` on ``(0, inf)``.
    ``jacobi_deformed``: ``x^alpha (1-x)^beta e^{-t/x}`` on ``(0, 1)``.
    ``gap``: ``x^alpha e^{-x} (x - s)^mu`` on ``(s, inf)``.
    """

    kind: str
    alpha: object = 0
    beta: Optional[object] = None
    mu: Optional[object] = None
    s: Optional[object] = None
    t: object = 0

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"kind must be one of {WEIGHT_KINDS}, got {self.kind!r}")
        a = to_mp(self.alpha)
        if self.kind == "laguerre_deformed":
            if not a > -1:
                raise ValueError("laguerre weight needs alpha > -1")
            if to_mp(self.t) < 0:
                raise ValueError("t must be non-negative")
        elif self.kind == "jacobi_deformed":
            if self.beta is None or not (a > 0 and to_mp(self.beta) > 0):
                raise ValueError("jacobi weight needs alpha, beta > 0")
            if to_mp(self.t) < 0:
                raise ValueError("t must be non-negative")
        else:
            if self.mu is None or self.s is None:
                raise ValueError("gap weight needs mu and s")
            if not to_mp(self.mu) > -1 or not to_mp(self.s) > 0:
                raise ValueError("gap weight needs mu > -1 and s > 0")


def _moment(w: WeightSpec, m: int, qctx: PrecisionContext):
    a = to_mp(w.alpha)
    tv = to_mp(w.t)
    if w.kind == "laguerre_deformed":
        g = a + m
        f = lambda x: x**g * mp.exp(-x - tv / x) if tv else x**g * mp.exp(-x)
        return integrate_zero_to_infinity(f, qctx).value
    if w.kind == "jacobi_deformed":
        b = to_mp(w.beta)
        g = a + m
        f = lambda x, xc: x**g * xc**b * mp.exp(-tv / x) if tv else x**g * xc**b
        return integrate_unit_interval(f, qctx).value
    sv, mu = to_mp(w.s), to_mp(w.mu)
    g = a + m
    # x = s + y
    f = lambda y: (sv + y) ** g * y**mu * mp.exp(-y)
    return mp.exp(-sv) * integrate_zero_to_infinity(f, qctx).value


def _inner(bits):
    return PrecisionContext(bits=bits, tol=max(float(mp.mpf(2) ** (-(bits - 40))), 1e-300), max_bits=bits)


def moment_quadrature(w: WeightSpec, m: int, ctx: PrecisionContext):
    """``int x^m w(x) dx`` by double-exponential quadrature, certified to ``ctx.tol``."""

    def run(bits):
        with mp.workprec(bits):
            return _moment(w, m, _inner(bits))

    return certify(run, ctx, f"{w.kind} moment {m}").value


def _hankel(n, alpha, t, bits):
    w = WeightSpec("laguerre_deformed", alpha, t=t)
    qctx = _inner(bits)
    mus = [_moment(w, i, qctx) for i in range(2 * n - 1)]
    return mp.det(mp.matrix([[mus[j + k] for k in range(n)] for j in range(n)]))


def mgf_quadrature(p, t, ctx: PrecisionContext, full: bool = False):
    """``M_n(t)`` as a ratio of Hankel determinants of quadrature moments (``n <= 8``)."""
    n, alpha = p.n, p.alpha
    if n > 8:
        raise ValueError("mgf_quadrature is limited to n <= 8")
    if to_mp(t) < 0:
        raise ValueError("t must be non-negative")

    def run(bits):
        with mp.workprec(bits):
            return _hankel(n, alpha, t, bits) / _hankel(n, alpha, 0, bits)

    out = certify(run, ctx, f"M_{n}({t}) by quadrature")
    return out if full else out.value


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass
class _Moments:
    count: int = 0
    s1: float = 0.0
    s2: float = 0.0

    def add(self, x: np.ndarray):
        self.count += x.size
        self.s1 += float(np.sum(x))
        self.s2 += float(np.sum(x * x))

    def merge(self, other: "_Moments") -> "_Moments":
        return _Moments(self.count + other.count, self.s1 + other.s1, self.s2 + other.s2)

    @property
    def mean(self) -> float:
        return self.s1 / self.count

    @property
    def stderr(self) -> float:
        var = (self.s2 - self.s1 * self.s1 / self.count) / (self.count - 1)
        return float(np.sqrt(max(var, 0.0) / self.count))


@dataclass(frozen=True)
class MCSummary:
    """Empirical mean of ``L = sum 1/lambda`` and of ``e^{-tL}`` on a ``t`` grid."""

    n: int
    alpha: int
    count: int
    seed: int
    mean_L: float
    se_L: float
    mgf: Dict[float, tuple] = field(default_factory=dict)


def laguerre_eigenvalues(rng: np.random.Generator, n: int, alpha: int, size: int) -> np.ndarray:
    """Eigenvalues of ``B B^T`` for the beta = 2 Laguerre bidiagonal model, shape ``(size, n)``.

    The density is proportional to ``prod lam^alpha e^{-lam}`` times the
    squared Vandermonde.
    """
    m = n + alpha
    diag = np.sqrt(rng.chisquare(2 * (m - np.arange(n)), size=(size, n)) / 2)
    b = np.zeros((size, n, n))
    idx = np.arange(n)
    b[:, idx, idx] = diag
    if n > 1:
        sub = np.sqrt(rng.chisquare(2 * (n - 1 - np.arange(n - 1)), size=(size, n - 1)) / 2)
        b[:, idx[1:], idx[:-1]] = sub
    return np.linalg.eigvalsh(b @ np.swapaxes(b, 1, 2))


def _shard(args):
    n, alpha, seed, index, size, t_grid = args
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    lam = laguerre_eigenvalues(rng, n, alpha, size)
    stat = np.sum(1.0 / lam, axis=1)
    acc_l = _Moments()
    acc_l.add(stat)
    accs = []
    for t in t_grid:
        a = _Moments()
        a.add(np.exp(-t * stat))
        accs.append(a)
    return acc_l, accs


def sample_lue(
    n: int,
    alpha: int,
    count: int,
    seed: int,
    t_grid: Sequence[float] = (0.25, 0.5),
    workers: int = 1,
) -> MCSummary:
    """Monte-Carlo estimates of ``<L>`` and ``<e^{-tL}>`` with standard errors.

    Samples are split into fixed-size shards, each with its own Philox stream
    derived from ``(seed, shard index)``, so the summary does not depend on
    ``workers``.
    """
    if not is_integer(alpha) or alpha < 0:
        raise ValueError("sampling needs a non-negative integer alpha")
    if count < 10_000:
        raise ValueError("count must be at least 10^4")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    alpha = int(alpha)
    sizes = [SHARD_SIZE] * (count // SHARD_SIZE)
    if count % SHARD_SIZE:
        sizes.append(count % SHARD_SIZE)
    jobs = [(n, alpha, seed, i, size, tuple(t_grid)) for i, size in enumerate(sizes)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_shard, jobs))
    else:
        parts = [_shard(j) for j in jobs]
    acc_l = _Moments()
    accs = [_Moments() for _ in t_grid]
    for pl, pts in parts:
        acc_l = acc_l.merge(pl)
        accs = [a.merge(b) for a, b in zip(accs, pts)]
    return MCSummary(
        n,
        alpha,
        count,
        seed,
        acc_l.mean,
        acc_l.stderr,
        {float(t): (a.mean, a.stderr) for t, a in zip(t_grid, accs)},
    )
