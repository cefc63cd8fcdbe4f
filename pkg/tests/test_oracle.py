import ast
from fractions import Fraction
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

import painleve_tau.oracle as oracle
from painleve_tau.detkit import EnsembleParams, mgf
from painleve_tau.numerics import PrecisionContext
from painleve_tau.oracle import WeightSpec, laguerre_eigenvalues, mgf_quadrature, moment_quadrature, sample_lue

from conftest import rel

Q = PrecisionContext(bits=128, tol=1e-25, max_bits=1024)


def _package_imports(path: Path) -> set:
    out = set()
    for node in ast.walk(ast.parse(path.read_text())):
        if isinstance(node, ast.ImportFrom) and node.level == 1:
            if node.module:
                out.add(node.module)
            else:
                out.update(a.name for a in node.names)
    return out


def test_call_graph_excludes_bessel_and_detkit():
    pkg = Path(oracle.__file__).parent
    seen, todo = set(), ["oracle"]
    while todo:
        mod = todo.pop()
        if mod in seen:
            continue
        seen.add(mod)
        todo.extend(_package_imports(pkg / f"{mod}.py"))
    assert "bessel" not in seen and "detkit" not in seen
    assert "numerics" in seen


def test_weight_validation():
    for bad in (
        dict(kind="hermite"),
        dict(kind="laguerre_deformed", alpha=-1),
        dict(kind="jacobi_deformed", alpha=1),
        dict(kind="gap", alpha=0, mu=-1, s=1),
        dict(kind="gap", alpha=0, mu=0, s=0),
    ):
        with pytest.raises(ValueError):
            WeightSpec(**bad)


def test_moment_examples():
    assert rel(moment_quadrature(WeightSpec("laguerre_deformed", 0, t=1), 0, Q), 2 * mp.besselk(1, 2)) < 1e-25
    assert rel(moment_quadrature(WeightSpec("jacobi_deformed", 1, beta=1), 0, Q), mp.mpf(1) / 6) < 1e-25
    assert rel(moment_quadrature(WeightSpec("gap", 0, mu=0, s=1), 0, Q), mp.exp(-1)) < 1e-25
    assert rel(moment_quadrature(WeightSpec("laguerre_deformed", Fraction(1, 2)), 3, Q), mp.gamma(4.5)) < 1e-25


def test_mgf_quadrature_examples(ctx):
    assert mgf_quadrature(EnsembleParams(2, 1), 0, Q) == 1
    assert abs(mgf_quadrature(EnsembleParams(2, 1), mp.mpf(10) ** -12, Q) - 1) < 1e-6
    assert rel(mgf_quadrature(EnsembleParams(1, 0), 1, Q), 2 * mp.besselk(1, 2)) < 1e-20
    assert rel(mgf_quadrature(EnsembleParams(3, 1), 2, Q), mgf(EnsembleParams(3, 1), 2, ctx)) < 1e-10
    with pytest.raises(ValueError):
        mgf_quadrature(EnsembleParams(9, 1), 1, Q)


def test_bidiagonal_model_mean_trace():
    # E tr(W) = n (n + alpha) for the Laguerre beta = 2 model with weight x^alpha e^{-x}
    rng = np.random.default_rng(0)
    lam = laguerre_eigenvalues(rng, 3, 2, 20000)
    assert lam.shape == (20000, 3)
    assert np.all(lam > 0)
    assert abs(lam.sum(axis=1).mean() / 15 - 1) < 0.02


def test_sample_determinism_and_workers():
    a = sample_lue(3, 4, 20000, seed=7)
    b = sample_lue(3, 4, 20000, seed=7)
    c = sample_lue(3, 4, 20000, seed=7, workers=2)
    assert a == b == c
    assert sample_lue(3, 4, 20000, seed=8) != a


def test_standard_error_rate():
    small = sample_lue(3, 5, 1 << 15, seed=11)
    large = sample_lue(3, 5, 1 << 16, seed=11)
    assert 1.2 < small.se_L / large.se_L < 1.7


def test_sample_statistics(ctx):
    s = sample_lue(3, 5, 40000, seed=3)
    assert abs(s.mean_L - 3 / 5) < 3 * s.se_L
    m, se = s.mgf[0.5]
    assert abs(m - float(mgf(EnsembleParams(3, 5), Fraction(1, 2), ctx))) < 3 * se


def test_sample_validation():
    with pytest.raises(ValueError):
        sample_lue(3, Fraction(1, 2), 20000, seed=1)
    with pytest.raises(ValueError):
        sample_lue(3, 2, 100, seed=1)
    with pytest.raises(ValueError):
        sample_lue(3, 2, 20000, seed=-1)
