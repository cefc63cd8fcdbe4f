import mpmath as mp
import pytest

from painleve_tau.numerics import PrecisionContext


@pytest.fixture(autouse=True)
def _mp_precision():
    # comparisons in tests happen at a precision above the default 256-bit context
    old = mp.mp.prec
    mp.mp.prec = 384
    yield
    mp.mp.prec = old


@pytest.fixture
def ctx():
    return PrecisionContext(bits=256, tol=1e-20, max_bits=4096)


def rel(a, b):
    return abs(a / b - 1)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num:2d}. {title}: {detail}")
