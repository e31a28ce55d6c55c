import numpy as np
import pytest

from delaymem.model import HistoryFunction, MatrixKernel, SystemSpec, validate

ACCEPTANCE_LINES = []


def scalar_spec(a=0.0, a1=0.0, b=1.0, h=0.0, T=1.0, kernel=None, phi=1.0, target=None):
    return validate(SystemSpec(
        A=[[a]], A1=[[a1]], B=[[b]], h=h, T=T,
        kernel=kernel if kernel is not None else MatrixKernel.zero(1),
        history=HistoryFunction.constant([phi]),
        target_kernel=target,
    ))


def random_spec(rng, n=None, m=None, h=None, T=1.0, memory=None, history="polynomial"):
    """Random instance; ``h`` must be a multiple of ``T / N`` for the grids used by callers."""
    n = int(rng.integers(1, 4)) if n is None else n
    m = int(rng.integers(1, 3)) if m is None else m
    h = float(rng.choice([0.0, 0.25 * T, 0.5 * T])) if h is None else h
    memory = bool(rng.integers(0, 2)) if memory is None else memory
    kernel = MatrixKernel.zero(n)
    if memory:
        K = int(rng.integers(1, 3))
        kernel = MatrixKernel.separable([(float(rng.uniform(0, 2)), 0.5 * rng.standard_normal((n, n)))
                                         for _ in range(K)])
    if history == "polynomial":
        phi = HistoryFunction.polynomial(rng.standard_normal((2, n)))
    else:
        phi = HistoryFunction.constant(rng.standard_normal(n))
    return validate(SystemSpec(
        A=0.7 * rng.standard_normal((n, n)), A1=0.5 * rng.standard_normal((n, n)),
        B=rng.standard_normal((n, m)), h=h, T=T, kernel=kernel, history=phi,
    ))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def accept():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert ok, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
