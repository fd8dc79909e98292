import numpy as np
import pytest

from lfprior import (
    DiscreteDistribution,
    ProblemSpec,
    SupportSet,
    binomial_channel,
    quantized_gaussian_channel,
    squared_error_loss,
)

ACCEPTANCE_LINES: dict[str, str] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    """Store one pass/fail line; ``criterion`` starts with a zero-padded number so lines sort."""
    ACCEPTANCE_LINES[criterion] = f"{'PASS' if ok else 'FAIL'}  [{criterion}] {detail}"
    print(ACCEPTANCE_LINES[criterion])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


def binomial_spec(m: int) -> ProblemSpec:
    return ProblemSpec(binomial_channel(m), squared_error_loss(1), SupportSet.interval(0.0, 1.0))


def qgauss_spec(levels: int, A: float = 5.0) -> ProblemSpec:
    return ProblemSpec(quantized_gaussian_channel(levels), squared_error_loss(1), SupportSet.interval(-A, A))


def random_prior(rng: np.random.Generator, d: int, lo: float, hi: float, n: int = 1) -> DiscreteDistribution:
    return DiscreteDistribution(rng.uniform(lo, hi, size=(d, n)), rng.dirichlet(np.ones(d)))


def random_instance(rng: np.random.Generator):
    """Random (prior, channel, support) over both built-in channels."""
    if rng.random() < 0.5:
        ch = binomial_channel(int(rng.integers(1, 8)))
        lo, hi = 0.0, 1.0
    else:
        ch = quantized_gaussian_channel(int(rng.integers(1, 5)))
        lo, hi = -5.0, 5.0
    d = int(rng.integers(1, 7))
    return random_prior(rng, d, lo, hi), ch, SupportSet.interval(lo, hi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
