import numpy as np
import pytest

from enetfp.dictionary import TabulatedDictionary
from enetfp.operators import Dataset

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def random_table_problem(rng, n=None, p=None, zero_weights=False, noise=0.1):
    """Tabulated dictionary with rows normalized so that k(x) <= 1, plus data."""
    n = int(rng.integers(20, 201)) if n is None else n
    p = int(rng.integers(1, 51)) if p is None else p
    F = rng.standard_normal((n, p))
    F /= np.sqrt(np.sum(F ** 2, axis=1, keepdims=True).max())
    w = np.zeros(p) if zero_weights else rng.uniform(0.5, 2.0, size=p)
    beta = np.where(rng.random(p) < 0.3, rng.standard_normal(p) * 3, 0.0)
    y = F @ beta + noise * rng.standard_normal(n)
    return TabulatedDictionary(F, weights=w), Dataset(np.arange(n, dtype=float), y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
