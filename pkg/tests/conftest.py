import warnings

import numpy as np
import pytest

from jointsparse.djist import NonConvergenceWarning
from jointsparse.graph import complete, random_regular
from jointsparse.model import AlgoParams, generate_instance


@pytest.fixture
def small_instance():
    return generate_instance(n=20, m=10, k=3, V=4, seed=11)


@pytest.fixture
def small_topology():
    return random_regular(4, 3, seed=5)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        yield


def rng(seed=0):
    return np.random.default_rng(seed)


def naive_matvec(A, x):
    m, n = A.shape
    out = [0.0] * m
    for j in range(m):
        for i in range(n):
            out[j] += A[j][i] * x[i]
    return np.array(out)


def naive_rmatvec(A, y):
    m, n = A.shape
    out = [0.0] * n
    for i in range(n):
        for j in range(m):
            out[i] += A[j][i] * y[j]
    return np.array(out)


VERDICTS = {}


def record_verdict(criterion, ok, detail=""):
    VERDICTS[criterion] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(VERDICTS):
        ok, detail = VERDICTS[criterion]
        terminalreporter.write_line(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
