import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from jointsparse.djist import RunResult
from jointsparse.accounting import MessageLedger
from jointsparse.metrics import MetricReport, ase, evaluate, pesr, rse
from jointsparse.model import generate_instance

TRUTH = np.zeros(100, dtype=bool)
TRUTH[:10] = True


def test_ase_exact():
    assert ase(TRUTH, np.tile(TRUTH, (10, 1))) == 0.0


def test_ase_one_flip():
    est = np.tile(TRUTH, (10, 1))
    est[3, 50] = True
    assert ase(TRUTH, est) == pytest.approx(0.001)


def test_ase_empty_estimate():
    assert ase(TRUTH, np.zeros((10, 100), dtype=bool)) == pytest.approx(0.1)


def test_pesr_values():
    est = np.tile(TRUTH, (10, 1))
    assert pesr(TRUTH, est) == 1.0
    est[:3, 0] = False
    assert pesr(TRUTH, est) == pytest.approx(0.7)
    assert pesr(TRUTH, np.zeros((10, 100))) == 0.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        ase(TRUTH, np.zeros((10, 99)))
    with pytest.raises(ValueError):
        pesr(TRUTH, np.zeros(100))
    with pytest.raises(ValueError):
        rse(np.ones((2, 3)), np.ones((3, 2)))


def test_rse_values():
    x = np.random.default_rng(0).standard_normal((4, 6))
    assert rse(x, x) == 0.0
    assert rse(x, np.zeros_like(x)) == pytest.approx(1.0)
    assert rse(x, 2 * x) == pytest.approx(1.0)
    with pytest.raises(ZeroDivisionError):
        rse(np.zeros((2, 3)), x[:2, :3])


masks = arrays(bool, (5, 12))


@settings(max_examples=100, deadline=None)
@given(truth=arrays(bool, 12), est=masks, seed=st.integers(0, 2**16))
def test_ranges_and_permutation_invariance(truth, est, seed):
    a, p = ase(truth, est), pesr(truth, est)
    assert 0 <= a <= 1 and 0 <= p <= 1
    assert (a == 0) == (p == 1)
    perm = np.random.default_rng(seed).permutation(12)
    assert ase(truth[perm], est[:, perm]) == a
    assert pesr(truth[perm], est[:, perm]) == p


def test_evaluate_uses_result_supports():
    inst = generate_instance(20, 8, 3, 2, seed=0)
    res = RunResult(algorithm="x", x_hat=inst.x_star.copy(), supports=inst.x_star != 0, rounds=1,
                    converged=True, ledger=MessageLedger())
    assert evaluate(inst, res) == MetricReport(ase=0.0, pesr=1.0, rse=0.0)
