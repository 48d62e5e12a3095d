import numpy as np
import pytest

from jointsparse.djadmm import AdmmNodeState, admm_factor, admm_node_step, run_djadmm
from jointsparse.djist import run_djist
from jointsparse.graph import random_regular
from jointsparse.model import AlgoParams, generate_instance
from jointsparse.thresholding import soft

from conftest import rng


def _state(x, z, mu, rho, A):
    n = len(x)
    return AdmmNodeState(x=x, support_bits_self=z != 0, neighbor_bits={}, c=np.zeros(n, dtype=np.int64),
                         z=z, mu=mu, rho=rho, factor=admm_factor(A, rho))


def test_factor_is_inverse():
    A = rng(1).standard_normal((5, 9))
    K = admm_factor(A, 0.7)
    np.testing.assert_allclose(K @ (0.7 * np.eye(5) + A @ A.T), np.eye(5), atol=1e-12)


def test_orthonormal_specialization():
    Q, _ = np.linalg.qr(rng(2).standard_normal((6, 6)))
    g = rng(3)
    y, z, mu = g.standard_normal(6), g.standard_normal(6), g.standard_normal(6)
    params = AlgoParams.reference_admm()
    out = admm_node_step(_state(np.zeros(6), z, mu, 1.0, Q), Q, y, np.zeros(6), params)
    np.testing.assert_allclose(out.x, (Q.T @ y + z - mu) / 2, atol=1e-12)
    np.testing.assert_allclose(out.z, out.x + mu, atol=1e-12)  # w = 0: no shrinkage


def test_cold_start():
    g = rng(4)
    A, y = g.standard_normal((4, 8)), g.standard_normal(4)
    w = g.uniform(0, 1.1, 8)
    params = AlgoParams.reference_admm(alpha=0.5, rho=2.0)
    out = admm_node_step(_state(np.zeros(8), np.zeros(8), np.zeros(8), 2.0, A), A, y, w, params)
    x = np.linalg.solve(A.T @ A + 2.0 * np.eye(8), A.T @ y)
    np.testing.assert_allclose(out.x, x, atol=1e-12)
    np.testing.assert_allclose(out.z, soft(x, params.lam * params.alpha * w / 2.0), atol=1e-12)
    np.testing.assert_allclose(out.mu, out.x - out.z, atol=1e-15)


def test_iterates_reach_stationarity_with_frozen_weights():
    g = rng(5)
    A, y = g.standard_normal((4, 8)), g.standard_normal(4)
    w = g.uniform(0, 1.1, 8)
    params = AlgoParams.reference_admm(alpha=0.2)
    st = _state(np.zeros(8), np.zeros(8), np.zeros(8), 1.0, A)
    for _ in range(5000):
        st = admm_node_step(st, A, y, w, params)
    assert np.linalg.norm(st.x - st.z) <= 1e-8
    before = st.mu.copy()
    st = admm_node_step(st, A, y, w, params)
    np.testing.assert_allclose(st.mu, before, atol=1e-8)


@pytest.fixture(scope="module")
def ensemble():
    """Paired DJ-IST / DJ-ADMM runs on an easy full-size geometry."""
    out = []
    for s in range(4):
        inst = generate_instance(100, 30, 10, 10, seed=(70, s))
        topo = random_regular(10, 5, seed=(70, s))
        out.append((inst, run_djist(inst, topo, AlgoParams.reference(), strict=True),
                    run_djadmm(inst, topo, AlgoParams.reference_admm(), strict=True)))
    return out


def test_supports_agree_with_djist_at_high_m(ensemble):
    agree = [np.all(a.supports == b.supports, axis=1) for _, a, b in ensemble]
    assert np.mean(agree) >= 0.95


def test_fewer_iterations_more_bits(ensemble):
    it_ist = np.mean([a.rounds for _, a, _ in ensemble])
    it_admm = np.mean([b.rounds for _, _, b in ensemble])
    bits_ist = np.mean([a.total_bits for _, a, _ in ensemble])
    bits_admm = np.mean([b.total_bits for _, _, b in ensemble])
    assert it_admm < it_ist
    assert bits_ist < bits_admm < 10 * bits_ist


def test_switch_cap_and_stabilization(ensemble):
    for _, _, b in ensemble:
        assert b.max_switches <= 20
        assert b.ledger.last_round() is None or b.ledger.last_round() < b.t1 <= b.rounds


def test_returns_sparse_variable(ensemble):
    for _, _, b in ensemble:
        np.testing.assert_array_equal(b.supports, b.x_hat != 0)
        assert np.abs(b.extra["x"] - b.x_hat).max() < AlgoParams.reference_admm().epsilon
