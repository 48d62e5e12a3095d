"""Distributed OMP baselines DC-OMP 1 and DC-OMP 2.

Both run synchronous iterations in which every node proposes one candidate
index and then grows its support by voting.  A candidate proposed by at least
two nodes of the voting pool is adopted (most votes first, then lowest index,
never beyond ``k``); when no such candidate is new to the node it adopts its
own proposal.  The run ends when every node holds ``k`` indices; all nodes
keep taking part in the exchange until then.

* DC-OMP 1: candidates come from the node's own residual correlations and
  are exchanged with direct neighbors only; the pool is ``N_v`` with ``v``.
* DC-OMP 2: full correlation vectors are exchanged with neighbors and fused
  as a sum of magnitudes over ``N_v``; the resulting candidates are then
  flooded to the whole network, so the pool is every node's candidate.
"""
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .accounting import MessageLedger
from .djist import RunResult

__all__ = [
    "OmpNodeState",
    "RankDeficientError",
    "omp_candidate",
    "least_squares_on_support",
    "run_dcomp1",
    "run_dcomp2",
]


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass
class OmpNodeState:
    residual: np.ndarray
    support: list = field(default_factory=list)
    x_hat: np.ndarray = None


def _masked_argmax(scores, support):
    scores = np.array(scores, dtype=float)
    if support:
        scores[list(support)] = -np.inf
    return int(np.argmax(scores))


def omp_candidate(residual, A_v, support=()):
    """Column index outside ``support`` with largest ``|A_v[:, i]^T residual|``.

    Ties go to the lowest index.
    """
    return _masked_argmax(np.abs(np.asarray(A_v).T @ np.asarray(residual)), support)


def least_squares_on_support(A_v, y_v, support):
    """Least-squares coefficients on ``support`` via the normal equations."""
    A_s = np.asarray(A_v, dtype=float)[:, list(support)]
    k = A_s.shape[1]
    if k > A_s.shape[0] or np.linalg.matrix_rank(A_s) < k:
        raise RankDeficientError(f"A restricted to {k} columns is rank deficient")
    return np.linalg.solve(A_s.T @ A_s, A_s.T @ np.asarray(y_v, dtype=float))


def _refit(A_v, y_v, support):
    A_s = A_v[:, support]
    try:
        coef = least_squares_on_support(A_v, y_v, support)
    except RankDeficientError:
        # only reachable with k > m: take the minimum-norm solution
        coef = np.linalg.lstsq(A_s, y_v, rcond=None)[0]
    return coef, y_v - A_s @ coef


def _adopt(state, own, pool, k):
    if len(state.support) >= k:
        return
    held = set(state.support)
    votes = Counter(pool)
    picks = sorted((i for i, n in votes.items() if n >= 2 and i not in held),
                   key=lambda i: (-votes[i], i))
    if not picks:
        picks = [own]
    state.support.extend(picks[: k - len(state.support)])


def _init(instance):
    return [OmpNodeState(residual=np.array(instance.y[v], dtype=float)) for v in range(instance.V)]


def _result(algorithm, instance, states, rounds, ledger):
    x_hat = np.zeros((instance.V, instance.n))
    for v, st in enumerate(states):
        if st.support:
            x_hat[v, st.support] = st.x_hat
    supports = np.zeros((instance.V, instance.n), dtype=bool)
    for v, st in enumerate(states):
        supports[v, st.support] = True
    return RunResult(algorithm=algorithm, x_hat=x_hat, supports=supports, rounds=rounds,
                     converged=True, ledger=ledger, t1=rounds, extra={"states": states})


def run_dcomp1(instance, topology, params=None, k=None):
    """DC-OMP 1 with neighbor-local candidate voting.  ``k`` defaults to ``instance.k``."""
    k = instance.k if k is None else k
    A, y = instance.A, instance.y
    ledger = MessageLedger(V=instance.V)
    fanouts = topology.fanouts
    states = _init(instance)
    t = 0
    while any(len(st.support) < k for st in states):
        cands = [omp_candidate(st.residual, A[v], st.support) for v, st in enumerate(states)]
        for v, i in enumerate(cands):
            ledger.record_candidate_index(v, int(fanouts[v]), instance.n, round=t, index=i)
        for v, st in enumerate(states):
            pool = [cands[u] for u in (v, *topology.adjacency[v])]
            _adopt(st, cands[v], pool, k)
            st.x_hat, st.residual = _refit(A[v], y[v], st.support)
        t += 1
    return _result("dcomp1", instance, states, t, ledger)


def run_dcomp2(instance, topology, params=None, k=None):
    """DC-OMP 2 with fused correlations and network-wide candidate voting.

    ``params.q`` sets the bits per transmitted real (16 when ``params`` is
    ``None``).
    """
    k = instance.k if k is None else k
    q = 16 if params is None else params.q
    A, y = instance.A, instance.y
    V, n = instance.V, instance.n
    ledger = MessageLedger(V=V)
    fanouts = topology.fanouts
    states = _init(instance)
    t = 0
    while any(len(st.support) < k for st in states):
        corr = np.abs(np.einsum("vmn,vm->vn", A, np.array([st.residual for st in states])))
        for v in range(V):
            ledger.record_correlation_vector(v, int(fanouts[v]), n, q, round=t)
        cands = []
        for v, st in enumerate(states):
            fused = corr[[v, *topology.adjacency[v]]].sum(axis=0)
            cands.append(_masked_argmax(fused, st.support))
        for v, i in enumerate(cands):
            ledger.record_candidate_index(v, V - 1, n, round=t, index=i)
        for v, st in enumerate(states):
            _adopt(st, cands[v], cands, k)
            st.x_hat, st.residual = _refit(A[v], y[v], st.support)
        t += 1
    return _result("dcomp2", instance, states, t, ledger)
