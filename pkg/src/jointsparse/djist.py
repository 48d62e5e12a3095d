"""DJ-IST: distributed reweighted-l1 iterative soft thresholding.

Every node runs a Landweber step followed by soft thresholding with
per-component threshold ``lam * alpha * w``, where ``w`` is the MCP weight
computed from the node's own magnitude and the support bits stored for its
neighborhood.  Only component indices are ever transmitted: a node sends
index ``i`` when its estimate of component ``i`` switches between zero and
non-zero.

:func:`djist_round` is a direct per-node implementation of one synchronous
round working on :class:`NodeState` objects.  :func:`run_djist` drives the
same round through the compiled kernel in :mod:`jointsparse.kernels`.
"""
import copy
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .accounting import MessageLedger
from .functional import landweber_z
from .model import spectral_norm_sq
from .thresholding import mcp_weight, soft

__all__ = [
    "NodeState",
    "SupportMessage",
    "StabilizationReport",
    "RunResult",
    "StepSizeError",
    "SingularSystemError",
    "NonConvergenceWarning",
    "init_states",
    "djist_round",
    "run_djist",
    "validate_step_size",
    "fixed_point",
    "gamma_step",
    "contraction_norm",
]

log = logging.getLogger(__name__)

HISTORY_CHUNK = 4096


class StepSizeError(ValueError):
    """``tau`` violates ``tau * ||A_v||_2**2 < 1`` for some node."""


class SingularSystemError(np.linalg.LinAlgError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


@dataclass
class NodeState:
    """One node's view of the network.

    ``neighbor_bits[u]`` is the last support indicator received from
    neighbor ``u``.
    """

    x: np.ndarray
    support_bits_self: np.ndarray
    neighbor_bits: dict
    c: np.ndarray
    stopped: bool = False


@dataclass(frozen=True)
class SupportMessage:
    sender: int
    index: int
    round: int


@dataclass(frozen=True)
class StabilizationReport:
    """Round ``t1`` after which the support stays fixed, and the final supports.

    ``supports[v]`` holds the sorted active indices of node ``v`` and
    ``signs[v]`` the signs of those entries.
    """

    t1: int
    supports: tuple
    signs: tuple


@dataclass
class RunResult:
    """Outcome of one distributed recovery run."""

    algorithm: str
    x_hat: np.ndarray
    supports: np.ndarray
    rounds: int
    converged: bool
    ledger: MessageLedger
    t1: int = 0
    counters: np.ndarray = None
    assumption2_violations: int = 0
    history: np.ndarray = None
    extra: dict = field(default_factory=dict)

    @property
    def signs(self):
        return np.sign(self.x_hat).astype(np.int8)

    @property
    def total_bits(self):
        return self.ledger.total_bits

    @property
    def n_messages(self):
        return self.ledger.n_messages

    @property
    def max_switches(self):
        return 0 if self.counters is None else int(self.counters.max(initial=0))

    @property
    def stabilization(self):
        sup = tuple(np.flatnonzero(row) for row in self.supports)
        sgn = tuple(np.sign(self.x_hat[v, s]).astype(np.int8) for v, s in enumerate(sup))
        return StabilizationReport(t1=self.t1, supports=sup, signs=sgn)


# ------------------------------------------------------------ reference round


def init_states(instance, topology):
    """Start every node at ``A_v^T y_v`` with all stored neighbor bits set."""
    states = []
    for v in range(instance.V):
        x = instance.A[v].T @ instance.y[v]
        states.append(NodeState(
            x=x,
            support_bits_self=x != 0,
            neighbor_bits={u: np.ones(instance.n, dtype=bool) for u in topology.adjacency[v]},
            c=np.zeros(instance.n, dtype=np.int64),
        ))
    return states


def _stopping_value(delta, params):
    return float(np.linalg.norm(delta)) if params.stop_rule == "l2" else float(np.abs(delta).max())


def djist_round(states, instance, topology, params, round_index, ledger=None):
    """One synchronous DJ-IST round.

    Returns ``(new_states, messages)``.  The input states are not modified.
    Messages are applied to the receivers' ``neighbor_bits`` after every node
    has computed its update.
    """
    new = copy.deepcopy(states)
    degrees = topology.degrees
    messages = []
    met = {}
    for v, st in enumerate(new):
        if st.stopped:
            continue
        x = st.x
        z = landweber_z(x, instance.A[v], instance.y[v], params.tau)
        count = (x != 0).astype(float)
        for bits in st.neighbor_bits.values():
            count += bits
        w = mcp_weight(np.abs(x), count / degrees[v], params.alpha, params.beta)
        x_new = np.atleast_1d(soft(z, params.lam * params.alpha * w))
        was_zero = x == 0
        x_new[was_zero & (st.c >= params.p)] = 0.0
        st.c = st.c + (was_zero & (x_new != 0))
        for i in np.flatnonzero((x_new != 0) != (x != 0)):
            messages.append(SupportMessage(sender=v, index=int(i), round=round_index))
        met[v] = _stopping_value(x_new - x, params) < params.epsilon
        st.x = x_new
        st.support_bits_self = x_new != 0
    if params.stop_scope == "network":
        if met and all(met.values()):
            for st in new:
                st.stopped = True
    else:
        for v, ok in met.items():
            new[v].stopped = ok
    fanouts = topology.fanouts
    for msg in messages:
        for u in topology.adjacency[msg.sender]:
            bits = new[u].neighbor_bits[msg.sender]
            bits[msg.index] = not bits[msg.index]
        if ledger is not None:
            ledger.record_support_index(msg.sender, int(fanouts[msg.sender]), instance.n,
                                        round=round_index, index=msg.index)
    return new, messages


# ------------------------------------------------------------ full runs


def validate_step_size(instance, tau):
    """Raise :class:`StepSizeError` unless ``tau * ||A_v||**2 < 1`` for every node."""
    worst = max(spectral_norm_sq(instance.A[v]) for v in range(instance.V))
    if tau * worst >= 1.0:
        raise StepSizeError(f"tau={tau} but max ||A_v||^2={worst:.6g}; need tau < {1.0 / worst:.6g}")
    return worst


@dataclass
class _Buffers:
    msg_round: np.ndarray
    msg_sender: np.ndarray
    msg_index: np.ndarray
    n_msg: int = 0

    @classmethod
    def allocate(cls, capacity):
        return cls(*(np.zeros(capacity, dtype=np.int64) for _ in range(3)))


def _drive(advance, state_args, tail_args, V, n, max_iters, record_history, x_view):
    """Run ``advance`` until every node stops or ``max_iters`` rounds elapse."""
    p = tail_args["p"]
    buf = _Buffers.allocate(kernels.message_capacity(V, n, p))
    viol = np.zeros(1, dtype=np.int64)
    snapshots = [x_view.copy()] if record_history else None
    t = 0
    empty = np.zeros((0, V, n))
    while t < max_iters:
        chunk = min(HISTORY_CHUNK if record_history else max_iters, max_iters - t)
        hist = np.zeros((chunk, V, n)) if record_history else empty
        t_new, buf.n_msg = advance(
            *state_args, tail_args["lam"], tail_args["alpha"], tail_args["beta"],
            tail_args["step"], tail_args["eps"], p, tail_args["flags"], t, chunk,
            buf.msg_round, buf.msg_sender, buf.msg_index, buf.n_msg, hist, viol,
        )
        if record_history:
            snapshots.append(hist[: t_new - t])
        done = t_new - t < chunk
        t = t_new
        if done:
            break
    history = np.concatenate([snapshots[0][None], *snapshots[1:]]) if record_history else None
    return t, buf, int(viol[0]), history


def _finish(algorithm, instance, topology, x_hat, counters, stopped, t, buf, viol, history,
            params, strict, extra=None):
    ledger = MessageLedger(V=instance.V)
    k = buf.n_msg
    ledger.extend_support_indices(buf.msg_round[:k], buf.msg_sender[:k], buf.msg_index[:k],
                                  topology.fanouts, instance.n)
    t1 = int(buf.msg_round[k - 1]) + 1 if k else 0
    converged = bool(stopped.all())
    result = RunResult(
        algorithm=algorithm, x_hat=x_hat, supports=x_hat != 0, rounds=t, converged=converged,
        ledger=ledger, t1=t1, counters=counters, assumption2_violations=viol,
        history=history, extra=extra or {},
    )
    if viol:
        log.info("%s: %d weight evaluations broke alpha*|x| + mean < beta", algorithm, viol)
    if not converged:
        msg = f"{algorithm} stopped at max_iters={params.max_iters} without meeting epsilon"
        if strict:
            raise RuntimeError(msg)
        warnings.warn(msg, NonConvergenceWarning, stacklevel=3)
    return result


def _topology_arrays(instance, topology):
    if topology.V != instance.V:
        raise ValueError(f"topology has {topology.V} nodes, instance has {instance.V}")
    indptr, indices = topology.csr()
    return indptr, indices, topology.degrees.astype(float)


def run_djist(instance, topology, params, *, check_tau=True, record_history=False,
              strict=False, advance=None):
    """Run DJ-IST until every node meets the stopping rule.

    Parameters
    ----------
    check_tau : bool
        Verify ``tau < ||A_v||_2**-2`` for all nodes first (raises
        :class:`StepSizeError`).
    record_history : bool
        Keep every iterate; ``result.history`` is ``(rounds + 1, V, n)``
        starting with ``X(0)``.
    strict : bool
        Raise instead of warning when ``max_iters`` is hit.
    advance : callable, optional
        Kernel override, e.g. :func:`kernels.djist_advance_numpy`.
    """
    if check_tau:
        validate_step_size(instance, params.tau)
    advance = advance or kernels.djist_advance
    indptr, indices, deg = _topology_arrays(instance, topology)
    V, n = instance.V, instance.n
    A = np.ascontiguousarray(instance.A, dtype=float)
    AT = np.ascontiguousarray(A.transpose(0, 2, 1))
    y = np.ascontiguousarray(instance.y, dtype=float)
    x = np.einsum("vmn,vm->vn", A, y)
    pub = np.ones((V, n))
    c = np.zeros((V, n), dtype=np.int64)
    stopped = np.zeros(V, dtype=bool)
    tail = dict(lam=params.lam, alpha=params.alpha, beta=params.beta, step=params.tau,
                eps=params.epsilon, p=params.p, flags=params.stop_flags)
    t, buf, viol, history = _drive(
        advance, (A, AT, y, x, pub, c, stopped, indptr, indices, deg), tail,
        V, n, params.max_iters, record_history, x,
    )
    return _finish("djist", instance, topology, x, c, stopped, t, buf, viol, history,
                   params, strict)


# ------------------------------------------------------------ fixed point analysis


def _restrict(A_v, support):
    support = np.asarray(support, dtype=np.int64)
    return np.asarray(A_v, dtype=float)[:, support]


def fixed_point(A_v, y_v, support, signs, mean_indicator_on_support, params):
    """Limit of the non-zero entries once support and signs are frozen.

    Solves ``(tau A_S^T A_S - lam alpha^2 I) x = tau A_S^T y - lam alpha s (beta - 1hat)``
    which is the fixed point of the affine map applied by each round when
    every active weight is positive.
    """
    A_s = _restrict(A_v, support)
    k = A_s.shape[1]
    s = np.asarray(signs, dtype=float)
    ones_hat = np.asarray(mean_indicator_on_support, dtype=float)
    a2 = params.lam * params.alpha ** 2
    lhs = params.tau * (A_s.T @ A_s) - a2 * np.eye(k)
    rhs = params.tau * (A_s.T @ np.asarray(y_v, dtype=float)) \
        - params.lam * params.alpha * s * (params.beta - ones_hat)
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError("tau A_S^T A_S - lam alpha^2 I is singular") from exc


def gamma_step(x_on_support, A_v, y_v, signs, mean_indicator, params, region_flags):
    """Apply ``M(x) x + c(x)`` on a frozen support.

    ``region_flags[j]`` is true where the weight is positive; there the step
    includes the shrinkage term, elsewhere it is a plain gradient step.
    """
    x = np.asarray(x_on_support, dtype=float)
    A_s = np.asarray(A_v, dtype=float)
    if A_s.shape[1] != x.shape[0]:
        raise ValueError("A_v must already be restricted to the support")
    D = np.asarray(region_flags, dtype=float)
    if D.shape != x.shape:
        raise ValueError("region_flags must match the support size")
    s = np.asarray(signs, dtype=float)
    a = params.lam * params.alpha
    y_v = np.asarray(y_v, dtype=float)
    Mx = x + a * params.alpha * D * x - params.tau * (A_s.T @ (A_s @ x))
    c = -a * D * s * (params.beta - np.asarray(mean_indicator, dtype=float)) \
        + params.tau * (A_s.T @ y_v)
    return Mx + c


def contraction_norm(A_v, support, params):
    """``||(1 + lam alpha^2) I - tau A_S^T A_S||_2``."""
    A_s = _restrict(A_v, support)
    k = A_s.shape[1]
    M = (1.0 + params.lam * params.alpha ** 2) * np.eye(k) - params.tau * (A_s.T @ A_s)
    return float(np.sqrt(spectral_norm_sq(M)))
