"""DJ-ADMM: DJ-IST with the thresholding step replaced by one ADMM step.

Each node keeps the ADMM triple ``(x, z, mu)`` for its weighted Lasso.  The
sparse splitting variable ``z`` carries the support: weights, switch
counters and transmitted indices are all driven by ``1(z)``, and ``z`` is the
returned estimate.

The ridge solve ``(A^T A + rho I)^-1`` is applied through the Woodbury form
``(q - A^T (rho I + A A^T)^-1 A q) / rho``; the ``m x m`` inverse is factored
once per node per run.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .djist import NodeState, _drive, _finish, _topology_arrays, validate_step_size
from .thresholding import soft

__all__ = ["AdmmNodeState", "admm_factor", "admm_node_step", "run_djadmm"]


@dataclass
class AdmmNodeState(NodeState):
    z: np.ndarray = None
    mu: np.ndarray = None
    rho: float = 1.0
    factor: np.ndarray = None


def admm_factor(A_v, rho):
    """``(rho I + A A^T)^-1`` via a Cholesky factorization."""
    A_v = np.asarray(A_v, dtype=float)
    m = A_v.shape[0]
    chol = scipy.linalg.cho_factor(rho * np.eye(m) + A_v @ A_v.T)
    return scipy.linalg.cho_solve(chol, np.eye(m))


def _ridge_solve(A_v, K, q, rho):
    return (q - A_v.T @ (K @ (A_v @ q))) / rho


def admm_node_step(state, A_v, y_v, w_v, params):
    """One ADMM iteration for ``0.5||y - A x||^2 + lam alpha sum_i w_i |z_i|``.

    ``state`` must carry ``x``, ``z``, ``mu``, ``rho`` and the cached
    ``factor`` from :func:`admm_factor`; a new state is returned.
    """
    rho = state.rho
    K = state.factor if state.factor is not None else admm_factor(A_v, rho)
    q = A_v.T @ y_v + rho * (state.z - state.mu)
    x = _ridge_solve(A_v, K, q, rho)
    z = np.atleast_1d(soft(x + state.mu, params.lam * params.alpha * np.asarray(w_v) / rho))
    mu = state.mu + x - z
    return AdmmNodeState(
        x=x, support_bits_self=z != 0, neighbor_bits=state.neighbor_bits, c=state.c,
        stopped=state.stopped, z=z, mu=mu, rho=rho, factor=K,
    )


def run_djadmm(instance, topology, params, *, check_tau=False, record_history=False,
               strict=False, advance=None):
    """Run DJ-ADMM with the DJ-IST messaging, switch cap and stopping machinery.

    Nodes start from ``x = z = A^T y`` and ``mu = 0``.  A node stops once both
    ``z`` moved less than ``epsilon`` and the primal residual ``x - z`` is
    below ``epsilon`` (``params.stop_rule`` picks max-norm or l2).  The step
    size check is off by default because ``tau`` plays no role here.
    """
    if check_tau:
        validate_step_size(instance, params.tau)
    advance = advance or kernels.djadmm_advance
    indptr, indices, deg = _topology_arrays(instance, topology)
    V, n = instance.V, instance.n
    rho = params.rho
    A = np.ascontiguousarray(instance.A, dtype=float)
    AT = np.ascontiguousarray(A.transpose(0, 2, 1))
    Aty = np.einsum("vmn,vm->vn", A, instance.y)
    K = np.stack([admm_factor(A[v], rho) for v in range(V)])
    x = Aty.copy()
    z = Aty.copy()
    mu = np.zeros((V, n))
    pub = np.ones((V, n))
    c = np.zeros((V, n), dtype=np.int64)
    stopped = np.zeros(V, dtype=bool)
    tail = dict(lam=params.lam, alpha=params.alpha, beta=params.beta, step=rho,
                eps=params.epsilon, p=params.p, flags=params.stop_flags)
    t, buf, viol, history = _drive(
        advance, (A, AT, Aty, K, x, z, mu, pub, c, stopped, indptr, indices, deg), tail,
        V, n, params.max_iters, record_history, z,
    )
    return _finish("djadmm", instance, topology, z, c, stopped, t, buf, viol, history,
                   params, strict, extra={"x": x, "mu": mu})
