"""The decentralized objective ``F``, its surrogate ``R`` and related quantities.

``X`` is always a ``(V, n)`` array with one row per node.  Indicators compare
exactly against ``0.0``: the thresholding step produces exact zeros.
"""
import numpy as np

from .model import InvalidDimensionError
from .thresholding import mcp_g

__all__ = [
    "indicator",
    "mean_indicator",
    "mean_indicators",
    "eval_F",
    "objective_trace",
    "landweber_z",
    "eval_surrogate",
    "eval_lasso",
]


def indicator(x):
    return (np.asarray(x) != 0.0).astype(float)


def _check_X(X, instance):
    X = np.asarray(X, dtype=float)
    if X.shape != (instance.V, instance.n):
        raise InvalidDimensionError(f"X has shape {X.shape}, expected {(instance.V, instance.n)}")
    return X


def mean_indicators(X, topology):
    """``(V, n)`` array of self-inclusive neighborhood support averages."""
    X = np.asarray(X, dtype=float)
    ind = indicator(X)
    counts = ind + topology.adjacency_matrix() @ ind
    return counts / topology.degrees[:, None]


def mean_indicator(X, topology, v, i):
    """Fraction of ``N_v`` (``v`` included) whose component ``i`` is non-zero."""
    X = np.asarray(X, dtype=float)
    if not 0 <= v < topology.V or not 0 <= i < X.shape[1]:
        raise IndexError(f"(v={v}, i={i}) out of range")
    hood = [v, *topology.adjacency[v]]
    return float(np.count_nonzero(X[hood, i])) / len(hood)


def _penalty(X, topology, params):
    arg = params.alpha * np.abs(X) + mean_indicators(X, topology)
    return params.lam * np.sum(mcp_g(arg, params.beta))


def eval_F(X, instance, topology, params):
    """Sum over nodes of ``0.5*||y_v - A_v x_v||**2 + lam * sum_i g(alpha*|x_vi| + mean_vi)``."""
    X = _check_X(X, instance)
    resid = instance.y - np.einsum("vmn,vn->vm", instance.A, X)
    return 0.5 * float(np.sum(resid * resid)) + float(_penalty(X, topology, params))


def objective_trace(history, instance, topology, params):
    """``eval_F`` for every ``(V, n)`` snapshot in a ``(T, V, n)`` history."""
    history = np.asarray(history, dtype=float)
    if history.ndim != 3 or history.shape[1:] != (instance.V, instance.n):
        raise InvalidDimensionError(f"history has shape {history.shape}")
    hood = topology.adjacency_matrix() + np.eye(topology.V)
    deg = topology.degrees[:, None]
    out = np.empty(history.shape[0])
    for s in range(0, history.shape[0], 1024):
        H = history[s:s + 1024]
        resid = instance.y[None] - np.einsum("vmn,tvn->tvm", instance.A, H)
        means = np.einsum("uv,tvn->tun", hood, (H != 0.0).astype(float)) / deg
        pen = mcp_g(params.alpha * np.abs(H) + means, params.beta)
        out[s:s + 1024] = 0.5 * np.sum(resid * resid, axis=(1, 2)) + params.lam * np.sum(pen, axis=(1, 2))
    return out


def landweber_z(x_v, A_v, y_v, tau):
    """Gradient (Landweber) point ``x + tau * A^T (y - A x)``."""
    x_v = np.asarray(x_v, dtype=float)
    A_v = np.asarray(A_v, dtype=float)
    y_v = np.asarray(y_v, dtype=float)
    if A_v.ndim != 2 or x_v.shape != (A_v.shape[1],) or y_v.shape != (A_v.shape[0],):
        raise InvalidDimensionError("landweber_z: dimension mismatch")
    return x_v + tau * (A_v.T @ (y_v - A_v @ x_v))


def eval_surrogate(X, B, instance, topology, params):
    """``F(X) + 0.5 * sum_v [||x_v - b_v||**2 / tau - ||A_v (x_v - b_v)||**2]``."""
    X = _check_X(X, instance)
    B = _check_X(B, instance)
    D = X - B
    AD = np.einsum("vmn,vn->vm", instance.A, D)
    prox = np.sum(D * D) / params.tau - np.sum(AD * AD)
    return eval_F(X, instance, topology, params) + 0.5 * float(prox)


def eval_lasso(x, A, y, lam):
    """``0.5*||y - A x||**2 + lam * ||x||_1``."""
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or x.shape != (A.shape[1],) or y.shape != (A.shape[0],):
        raise InvalidDimensionError("eval_lasso: dimension mismatch")
    r = y - A @ x
    return 0.5 * float(r @ r) + lam * float(np.abs(x).sum())
