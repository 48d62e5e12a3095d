"""MCP penalty, its reweighting rule, and the shrinkage operators.

All functions accept scalars or numpy arrays and broadcast.  Boundary ties
(``|x| == w`` and ``(|x| - w)**2 == a``) map to zero.
"""
import numpy as np

__all__ = ["mcp_g", "mcp_weight", "soft", "soft_hard"]


def _scalar_or_array(out):
    return out.item() if np.ndim(out) == 0 else out


def mcp_g(z, beta):
    """MCP penalty ``beta*z - z**2/2`` for ``z < beta``, ``beta**2/2`` beyond."""
    z = np.asarray(z, dtype=float)
    if beta <= 0:
        raise ValueError("beta must be positive")
    if np.any(z < 0):
        raise ValueError("mcp_g is defined for z >= 0")
    out = np.where(z < beta, beta * z - 0.5 * z * z, 0.5 * beta * beta)
    return _scalar_or_array(out)


def mcp_weight(x_abs, mean_indicator, alpha, beta):
    """Reweighting rule ``[beta - alpha*|x| - mean_indicator]_+``.

    This is the derivative of :func:`mcp_g` evaluated at
    ``alpha*|x| + mean_indicator``.
    """
    x_abs = np.asarray(x_abs, dtype=float)
    mean_indicator = np.asarray(mean_indicator, dtype=float)
    if np.any(x_abs < 0):
        raise ValueError("x_abs must be non-negative")
    if np.any((mean_indicator < 0) | (mean_indicator > 1)):
        raise ValueError("mean_indicator must lie in [0, 1]")
    return _scalar_or_array(np.maximum(0.0, beta - alpha * x_abs - mean_indicator))


def soft(x, w):
    """Soft thresholding: 0 on ``|x| <= w``, ``x - sign(x)*w`` elsewhere."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("threshold must be non-negative")
    out = np.where(np.abs(x) <= w, 0.0, x - np.sign(x) * w)
    return _scalar_or_array(out)


def soft_hard(x, w, a):
    """Mixed soft/hard thresholding.

    Zero when ``|x| <= w`` or ``(|x| - w)**2 <= a``; otherwise the soft
    thresholded value.  With ``a == 0`` this is :func:`soft`.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(w < 0) or np.any(a < 0):
        raise ValueError("w and a must be non-negative")
    excess = np.abs(x) - w
    # excess <= sqrt(a) is (|x| - w)**2 <= a for excess > 0, without underflow
    kill = (excess <= 0) | (excess <= np.sqrt(a))
    out = np.where(kill, 0.0, x - np.sign(x) * w)
    return _scalar_or_array(out)
