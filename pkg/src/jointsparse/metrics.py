"""Support and estimation error metrics."""
from dataclasses import dataclass

import numpy as np

__all__ = ["MetricReport", "ase", "pesr", "rse", "evaluate"]


def _as_supports(true_support, estimated_supports):
    est = np.asarray(estimated_supports) != 0
    truth = np.asarray(true_support) != 0
    if est.ndim != 2:
        raise ValueError("estimated supports must be a (V, n) array")
    if truth.ndim == 1:
        truth = np.broadcast_to(truth, est.shape)
    if truth.shape != est.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {est.shape}")
    return truth, est


def ase(true_support, estimated_supports):
    """Average support error: mismatched positions over ``n * V``.

    ``true_support`` may be a length-``n`` indicator (common support) or a
    ``(V, n)`` array; estimates are ``(V, n)`` indicators.
    """
    truth, est = _as_supports(true_support, estimated_supports)
    return float(np.count_nonzero(truth != est)) / truth.size


def pesr(true_support, estimated_supports):
    """Fraction of nodes whose estimated support is exactly right."""
    truth, est = _as_supports(true_support, estimated_supports)
    return float(np.mean(np.all(truth == est, axis=1)))


def rse(x_star_all, x_hat_all):
    """``sum_v ||x*_v - xhat_v||^2 / sum_v ||x*_v||^2``."""
    x_star = np.asarray(x_star_all, dtype=float)
    x_hat = np.asarray(x_hat_all, dtype=float)
    if x_star.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x_star.shape} vs {x_hat.shape}")
    energy = float(np.sum(x_star * x_star))
    if energy == 0.0:
        raise ZeroDivisionError("all reference signals are zero")
    diff = x_star - x_hat
    return float(np.sum(diff * diff)) / energy


@dataclass(frozen=True)
class MetricReport:
    ase: float
    pesr: float
    rse: float


def evaluate(instance, result):
    truth = instance.true_indicator
    return MetricReport(
        ase=ase(truth, result.supports),
        pesr=pesr(truth, result.supports),
        rse=rse(instance.x_star, result.x_hat),
    )
