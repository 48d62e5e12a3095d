"""Problem instances for the JSM-2 measurement model and basic matrix utilities.

Every node ``v`` observes ``y_v = A_v x_v + noise`` where all ``x_v`` share one
support of size ``k``.  Random streams come from Philox (counter based) seeded
through :class:`numpy.random.SeedSequence`, so an instance is a pure function
of its integer seed key on any platform.
"""
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "AlgoParams",
    "ProblemInstance",
    "InvalidDimensionError",
    "generate_instance",
    "make_rng",
    "measure",
    "spectral_norm_sq",
]

# stream tags mixed into the seed key
_SUPPORT, _SIGNAL, _MATRIX, _NOISE = 0, 1, 2, 3


class InvalidDimensionError(ValueError):
    pass


def _as_key(seed):
    if isinstance(seed, (int, np.integer)):
        key = (int(seed),)
    else:
        key = tuple(int(s) for s in seed)
    if not key or any(s < 0 for s in key):
        raise ValueError(f"seed key must be non-negative integers, got {seed!r}")
    return key


def make_rng(*key):
    """Philox generator for an integer seed key, e.g. ``make_rng(seed, node)``."""
    flat = []
    for part in key:
        flat.extend(_as_key(part))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(flat)))


@dataclass(frozen=True)
class AlgoParams:
    """Tuning parameters shared by the DJ-IST family of solvers.

    ``lam`` is the penalty scale (``lambda`` is reserved in Python).  ``q``
    only enters the bit accounting.  ``rho`` is used by DJ-ADMM alone.
    ``stop_rule`` is ``"max"`` (every component moved less than
    ``epsilon``) or ``"l2"`` (the per-node step norm is below ``epsilon``).
    ``stop_scope`` is ``"node"`` (each node freezes once its own step is
    small) or ``"network"`` (all nodes iterate until the first round in which
    every node meets the rule, then the run ends).
    """

    lam: float = 1.0
    alpha: float = 5e-4
    beta: float = 1.1
    tau: float = 2e-2
    epsilon: float = 1e-5
    p: int = 20
    q: int = 16
    max_iters: int = 50_000
    rho: float = 1.0
    stop_rule: str = "max"
    stop_scope: str = "node"

    def __post_init__(self):
        for name in ("lam", "alpha", "beta", "tau", "epsilon", "rho"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("p", "q", "max_iters"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.stop_rule not in ("max", "l2"):
            raise ValueError(f"stop_rule must be 'max' or 'l2', got {self.stop_rule!r}")
        if self.stop_scope not in ("node", "network"):
            raise ValueError(f"stop_scope must be 'node' or 'network', got {self.stop_scope!r}")

    @classmethod
    def reference(cls, **overrides):
        """Settings of the DJ-IST experiments, which stop network-wide."""
        base = dict(stop_scope="network")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def reference_admm(cls, **overrides):
        """DJ-ADMM settings: ``alpha = 5e-3`` and ``rho = 1``."""
        base = dict(alpha=5e-3, rho=1.0, stop_scope="network")
        base.update(overrides)
        return cls(**base)

    @property
    def stop_flags(self):
        """Stop rule encoded for the round kernels."""
        return (1 if self.stop_rule == "l2" else 0) | (2 if self.stop_scope == "network" else 0)

    def replace(self, **changes):
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return type(self)(**values)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Ground truth, sensing matrices and measurements for all ``V`` nodes.

    Arrays are stacked over nodes: ``x_star`` is ``(V, n)``, ``A`` is
    ``(V, m, n)`` and ``y`` is ``(V, m)``.  They are made read-only.
    """

    n: int
    m: int
    k: int
    V: int
    support: np.ndarray
    x_star: np.ndarray
    A: np.ndarray
    y: np.ndarray
    noise_std: float = 0.0
    seed: tuple = field(default=(0,))
    matrix_seed: tuple = field(default=(0,))

    def __post_init__(self):
        for name in ("support", "x_star", "A", "y"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.A.shape != (self.V, self.m, self.n):
            raise InvalidDimensionError(f"A has shape {self.A.shape}")
        if self.x_star.shape != (self.V, self.n) or self.y.shape != (self.V, self.m):
            raise InvalidDimensionError("x_star / y shapes do not match (V, n) / (V, m)")

    @property
    def true_indicator(self):
        """``(V, n)`` boolean support indicator of the ground truth."""
        return self.x_star != 0


def _check_dims(n, m, k, V):
    for name, value in (("n", n), ("m", m), ("k", k), ("V", V)):
        if int(value) != value:
            raise InvalidDimensionError(f"{name} must be an integer, got {value!r}")
    # k > m is allowed: sweeps over m start below the sparsity level
    if not (0 < k < n and 0 < m < n):
        raise InvalidDimensionError(f"need 0 < k < n and 0 < m < n, got n={n}, m={m}, k={k}")
    if V < 1:
        raise InvalidDimensionError(f"need V >= 1, got {V}")


def generate_instance(n, m, k, V, noise_std=0.0, seed=0, matrix_seed=None):
    """Draw a jointly sparse problem instance.

    The common support is drawn uniformly without replacement; every node
    gets its own i.i.d. standard normal values on it (no magnitude floor).
    Matrix entries are standard normal divided by ``sqrt(m)``.

    Parameters
    ----------
    n, m, k, V : int
        Ambient dimension, measurements per node, sparsity and node count.
    noise_std : float
        Standard deviation of additive white Gaussian noise on ``y``.
    seed : int or tuple of int
        Key for the support and signal values.
    matrix_seed : int or tuple of int, optional
        Key for the sensing matrices and noise; defaults to ``seed``.  Keeping
        ``seed`` fixed while varying ``matrix_seed`` redraws only the matrices.
    """
    _check_dims(n, m, k, V)
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    key = _as_key(seed)
    mkey = key if matrix_seed is None else _as_key(matrix_seed)

    support = np.sort(make_rng(key, _SUPPORT).choice(n, size=k, replace=False))
    x_star = np.zeros((V, n))
    A = np.empty((V, m, n))
    y = np.empty((V, m))
    for v in range(V):
        x_star[v, support] = make_rng(key, _SIGNAL, v).standard_normal(k)
        A[v] = make_rng(mkey, _MATRIX, v).standard_normal((m, n)) / np.sqrt(m)
        y[v] = measure(A[v], x_star[v], noise_std, make_rng(mkey, _NOISE, v))
    return ProblemInstance(
        n=int(n), m=int(m), k=int(k), V=int(V), support=support, x_star=x_star,
        A=A, y=y, noise_std=float(noise_std), seed=key, matrix_seed=mkey,
    )


def measure(A_v, x, noise_std=0.0, rng=None):
    """``A_v @ x`` plus ``N(0, noise_std**2)`` noise (none when ``noise_std == 0``)."""
    A_v = np.asarray(A_v, dtype=float)
    x = np.asarray(x, dtype=float)
    if A_v.ndim != 2 or x.shape != (A_v.shape[1],):
        raise InvalidDimensionError(f"cannot apply {A_v.shape} matrix to {x.shape} vector")
    y = A_v @ x
    if noise_std > 0:
        if rng is None:
            raise ValueError("an rng is required when noise_std > 0")
        y = y + noise_std * rng.standard_normal(y.shape)
    return y


def spectral_norm_sq(A, tol=1e-10, max_iter=10_000):
    """``||A||_2**2`` by power iteration on the smaller Gram matrix.

    Stops when the Rayleigh quotient changes by less than ``tol`` relative.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        raise ValueError("empty matrix")
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    if not G.any():
        return 0.0
    # fixed start vector so the result is deterministic
    b = np.random.default_rng(0x5EED).standard_normal(G.shape[0])
    b /= np.linalg.norm(b)
    lam = b @ G @ b
    for _ in range(max_iter):
        Gb = G @ b
        norm = np.linalg.norm(Gb)
        if norm == 0.0:
            return 0.0
        b = Gb / norm
        new = b @ G @ b
        if abs(new - lam) <= tol * abs(new):
            return float(new)
        lam = new
    return float(lam)
