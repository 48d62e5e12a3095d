"""Seeded ensemble sweeps, CSV persistence, summaries and plots.

A sweep is the product of algorithms, topologies and the values of one sweep
variable (``m`` or ``V``).  Each point runs ``signal_sets * matrices_per_set``
instances; run ``s * matrices_per_set + j`` uses signal set ``s`` and matrix
draw ``j``.  Instance seeds depend only on the master seed, the position of
the sweep value and the run, so every algorithm and topology at a point sees
the same problems and each point can be reproduced on its own.
"""
import csv
import dataclasses
import io
import logging
import os
import sys
import tempfile
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import graph
from .accounting import analytic_range
from .dcomp import run_dcomp1, run_dcomp2
from .djadmm import run_djadmm
from .djist import run_djist
from .metrics import evaluate
from .model import AlgoParams, generate_instance, spectral_norm_sq

log = logging.getLogger(__name__)

__all__ = [
    "ALGORITHMS",
    "ConfigError",
    "ExperimentConfig",
    "MissingSeriesError",
    "PlotSpec",
    "SweepRow",
    "emit_plot",
    "load_config",
    "read_csv",
    "run_point",
    "run_sweep",
    "summarize",
    "write_csv",
    "write_summary",
]

ALGORITHMS = ("djist", "djadmm", "dcomp1", "dcomp2")
RUNNERS = {"djist": run_djist, "djadmm": run_djadmm, "dcomp1": run_dcomp1, "dcomp2": run_dcomp2}
PARAM_KEYS = tuple(f.name for f in fields(AlgoParams))
DESK_SETS, FULL_SETS = 10, 50


class ConfigError(ValueError):
    pass


class MissingSeriesError(KeyError):
    pass


def _as_tuple(value):
    return tuple(value) if isinstance(value, (list, tuple)) else (value,)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment; the TOML keys are exactly these field names.

    ``algorithm`` and ``topology`` take a single name or a list.  Exactly one
    of ``m`` and ``V`` is a list, the sweep variable.  Algorithm parameters
    left as ``None`` fall back to :meth:`AlgoParams.reference` (or
    :meth:`AlgoParams.reference_admm` for DJ-ADMM).  ``overrides`` maps a sweep
    value to parameter overrides for that point only, e.g.
    ``[overrides.6]`` / ``tau = 8e-3``.  With ``auto_shrink_tau`` a step size
    that fails the bound is halved until it passes, with a warning, instead
    of aborting the sweep.
    """

    algorithm: tuple = ("djist",)
    topology: tuple = ("regular-5",)
    n: int = 100
    k: int = 10
    m: object = 22
    V: object = 10
    noise_std: float = 0.0
    signal_sets: int = DESK_SETS
    matrices_per_set: int = 5
    seed: int = 0
    out: str = "results"
    name: str = "sweep"
    auto_shrink_tau: bool = False
    lam: float = None
    alpha: float = None
    beta: float = None
    tau: float = None
    epsilon: float = None
    p: int = None
    q: int = None
    max_iters: int = None
    rho: float = None
    stop_rule: str = None
    stop_scope: str = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        set_ = lambda name, value: object.__setattr__(self, name, value)  # noqa: E731
        set_("algorithm", _as_tuple(self.algorithm))
        set_("topology", _as_tuple(self.topology))
        for a in self.algorithm:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; expected one of {ALGORITHMS}")
        for t in self.topology:
            _topology_degree(t)
        lists = [name for name in ("m", "V") if isinstance(getattr(self, name), (list, tuple))]
        if len(lists) != 1:
            raise ConfigError("exactly one of m and V must be a list (the sweep variable)")
        set_(lists[0], tuple(int(x) for x in getattr(self, lists[0])))
        if not getattr(self, lists[0]):
            raise ConfigError(f"sweep list {lists[0]} is empty")
        for name in ("n", "k", "signal_sets", "matrices_per_set"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        overrides = {}
        for key, table in dict(self.overrides).items():
            try:
                point = int(key)
            except ValueError:
                raise ConfigError(f"override key {key!r} is not a sweep value") from None
            if point not in self.sweep_values:
                raise ConfigError(f"override for {point}, which is not in the sweep")
            bad = set(table) - set(PARAM_KEYS)
            if bad:
                raise ConfigError(f"unknown override keys {sorted(bad)}")
            overrides[point] = dict(table)
        set_("overrides", overrides)
        for a in self.algorithm:  # fail fast on bad parameter values
            for value in self.sweep_values:
                self.params_for(a, value)

    @property
    def sweep_var(self):
        return "m" if isinstance(self.m, tuple) else "V"

    @property
    def sweep_values(self):
        return getattr(self, self.sweep_var)

    @property
    def runs(self):
        return self.signal_sets * self.matrices_per_set

    def params_for(self, algorithm, value):
        given = {k: getattr(self, k) for k in PARAM_KEYS if getattr(self, k) is not None}
        given.update(self.overrides.get(value, {}))
        base = AlgoParams.reference_admm if algorithm == "djadmm" else AlgoParams.reference
        try:
            return base(**given)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def dims(self, value):
        m = value if self.sweep_var == "m" else self.m
        V = value if self.sweep_var == "V" else self.V
        return int(m), int(V)


def load_config(path, **changes):
    """Read a flat TOML config; unknown keys are errors."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for key, value in raw.items():
        if isinstance(value, dict) and key != "overrides":
            raise ConfigError(f"key {key!r} must be a plain value, not a table")
    raw.update({k: v for k, v in changes.items() if v is not None})
    return ExperimentConfig(**raw)


# ------------------------------------------------------------ rows and CSV


@dataclass(frozen=True)
class SweepRow:
    algorithm: str
    topology: str
    n: int
    m: int
    k: int
    V: int
    run_id: int
    ase: float
    pesr: float
    rse: float
    iterations: int
    total_bits: int
    t1: int
    converged: bool


ROW_FIELDS = tuple(f.name for f in fields(SweepRow))
CSV_HEADER = tuple(name.replace("_id", "-id") for name in ROW_FIELDS)
_INT_FIELDS = {"n", "m", "k", "V", "run_id", "iterations", "total_bits", "t1"}
_FLOAT_FIELDS = {"ase", "pesr", "rse"}


def _sort_key(row):
    return (ALGORITHMS.index(row.algorithm), row.topology, row.m, row.V, row.run_id)


def _format(name, value):
    if name in _FLOAT_FIELDS:
        return repr(float(value))
    if name == "converged":
        return "true" if value else "false"
    return str(value)


def _parse(name, text):
    if name in _INT_FIELDS:
        return int(text)
    if name in _FLOAT_FIELDS:
        return float(text)
    if name == "converged":
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    return text


def write_csv(rows, path):
    """Write rows sorted by point and run id; the file is replaced atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in sorted(rows, key=_sort_key):
        writer.writerow([_format(name, getattr(row, name)) for name in ROW_FIELDS])
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [SweepRow(*(_parse(name, text) for name, text in zip(ROW_FIELDS, rec)))
                for rec in reader if rec]


# ------------------------------------------------------------ sweeps


def _topology_degree(kind):
    if kind == "complete":
        return None
    prefix, _, d = kind.partition("-")
    if prefix != "regular" or not d.isdigit():
        raise ConfigError(f"unknown topology {kind!r}; expected 'complete' or 'regular-<d>'")
    return int(d)


def _make_topology(kind, V, seed_key):
    d = _topology_degree(kind)
    if V == 1:  # a lone node: no links, every algorithm reduces to its centralized form
        return graph.Topology(((),), kind=kind)
    return graph.complete(V) if d is None else graph.random_regular(V, d, seed=seed_key)


def _shrink_tau(instance, params):
    worst = max(spectral_norm_sq(instance.A[v]) for v in range(instance.V))
    tau = params.tau
    while tau * worst >= 1.0:
        tau /= 2
    if tau != params.tau:
        log.warning("tau=%g violates the step-size bound (max ||A_v||^2=%.6g); using %g",
                    params.tau, worst, tau)
        params = params.replace(tau=tau)
    return params


def run_point(config, algorithm, topology, point, run_id):
    """Execute one run of the sweep and return its :class:`SweepRow`."""
    value = config.sweep_values[point]
    m, V = config.dims(value)
    s, j = divmod(run_id, config.matrices_per_set)
    instance = generate_instance(config.n, m, config.k, V, noise_std=config.noise_std,
                                 seed=(config.seed, point, s),
                                 matrix_seed=(config.seed, point, s, j))
    topo = _make_topology(topology, V, (config.seed, point, s, j))
    params = config.params_for(algorithm, value)
    kwargs = {}
    if algorithm == "djist":
        if config.auto_shrink_tau:
            params = _shrink_tau(instance, params)
        kwargs["check_tau"] = True
    result = RUNNERS[algorithm](instance, topo, params, **kwargs)
    metrics = evaluate(instance, result)
    return SweepRow(
        algorithm=algorithm, topology=topology, n=config.n, m=m, k=config.k, V=V,
        run_id=run_id, ase=metrics.ase, pesr=metrics.pesr, rse=metrics.rse,
        iterations=result.rounds, total_bits=result.total_bits, t1=result.t1,
        converged=result.converged,
    )


def _run_task(task):
    import warnings
    from .djist import NonConvergenceWarning

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        return run_point(*task)


def sweep_tasks(config, points=None):
    points = range(len(config.sweep_values)) if points is None else points
    return [(config, a, t, p, r) for a in config.algorithm for t in config.topology
            for p in points for r in range(config.runs)]


def run_sweep(config, path=None, workers=1, points=None):
    """Run every (algorithm, topology, point, run) and write the CSV.

    ``path`` defaults to ``<out>/<name>.csv``; ``points`` restricts the sweep
    to the given sweep-value positions.  Returns ``(rows, path)``.
    """
    tasks = sweep_tasks(config, points)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=4))
    else:
        rows = [_run_task(t) for t in tasks]
    rows.sort(key=_sort_key)
    path = Path(config.out) / f"{config.name}.csv" if path is None else Path(path)
    write_csv(rows, path)
    return rows, path


# ------------------------------------------------------------ summaries

SUMMARY_METRICS = ("total_bits", "ase", "pesr", "rse", "iterations")


def summarize(rows, keys=("algorithm", "topology", "m", "V")):
    """Per-group count, mean, min and max of bits, ASE, PESR, RSE and iterations."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to summarize")
    groups = defaultdict(list)
    for row in rows:
        groups[tuple(getattr(row, k) for k in keys)].append(row)
    order = sorted(groups, key=lambda g: _sort_key(groups[g][0]))
    table = []
    for g in order:
        entry = dict(zip(keys, g))
        entry["runs"] = len(groups[g])
        for metric in SUMMARY_METRICS:
            values = np.array([getattr(r, metric) for r in groups[g]], dtype=float)
            entry[f"{metric}_mean"] = float(values.mean())
            entry[f"{metric}_min"] = float(values.min())
            entry[f"{metric}_max"] = float(values.max())
        table.append(entry)
    return table


def write_summary(table, fh):
    writer = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
    writer.writeheader()
    for entry in table:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in entry.items()})


# ------------------------------------------------------------ plots


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: ``y`` means against ``x``, one line per series.

    A series is an algorithm name, optionally qualified with a topology as
    ``"djist@complete"``.  Zero values vanish on a log axis.
    """

    y: str = "ase"
    x: str = "m"
    series: tuple = ALGORITHMS
    log_y: bool = False
    title: str = None


def _series_rows(rows, series):
    algorithm, _, topology = series.partition("@")
    picked = [r for r in rows if r.algorithm == algorithm and (not topology or r.topology == topology)]
    if not picked:
        raise MissingSeriesError(f"no rows for series {series!r}")
    return picked


def emit_plot(rows, spec, path):
    """Render the spec as an SVG line plot."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(rows)
    data = [(s, _series_rows(rows, s)) for s in spec.series]
    with plt.rc_context({"svg.hashsalt": "jointsparse", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for label, picked in data:
            by_x = defaultdict(list)
            for r in picked:
                by_x[getattr(r, spec.x)].append(float(getattr(r, spec.y)))
            xs = sorted(by_x)
            ax.plot(xs, [np.mean(by_x[x]) for x in xs], marker="o", label=label)
        if spec.log_y:
            ax.set_yscale("log", nonpositive="mask")
        ax.set_xlabel(spec.x)
        ax.set_ylabel(spec.y)
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def full_config(config):
    """The full ensemble: 50 signal sets times 5 matrices."""
    return config.replace(signal_sets=FULL_SETS, matrices_per_set=5)


def ranges_table(n, k, V, d, q=16, p=20):
    return {a: analytic_range(a, n, k, V, d, q=q, p=p) for a in ("dcomp1", "dcomp2", "djist")}
