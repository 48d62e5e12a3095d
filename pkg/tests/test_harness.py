import logging

import numpy as np
import pytest

from jointsparse.dcomp import run_dcomp1
from jointsparse.djist import StepSizeError
from jointsparse.graph import random_regular
from jointsparse.metrics import evaluate
from jointsparse.model import generate_instance
from jointsparse.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    MissingSeriesError,
    PlotSpec,
    SweepRow,
    emit_plot,
    full_config,
    load_config,
    read_csv,
    run_point,
    run_sweep,
    summarize,
    write_csv,
)

SMALL = dict(n=30, k=3, m=[10, 14], V=4, topology="regular-3", signal_sets=1, matrices_per_set=2,
             max_iters=3000)


def _row(**kw):
    base = dict(algorithm="djist", topology="regular-5", n=100, m=22, k=10, V=10, run_id=0, ase=0.0,
                pesr=1.0, rse=1.5e-5, iterations=100, total_bits=28, t1=50, converged=True)
    base.update(kw)
    return SweepRow(**base)


def _write_toml(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_config(tmp_path):
    cfg = load_config(_write_toml(tmp_path / "c.toml", """
algorithm = ["djist", "dcomp1"]
topology = "complete"
n = 50
k = 4
m = [10, 12]
V = 5
seed = 9
tau = 0.01

[overrides.12]
tau = 0.008
"""))
    assert cfg.algorithm == ("djist", "dcomp1") and cfg.topology == ("complete",)
    assert cfg.sweep_var == "m" and cfg.sweep_values == (10, 12)
    assert cfg.runs == 50
    assert cfg.params_for("djist", 10).tau == 0.01
    assert cfg.params_for("djist", 12).tau == 0.008
    assert cfg.params_for("djadmm", 10).alpha == 5e-3


def test_cli_style_overrides(tmp_path):
    path = _write_toml(tmp_path / "c.toml", "m = [10]\nseed = 1\n")
    cfg = load_config(path, seed=5, out=str(tmp_path / "o"))
    assert cfg.seed == 5 and cfg.out == str(tmp_path / "o")
    assert full_config(cfg).runs == 250


@pytest.mark.parametrize("text", ["m = [10]\nbogus = 1\n", "m = [10]\n[params]\ntau = 1\n",
                                  "m = [10]\n[overrides.11]\ntau = 0.1\n",
                                  "m = [10]\n[overrides.10]\ntemperature = 0.1\n"])
def test_bad_config_files(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write_toml(tmp_path / "c.toml", text))


@pytest.mark.parametrize("kw", [dict(m=22, V=10), dict(m=[22], V=[10]), dict(m=[], V=10),
                                dict(m=[22], algorithm="omp"), dict(m=[22], topology="star"),
                                dict(m=[22], signal_sets=0), dict(m=[22], tau=-1.0),
                                dict(m=[22], seed=2**64)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_single_node_single_run(tmp_path, quiet):
    cfg = ExperimentConfig(algorithm="djist", topology="complete", n=20, k=2, m=8, V=[1],
                           signal_sets=1, matrices_per_set=1, out=str(tmp_path))
    rows, path = run_sweep(cfg)
    assert len(rows) == 1 and rows[0].V == 1 and rows[0].total_bits == 0
    assert path == tmp_path / "sweep.csv"


def test_sweep_is_deterministic_and_round_trips(tmp_path, quiet):
    cfg = ExperimentConfig(algorithm=["djist", "dcomp2"], **SMALL)
    rows, a = run_sweep(cfg, path=tmp_path / "a.csv")
    _, b = run_sweep(cfg, path=tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert len(rows) == 2 * 2 * 2
    assert read_csv(a) == rows
    assert a.read_text(encoding="utf-8").splitlines()[0] == ",".join(CSV_HEADER)


def test_parallel_sweep_matches_serial(tmp_path, quiet):
    cfg = ExperimentConfig(algorithm=["dcomp1", "djist"], **SMALL)
    _, a = run_sweep(cfg, path=tmp_path / "a.csv")
    _, b = run_sweep(cfg, path=tmp_path / "b.csv", workers=2)
    assert a.read_bytes() == b.read_bytes()


def test_algorithms_share_instances(quiet):
    cfg = ExperimentConfig(algorithm=["dcomp1", "dcomp2"], **SMALL)
    r1 = run_point(cfg, "dcomp1", "regular-3", 1, 3)
    r2 = run_point(cfg, "dcomp2", "regular-3", 1, 3)
    assert (r1.m, r1.run_id) == (r2.m, r2.run_id) == (14, 3)
    # run 3 = signal set 1, matrix 1 at sweep position 1
    inst = generate_instance(30, 14, 3, 4, seed=(0, 1, 1), matrix_seed=(0, 1, 1, 1))
    topo = random_regular(4, 3, seed=(0, 1, 1, 1))
    res = run_dcomp1(inst, topo)
    assert r1.total_bits == res.total_bits and r1.ase == evaluate(inst, res).ase


def test_write_csv_sorts_rows(tmp_path):
    rows = [_row(run_id=1), _row(algorithm="dcomp1"), _row(run_id=0, m=20)]
    path = write_csv(rows, tmp_path / "x.csv")
    assert [(r.algorithm, r.m, r.run_id) for r in read_csv(path)] == [
        ("djist", 20, 0), ("djist", 22, 1), ("dcomp1", 22, 0)]
    assert not list(tmp_path.glob(".*.tmp"))


def test_csv_round_trip_preserves_floats(tmp_path):
    rows = [_row(rse=0.1 + 0.2, ase=1 / 3), _row(run_id=1, converged=False, rse=5e-324)]
    assert read_csv(write_csv(rows, tmp_path / "x.csv")) == rows


def test_read_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_csv(p)


def test_tau_auto_shrink(caplog, quiet):
    cfg = ExperimentConfig(algorithm="djist", tau=5.0, **{**SMALL, "m": [10]})
    with pytest.raises(StepSizeError):
        run_point(cfg, "djist", "regular-3", 0, 0)
    with caplog.at_level(logging.WARNING, logger="jointsparse.harness"):
        row = run_point(cfg.replace(auto_shrink_tau=True), "djist", "regular-3", 0, 0)
    assert "violates the step-size bound" in caplog.text
    assert np.isfinite(row.rse)


def test_summarize():
    table = summarize([_row(total_bits=28)])
    (entry,) = table
    assert entry["runs"] == 1
    assert entry["total_bits_mean"] == entry["total_bits_min"] == entry["total_bits_max"] == 28
    table = summarize([_row(total_bits=28), _row(run_id=1, total_bits=56), _row(algorithm="dcomp1")],
                      keys=("algorithm",))
    assert [e["algorithm"] for e in table] == ["djist", "dcomp1"]
    assert table[0]["total_bits_mean"] == 42 and table[0]["total_bits_max"] == 56
    with pytest.raises(ValueError):
        summarize([])


def test_emit_plot(tmp_path):
    rows = [_row(algorithm=a, m=m, ase=0.01 * m * (i + 1)) for i, a in enumerate(("djist", "djadmm", "dcomp1", "dcomp2"))
            for m in (8, 16, 24)]
    path = emit_plot(rows, PlotSpec(y="ase", log_y=True), tmp_path / "ase.svg")
    svg = path.read_text(encoding="utf-8")
    assert svg.startswith("<?xml") and "<svg" in svg
    for a in ("djist", "djadmm", "dcomp1", "dcomp2"):
        assert a in svg
    again = emit_plot(rows, PlotSpec(y="ase", log_y=True), tmp_path / "again.svg")
    assert again.read_bytes() == path.read_bytes()


def test_emit_plot_single_point_and_topology_series(tmp_path):
    rows = [_row(topology="complete")]
    emit_plot(rows, PlotSpec(series=("djist@complete",)), tmp_path / "one.svg")
    with pytest.raises(MissingSeriesError):
        emit_plot(rows, PlotSpec(series=("djist@regular-5",)), tmp_path / "x.svg")
    with pytest.raises(MissingSeriesError):
        emit_plot(rows, PlotSpec(series=("dcomp2",)), tmp_path / "x.svg")
