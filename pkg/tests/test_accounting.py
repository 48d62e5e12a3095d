import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jointsparse import AlgoParams, generate_instance, random_regular, run_djadmm, run_djist
from jointsparse.accounting import (
    CANDIDATE_INDEX,
    CORRELATION_VECTOR,
    CSV_COLUMNS,
    SUPPORT_INDEX,
    MessageLedger,
    analytic_range,
    dcomp2_bits_per_iteration,
    index_bits,
)


@pytest.mark.parametrize("n,r", [(100, 7), (1, 1), (128, 8), (127, 7), (2, 2)])
def test_index_bits(n, r):
    assert index_bits(n) == r


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 10**9))
def test_index_bits_is_floor_log2_plus_one(n):
    r = index_bits(n)
    assert 2 ** (r - 1) <= n < 2 ** r


def test_index_bits_rejects_zero():
    with pytest.raises(ValueError):
        index_bits(0)


def test_support_index_costs():
    led = MessageLedger()
    led.record_support_index(0, 4, 100)
    assert led.total_bits == 28
    led.record_support_index(1, 0, 100)
    assert led.bits[-1] == 0
    for _ in range(3):
        led.record_support_index(2, 4, 100, round=5)
    assert led.bits_per_node(3).tolist() == [28, 0, 84]


def test_correlation_vector_costs():
    led = MessageLedger()
    led.record_correlation_vector(0, 4, 100, 16)
    led.record_correlation_vector(0, 4, 100, 1)
    led.record_correlation_vector(0, 0, 100, 16)
    assert led.bits == [6400, 400, 0]


def test_dcomp2_table_values():
    unit = dcomp2_bits_per_iteration(100, 10, 5, 16)
    assert unit == 10 * (6400 + 63) == 64_630
    assert 3 * unit == 193_890
    assert 6 * unit == 387_780


def test_analytic_ranges():
    assert analytic_range("dcomp1", 100, 10, 10, 5) == (10 * 4 * 7 * 5, 2800)
    lo, hi = analytic_range("dcomp2", 100, 10, 10, 5)
    assert (lo, hi) == (64_630 * 5, 64_630 * 10)
    assert analytic_range("djist", 100, 10, 10, 5, p=20) == (0, 2 * 20 * 100 * 10 * 4 * 7)
    assert analytic_range("djadmm", 100, 10, 10, 5) == analytic_range("djist", 100, 10, 10, 5)
    with pytest.raises(ValueError):
        analytic_range("fista", 100, 10, 10, 5)


def test_totals_and_kinds():
    led = MessageLedger(V=2)
    led.record_candidate_index(1, 3, 50, round=2, index=7)
    led.record_support_index(0, 3, 50, round=4, index=1)
    assert led.kinds == [CANDIDATE_INDEX, SUPPORT_INDEX]
    assert led.total_bits == sum(led.bits) == 2 * 3 * 6
    assert led.n_messages == len(led) == 2
    assert led.last_round() == 4
    assert led.last_round(CANDIDATE_INDEX) == 2
    assert led.last_round(CORRELATION_VECTOR) is None


def test_bulk_matches_single_records():
    a, b = MessageLedger(), MessageLedger()
    fanouts = np.array([4, 2, 3])
    rounds, senders, idx = [0, 0, 3], [2, 0, 1], [5, 9, 0]
    a.extend_support_indices(rounds, senders, idx, fanouts, 100)
    for t, v, i in zip(rounds, senders, idx):
        b.record_support_index(v, int(fanouts[v]), 100, round=t, index=i)
    assert a.entries() == b.entries() and a.payloads == b.payloads


def test_csv_round_trip(tmp_path):
    led = MessageLedger()
    led.record_support_index(0, 4, 100, round=1)
    led.record_correlation_vector(3, 2, 100, 16, round=2)
    path = tmp_path / "ledger.csv"
    led.to_csv(path)
    assert path.read_text(encoding="utf-8").splitlines()[0] == ",".join(CSV_COLUMNS)
    assert MessageLedger.from_csv(path).entries() == led.entries()


def test_bad_entries_rejected():
    led = MessageLedger()
    with pytest.raises(ValueError):
        led._append(0, 0, "telemetry", 1, 1, None)
    with pytest.raises(ValueError):
        led.record_support_index(0, -1, 10)


@pytest.mark.parametrize("m", [12, 24])
def test_iterative_totals_within_analytic_range(m, quiet):
    inst = generate_instance(100, m, 10, 10, seed=(4, m))
    topo = random_regular(10, 5, seed=(4, m))
    lo, hi = analytic_range("djist", 100, 10, 10, 5)
    for res in (run_djist(inst, topo, AlgoParams.reference(max_iters=5000)),
                run_djadmm(inst, topo, AlgoParams.reference_admm(max_iters=5000))):
        assert lo <= res.total_bits <= hi
        assert res.total_bits % (4 * index_bits(100)) == 0
