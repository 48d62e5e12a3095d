"""Per-link bit accounting for every transmitted message.

A message broadcast over ``fanout`` links costs ``fanout`` times its payload.
Index payloads use ``floor(log2 n) + 1`` bits, real payloads ``q`` bits each.
"""
import csv
import math

import numpy as np

__all__ = [
    "SUPPORT_INDEX",
    "CANDIDATE_INDEX",
    "CORRELATION_VECTOR",
    "MessageLedger",
    "index_bits",
    "analytic_range",
    "dcomp2_bits_per_iteration",
]

SUPPORT_INDEX = "support-index"
CANDIDATE_INDEX = "candidate-index"
CORRELATION_VECTOR = "correlation-vector"
KINDS = (SUPPORT_INDEX, CANDIDATE_INDEX, CORRELATION_VECTOR)

CSV_COLUMNS = ("round", "sender", "kind", "receivers", "bits")


def index_bits(n):
    """Width of an index in ``{1..n}``: ``floor(log2 n) + 1``."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    return n.bit_length()


class MessageLedger:
    """Append-only log of messages with their bit costs.

    Columns are stored as python lists; :attr:`total_bits` and
    :meth:`bits_per_node` are computed from them so totals can never drift
    from the entries.
    """

    def __init__(self, V=None):
        self.V = V
        self.rounds = []
        self.senders = []
        self.kinds = []
        self.receivers = []
        self.bits = []
        self.payloads = []

    def __len__(self):
        return len(self.bits)

    def _append(self, round_, sender, kind, receivers, bits, payload):
        if kind not in KINDS:
            raise ValueError(f"unknown payload kind {kind!r}")
        if receivers < 0:
            raise ValueError("receiver count must be non-negative")
        self.rounds.append(int(round_))
        self.senders.append(int(sender))
        self.kinds.append(kind)
        self.receivers.append(int(receivers))
        self.bits.append(int(bits))
        self.payloads.append(None if payload is None else int(payload))

    def record_support_index(self, sender, fanout, n, round=0, index=None):
        self._append(round, sender, SUPPORT_INDEX, fanout, fanout * index_bits(n), index)

    def record_candidate_index(self, sender, fanout, n, round=0, index=None):
        self._append(round, sender, CANDIDATE_INDEX, fanout, fanout * index_bits(n), index)

    def record_correlation_vector(self, sender, fanout, n, q, round=0):
        self._append(round, sender, CORRELATION_VECTOR, fanout, fanout * q * n, None)

    def extend_support_indices(self, rounds, senders, indices, fanouts, n):
        """Bulk version of :meth:`record_support_index` (``fanouts`` per sender)."""
        r = index_bits(n)
        fanouts = np.asarray(fanouts, dtype=np.int64)
        for t, v, i in zip(np.asarray(rounds).tolist(), np.asarray(senders).tolist(),
                           np.asarray(indices).tolist()):
            f = int(fanouts[v])
            self._append(t, v, SUPPORT_INDEX, f, f * r, i)

    @property
    def total_bits(self):
        return int(sum(self.bits))

    @property
    def n_messages(self):
        return len(self.bits)

    def bits_per_node(self, V=None):
        V = self.V if V is None else V
        if V is None:
            V = max(self.senders, default=-1) + 1
        return np.bincount(np.asarray(self.senders, dtype=np.int64), weights=self.bits,
                           minlength=V).astype(np.int64)

    def last_round(self, kind=None):
        """Largest round index with an entry (of ``kind`` if given), else ``None``."""
        rounds = [t for t, k in zip(self.rounds, self.kinds) if kind is None or k == kind]
        return max(rounds) if rounds else None

    def entries(self):
        return list(zip(self.rounds, self.senders, self.kinds, self.receivers, self.bits))

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            writer.writerows(self.entries())

    @classmethod
    def from_csv(cls, path):
        ledger = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValueError(f"unexpected ledger header {reader.fieldnames}")
            for row in reader:
                ledger._append(int(row["round"]), int(row["sender"]), row["kind"],
                               int(row["receivers"]), int(row["bits"]), None)
        return ledger


def dcomp2_bits_per_iteration(n, V, d, q):
    """Network-wide DC-OMP 2 cost of one iteration on a ``d``-regular graph."""
    return V * ((d - 1) * q * n + (V - 1) * index_bits(n))


def analytic_range(algorithm, n, k, V, d, q=16, p=20):
    """``(min_bits, max_bits)`` per run on a ``d``-regular topology.

    ``d`` is self-inclusive.  The DC-OMP 2 row carries the factor ``n`` on
    the correlation payload and the DJ-IST / DJ-ADMM row carries the index
    width ``r``, which is what the per-message costs actually add up to.
    """
    r = index_bits(n)
    steps_min = math.ceil(k / (d // 2)) if d >= 2 else k
    if algorithm == "dcomp1":
        unit = V * (d - 1) * r
        return unit * steps_min, unit * k
    if algorithm == "dcomp2":
        unit = dcomp2_bits_per_iteration(n, V, d, q)
        return unit * steps_min, unit * k
    if algorithm in ("djist", "djadmm"):
        return 0, 2 * p * n * V * (d - 1) * r
    raise ValueError(f"unknown algorithm {algorithm!r}")
