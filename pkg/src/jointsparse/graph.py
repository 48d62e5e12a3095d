"""Undirected network topologies.

Neighborhoods follow the self-inclusive convention used throughout the
package: ``degrees[v]`` counts ``v`` itself, so a node has ``degrees[v] - 1``
links to transmit over.
"""
from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import make_rng

__all__ = [
    "Topology",
    "TopologyError",
    "complete",
    "random_regular",
    "ring",
    "from_edges",
    "neighborhood_inclusive",
]

MAX_RETRIES = 1000


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Per-node sorted neighbor tuples, self excluded."""

    adjacency: tuple
    kind: str = "custom"

    def __post_init__(self):
        adj = tuple(tuple(sorted(int(u) for u in nb)) for nb in self.adjacency)
        object.__setattr__(self, "adjacency", adj)
        V = len(adj)
        for v, nb in enumerate(adj):
            if len(set(nb)) != len(nb):
                raise TopologyError(f"node {v} has repeated neighbors")
            for u in nb:
                if u == v:
                    raise TopologyError(f"self loop at node {v}")
                if not 0 <= u < V:
                    raise TopologyError(f"neighbor {u} of node {v} out of range")
                if v not in adj[u]:
                    raise TopologyError(f"edge ({v}, {u}) is not symmetric")

    @property
    def V(self):
        return len(self.adjacency)

    @property
    def degrees(self):
        """Self-inclusive degrees ``d_v``."""
        return np.array([len(nb) + 1 for nb in self.adjacency], dtype=np.int64)

    @property
    def fanouts(self):
        """Number of links per node, ``d_v - 1``."""
        return self.degrees - 1

    def edges(self):
        return [(v, u) for v, nb in enumerate(self.adjacency) for u in nb if v < u]

    def is_connected(self):
        if self.V == 0:
            return False
        seen = {0}
        queue = deque([0])
        while queue:
            v = queue.popleft()
            for u in self.adjacency[v]:
                if u not in seen:
                    seen.add(u)
                    queue.append(u)
        return len(seen) == self.V

    def adjacency_matrix(self):
        M = np.zeros((self.V, self.V))
        for v, nb in enumerate(self.adjacency):
            M[v, list(nb)] = 1.0
        return M

    def csr(self):
        """``(indptr, indices)`` int64 arrays of the neighbor lists."""
        indptr = np.zeros(self.V + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(nb) for nb in self.adjacency])
        indices = np.array([u for nb in self.adjacency for u in nb], dtype=np.int64)
        return indptr, indices

    def neighborhood_inclusive(self, v):
        return neighborhood_inclusive(self, v)


def neighborhood_inclusive(topology, v):
    """``adjacency[v]`` together with ``v`` itself."""
    if not 0 <= v < topology.V:
        raise IndexError(f"node {v} out of range for V={topology.V}")
    return frozenset(topology.adjacency[v]) | {v}


def from_edges(V, edges, kind="custom"):
    nb = [set() for _ in range(V)]
    for u, v in edges:
        nb[u].add(v)
        nb[v].add(u)
    return Topology(tuple(tuple(s) for s in nb), kind=kind)


def complete(V):
    if V < 2:
        raise TopologyError(f"complete graph needs V >= 2, got {V}")
    return Topology(tuple(tuple(u for u in range(V) if u != v) for v in range(V)), kind="complete")


def ring(V):
    """Cycle graph; self-inclusive degree 3."""
    if V < 3:
        raise TopologyError(f"ring needs V >= 3, got {V}")
    return from_edges(V, [(v, (v + 1) % V) for v in range(V)], kind="ring")


def _pair_stubs(rng, V, links):
    """Edge set of one sequential stub pairing, or ``None`` if it got stuck."""
    stubs = np.repeat(np.arange(V), links).tolist()
    edges = set()
    while stubs:
        for _ in range(64):
            i, j = rng.choice(len(stubs), size=2, replace=False)
            u, v = stubs[i], stubs[j]
            if u != v and (min(u, v), max(u, v)) not in edges:
                break
        else:
            valid = [(i, j) for i in range(len(stubs)) for j in range(i + 1, len(stubs))
                     if stubs[i] != stubs[j]
                     and (min(stubs[i], stubs[j]), max(stubs[i], stubs[j])) not in edges]
            if not valid:
                return None
            i, j = valid[rng.integers(len(valid))]
            u, v = stubs[i], stubs[j]
        edges.add((min(u, v), max(u, v)))
        for pos in sorted((i, j), reverse=True):
            stubs.pop(pos)
    return edges


def random_regular(V, d, seed=0):
    """Connected graph where every node has ``d - 1`` neighbors.

    ``d`` is the self-inclusive degree.  Uses the pairing (configuration)
    model: stubs are paired at random, a pair that would create a self loop
    or a repeated edge is redrawn, and a draw that gets stuck or is not
    connected is discarded, giving up after ``MAX_RETRIES`` draws.  Above
    half density the complement graph is drawn instead.
    """
    links = d - 1
    if links < 1 or links >= V:
        raise TopologyError(f"need 1 <= d - 1 < V, got d={d}, V={V}")
    if (links * V) % 2:
        raise TopologyError(f"no {links}-regular graph on {V} nodes: (d - 1) * V is odd")
    if links == V - 1:
        topo = complete(V)
        return Topology(topo.adjacency, kind=f"regular-{d}")

    rng = make_rng(seed)
    # dense graphs: draw the sparser complement, then take the complement
    dense = 2 * links > V - 1
    draw = V - 1 - links if dense else links
    for _ in range(MAX_RETRIES):
        edges = _pair_stubs(rng, V, draw)
        if edges is None:
            continue
        if dense:
            edges = {(u, v) for u in range(V) for v in range(u + 1, V)} - edges
        topo = from_edges(V, sorted(edges), kind=f"regular-{d}")
        if topo.is_connected():
            return topo
    raise TopologyError(f"no connected simple {links}-regular graph after {MAX_RETRIES} draws")
