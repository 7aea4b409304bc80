"""Undirected simple graphs, random generators, and path metrics.

Nodes are labeled 0..n-1. Graphs are immutable after construction; all
"mutating" operations return new Graph instances.
"""

from __future__ import annotations

import csv
import math
from collections import deque

import numpy as np

#: Marker for node pairs with no connecting path.
INF = math.inf

_FIXTURES = {
    # 8-node branching tree, 0-based translation of the printed 1-based
    # edge list 1-2, 2-3, 2-4, 3-5, 3-6, 4-7, 4-8.
    "tree8": (8, [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)]),
    "star8": (8, [(0, j) for j in range(1, 8)]),
    # two connected nodes, the closed-form reference system
    "line2": (2, [(0, 1)]),
    "complete8": (8, [(i, j) for i in range(8) for j in range(i + 1, 8)]),
}


class Graph:
    """Undirected simple graph: no self-loops, no duplicate edges."""

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n, edges):
        if n < 0:
            raise ValueError("node count must be non-negative")
        adj = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) endpoint outside [0, {n})")
            e = (u, v) if u < v else (v, u)
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        self.n = n
        self.edges = frozenset(seen)
        for u, v in seen:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        self._adj = adj

    def neighbors(self, i):
        return self._adj[i]

    def degree(self, i):
        return len(self._adj[i])

    def degrees(self):
        return [len(nbrs) for nbrs in self._adj]

    @property
    def num_edges(self):
        return len(self.edges)

    def has_edge(self, u, v):
        e = (u, v) if u < v else (v, u)
        return e in self.edges

    def sorted_edges(self):
        """Edges as (u, v) with u < v, lexicographically sorted."""
        return sorted(self.edges)

    def adjacency_matrix(self):
        """Dense 0/1 adjacency matrix; only for small graphs."""
        if self.n > 64:
            raise ValueError("dense adjacency only materialized for n <= 64")
        a = np.zeros((self.n, self.n), dtype=np.int8)
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1
        return a

    def csr_adjacency(self):
        """(indptr, indices) arrays for tight simulation loops."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        for i, nbrs in enumerate(self._adj):
            indptr[i + 1] = indptr[i] + len(nbrs)
        indices = np.empty(indptr[-1], dtype=np.int64)
        for i, nbrs in enumerate(self._adj):
            indices[indptr[i]:indptr[i + 1]] = nbrs
        return indptr, indices

    def without_edges(self, remove):
        """New graph with the given edges deleted."""
        remove = {(u, v) if u < v else (v, u) for u, v in remove}
        missing = remove - self.edges
        if missing:
            raise ValueError(f"edges not present: {sorted(missing)}")
        return Graph(self.n, self.edges - remove)

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


def erdos_renyi(n, p, seed):
    """G(n, p): each of the n(n-1)/2 pairs included independently w.p. p."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    edges = []
    if n >= 2 and p > 0.0:
        iu, ju = np.triu_indices(n, 1)
        mask = rng.random(iu.size) < p
        edges = list(zip(iu[mask].tolist(), ju[mask].tolist()))
    return Graph(n, edges)


def barabasi_albert(n, m, seed):
    """Preferential-attachment growth; every added node gains m distinct edges.

    The initial core is an m-clique, so the final edge count is
    m*(n - m) + m*(m - 1)/2. Duplicate target draws are rejected and
    redrawn, keeping the graph simple.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if n < m:
        raise ValueError(f"need n >= m, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    degree = np.zeros(n, dtype=np.int64)
    degree[:m] = m - 1
    deg_total = m * (m - 1)
    for i in range(m, n):
        if deg_total == 0:
            # m = 1 and the single-node core has no edges yet: attach uniformly
            targets = {int(rng.integers(i))}
        else:
            targets = set()
            while len(targets) < m:
                j = int(rng.integers(i))
                if j in targets:
                    continue
                if rng.random() < degree[j] / deg_total:
                    targets.add(j)
        for j in targets:
            edges.append((j, i))
            degree[j] += 1
            degree[i] += 1
            deg_total += 2
    return Graph(n, edges)


def fixture(name):
    """Named reference graphs: complete8, star8, tree8, line2."""
    try:
        n, edges = _FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(_FIXTURES)}") from None
    return Graph(n, edges)


def bfs_distances(g, source):
    """Hop counts from source; INF for unreachable nodes."""
    dist = [INF] * g.n
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in g.neighbors(u):
            if dist[v] is INF:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def shortest_path_lengths(g):
    """All-pairs hop counts as a list of rows; INF marks unreachable pairs."""
    return [bfs_distances(g, s) for s in range(g.n)]


def avg_shortest_path(g):
    """Mean shortest-path length over connected node pairs.

    Disconnected pairs are excluded from the average; raises if no pair
    is connected at all.
    """
    total = 0
    pairs = 0
    for s in range(g.n):
        dist = bfs_distances(g, s)
        for t in range(s + 1, g.n):
            if dist[t] is not INF:
                total += dist[t]
                pairs += 1
    if pairs == 0:
        raise ValueError("no connected node pair: average path length undefined")
    return total / pairs


def connected_components(g):
    """Partition of nodes into connected components, each sorted ascending."""
    seen = [False] * g.n
    parts = []
    for s in range(g.n):
        if seen[s]:
            continue
        comp = []
        queue = deque([s])
        seen[s] = True
        while queue:
            u = queue.popleft()
            comp.append(u)
            for v in g.neighbors(u):
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
        parts.append(sorted(comp))
    return parts


def write_edge_list(g, path):
    """Text format: header "n=<N>", then one "i j" line per edge, i < j."""
    with open(path, "w") as fh:
        fh.write(f"n={g.n}\n")
        for u, v in g.sorted_edges():
            fh.write(f"{u} {v}\n")


def read_edge_list(path):
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("n="):
            raise ValueError(f"bad edge-list header: {header!r}")
        n = int(header[2:])
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    return Graph(n, edges)


def write_degree_csv(g, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "degree"])
        for i in range(g.n):
            writer.writerow([i, g.degree(i)])
