"""Node and edge centrality measures plus allocation-weight transforms.

Betweenness sums run over unordered node pairs {j, h} with j != h (and
both distinct from the focal node, for node betweenness). Disconnected
pairs contribute 0. Edge betweenness counts a pair's own endpoints, so
on a tree the value of an edge is the product of the two side sizes.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass

import numpy as np

CENTRALITY_KINDS = ("degree", "betweenness", "investment")


@dataclass(frozen=True)
class CentralityVector:
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in CENTRALITY_KINDS:
            raise ValueError(f"unknown centrality kind {self.kind!r}")
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("centrality values must be finite and >= 0")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    def ranking(self):
        """Node ids from most to least central; ties broken by ascending id."""
        order = sorted(range(len(self.values)), key=lambda i: (-self.values[i], i))
        return order


def degree_centrality(g):
    return CentralityVector(np.array(g.degrees(), dtype=float), "degree")


def _brandes(g, sources=None):
    """Single-source shortest-path dependency accumulation.

    Returns (node_scores, edge_scores) where node scores exclude path
    endpoints and edge scores include them, both halved to count each
    unordered pair once.
    """
    n = g.n
    node_acc = np.zeros(n)
    edge_acc = {e: 0.0 for e in g.edges}
    for s in range(n) if sources is None else sources:
        # BFS from s with path counting
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        order = []
        queue = deque([s])
        preds = [[] for _ in range(n)]
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in g.neighbors(u):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        # dependency accumulation in reverse BFS order
        delta = np.zeros(n)
        for v in reversed(order):
            for u in preds[v]:
                share = sigma[u] / sigma[v] * (1.0 + delta[v])
                e = (u, v) if u < v else (v, u)
                edge_acc[e] += share
                delta[u] += share
            if v != s:
                node_acc[v] += delta[v]
    node_acc /= 2.0
    for e in edge_acc:
        edge_acc[e] /= 2.0
    return node_acc, edge_acc


def betweenness_centrality(g):
    node_acc, _ = _brandes(g)
    return CentralityVector(node_acc, "betweenness")


def edge_betweenness(g):
    """Betweenness per edge, keyed by (u, v) with u < v."""
    _, edge_acc = _brandes(g)
    return edge_acc


def allocation_weights(c):
    """Normalize a centrality vector to weights summing to 1."""
    values = np.asarray(c.values if isinstance(c, CentralityVector) else c, dtype=float)
    total = values.sum()
    if total <= 0:
        raise ValueError("cannot derive allocation weights from all-zero centrality")
    return values / total


def inverse_weights(w):
    """Entrywise 1/w, with zero weights mapped to 0 (not infinity)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    nz = w != 0
    out[nz] = 1.0 / w[nz]
    return out


def write_centrality_csv(g, path, investment=None):
    deg = degree_centrality(g).values
    bet = betweenness_centrality(g).values
    header = ["node", "degree", "betweenness"]
    if investment is not None:
        header.append("investment")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(g.n):
            row = [i, f"{deg[i]:.1f}", f"{bet[i]:.6f}"]
            if investment is not None:
                row.append(f"{investment[i]:.6f}")
            writer.writerow(row)
