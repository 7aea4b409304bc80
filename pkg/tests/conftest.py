"""Shared test oracles, implemented independently of the package code.

The infection-probability oracles take two different mathematical routes
(linear solve on the full compartment chain, and the percolation
representation of SIR final sets) so that agreement with the package's
jump-chain DP and Gillespie kernel is meaningful.
"""

import itertools

import numpy as np
import pytest


def ctmc_infection_probabilities(g, tau, gamma, initial=None):
    """Exact P(ever infected) by linear solve on the embedded jump chain
    over base-3 compartment states (0=S, 1=I, 2=R).

    initial: None for the uniform single-infection mixture, or a node id.
    """
    n = g.n
    gamma = np.asarray(gamma, dtype=float)
    pow3 = [3 ** i for i in range(n)]

    def digits(x):
        return [(x // pow3[i]) % 3 for i in range(n)]

    n_states = 3 ** n
    # jump-chain transition probabilities from every non-absorbing state
    trans = {}
    for x in range(n_states):
        d = digits(x)
        moves = []
        total = 0.0
        for i in range(n):
            if d[i] == 1:
                moves.append((x + pow3[i], gamma[i]))
                total += gamma[i]
            elif d[i] == 0:
                m = sum(1 for j in g.neighbors(i) if d[j] == 1)
                if m and tau > 0:
                    moves.append((x + pow3[i], tau * m))
                    total += tau * m
        if moves:
            trans[x] = [(y, r / total) for y, r in moves]

    def absorb_from(x0):
        # distribute mass forward; state indices only ever increase
        mass = np.zeros(n_states)
        mass[x0] = 1.0
        hit = np.zeros(n)
        for x in range(n_states):
            if mass[x] == 0.0:
                continue
            if x in trans:
                for y, p in trans[x]:
                    mass[y] += mass[x] * p
            else:
                d = digits(x)
                for i in range(n):
                    if d[i] == 2:
                        hit[i] += mass[x]
        return hit

    if initial is not None:
        return absorb_from(pow3[initial])
    return sum(absorb_from(pow3[s]) for s in range(n)) / n


def percolation_infection_probabilities(g, tau, gamma, samples, rng):
    """Monte-Carlo P(ever infected) via the percolation representation:
    node i transmits along each incident edge independently with
    probability 1 - exp(-tau * T_i), T_i ~ Exp(gamma_i); A_i is then
    reachability from a uniformly chosen seed in the directed graph."""
    n = g.n
    gamma = np.asarray(gamma, dtype=float)
    edges = g.sorted_edges()
    counts = np.zeros(n)
    for _ in range(samples):
        t_inf = rng.exponential(1.0 / gamma)
        p_open = 1.0 - np.exp(-tau * t_inf)
        adj = [[] for _ in range(n)]
        for u, v in edges:
            if rng.random() < p_open[u]:
                adj[u].append(v)
            if rng.random() < p_open[v]:
                adj[v].append(u)
        seed = int(rng.integers(n))
        seen = {seed}
        stack = [seed]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        for i in seen:
            counts[i] += 1
    return counts / samples


def brute_force_betweenness(g):
    """Node and edge betweenness by explicit enumeration of all shortest
    paths (DFS over all simple paths of minimal length), unordered pairs."""
    n = g.n
    node_scores = np.zeros(n)
    edge_scores = {e: 0.0 for e in g.edges}

    def all_paths(s, t):
        best = [None]
        found = []

        def extend(path):
            u = path[-1]
            if best[0] is not None and len(path) > best[0]:
                return
            if u == t:
                if best[0] is None or len(path) < best[0]:
                    best[0] = len(path)
                    found.clear()
                if len(path) == best[0]:
                    found.append(list(path))
                return
            for v in g.neighbors(u):
                if v not in path:
                    path.append(v)
                    extend(path)
                    path.pop()

        extend([s])
        return found

    for s, t in itertools.combinations(range(n), 2):
        paths = all_paths(s, t)
        if not paths:
            continue
        sigma = len(paths)
        for path in paths:
            for v in path[1:-1]:
                node_scores[v] += 1.0 / sigma
            for u, v in zip(path, path[1:]):
                e = (u, v) if u < v else (v, u)
                edge_scores[e] += 1.0 / sigma
    return node_scores, edge_scores


def all_graphs(n):
    """Every labeled simple graph on n nodes (use only for small n)."""
    from cyberlab.graphs import Graph
    pairs = list(itertools.combinations(range(n), 2))
    for bits in range(2 ** len(pairs)):
        yield Graph(n, [pairs[k] for k in range(len(pairs)) if bits >> k & 1])


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
