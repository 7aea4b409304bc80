"""Markovian SIR contagion on a fixed graph.

Two routes to the same quantities: an exact continuous-time Markov chain
treatment for small graphs (generator matrix, jump-chain absorption
probabilities) and Gillespie Monte Carlo for everything larger.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from . import _kernels

EXACT_MAX_NODES = 10

DEFAULT_TAU = 0.1
DEFAULT_PANDEMIC_SIZE_FRACTION = 0.10
DEFAULT_PANDEMIC_FREQ_THRESHOLD = 0.001


@dataclass(frozen=True)
class SirParams:
    """Infection rate per edge and per-node recovery rates."""

    tau: float
    gamma: np.ndarray

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        gamma = np.asarray(self.gamma, dtype=float)
        if np.any(gamma <= 0):
            raise ValueError("every recovery rate must be > 0")
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def uniform(cls, n, tau=DEFAULT_TAU, gamma=1.0):
        return cls(tau, np.full(n, float(gamma)))

    def check(self, g):
        if len(self.gamma) != g.n:
            raise ValueError(f"gamma has length {len(self.gamma)}, graph has {g.n} nodes")


@dataclass(frozen=True)
class InitialCondition:
    """Who is infected at t=0.

    policy "uniform": one node, uniform at random per run.
    policy "fixed": the given node set (a single int is accepted).
    """

    policy: str = "uniform"
    nodes: tuple = ()

    def __post_init__(self):
        if self.policy not in ("uniform", "fixed"):
            raise ValueError(f"unknown initial-condition policy {self.policy!r}")
        nodes = self.nodes
        if isinstance(nodes, (int, np.integer)):
            nodes = (int(nodes),)
        object.__setattr__(self, "nodes", tuple(int(i) for i in nodes))
        if self.policy == "fixed" and not self.nodes:
            raise ValueError("fixed initial condition needs at least one node")

    @classmethod
    def uniform_random_single(cls):
        return cls("uniform")

    @classmethod
    def fixed_node(cls, i):
        return cls("fixed", (i,))

    @classmethod
    def fixed_set(cls, nodes):
        return cls("fixed", tuple(nodes))

    def check(self, g):
        for i in self.nodes:
            if not (0 <= i < g.n):
                raise ValueError(f"initial node {i} outside [0, {g.n})")

    def _kernel_args(self, n):
        if self.policy == "uniform":
            return 0, np.empty(0, dtype=np.int64)
        return 1, np.array(self.nodes, dtype=np.int64)


@dataclass(frozen=True)
class OutbreakSample:
    """Outcome of one trajectory, recorded at absorption."""

    ever_infected: np.ndarray
    infected_duration: np.ndarray

    @property
    def final_size(self):
        return int(np.count_nonzero(self.ever_infected))


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregates over independent trajectories."""

    runs: int
    infection_count: np.ndarray
    mean_duration: np.ndarray
    final_sizes: np.ndarray
    seed: int

    @property
    def infection_probability(self):
        return self.infection_count / self.runs

    @property
    def size_histogram(self):
        """Counts indexed by final outbreak size."""
        return np.bincount(self.final_sizes)

    def pandemic_frequency(self, size_fraction, n_nodes):
        threshold = size_fraction * n_nodes
        return float(np.count_nonzero(self.final_sizes >= threshold)) / self.runs


def gillespie_run(g, params, init, seed, run_index=0):
    """One exact stochastic trajectory; runs until no node is infected."""
    params.check(g)
    init.check(g)
    indptr, indices = g.csr_adjacency()
    mode, nodes = init._kernel_args(g.n)
    ever, duration, _size = _kernels.sir_one_trajectory(
        indptr, indices, params.tau, params.gamma, mode, nodes,
        np.uint64(seed), np.uint64(run_index))
    return OutbreakSample(ever_infected=ever.copy(), infected_duration=duration.copy())


def monte_carlo(g, params, init, runs, seed, workers=1):
    """Aggregate `runs` independent Gillespie trajectories.

    Per-run RNG streams are derived from (seed, run index), so the result
    is identical for any worker count; workers only changes how the run
    range is partitioned.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    params.check(g)
    init.check(g)
    indptr, indices = g.csr_adjacency()
    mode, nodes = init._kernel_args(g.n)
    # fixed-size blocks regardless of worker count, reduced in block order,
    # so float accumulation (and thus every output bit) is worker-invariant
    block = 4096
    bounds = list(range(0, runs, block)) + [runs]
    spans = list(zip(bounds[:-1], bounds[1:]))

    def run_block(span):
        lo, hi = span
        return _kernels.sir_ensemble(indptr, indices, params.tau, params.gamma,
                                     mode, nodes, np.uint64(seed),
                                     np.int64(lo), np.int64(hi))

    workers = max(1, int(workers))
    if workers == 1 or len(spans) == 1:
        results = [run_block(span) for span in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_block, spans))
    counts = np.zeros(g.n, dtype=np.int64)
    dur_sums = np.zeros(g.n, dtype=np.float64)
    size_chunks = []
    for c, d, s in results:
        counts += c
        dur_sums += d
        size_chunks.append(s)
    return EnsembleStats(runs=runs,
                         infection_count=counts,
                         mean_duration=dur_sums / runs,
                         final_sizes=np.concatenate(size_chunks),
                         seed=int(seed))


# --- exact small-system treatment ------------------------------------------

def _check_exact_size(g):
    if g.n > EXACT_MAX_NODES:
        raise ValueError(f"exact treatment limited to n <= {EXACT_MAX_NODES}, got {g.n}")


def exact_generator(g, params):
    """Infinitesimal generator over the full state space {S,I,R}^n.

    States are base-3 indices, digit i giving node i's compartment
    (0=S, 1=I, 2=R). Returns a sparse CSR matrix with zero row sums.
    """
    _check_exact_size(g)
    params.check(g)
    n = g.n
    n_states = 3 ** n
    pow3 = [3 ** i for i in range(n)]
    rows, cols, vals = [], [], []
    for x in range(n_states):
        digits = [(x // pow3[i]) % 3 for i in range(n)]
        diag = 0.0
        for i in range(n):
            if digits[i] == 1:
                # recovery i: I -> R
                y = x + pow3[i]
                rows.append(x)
                cols.append(y)
                vals.append(params.gamma[i])
                diag += params.gamma[i]
            elif digits[i] == 0:
                m = sum(1 for j in g.neighbors(i) if digits[j] == 1)
                if m > 0:
                    # infection i: S -> I
                    y = x + pow3[i]
                    rows.append(x)
                    cols.append(y)
                    vals.append(params.tau * m)
                    diag += params.tau * m
        if diag > 0:
            rows.append(x)
            cols.append(x)
            vals.append(-diag)
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))


def state_index(compartments):
    """Base-3 state index from a sequence of 0/1/2 compartment codes."""
    return sum(c * 3 ** i for i, c in enumerate(compartments))


def exact_infection_probabilities(g, params, init):
    """P(ever infected) for every node, by jump-chain absorption.

    Dynamic programming over reachable (infected set, recovered set)
    bitmask pairs; transition probabilities are rate ratios, so the
    result depends on gamma only through ratios against tau.
    """
    _check_exact_size(g)
    params.check(g)
    init.check(g)
    n = g.n
    tau = params.tau
    gamma = params.gamma
    nbr_mask = [0] * n
    for i in range(n):
        for j in g.neighbors(i):
            nbr_mask[i] |= 1 << j

    # initial mass per (infected mask, recovered mask)
    buckets = defaultdict(lambda: defaultdict(float))
    if init.policy == "uniform":
        for i in range(n):
            buckets[(n - 1, 1)][(1 << i, 0)] += 1.0 / n
    else:
        mask = 0
        for i in init.nodes:
            mask |= 1 << i
        k = bin(mask).count("1")
        buckets[(n - k, k)][(mask, 0)] = 1.0

    prob = np.zeros(n)
    # process states in decreasing (#susceptible, #infected) order:
    # infections decrease #S, recoveries decrease #I at equal #S
    for s_cnt in range(n, -1, -1):
        for i_cnt in range(n, -1, -1):
            states = buckets.pop((s_cnt, i_cnt), None)
            if not states:
                continue
            for (inf, rec), mass in states.items():
                if mass == 0.0:
                    continue
                if inf == 0:
                    for i in range(n):
                        if rec >> i & 1:
                            prob[i] += mass
                    continue
                sus = ~(inf | rec)
                rates = []
                total = 0.0
                for i in range(n):
                    if inf >> i & 1:
                        # recovery: same #S, one fewer infected
                        rates.append((inf & ~(1 << i), rec | (1 << i), gamma[i],
                                      (s_cnt, i_cnt - 1)))
                        total += gamma[i]
                    elif sus >> i & 1:
                        m = bin(nbr_mask[i] & inf).count("1")
                        if m > 0 and tau > 0:
                            # infection: one fewer susceptible
                            rates.append((inf | (1 << i), rec, tau * m,
                                          (s_cnt - 1, i_cnt + 1)))
                            total += tau * m
                for new_inf, new_rec, rate, key in rates:
                    buckets[key][(new_inf, new_rec)] += mass * rate / total
    return prob


def exact_infection_probability(g, params, init, i):
    return float(exact_infection_probabilities(g, params, init)[i])


def expected_infected_time(g, params, init, i, runs=None, seed=None, workers=1):
    """Expected time node i spends infected: P(ever infected) / gamma_i.

    Exact jump-chain mode when runs is None (small graphs only),
    Monte-Carlo estimate otherwise.
    """
    if runs is None:
        p = exact_infection_probability(g, params, init, i)
    else:
        stats = monte_carlo(g, params, init, runs, 0 if seed is None else seed, workers)
        p = stats.infection_probability[i]
    return p / params.gamma[i]


# --- outbreak statistics ----------------------------------------------------

def outbreak_histogram(stats):
    """(size, frequency) pairs for sizes that occurred; frequencies sum to 1."""
    counts = stats.size_histogram
    return [(size, counts[size] / stats.runs)
            for size in range(len(counts)) if counts[size] > 0]


def classify_pandemic(stats, n_nodes,
                      size_fraction=DEFAULT_PANDEMIC_SIZE_FRACTION,
                      freq_threshold=DEFAULT_PANDEMIC_FREQ_THRESHOLD):
    """(is_pandemic_prone, pandemic_frequency) at the given thresholds."""
    if not (0 < size_fraction < 1):
        raise ValueError("size_fraction must be in (0, 1)")
    if not (0 < freq_threshold < 1):
        raise ValueError("freq_threshold must be in (0, 1)")
    freq = stats.pandemic_frequency(size_fraction, n_nodes)
    return freq >= freq_threshold, freq


def epidemic_threshold(degree_moments, tau, gamma_scalar):
    """Supercriticality index (tau/(tau+gamma)) * E[K^2 - K] / E[K].

    Pandemic outbreaks are possible in the large-network limit iff the
    index exceeds 1.
    """
    mean_k, mean_k2 = degree_moments
    if mean_k <= 0:
        raise ValueError("E[K] must be > 0")
    if gamma_scalar <= 0:
        raise ValueError("gamma must be > 0")
    index = (tau / (tau + gamma_scalar)) * (mean_k2 - mean_k) / mean_k
    return index, index > 1.0


def write_histogram_csv(stats, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "count", "frequency"])
        counts = stats.size_histogram
        for size in range(len(counts)):
            if counts[size] > 0:
                writer.writerow([size, counts[size], f"{counts[size] / stats.runs:.10g}"])


def write_ensemble_json(stats, path):
    payload = {
        "seed": stats.seed,
        "runs": stats.runs,
        "infection_count": stats.infection_count.tolist(),
        "infection_probability": stats.infection_probability.tolist(),
        "mean_duration": stats.mean_duration.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
