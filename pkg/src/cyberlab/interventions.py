"""Topology interventions and the risk-allocation arithmetic built on them.

Two pandemic-control mechanics: iterative removal of the highest
edge-betweenness links (recomputed after every batch, Girvan-Newman
style) and splitting of the most central nodes. Removed edges or split
nodes then define contact coefficients used to allocate surcharges and
pandemic-risk premiums back to the nodes that caused the exposure.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import epidemic
from .centrality import (CentralityVector, betweenness_centrality,
                         degree_centrality, edge_betweenness)
from .graphs import Graph, avg_shortest_path

DEFAULT_CHECK_RUNS = 10_000
DEFAULT_CONFIRM_RUNS = 100_000
_STEP_SEED_STRIDE = 0x9E3779B9


@dataclass(frozen=True)
class InterventionResult:
    """Outcome of a control loop (edge removal or node splitting)."""

    graph: Graph
    removed_edges: tuple = ()
    split_log: tuple = ()  # (step, node split, new node id, degenerate flag)
    controlled: bool = False
    freq_before: float = float("nan")
    freq_after: float = float("nan")
    path_length_before: float = float("nan")
    path_length_after: float = float("nan")
    log: tuple = ()  # (step, action, target, pandemic_frequency, avg_path_length)

    @property
    def steps(self):
        return max(len(self.removed_edges), len(self.split_log))


@dataclass(frozen=True)
class ContactCoefficients:
    """Per-node shares of responsibility for removed contagion channels."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if np.any(values < 0):
            raise ValueError("contact coefficients must be >= 0")
        if values.sum() > 0 and not math.isclose(values.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("nonzero contact coefficients must sum to 1")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class RiskSpec:
    """Which tail-risk measure prices the pandemic loss, and at what level."""

    measure: str = "VaR"
    alpha: float = 0.99

    def __post_init__(self):
        if self.measure not in ("VaR", "ES"):
            raise ValueError(f"unknown risk measure {self.measure!r}")
        if not (0 < self.alpha < 1):
            raise ValueError("alpha must be strictly inside (0, 1)")


def _step_seed(seed, step):
    return (int(seed) + _STEP_SEED_STRIDE * (step + 1)) % 2 ** 63


def _pandemic_check(g, params, runs, seed, size_fraction, freq_threshold, workers):
    init = epidemic.InitialCondition.uniform_random_single()
    stats = epidemic.monte_carlo(g, params, init, runs, seed, workers=workers)
    return epidemic.classify_pandemic(stats, g.n, size_fraction, freq_threshold)


def _safe_avg_path(g):
    try:
        return avg_shortest_path(g)
    except ValueError:
        return float("nan")


def edge_removal_intervention(g, params,
                              size_fraction=epidemic.DEFAULT_PANDEMIC_SIZE_FRACTION,
                              freq_threshold=epidemic.DEFAULT_PANDEMIC_FREQ_THRESHOLD,
                              batch=None,
                              check_runs=DEFAULT_CHECK_RUNS,
                              confirm_runs=DEFAULT_CONFIRM_RUNS,
                              seed=0, workers=1):
    """Delete the most central edges, batch by batch, until outbreaks of
    relative size >= size_fraction occur with frequency < freq_threshold.

    Edge betweenness is recomputed on the pruned graph before every
    batch (default batch: 1% of the original edge count, ties broken
    lexicographically). Each batch is followed by a check_runs ensemble;
    an apparent success is confirmed with a confirm_runs ensemble under
    a different seed before the loop stops.
    """
    if batch is None:
        batch = max(1, round(0.01 * g.num_edges))
    if batch < 1:
        raise ValueError("batch size must be >= 1")
    prone, freq0 = _pandemic_check(g, params, check_runs, seed,
                                   size_fraction, freq_threshold, workers)
    l_before = _safe_avg_path(g)
    if not prone:
        return InterventionResult(graph=g, controlled=True,
                                  freq_before=freq0, freq_after=freq0,
                                  path_length_before=l_before,
                                  path_length_after=l_before)
    current = g
    removed = []
    log = []
    step = 0
    controlled = False
    freq = freq0
    while current.num_edges > 0:
        step += 1
        eb = edge_betweenness(current)
        ranked = sorted(eb, key=lambda e: (-eb[e], e))
        batch_edges = ranked[:batch]
        current = current.without_edges(batch_edges)
        removed.extend(batch_edges)
        prone, freq = _pandemic_check(current, params, check_runs,
                                      _step_seed(seed, step),
                                      size_fraction, freq_threshold, workers)
        log.append((step, "edges", len(batch_edges), freq, float("nan")))
        if not prone:
            # confirm on a fresh, larger ensemble to avoid lucky stops
            prone, freq = _pandemic_check(current, params, confirm_runs,
                                          _step_seed(seed ^ 0x5F5E100, step),
                                          size_fraction, freq_threshold, workers)
            if not prone:
                controlled = True
                break
    return InterventionResult(graph=current, removed_edges=tuple(removed),
                              controlled=controlled,
                              freq_before=freq0, freq_after=freq,
                              path_length_before=l_before,
                              path_length_after=_safe_avg_path(current),
                              log=tuple(log))


def random_edge_removal(g, fraction, seed):
    """Remove a uniformly random subset of round(fraction * |E|) edges."""
    if not (0 <= fraction <= 1):
        raise ValueError("fraction must be in [0, 1]")
    edges = g.sorted_edges()
    k = round(fraction * len(edges))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(edges), size=k, replace=False)
    return g.without_edges([edges[i] for i in chosen])


def _split_edges(g, i, movers):
    """Rewire i's edges to the listed neighbors onto a fresh node."""
    new_id = g.n
    edges = set(g.edges)
    for j in movers:
        edges.discard((i, j) if i < j else (j, i))
        edges.add((j, new_id) if j < new_id else (new_id, j))
    return Graph(g.n + 1, edges)


def split_node(g, i, centrality_kind="degree", centrality=None):
    """Split node i: its neighbors, ranked by descending centrality
    (ties by ascending id), alternate between i (odd ranks) and a new
    node (even ranks). No edge is created between the two halves.

    A precomputed CentralityVector can be passed to avoid recomputation.
    """
    nbrs = sorted(g.neighbors(i))
    if not nbrs:
        raise ValueError(f"cannot split isolated node {i}")
    if centrality is None:
        centrality = _node_centrality(g, centrality_kind)
    vals = centrality.values
    ranked = sorted(nbrs, key=lambda j: (-vals[j], j))
    movers = ranked[1::2]  # even ranks counting from 1
    return _split_edges(g, i, movers)


def split_node_modified(g, i):
    """Variant keeping the ceil(k/2) highest-degree neighbors attached to
    i and moving the low-degree half to the new node."""
    nbrs = sorted(g.neighbors(i))
    if not nbrs:
        raise ValueError(f"cannot split isolated node {i}")
    deg = g.degrees()
    ranked = sorted(nbrs, key=lambda j: (-deg[j], j))
    keep = math.ceil(len(nbrs) / 2)
    movers = ranked[keep:]
    return _split_edges(g, i, movers)


def _node_centrality(g, kind):
    if kind == "degree":
        return degree_centrality(g)
    if kind == "betweenness":
        return betweenness_centrality(g)
    raise ValueError(f"unsupported centrality kind for splitting: {kind!r}")


def splitting_intervention(g, params,
                           size_fraction=epidemic.DEFAULT_PANDEMIC_SIZE_FRACTION,
                           freq_threshold=epidemic.DEFAULT_PANDEMIC_FREQ_THRESHOLD,
                           centrality_kind="degree", modified=False,
                           check_runs=DEFAULT_CHECK_RUNS,
                           confirm_runs=DEFAULT_CONFIRM_RUNS,
                           seed=0, workers=1, max_splits=None):
    """Repeatedly split the currently most central node until pandemic
    control is reached (two-tier check as in edge removal) or max_splits
    is exhausted. Split products remain splittable in later rounds.

    The new node inherits the split node's recovery rate.
    """
    if max_splits is None:
        max_splits = g.n
    gamma = np.asarray(params.gamma, dtype=float).copy()
    prone, freq0 = _pandemic_check(g, params, check_runs, seed,
                                   size_fraction, freq_threshold, workers)
    l_before = _safe_avg_path(g)
    if not prone:
        return InterventionResult(graph=g, controlled=True,
                                  freq_before=freq0, freq_after=freq0,
                                  path_length_before=l_before,
                                  path_length_after=l_before)
    current = g
    split_log = []
    log = []
    controlled = False
    freq = freq0
    for step in range(1, max_splits + 1):
        cvec = _node_centrality(current, centrality_kind)
        target = cvec.ranking()[0]
        degenerate = current.degree(target) <= 1
        if modified:
            current = split_node_modified(current, target)
        else:
            current = split_node(current, target, centrality=cvec)
        split_log.append((step, target, current.n - 1, degenerate))
        gamma = np.append(gamma, gamma[target])
        cur_params = epidemic.SirParams(params.tau, gamma)
        prone, freq = _pandemic_check(current, cur_params, check_runs,
                                      _step_seed(seed, step),
                                      size_fraction, freq_threshold, workers)
        log.append((step, "split", target, freq, float("nan")))
        if not prone:
            prone, freq = _pandemic_check(current, cur_params, confirm_runs,
                                          _step_seed(seed ^ 0x5F5E100, step),
                                          size_fraction, freq_threshold, workers)
            if not prone:
                controlled = True
                break
    return InterventionResult(graph=current, split_log=tuple(split_log),
                              controlled=controlled,
                              freq_before=freq0, freq_after=freq,
                              path_length_before=l_before,
                              path_length_after=_safe_avg_path(current),
                              log=tuple(log))


# --- risk allocation ---------------------------------------------------------

def contact_coefficients_edges(g, removed_edges):
    """c_i = (removed edges at i) / (2 |removed|); sums to 1."""
    removed = list(removed_edges)
    if not removed:
        raise ValueError("no removed edges: contact coefficients undefined")
    eps = np.zeros(g.n)
    for u, v in removed:
        eps[u] += 1
        eps[v] += 1
    return ContactCoefficients(eps / (2 * len(removed)))


def contact_coefficients_splits(split_nodes, centrality):
    """Centrality shares over the set of split nodes, 0 elsewhere."""
    values = np.asarray(centrality.values if isinstance(centrality, CentralityVector)
                        else centrality, dtype=float)
    idx = sorted(set(int(i) for i in split_nodes))
    if not idx:
        raise ValueError("no split nodes: contact coefficients undefined")
    denom = values[idx].sum()
    if denom <= 0:
        raise ValueError("split nodes carry zero total centrality")
    out = np.zeros(len(values))
    out[idx] = values[idx] / denom
    return ContactCoefficients(out)


def surcharge(base_premiums, coefficients, pool):
    """Adjusted premiums pi + c_i * f; the pool f is conserved exactly."""
    if pool < 0:
        raise ValueError("surcharge pool must be >= 0")
    base = np.asarray(base_premiums, dtype=float)
    c = coefficients.values if isinstance(coefficients, ContactCoefficients) \
        else np.asarray(coefficients, dtype=float)
    if len(base) != len(c):
        raise ValueError("premium and coefficient lengths differ")
    return base + c * pool


def paired_loss_samples(g_before, g_after, params_before, params_after,
                        runs, seed, workers=1):
    """Final outbreak sizes on the two graphs under a shared seed stream
    (common random numbers), as (L, L_c) sample arrays."""
    init = epidemic.InitialCondition.uniform_random_single()
    s1 = epidemic.monte_carlo(g_before, params_before, init, runs, seed, workers)
    s2 = epidemic.monte_carlo(g_after, params_after, init, runs, seed, workers)
    return s1.final_sizes.astype(float), s2.final_sizes.astype(float)


def tail_risk(samples, risk):
    """Empirical VaR (higher-point quantile) or expected shortfall."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    var = float(np.quantile(x, risk.alpha, method="higher"))
    if risk.measure == "VaR":
        return var
    return float(x[x >= var].mean())


def pandemic_loss_premiums(losses_before, losses_after, risk, coefficients):
    """Premiums pricing the avoided pandemic loss L_e = max(L - L_c, 0).

    Samples must be paired (common random numbers). Each node pays its
    contact-coefficient share of rho(L_e), so premiums sum to rho(L_e).
    """
    lb = np.asarray(losses_before, dtype=float)
    la = np.asarray(losses_after, dtype=float)
    if lb.shape != la.shape:
        raise ValueError("paired loss samples must have equal counts")
    excess = np.maximum(lb - la, 0.0)
    rho = tail_risk(excess, risk)
    c = coefficients.values if isinstance(coefficients, ContactCoefficients) \
        else np.asarray(coefficients, dtype=float)
    return c * rho


def write_intervention_csv(result, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "action", "target", "pandemic_frequency",
                         "avg_path_length"])
        for step, action, target, freq, pl in result.log:
            writer.writerow([step, action, target, f"{freq:.10g}",
                             "" if math.isnan(pl) else f"{pl:.6f}"])


def write_coefficients_csv(coefficients, path, surcharges=None, premiums=None):
    c = coefficients.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["node", "contact_coefficient"]
        if surcharges is not None:
            header.append("surcharge")
        if premiums is not None:
            header.append("premium")
        writer.writerow(header)
        for i in range(len(c)):
            row = [i, f"{c[i]:.10g}"]
            if surcharges is not None:
                row.append(f"{surcharges[i]:.10g}")
            if premiums is not None:
                row.append(f"{premiums[i]:.10g}")
            writer.writerow(row)
