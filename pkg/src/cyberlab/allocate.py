"""Regulatory budget allocation over a steady security configuration.

A regulator injects an extra budget beta of security on top of the
steady-state levels — uniformly, proportionally to centrality, inversely
proportionally, or restricted to the most central fraction of nodes —
and the effect is measured as the percent reduction of accumulated
total expenses, without letting agents re-optimize.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import secgame
from .centrality import CentralityVector, allocation_weights, inverse_weights

STRATEGIES = ("untargeted", "upper", "lower", "centralized_upper")


def untargeted(beta, n):
    """Spread beta uniformly: beta/n to every node."""
    if beta <= 0:
        raise ValueError("budget must be > 0")
    if n < 1:
        raise ValueError("need at least one node")
    return np.full(n, beta / n)


def upper(beta, c):
    """beta split proportionally to centrality."""
    if beta <= 0:
        raise ValueError("budget must be > 0")
    return beta * allocation_weights(c)


def lower(beta, c):
    """More budget to less central nodes: proportional to inverse weights.

    Zero-centrality nodes receive nothing (their inverse weight is
    defined as 0, not infinity).
    """
    if beta <= 0:
        raise ValueError("budget must be > 0")
    w = allocation_weights(c)
    w_inv = inverse_weights(w)
    return beta * w_inv / w_inv.sum()


def centralized_upper(beta, c, fraction):
    """Proportional allocation restricted to the ceil(p*n) most central
    nodes (ties broken by ascending node id); fraction 1 equals upper."""
    if beta <= 0:
        raise ValueError("budget must be > 0")
    if not (0 < fraction <= 1):
        raise ValueError("fraction must be in (0, 1]")
    values = np.asarray(c.values if isinstance(c, CentralityVector) else c, dtype=float)
    n = len(values)
    m = math.ceil(fraction * n)
    order = sorted(range(n), key=lambda i: (-values[i], i))
    chosen = order[:m]
    denom = values[chosen].sum()
    if denom <= 0:
        raise ValueError("selected nodes have zero total centrality")
    out = np.zeros(n)
    out[chosen] = beta * values[chosen] / denom
    return out


@dataclass(frozen=True)
class AllocationPlan:
    """A strategy together with its realized per-node additions."""

    strategy: str
    beta: float
    additions: np.ndarray
    centrality_kind: str = None
    fraction: float = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        additions = np.asarray(self.additions, dtype=float)
        if np.any(additions < 0):
            raise ValueError("additions must be >= 0")
        if not math.isclose(additions.sum(), self.beta, rel_tol=1e-9):
            raise ValueError("additions do not sum to the budget")
        object.__setattr__(self, "additions", additions)


def make_plan(strategy, beta, n, c=None, fraction=None):
    """Build an AllocationPlan for any strategy name."""
    if strategy == "untargeted":
        adds = untargeted(beta, n)
    elif strategy == "upper":
        adds = upper(beta, c)
    elif strategy == "lower":
        adds = lower(beta, c)
    elif strategy == "centralized_upper":
        adds = centralized_upper(beta, c, fraction)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    kind = c.kind if isinstance(c, CentralityVector) else None
    return AllocationPlan(strategy, beta, adds, kind, fraction)


def evaluate_allocation(g, steady_profile, plan, config):
    """(expenses before, expenses after, percent reduction).

    The allocation is added on top of the steady levels and expenses are
    re-estimated at the boosted profile; agents do not re-optimize.
    Both estimates use the same seed schedule, so small differences are
    measured under common random numbers.
    """
    if len(plan.additions) != g.n:
        raise ValueError("plan size does not match graph")
    boosted = secgame.SecurityProfile(steady_profile.gamma + plan.additions)
    before = secgame.accumulated_expenses(g, steady_profile, config).total
    after = secgame.accumulated_expenses(g, boosted, config).total
    reduction_pct = 100.0 * (1.0 - after / before)
    return before, after, reduction_pct


def write_allocation_csv(rows, path):
    """Table-style CSV; rows are dicts from evaluate_allocation sweeps."""
    header = ["strategy", "centrality", "fraction", "expenses_before",
              "expenses_after", "reduction_pct", "runs", "seed"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row.get(k, "") for k in header])
