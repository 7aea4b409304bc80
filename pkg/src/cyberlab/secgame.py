"""Security investment game: cost/loss model, best responses, steady states.

Each node picks a recovery rate (security level) trading off an
exponential investment cost against expected time spent infected. One
round of the game estimates every node's infection probability from a
single shared ensemble and applies all best responses simultaneously.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from . import epidemic
from .centrality import CentralityVector

DEFAULT_GROWTH_CONSTANT = 1.0 / 3.0
DEFAULT_ROUNDS = 50


def cost(gamma_i, k=DEFAULT_GROWTH_CONSTANT):
    """Security cost exp(k*gamma) - 1; zero at zero investment."""
    if gamma_i < 0:
        raise ValueError("gamma must be >= 0")
    if k <= 0:
        raise ValueError("growth constant k must be > 0")
    return math.exp(k * gamma_i) - 1.0


def loss(p_infect, gamma_i):
    """Expected infected time p / gamma."""
    if not (0.0 <= p_infect <= 1.0):
        raise ValueError("p_infect must be a probability")
    if gamma_i <= 0:
        raise ValueError("gamma must be > 0 for a finite loss")
    return p_infect / gamma_i


def security_bracket(k, n):
    """[eps(n), 1/sqrt(k)] interval that contains every best response.

    eps(n) solves k*exp(k*eps)*eps^2 = 1/(2n), placing the lower end
    strictly below the response to the smallest possible exposure 1/n.
    """
    hi = 1.0 / math.sqrt(k)
    target = 1.0 / (2.0 * n)
    eps = brentq(lambda x: k * math.exp(k * x) * x * x - target, 0.0, hi,
                 xtol=1e-15, rtol=8.9e-16)
    return eps, hi


def best_response(p_infect, k=DEFAULT_GROWTH_CONSTANT, n=None):
    """Individually optimal security level for infection probability p.

    Unique root of the first-order condition k*exp(k*g)*g^2 = p, located
    by bracketed root-finding on the containment interval.
    """
    if k <= 0:
        raise ValueError("growth constant k must be > 0")
    if p_infect <= 0 or p_infect > 1:
        raise ValueError("p_infect must be in (0, 1]: zero exposure has no interior optimum")
    if n is None:
        n = max(1, math.ceil(1.0 / p_infect))
    lo, hi = security_bracket(k, n)

    def foc(g):
        return k * math.exp(k * g) * g * g - p_infect

    # guard against p below the uniform-initial floor 1/n
    while foc(lo) >= 0:
        lo /= 2.0
    return brentq(foc, lo, hi, xtol=1e-12, rtol=8.9e-16)


def two_node_oracle(tau, gamma_1, gamma_2):
    """Closed-form losses and infection probabilities for the 2-node line
    with a uniformly chosen single initial infection."""
    if gamma_1 <= 0 or gamma_2 <= 0 or tau < 0:
        raise ValueError("rates must be positive (tau >= 0)")
    p1 = 0.5 * (1.0 + tau / (gamma_2 + tau))
    p2 = 0.5 * (1.0 + tau / (gamma_1 + tau))
    return p1 / gamma_1, p2 / gamma_2, p1, p2


@dataclass(frozen=True)
class SecurityProfile:
    """Per-node security levels (recovery rates)."""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if np.any(gamma <= 0):
            raise ValueError("security levels must be > 0")
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def uniform(cls, n, level):
        return cls(np.full(n, float(level)))

    def __len__(self):
        return len(self.gamma)


@dataclass(frozen=True)
class ExpenseReport:
    """Cost, loss, and total expense per node at a given profile."""

    cost: np.ndarray
    loss: np.ndarray
    p_infect: np.ndarray

    @property
    def per_node(self):
        return self.cost + self.loss

    @property
    def total(self):
        return float(self.per_node.sum())


@dataclass(frozen=True)
class GameConfig:
    """Knobs for the investment game.

    probability_mode "exact" uses the jump-chain oracle (small graphs);
    "mc" estimates all infection probabilities from one shared ensemble
    of `runs` trajectories per round.
    """

    k: float = DEFAULT_GROWTH_CONSTANT
    tau: float = epidemic.DEFAULT_TAU
    rounds: int = DEFAULT_ROUNDS
    runs: int = 100_000
    tolerance: float = None
    seed: int = 0
    probability_mode: str = "mc"
    sequential: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.k <= 0 or self.rounds < 1 or self.runs < 1:
            raise ValueError("need k > 0, rounds >= 1, runs >= 1")
        if self.probability_mode not in ("exact", "mc"):
            raise ValueError(f"unknown probability mode {self.probability_mode!r}")
        if self.tolerance is None:
            # MC noise in the probabilities propagates into gamma, so the
            # stopping tolerance must sit above the noise floor
            tol = 1e-4 if self.probability_mode == "exact" else 1e-3
            object.__setattr__(self, "tolerance", tol)


def infection_probabilities(g, profile, config, round_index=0):
    """All P(ever infected) at the current profile, uniform single seed."""
    params = epidemic.SirParams(config.tau, profile.gamma)
    init = epidemic.InitialCondition.uniform_random_single()
    if config.probability_mode == "exact":
        return epidemic.exact_infection_probabilities(g, params, init)
    # distinct but deterministic seed offset per round
    seed = (int(config.seed) + 0x51ED2700 * (round_index + 1)) % 2 ** 63
    stats = epidemic.monte_carlo(g, params, init, config.runs, seed,
                                 workers=config.workers)
    return stats.infection_probability


def expense_report(g, profile, config, p_infect=None):
    """Expenses at a profile; estimates probabilities unless provided."""
    if p_infect is None:
        p_infect = infection_probabilities(g, profile, config)
    costs = np.exp(config.k * profile.gamma) - 1.0
    losses = p_infect / profile.gamma
    return ExpenseReport(cost=costs, loss=losses, p_infect=np.asarray(p_infect, float))


def accumulated_expenses(g, profile, config, p_infect=None):
    """ExpenseReport at the profile; .total gives the network sum."""
    return expense_report(g, profile, config, p_infect)


def play_round(g, profile, config, round_index=0):
    """One game round: joint probability estimation, then simultaneous
    best responses for all nodes."""
    p = infection_probabilities(g, profile, config, round_index)
    p = np.maximum(p, 1.0 / (2 * g.n))  # MC floor; exact p >= 1/n already
    new_gamma = np.array([best_response(pi, config.k, g.n) for pi in p])
    return SecurityProfile(new_gamma), p


def _play_round_sequential(g, profile, config, round_index):
    # Gauss-Seidel variant: each node responds to the already-updated
    # levels of lower-indexed nodes (experimentation flag, not the default)
    gamma = profile.gamma.copy()
    p_last = None
    for i in range(g.n):
        p = infection_probabilities(g, SecurityProfile(gamma), config, round_index)
        p = np.maximum(p, 1.0 / (2 * g.n))
        gamma[i] = best_response(p[i], config.k, g.n)
        p_last = p
    return SecurityProfile(gamma), p_last


def run_game(g, initial_profile, config):
    """Iterate rounds until the sup-norm step drops below tolerance or the
    round budget is exhausted.

    Returns (final profile, history, converged) where history has one
    entry per completed round: (round, profile, ExpenseReport).
    """
    if len(initial_profile) != g.n:
        raise ValueError("profile length does not match graph")
    profile = initial_profile
    history = []
    converged = False
    for r in range(config.rounds):
        if config.sequential:
            new_profile, p = _play_round_sequential(g, profile, config, r)
        else:
            new_profile, p = play_round(g, profile, config, r)
        report = expense_report(g, new_profile, config, p)
        history.append((r + 1, new_profile, report))
        step = float(np.max(np.abs(new_profile.gamma - profile.gamma)))
        profile = new_profile
        if step < config.tolerance:
            converged = True
            break
    return profile, history, converged


def investment_centrality(profile):
    """Steady-state security levels read as a centrality measure."""
    return CentralityVector(profile.gamma.copy(), "investment")


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "node", "gamma", "p_hat", "cost", "loss", "expense"])
        for rnd, profile, report in history:
            for i in range(len(profile)):
                writer.writerow([rnd, i,
                                 f"{profile.gamma[i]:.10g}",
                                 f"{report.p_infect[i]:.10g}",
                                 f"{report.cost[i]:.10g}",
                                 f"{report.loss[i]:.10g}",
                                 f"{report.per_node[i]:.10g}"])


def write_game_summary_json(history, converged, path):
    payload = {
        "rounds": len(history),
        "converged": bool(converged),
        "total_expenses_per_round": [report.total for _, _, report in history],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
