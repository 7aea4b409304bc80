"""Simulation lab for systemic cyber risk on networks.

Graph generation, SIR contagion (exact and Monte Carlo), a security
investment game, regulatory budget allocation, topology interventions,
and risk-premium allocation, wired together by a config-driven CLI.
"""

__version__ = "0.1.0"

from .graphs import Graph, barabasi_albert, erdos_renyi, fixture  # noqa: F401
