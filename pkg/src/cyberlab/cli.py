"""Config-driven experiment runner.

Experiments are described by flat key-value config files with dotted
keys (``graph.n = 1000``). One verb per experiment family plus a
generic ``run`` that dispatches on ``experiment.kind``. Every run
writes a manifest JSON recording the config echo, seed, timings, and
output files; identical configs reproduce byte-identical result CSVs
regardless of worker count.

Exit codes: 0 success, 1 config error, 2 runtime error, 3 oracle-suite
check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__, allocate, epidemic, graphs, interventions, secgame
from .centrality import (betweenness_centrality, degree_centrality,
                         write_centrality_csv)

KINDS = ("game", "allocation", "phase_transition", "heterogeneity",
         "edge_removal", "node_splitting", "premiums", "oracle_suite")


class ConfigError(Exception):
    pass


# --- config parsing ----------------------------------------------------------

def _parse_value(text):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if "," in text:
        return [_parse_value(part) for part in text.split(",")]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def load_config(path):
    """Flat dotted-key config: one ``section.key = value`` per line,
    ``#`` comments, no code execution."""
    cfg = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        cfg[key] = _parse_value(value)
    return cfg


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"missing required config key {key!r}")
    return default


def build_graph(cfg, seed):
    kind = _get(cfg, "graph.kind", required=True)
    if kind == "er":
        return graphs.erdos_renyi(int(_get(cfg, "graph.n", required=True)),
                                  float(_get(cfg, "graph.p", required=True)),
                                  int(_get(cfg, "graph.seed", seed)))
    if kind == "ba":
        return graphs.barabasi_albert(int(_get(cfg, "graph.n", required=True)),
                                      int(_get(cfg, "graph.m", required=True)),
                                      int(_get(cfg, "graph.seed", seed)))
    if kind == "fixture":
        return graphs.fixture(_get(cfg, "graph.name", required=True))
    if kind == "edgelist":
        return graphs.read_edge_list(_get(cfg, "graph.path", required=True))
    raise ConfigError(f"unknown graph.kind {kind!r}")


def _sir_params(cfg, n):
    tau = float(_get(cfg, "epidemic.tau", epidemic.DEFAULT_TAU))
    gamma = _get(cfg, "epidemic.gamma", 1.0)
    if isinstance(gamma, list):
        return epidemic.SirParams(tau, np.array(gamma, dtype=float))
    return epidemic.SirParams.uniform(n, tau, float(gamma))


def _centrality_by_kind(g, kind, steady=None):
    if kind == "degree":
        return degree_centrality(g)
    if kind == "betweenness":
        return betweenness_centrality(g)
    if kind == "investment":
        if steady is None:
            raise ConfigError("investment centrality needs a played game")
        return secgame.investment_centrality(steady)
    raise ConfigError(f"unknown centrality kind {kind!r}")


# --- manifest ----------------------------------------------------------------

class Manifest:
    def __init__(self, cfg, seed, out_dir):
        self.payload = {
            "artifact_version": __version__,
            "config": dict(cfg),
            "seed": seed,
            "stages": {},
            "outputs": [],
        }
        self.out_dir = out_dir
        self._t0 = time.time()
        self._stage_start = None
        self._stage_name = None

    def stage(self, name):
        self._stage_name = name
        self._stage_start = time.time()

    def end_stage(self):
        if self._stage_name is not None:
            self.payload["stages"][self._stage_name] = round(
                time.time() - self._stage_start, 3)
            self._stage_name = None

    def output(self, path):
        self.payload["outputs"].append(os.path.basename(path))
        return path

    def path(self, name):
        return self.output(os.path.join(self.out_dir, name))

    def write(self):
        self.end_stage()
        self.payload["wall_clock_s"] = round(time.time() - self._t0, 3)
        target = os.path.join(self.out_dir, "manifest.json")
        tmp = target + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.payload, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, target)  # atomic publish
        return target


def _write_summary_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


# --- experiment kinds --------------------------------------------------------

def _game_config(cfg, g, seed, runs, workers):
    mode = _get(cfg, "game.mode",
                "exact" if g.n <= epidemic.EXACT_MAX_NODES else "mc")
    return secgame.GameConfig(
        k=float(_get(cfg, "game.k", secgame.DEFAULT_GROWTH_CONSTANT)),
        tau=float(_get(cfg, "epidemic.tau", epidemic.DEFAULT_TAU)),
        rounds=int(_get(cfg, "game.rounds", secgame.DEFAULT_ROUNDS)),
        runs=int(_get(cfg, "game.runs", runs if runs else 100_000)),
        tolerance=_get(cfg, "game.tolerance"),
        seed=seed, probability_mode=mode, workers=workers)


def _play_game(cfg, g, seed, runs, workers):
    gcfg = _game_config(cfg, g, seed, runs, workers)
    gamma0 = float(_get(cfg, "game.initial_gamma", 0.1))
    profile = secgame.SecurityProfile.uniform(g.n, gamma0)
    return secgame.run_game(g, profile, gcfg) + (gcfg,)


def run_game_experiment(cfg, manifest, seed, runs, workers):
    g = build_graph(cfg, seed)
    manifest.stage("game")
    final, history, converged, gcfg = _play_game(cfg, g, seed, runs, workers)
    manifest.stage("outputs")
    secgame.write_history_csv(history, manifest.path("game_history.csv"))
    secgame.write_game_summary_json(history, converged,
                                    manifest.path("game_summary.json"))
    write_centrality_csv(g, manifest.path("centrality.csv"),
                         investment=final.gamma)
    return 0


def run_allocation(cfg, manifest, seed, runs, workers):
    g = build_graph(cfg, seed)
    manifest.stage("game")
    final, history, converged, gcfg = _play_game(cfg, g, seed, runs, workers)
    manifest.stage("allocation")
    beta = float(_get(cfg, "allocation.beta", 5.0))
    fraction = float(_get(cfg, "allocation.fraction", 0.2))
    strategies = _get(cfg, "allocation.strategies",
                      list(allocate.STRATEGIES))
    if isinstance(strategies, str):
        strategies = [strategies]
    kinds = _get(cfg, "allocation.centralities",
                 ["degree", "betweenness", "investment"])
    if isinstance(kinds, str):
        kinds = [kinds]
    rows = []
    for strategy in strategies:
        for kind in (kinds if strategy != "untargeted" else [""]):
            c = None if strategy == "untargeted" else \
                _centrality_by_kind(g, kind, final)
            plan = allocate.make_plan(strategy, beta, g.n, c,
                                      fraction if strategy == "centralized_upper"
                                      else None)
            before, after, red = allocate.evaluate_allocation(g, final, plan, gcfg)
            rows.append({"strategy": strategy, "centrality": kind,
                         "fraction": fraction if strategy == "centralized_upper" else "",
                         "expenses_before": f"{before:.6f}",
                         "expenses_after": f"{after:.6f}",
                         "reduction_pct": f"{red:.4f}",
                         "runs": gcfg.runs, "seed": seed})
    allocate.write_allocation_csv(rows, manifest.path("allocation.csv"))
    return 0


def run_phase_transition(cfg, manifest, seed, runs, workers):
    n = int(_get(cfg, "graph.n", 1000))
    p_values = _get(cfg, "experiment.p_values",
                    [0.010, 0.011, 0.012, 0.013, 0.014])
    if not isinstance(p_values, list):
        p_values = [p_values]
    runs = runs or int(_get(cfg, "run.runs", 10_000))
    q = float(_get(cfg, "experiment.size_fraction",
                   epidemic.DEFAULT_PANDEMIC_SIZE_FRACTION))
    eps = float(_get(cfg, "experiment.freq_threshold",
                     epidemic.DEFAULT_PANDEMIC_FREQ_THRESHOLD))
    init = epidemic.InitialCondition.uniform_random_single()
    rows = []
    for idx, p in enumerate(p_values):
        manifest.stage(f"p={p}")
        g = graphs.erdos_renyi(n, float(p), seed + idx)
        params = _sir_params(cfg, n)
        stats = epidemic.monte_carlo(g, params, init, runs, seed + idx,
                                     workers=workers)
        prone, freq = epidemic.classify_pandemic(stats, n, q, eps)
        degs = np.array(g.degrees(), dtype=float)
        index, super_ = epidemic.epidemic_threshold(
            (degs.mean(), (degs ** 2).mean()), params.tau,
            float(np.mean(params.gamma)))
        epidemic.write_histogram_csv(
            stats, manifest.path(f"histogram_p{p}.csv"))
        rows.append([p, f"{freq:.6g}", prone, f"{index:.6f}", super_,
                     runs, seed + idx])
    _write_summary_csv(manifest.path("phase_transition.csv"),
                       ["p", "pandemic_frequency", "pandemic_prone",
                        "threshold_index", "supercritical", "runs", "seed"],
                       rows)
    return 0


def run_heterogeneity(cfg, manifest, seed, runs, workers):
    n = int(_get(cfg, "graph.n", 1000))
    runs = runs or int(_get(cfg, "run.runs", 10_000))
    m = int(_get(cfg, "graph.m", 5))
    p = float(_get(cfg, "graph.p", 0.01))
    init = epidemic.InitialCondition.uniform_random_single()
    q = float(_get(cfg, "experiment.size_fraction",
                   epidemic.DEFAULT_PANDEMIC_SIZE_FRACTION))
    eps = float(_get(cfg, "experiment.freq_threshold",
                     epidemic.DEFAULT_PANDEMIC_FREQ_THRESHOLD))
    rows = []
    for label, g in (("ba", graphs.barabasi_albert(n, m, seed)),
                     ("er", graphs.erdos_renyi(n, p, seed))):
        manifest.stage(label)
        params = _sir_params(cfg, g.n)
        stats = epidemic.monte_carlo(g, params, init, runs, seed,
                                     workers=workers)
        prone, freq = epidemic.classify_pandemic(stats, g.n, q, eps)
        epidemic.write_histogram_csv(
            stats, manifest.path(f"histogram_{label}.csv"))
        rows.append([label, g.num_edges, f"{freq:.6g}", prone, runs, seed])
    _write_summary_csv(manifest.path("heterogeneity.csv"),
                       ["graph", "edges", "pandemic_frequency",
                        "pandemic_prone", "runs", "seed"],
                       rows)
    return 0


def _intervention_common(cfg, manifest, seed, runs, workers, splitting):
    g = build_graph(cfg, seed)
    params = _sir_params(cfg, g.n)
    check_runs = runs or int(_get(cfg, "intervention.check_runs",
                                  interventions.DEFAULT_CHECK_RUNS))
    confirm_runs = int(_get(cfg, "intervention.confirm_runs",
                            interventions.DEFAULT_CONFIRM_RUNS))
    q = float(_get(cfg, "experiment.size_fraction",
                   epidemic.DEFAULT_PANDEMIC_SIZE_FRACTION))
    eps = float(_get(cfg, "experiment.freq_threshold",
                     epidemic.DEFAULT_PANDEMIC_FREQ_THRESHOLD))
    manifest.stage("intervention")
    if splitting:
        result = interventions.splitting_intervention(
            g, params, q, eps,
            centrality_kind=_get(cfg, "intervention.centrality", "degree"),
            modified=bool(_get(cfg, "intervention.modified", False)),
            check_runs=check_runs, confirm_runs=confirm_runs,
            seed=seed, workers=workers,
            max_splits=_get(cfg, "intervention.max_splits"))
    else:
        result = interventions.edge_removal_intervention(
            g, params, q, eps,
            batch=_get(cfg, "intervention.batch"),
            check_runs=check_runs, confirm_runs=confirm_runs,
            seed=seed, workers=workers)
    return g, params, result, check_runs


def _write_intervention_outputs(manifest, result, seed, check_runs, splitting):
    interventions.write_intervention_csv(
        result, manifest.path("intervention_log.csv"))
    summary = {
        "controlled": result.controlled,
        "seed": seed,
        "check_runs": check_runs,
        "pandemic_frequency_before": result.freq_before,
        "pandemic_frequency_after": result.freq_after,
        "avg_path_length_before": result.path_length_before,
        "avg_path_length_after": result.path_length_after,
    }
    if splitting:
        summary["splits"] = len(result.split_log)
    else:
        summary["edges_removed"] = len(result.removed_edges)
    with open(manifest.path("intervention_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def run_edge_removal(cfg, manifest, seed, runs, workers):
    _, _, result, check_runs = _intervention_common(
        cfg, manifest, seed, runs, workers, splitting=False)
    _write_intervention_outputs(manifest, result, seed, check_runs, False)
    return 0


def run_node_splitting(cfg, manifest, seed, runs, workers):
    _, _, result, check_runs = _intervention_common(
        cfg, manifest, seed, runs, workers, splitting=True)
    _write_intervention_outputs(manifest, result, seed, check_runs, True)
    return 0


def run_premiums(cfg, manifest, seed, runs, workers):
    g, params, result, check_runs = _intervention_common(
        cfg, manifest, seed, runs, workers, splitting=False)
    if not result.removed_edges:
        raise RuntimeError("no edges removed; premiums undefined")
    manifest.stage("premiums")
    coeffs = interventions.contact_coefficients_edges(g, result.removed_edges)
    risk = interventions.RiskSpec(_get(cfg, "risk.measure", "VaR"),
                                  float(_get(cfg, "risk.alpha", 0.99)))
    sample_runs = int(_get(cfg, "risk.runs", check_runs))
    lb, la = interventions.paired_loss_samples(g, result.graph, params, params,
                                               sample_runs, seed, workers)
    premiums = interventions.pandemic_loss_premiums(lb, la, risk, coeffs)
    pool = float(_get(cfg, "risk.surcharge_pool", 0.0))
    base = np.zeros(g.n)
    surcharges = interventions.surcharge(base, coeffs, pool)
    interventions.write_coefficients_csv(coeffs,
                                         manifest.path("coefficients.csv"),
                                         surcharges=surcharges,
                                         premiums=premiums)
    _write_intervention_outputs(manifest, result, seed, check_runs, False)
    return 0


def run_oracle_suite(cfg, manifest, seed, runs, workers):
    instances = int(_get(cfg, "oracle.instances", 20))
    mc_runs = runs or int(_get(cfg, "oracle.runs", 100_000))
    rng = np.random.default_rng(seed)
    rows = []
    failures = 0
    manifest.stage("oracle")
    init = epidemic.InitialCondition.uniform_random_single()
    for case in range(instances):
        n = int(rng.integers(2, 5))
        while True:
            p = float(rng.uniform(0.3, 1.0))
            g = graphs.erdos_renyi(n, p, int(rng.integers(2 ** 31)))
            if g.num_edges > 0:
                break
        tau = float(rng.uniform(0.05, 2.0))
        gamma = rng.uniform(0.2, 2.0, size=n)
        params = epidemic.SirParams(tau, gamma)
        exact = epidemic.exact_infection_probabilities(g, params, init)
        stats = epidemic.monte_carlo(g, params, init, mc_runs,
                                     seed + 1000 + case, workers=workers)
        est = stats.infection_probability
        bound = 4.0 * np.sqrt(exact * (1 - exact) / mc_runs)
        ok = bool(np.all(np.abs(est - exact) <= np.maximum(bound, 1e-12)))
        failures += not ok
        rows.append([case, n, g.num_edges, f"{tau:.4f}",
                     f"{float(np.max(np.abs(est - exact))):.6g}",
                     f"{float(np.max(bound)):.6g}", "pass" if ok else "fail",
                     mc_runs, seed + 1000 + case])
    _write_summary_csv(manifest.path("oracle_suite.csv"),
                       ["case", "n", "edges", "tau", "max_abs_error",
                        "allowed", "status", "runs", "seed"],
                       rows)
    return 3 if failures else 0


RUNNERS = {
    "game": run_game_experiment,
    "allocation": run_allocation,
    "phase_transition": run_phase_transition,
    "heterogeneity": run_heterogeneity,
    "edge_removal": run_edge_removal,
    "node_splitting": run_node_splitting,
    "premiums": run_premiums,
    "oracle_suite": run_oracle_suite,
}


def run(config_path, kind=None, seed=None, runs=None, workers=None,
        out_dir=None):
    """Execute one experiment; returns the process exit code."""
    cfg = load_config(config_path)
    kind = kind or _get(cfg, "experiment.kind", required=True)
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    if seed is None:
        seed = _get(cfg, "run.seed", required=True)
    seed = int(seed)
    runs = int(runs) if runs is not None else None
    workers = int(workers if workers is not None else _get(cfg, "run.threads", 1))
    out_dir = out_dir or _get(cfg, "run.out", ".")
    os.makedirs(out_dir, exist_ok=True)
    manifest = Manifest(cfg, seed, out_dir)
    status = RUNNERS[kind](cfg, manifest, seed, runs, workers)
    manifest.write()
    return status


def run_generate(args):
    cfg = load_config(args.config)
    seed = int(args.seed if args.seed is not None else
               _get(cfg, "run.seed", required=True))
    out_dir = args.out or _get(cfg, "run.out", ".")
    os.makedirs(out_dir, exist_ok=True)
    g = build_graph(cfg, seed)
    manifest = Manifest(cfg, seed, out_dir)
    manifest.stage("generate")
    graphs.write_edge_list(g, manifest.path("graph.edgelist"))
    graphs.write_degree_csv(g, manifest.path("degrees.csv"))
    manifest.write()
    return 0


def run_simulate(args):
    cfg = load_config(args.config)
    seed = int(args.seed if args.seed is not None else
               _get(cfg, "run.seed", required=True))
    runs = int(args.runs if args.runs is not None else
               _get(cfg, "run.runs", 10_000))
    workers = int(args.threads if args.threads is not None else
                  _get(cfg, "run.threads", 1))
    out_dir = args.out or _get(cfg, "run.out", ".")
    os.makedirs(out_dir, exist_ok=True)
    g = build_graph(cfg, seed)
    params = _sir_params(cfg, g.n)
    init = epidemic.InitialCondition.uniform_random_single()
    manifest = Manifest(cfg, seed, out_dir)
    manifest.stage("simulate")
    stats = epidemic.monte_carlo(g, params, init, runs, seed, workers=workers)
    epidemic.write_histogram_csv(stats, manifest.path("histogram.csv"))
    epidemic.write_ensemble_json(stats, manifest.path("ensemble.json"))
    manifest.write()
    return 0


def run_report(args):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    out_dir = os.path.dirname(os.path.abspath(args.manifest))
    print(f"experiment: {manifest['config'].get('experiment.kind', '?')}")
    print(f"seed: {manifest['seed']}  wall clock: {manifest.get('wall_clock_s')} s")
    for name in manifest["outputs"]:
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            print(f"  MISSING {name}", file=sys.stderr)
            return 2
        print(f"  output: {name}")
        if name.endswith(".csv") and "histogram" not in name:
            with open(path) as fh:
                for line in fh.read().splitlines()[:12]:
                    print(f"    {line}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cyberlab",
        description="systemic cyber-risk simulation experiments")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("config", help="experiment config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--runs", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)

    for verb, kind in (("run", None), ("game", "game"),
                       ("allocate", "allocation"),
                       ("intervene", None), ("premiums", "premiums")):
        p = sub.add_parser(verb)
        add_common(p)
        if verb == "run":
            p.add_argument("--kind", choices=KINDS, default=None)
        if verb == "intervene":
            p.add_argument("--mechanism", choices=["edges", "splits"],
                           default="edges")
        p.set_defaults(kind=kind)

    add_common(sub.add_parser("generate"))
    add_common(sub.add_parser("simulate"))
    p_report = sub.add_parser("report")
    p_report.add_argument("manifest", help="manifest.json of a finished run")

    args = parser.parse_args(argv)
    try:
        if args.verb == "generate":
            return run_generate(args)
        if args.verb == "simulate":
            return run_simulate(args)
        if args.verb == "report":
            return run_report(args)
        kind = args.kind
        if args.verb == "intervene":
            kind = "edge_removal" if args.mechanism == "edges" else "node_splitting"
        return run(args.config, kind=kind, seed=args.seed, runs=args.runs,
                   workers=args.threads, out_dir=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
