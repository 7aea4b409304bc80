import numpy as np
import pytest

from cyberlab import epidemic
from cyberlab.epidemic import (EnsembleStats, InitialCondition, SirParams,
                               classify_pandemic, epidemic_threshold,
                               exact_generator, exact_infection_probabilities,
                               exact_infection_probability,
                               expected_infected_time, gillespie_run,
                               monte_carlo, outbreak_histogram, state_index,
                               write_ensemble_json, write_histogram_csv)
from cyberlab.graphs import Graph, erdos_renyi, fixture

from conftest import (ctmc_infection_probabilities,
                      percolation_infection_probabilities)

LINE2 = fixture("line2")
UNIFORM = InitialCondition.uniform_random_single()


class TestParams:
    def test_rejects_negative_tau(self):
        with pytest.raises(ValueError):
            SirParams(-0.1, np.ones(2))

    def test_rejects_zero_gamma(self):
        with pytest.raises(ValueError):
            SirParams(0.1, np.array([1.0, 0.0]))

    def test_length_check(self):
        with pytest.raises(ValueError):
            SirParams.uniform(3).check(LINE2)

    def test_initial_condition_validation(self):
        with pytest.raises(ValueError):
            InitialCondition("everywhere")
        with pytest.raises(ValueError):
            InitialCondition.fixed_node(5).check(LINE2)
        assert InitialCondition.fixed_node(1).nodes == (1,)


class TestGillespie:
    def test_isolated_node_duration(self):
        g = Graph(1, [])
        params = SirParams.uniform(1, gamma=1.0)
        init = InitialCondition.fixed_node(0)
        stats = monte_carlo(g, params, init, 100_000, 42)
        assert np.all(stats.final_sizes == 1)
        assert stats.mean_duration[0] == pytest.approx(1.0, abs=0.02)

    def test_tau_zero_no_transmission(self):
        params = SirParams(0.0, np.ones(8))
        stats = monte_carlo(fixture("complete8"), params,
                            InitialCondition.fixed_set([0, 3]), 2000, 1)
        assert np.all(stats.final_sizes == 2)

    def test_two_node_transmission_probability(self):
        # tau/(gamma+tau) = 0.5 at tau=gamma=0.1
        params = SirParams(0.1, np.array([0.1, 0.1]))
        stats = monte_carlo(LINE2, params, InitialCondition.fixed_node(1),
                            1_000_000, 7)
        assert stats.infection_probability[0] == pytest.approx(0.5, abs=0.002)

    def test_single_run_sample(self):
        params = SirParams.uniform(8, tau=0.5)
        sample = gillespie_run(fixture("tree8"), params, UNIFORM, seed=3)
        assert sample.final_size == int(sample.ever_infected.sum())
        assert np.all((sample.infected_duration > 0) == sample.ever_infected)

    def test_conservation_in_stats(self):
        params = SirParams.uniform(8, tau=0.3)
        stats = monte_carlo(fixture("tree8"), params, UNIFORM, 5000, 11)
        assert stats.size_histogram.sum() == stats.runs
        assert np.all(stats.infection_count <= stats.runs)
        assert np.all(stats.final_sizes >= 1)


class TestDeterminism:
    def test_worker_invariance(self):
        params = SirParams.uniform(8, tau=0.4)
        runs = [monte_carlo(fixture("tree8"), params, UNIFORM, 20_000, 99,
                            workers=w) for w in (1, 3, 7)]
        for other in runs[1:]:
            assert np.array_equal(runs[0].infection_count, other.infection_count)
            assert np.array_equal(runs[0].final_sizes, other.final_sizes)
            assert np.allclose(runs[0].mean_duration, other.mean_duration)

    def test_seed_sensitivity(self):
        params = SirParams.uniform(8, tau=0.4)
        a = monte_carlo(fixture("tree8"), params, UNIFORM, 5000, 1)
        b = monte_carlo(fixture("tree8"), params, UNIFORM, 5000, 2)
        assert not np.array_equal(a.final_sizes, b.final_sizes)


class TestExactGenerator:
    def test_single_node(self):
        g = Graph(1, [])
        q = exact_generator(g, SirParams(0.1, np.array([2.0]))).toarray()
        s, i, r = state_index([0]), state_index([1]), state_index([2])
        assert q[i, r] == 2.0 and q[i, i] == -2.0
        assert np.all(q[s] == 0) and np.all(q[r] == 0)

    def test_two_node_line_rates(self):
        tau, g2 = 0.1, np.array([1.0, 2.0])
        q = exact_generator(LINE2, SirParams(tau, g2)).toarray()
        si = state_index([0, 1])  # node 0 S, node 1 I
        assert q[si, state_index([1, 1])] == pytest.approx(tau)
        assert q[si, state_index([0, 2])] == pytest.approx(2.0)
        assert q[si, si] == pytest.approx(-(tau + 2.0))

    def test_rows_sum_to_zero(self):
        q = exact_generator(fixture("line2"), SirParams.uniform(2))
        assert np.allclose(np.asarray(q.sum(axis=1)).ravel(), 0.0)

    def test_size_limit(self):
        g = erdos_renyi(11, 0.3, 1)
        with pytest.raises(ValueError):
            exact_generator(g, SirParams.uniform(11))


class TestExactProbabilities:
    def test_two_node_closed_form(self):
        params = SirParams(0.1, np.array([0.1, 0.1]))
        p = exact_infection_probabilities(LINE2, params, UNIFORM)
        assert np.allclose(p, 0.75)

    def test_fixed_node_certain(self):
        params = SirParams.uniform(8, tau=0.2)
        p = exact_infection_probabilities(fixture("tree8"), params,
                                          InitialCondition.fixed_node(2))
        assert p[2] == pytest.approx(1.0)

    def test_tree8_reference_value(self):
        params = SirParams(0.1, np.full(8, 0.1))
        # node 3 in 1-based labels is index 2
        assert exact_infection_probability(fixture("tree8"), params,
                                           UNIFORM, 2) == pytest.approx(0.406, abs=1e-3)

    def test_against_ctmc_linear_oracle(self, rng):
        for _ in range(12):
            n = int(rng.integers(2, 6))
            g = erdos_renyi(n, float(rng.uniform(0.3, 1.0)),
                            int(rng.integers(2 ** 31)))
            tau = float(rng.uniform(0.05, 2.0))
            gamma = rng.uniform(0.2, 2.0, n)
            params = SirParams(tau, gamma)
            ours = exact_infection_probabilities(g, params, UNIFORM)
            ref = ctmc_infection_probabilities(g, tau, gamma)
            assert np.allclose(ours, ref, atol=1e-12)
            k = int(rng.integers(n))
            ours_k = exact_infection_probabilities(
                g, params, InitialCondition.fixed_node(k))
            ref_k = ctmc_infection_probabilities(g, tau, gamma, initial=k)
            assert np.allclose(ours_k, ref_k, atol=1e-12)

    def test_gamma_self_independence(self):
        # P(A_i) does not depend on gamma_i itself
        g = fixture("tree8")
        base = np.full(8, 0.7)
        for i in (0, 2, 4):
            varied = base.copy()
            varied[i] = 5.3
            p0 = exact_infection_probabilities(g, SirParams(0.3, base), UNIFORM)
            p1 = exact_infection_probabilities(g, SirParams(0.3, varied), UNIFORM)
            assert p0[i] == pytest.approx(p1[i], abs=1e-12)

    def test_tau_zero(self):
        p = exact_infection_probabilities(fixture("tree8"),
                                          SirParams(0.0, np.ones(8)), UNIFORM)
        assert np.allclose(p, 1 / 8)


class TestExactVsMonteCarlo:
    def test_four_sigma_agreement(self, rng):
        params = SirParams(0.4, rng.uniform(0.3, 1.5, 8))
        g = fixture("tree8")
        runs = 100_000
        exact = exact_infection_probabilities(g, params, UNIFORM)
        est = monte_carlo(g, params, UNIFORM, runs, 17).infection_probability
        bound = 4 * np.sqrt(exact * (1 - exact) / runs)
        assert np.all(np.abs(est - exact) <= bound)

    def test_against_percolation_oracle(self, rng):
        g = erdos_renyi(6, 0.5, 77)
        tau, gamma = 0.6, rng.uniform(0.4, 1.2, 6)
        exact = exact_infection_probabilities(g, SirParams(tau, gamma), UNIFORM)
        perc = percolation_infection_probabilities(g, tau, gamma, 40_000, rng)
        assert np.allclose(exact, perc, atol=0.012)


class TestExpectedInfectedTime:
    def test_two_node_loss(self):
        params = SirParams(0.1, np.array([0.1, 0.1]))
        assert expected_infected_time(LINE2, params, UNIFORM, 0) == \
            pytest.approx(7.5)

    def test_fixed_node(self):
        params = SirParams(0.1, np.array([1.0, 0.5]))
        assert expected_infected_time(LINE2, params,
                                      InitialCondition.fixed_node(1), 1) == \
            pytest.approx(2.0)

    def test_mc_mode(self):
        params = SirParams(0.1, np.array([0.1, 0.1]))
        val = expected_infected_time(LINE2, params, UNIFORM, 0,
                                     runs=200_000, seed=3)
        assert val == pytest.approx(7.5, abs=0.05)


class TestOutbreakStatistics:
    def test_histogram_point_mass(self):
        params = SirParams(0.0, np.ones(8))
        stats = monte_carlo(fixture("tree8"), params, UNIFORM, 1000, 1)
        assert outbreak_histogram(stats) == [(1, 1.0)]

    def test_complete_graph_saturation(self):
        g = Graph(10, [(i, j) for i in range(10) for j in range(i + 1, 10)])
        stats = monte_carlo(g, SirParams.uniform(10, tau=100.0), UNIFORM, 2000, 5)
        assert np.mean(stats.final_sizes == 10) >= 0.99

    def test_classify_pandemic(self):
        stats = EnsembleStats(runs=1000, infection_count=np.zeros(1),
                              mean_duration=np.zeros(1),
                              final_sizes=np.array([1] * 995 + [150] * 5),
                              seed=0)
        prone, freq = classify_pandemic(stats, 1000, 0.1, 0.001)
        assert prone and freq == pytest.approx(0.005)
        prone, freq = classify_pandemic(stats, 1000, 0.2, 0.01)
        assert not prone

    def test_classify_validation(self):
        stats = EnsembleStats(1, np.zeros(1), np.zeros(1), np.array([1]), 0)
        with pytest.raises(ValueError):
            classify_pandemic(stats, 10, 1.5, 0.001)


class TestThreshold:
    def test_poisson_criterion(self):
        lam = 8.0
        for gamma in (0.5, 0.69, 0.71, 1.2):
            index, sup = epidemic_threshold((lam, lam ** 2 + lam), 0.1, gamma)
            assert sup == (gamma < 0.1 * (lam - 1))

    def test_critical_lambda_11(self):
        index, sup = epidemic_threshold((11.0, 11.0 ** 2 + 11.0), 0.1, 1.0)
        assert index == pytest.approx(1.0)
        assert not sup  # strictly-greater convention at the critical point

    def test_degenerate_degrees(self):
        index, sup = epidemic_threshold((1.0, 1.0), 5.0, 0.1)
        assert index == 0.0 and not sup


class TestSerialization:
    def test_histogram_csv(self, tmp_path):
        params = SirParams.uniform(8, tau=0.3)
        stats = monte_carlo(fixture("tree8"), params, UNIFORM, 2000, 3)
        path = tmp_path / "h.csv"
        write_histogram_csv(stats, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "size,count,frequency"
        total = sum(int(line.split(",")[1]) for line in lines[1:])
        assert total == 2000

    def test_ensemble_json(self, tmp_path):
        import json
        params = SirParams.uniform(2, tau=0.3)
        stats = monte_carlo(LINE2, params, UNIFORM, 500, 3)
        path = tmp_path / "e.json"
        write_ensemble_json(stats, path)
        payload = json.loads(path.read_text())
        assert payload["runs"] == 500 and payload["seed"] == 3
        assert len(payload["infection_probability"]) == 2
