"""Numba kernels for SIR trajectory generation.

Per-run RNG streams are derived from (master seed, run index) with a
splitmix64 hash, so ensemble results do not depend on how runs are
partitioned across workers.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True)
def _splitmix64(x):
    x = np.uint64(x)
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
    return (z ^ (z >> np.uint64(31))) & _MASK64


@njit(cache=True, nogil=True)
def _seed_for_run(master_seed, run_index):
    h = _splitmix64(np.uint64(master_seed) ^ _splitmix64(np.uint64(run_index)))
    # numba's np.random.seed takes a 32-bit value
    return np.uint32(h & np.uint64(0xFFFFFFFF))


@njit(cache=True, nogil=True)
def _sir_single_run(indptr, indices, tau, gamma, init_mode, init_nodes,
                    state, pressure, inf_list, inf_pos, risk_list, risk_pos,
                    t_infect, duration):
    """One Gillespie trajectory. Arrays are caller-allocated scratch.

    init_mode: 0 = uniform random single node, 1 = the nodes in init_nodes.
    Returns the final outbreak size. state/duration are left at their
    absorbing values for the caller to inspect.
    """
    n = state.shape[0]
    for i in range(n):
        state[i] = 0
        pressure[i] = 0
        inf_pos[i] = -1
        risk_pos[i] = -1
        duration[i] = 0.0
    n_inf = 0
    n_risk = 0
    press_total = 0
    rec_total = 0.0
    t = 0.0

    if init_mode == 0:
        k = np.int64(np.random.random() * n)
        if k >= n:
            k = n - 1
        first = k
        last = k + 1
    else:
        first = 0
        last = init_nodes.shape[0]

    for idx in range(first, last):
        i = init_nodes[idx] if init_mode != 0 else idx
        state[i] = 1
        inf_list[n_inf] = i
        inf_pos[i] = n_inf
        n_inf += 1
        rec_total += gamma[i]
        t_infect[i] = t
    # seed nodes' neighbor pressure
    for pos in range(n_inf):
        i = inf_list[pos]
        for jj in range(indptr[i], indptr[i + 1]):
            j = indices[jj]
            if state[j] == 0:
                if pressure[j] == 0:
                    risk_list[n_risk] = j
                    risk_pos[j] = n_risk
                    n_risk += 1
                pressure[j] += 1
                press_total += 1
    ever = n_inf

    while n_inf > 0:
        total = rec_total + tau * press_total
        t += np.random.exponential(1.0 / total)
        u = np.random.random() * total
        if u < rec_total or press_total == 0:
            # recovery event: scan infected list weighted by gamma
            acc = 0.0
            pick = inf_list[n_inf - 1]
            for pos in range(n_inf):
                acc += gamma[inf_list[pos]]
                if u < acc:
                    pick = inf_list[pos]
                    break
            state[pick] = 2
            duration[pick] = t - t_infect[pick]
            # swap-pop from infected list
            pos = inf_pos[pick]
            lastn = inf_list[n_inf - 1]
            inf_list[pos] = lastn
            inf_pos[lastn] = pos
            inf_pos[pick] = -1
            n_inf -= 1
            rec_total -= gamma[pick]
            if n_inf == 0:
                rec_total = 0.0  # kill accumulated float drift
            for jj in range(indptr[pick], indptr[pick + 1]):
                j = indices[jj]
                if state[j] == 0:
                    pressure[j] -= 1
                    press_total -= 1
                    if pressure[j] == 0:
                        pos = risk_pos[j]
                        lastn = risk_list[n_risk - 1]
                        risk_list[pos] = lastn
                        risk_pos[lastn] = pos
                        risk_pos[j] = -1
                        n_risk -= 1
        else:
            # infection event: scan at-risk list weighted by pressure
            v = (u - rec_total) / tau
            acc = 0
            pick = risk_list[n_risk - 1]
            for pos in range(n_risk):
                acc += pressure[risk_list[pos]]
                if v < acc:
                    pick = risk_list[pos]
                    break
            press_total -= pressure[pick]
            pressure[pick] = 0
            pos = risk_pos[pick]
            lastn = risk_list[n_risk - 1]
            risk_list[pos] = lastn
            risk_pos[lastn] = pos
            risk_pos[pick] = -1
            n_risk -= 1
            state[pick] = 1
            inf_list[n_inf] = pick
            inf_pos[pick] = n_inf
            n_inf += 1
            rec_total += gamma[pick]
            t_infect[pick] = t
            ever += 1
            for jj in range(indptr[pick], indptr[pick + 1]):
                j = indices[jj]
                if state[j] == 0:
                    if pressure[j] == 0:
                        risk_list[n_risk] = j
                        risk_pos[j] = n_risk
                        n_risk += 1
                    pressure[j] += 1
                    press_total += 1
    return ever


@njit(cache=True, nogil=True)
def sir_ensemble(indptr, indices, tau, gamma, init_mode, init_nodes,
                 master_seed, run_start, run_stop):
    """Simulate runs [run_start, run_stop) and aggregate.

    Returns (infection_counts, duration_sums, final_sizes) where the
    per-node arrays accumulate over runs and final_sizes has one entry
    per run in order.
    """
    n = indptr.shape[0] - 1
    counts = np.zeros(n, dtype=np.int64)
    dur_sums = np.zeros(n, dtype=np.float64)
    sizes = np.empty(run_stop - run_start, dtype=np.int64)
    state = np.empty(n, dtype=np.int8)
    pressure = np.empty(n, dtype=np.int64)
    inf_list = np.empty(n, dtype=np.int64)
    inf_pos = np.empty(n, dtype=np.int64)
    risk_list = np.empty(n, dtype=np.int64)
    risk_pos = np.empty(n, dtype=np.int64)
    t_infect = np.empty(n, dtype=np.float64)
    duration = np.empty(n, dtype=np.float64)
    for r in range(run_start, run_stop):
        np.random.seed(_seed_for_run(master_seed, r))
        size = _sir_single_run(indptr, indices, tau, gamma, init_mode, init_nodes,
                               state, pressure, inf_list, inf_pos,
                               risk_list, risk_pos, t_infect, duration)
        sizes[r - run_start] = size
        for i in range(n):
            if state[i] != 0:
                counts[i] += 1
                dur_sums[i] += duration[i]
    return counts, dur_sums, sizes


@njit(cache=True, nogil=True)
def sir_one_trajectory(indptr, indices, tau, gamma, init_mode, init_nodes,
                       master_seed, run_index):
    """Single run with per-node detail, seeded like ensemble run run_index."""
    n = indptr.shape[0] - 1
    state = np.empty(n, dtype=np.int8)
    pressure = np.empty(n, dtype=np.int64)
    inf_list = np.empty(n, dtype=np.int64)
    inf_pos = np.empty(n, dtype=np.int64)
    risk_list = np.empty(n, dtype=np.int64)
    risk_pos = np.empty(n, dtype=np.int64)
    t_infect = np.empty(n, dtype=np.float64)
    duration = np.empty(n, dtype=np.float64)
    np.random.seed(_seed_for_run(master_seed, run_index))
    size = _sir_single_run(indptr, indices, tau, gamma, init_mode, init_nodes,
                           state, pressure, inf_list, inf_pos,
                           risk_list, risk_pos, t_infect, duration)
    ever = state != 0
    return ever, duration, size
