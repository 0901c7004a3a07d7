"""Brute-force oracle for the greedy link-attack strategy.

Enumerates every admissible piecewise-constant break schedule on a coarse
switch grid and compares the best objective against the closed-loop greedy
schedule. Both sides are evaluated with the same per-interval machinery
(exact eigenmode integrals, constant kernel), so the comparison isolates
strategy rather than integration error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .link_attack import greedy_control
from .topology import LinkControl, NetworkTopology, build_system_matrix


@dataclass(frozen=True)
class EnumerationResult:
    j_greedy: float
    j_best: float
    best_schedule: tuple[tuple[int, ...], ...]   # per-interval broken slot tuples
    greedy_schedule: tuple[tuple[int, ...], ...]
    num_schedules: int


def _interval_operators(topology: NetworkTopology, control_sets, h: float):
    """Per control: the interval propagator exp(A h) and the quadratic form W
    with y' W y = int_0^h |P(tau) y - M y|^2 dtau (constant kernel k == 1)."""
    n = topology.n
    M = np.full((n, n), 1.0 / n)
    props, quads = [], []
    for broken in control_sets:
        control = LinkControl.breaking(topology, list(broken), len(broken) or 0)
        A = build_system_matrix(topology, control)
        vals, vecs = np.linalg.eigh(A)
        props.append((vecs * np.exp(vals * h)) @ vecs.T)
        # int_0^h e^{2 lam tau} dtau per mode, minus the consensus projector part
        with np.errstate(divide="ignore", invalid="ignore"):
            mode_int = np.where(np.abs(vals) > 1e-12,
                                (np.exp(2.0 * vals * h) - 1.0) / (2.0 * vals),
                                h)
        quads.append((vecs * mode_int) @ vecs.T - h * M)
    return props, quads


def admissible_break_sets(topology: NetworkTopology, ell: int):
    """All edge subsets of size <= ell (the bang-bang control alphabet)."""
    pairs = [(i, j) for (i, j, _) in topology.edges]
    sets = []
    for k in range(min(ell, topology.m) + 1):
        sets.extend(itertools.combinations(pairs, k))
    return sets


def exhaustive_best(topology: NetworkTopology, x0: np.ndarray, T: float,
                    ell: int, intervals: int = 4) -> EnumerationResult:
    """Best objective over all admissible schedules vs. the greedy schedule.

    The enumeration is batched: all schedules are propagated interval by
    interval with per-control grouping, accumulating exact per-interval
    objective contributions.
    """
    x0 = np.asarray(x0, dtype=float)
    h = T / intervals
    control_sets = admissible_break_sets(topology, ell)
    props, quads = _interval_operators(topology, control_sets, h)
    nc = len(control_sets)
    num = nc ** intervals
    X = np.tile(x0, (num, 1))
    J = np.zeros(num)
    digits = np.empty((num, intervals), dtype=int)
    idx = np.arange(num)
    for step in range(intervals):
        digits[:, step] = (idx // nc ** step) % nc
    for step in range(intervals):
        for c in range(nc):
            mask = digits[:, step] == c
            if not np.any(mask):
                continue
            Y = X[mask]
            J[mask] += np.einsum("si,ij,sj->s", Y, quads[c], Y)
            X[mask] = Y @ props[c].T
    best_idx = int(np.argmax(J))
    best_schedule = tuple(
        tuple(sorted(control_sets[digits[best_idx, s]])) for s in range(intervals))

    # greedy on the same switch grid with the same evaluators
    y = x0.copy()
    j_greedy = 0.0
    greedy_schedule = []
    set_index = {frozenset(s): i for i, s in enumerate(control_sets)}
    for _ in range(intervals):
        control = greedy_control(y, topology, min(ell, topology.m))
        broken = frozenset(control.broken_edges(topology.n))
        c = set_index[broken]
        greedy_schedule.append(tuple(sorted(broken)))
        j_greedy += float(y @ quads[c] @ y)
        y = props[c] @ y
    return EnumerationResult(
        j_greedy=j_greedy,
        j_best=float(J[best_idx]),
        best_schedule=best_schedule,
        greedy_schedule=tuple(greedy_schedule),
        num_schedules=num,
    )


def connected_graph_catalog(n: int) -> list[list[tuple[int, int]]]:
    """One representative per isomorphism class of connected graphs (0-based)."""
    if n == 3:
        return [
            [(0, 1), (1, 2)],                              # path
            [(0, 1), (0, 2), (1, 2)],                      # triangle
        ]
    if n == 4:
        return [
            [(0, 1), (1, 2), (2, 3)],                      # path
            [(0, 1), (0, 2), (0, 3)],                      # star
            [(0, 1), (1, 2), (2, 3), (0, 3)],              # cycle
            [(0, 1), (0, 2), (1, 2), (2, 3)],              # triangle + pendant
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)],      # complete minus one edge
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],  # complete
        ]
    raise ValueError(f"catalog only covers n in {{3, 4}}, got {n}")


def greedy_dominance_sweep(ns=(3, 4), ells=(1, 2), weight_seeds=(0, 1, 2),
                           x0_seeds=(0, 1, 2), T: float = 2.0,
                           intervals: int = 4, rel_tol: float = 1e-3) -> dict:
    """Run the oracle over the connected-graph catalog with random weights and
    initial states; reports the worst relative excess of the enumerated best
    over greedy."""
    worst = 0.0
    worst_case = None
    runs = 0
    for n in ns:
        for edges in connected_graph_catalog(n):
            for ell in ells:
                if ell > len(edges):
                    continue
                for ws in weight_seeds:
                    rng_w = np.random.default_rng(1000 + ws)
                    weights = rng_w.uniform(0.2, 2.0, size=len(edges))
                    topology = NetworkTopology(
                        n=n, edges=tuple((i, j, w) for (i, j), w in zip(edges, weights)))
                    for xs in x0_seeds:
                        rng_x = np.random.default_rng(2000 + xs)
                        x0 = rng_x.uniform(-1.0, 1.0, size=n)
                        result = exhaustive_best(topology, x0, T, ell, intervals)
                        runs += 1
                        denom = max(result.j_greedy, 1e-300)
                        excess = (result.j_best - result.j_greedy) / denom
                        if excess > worst:
                            worst = excess
                            worst_case = (n, tuple(edges), ell, ws, xs)
    return {
        "runs": runs,
        "worst_relative_excess": worst,
        "worst_case": worst_case,
        "passed": worst <= rel_tol,
        "tolerance": rel_tol,
    }
