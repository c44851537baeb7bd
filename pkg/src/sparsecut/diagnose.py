"""Sweep every walk identity and bound over random instances on one graph."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .bounds import carne_check, hoeffding_tail_check, walk_statistics
from .graph import WeightedGraph, is_bipartite, is_connected, transition_matrix
from .identities import (green_return_identity, killed_green, killed_green_series,
                         last_exit_identity, verify_duality)

TOLERANCES = {
    "green_return": 1e-10,
    "last_exit": 1e-10,
    "duality": 1e-8,
    "killed_green_series": 1e-8,
}


def _random_proper_subset(rng, n, min_size=1):
    size = int(rng.integers(min_size, n))
    return np.sort(rng.choice(n, size=size, replace=False))


def _series_terms(Q):
    rho = max(abs(np.linalg.eigvals(Q))) if Q.size else 0.0
    if rho <= 0:
        return 2
    return int(min(200_000, math.ceil(math.log(1e-14) / math.log(rho)) + 2))


def _map(fn, items, n_jobs):
    if n_jobs and n_jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _entry(residuals, tol):
    worst = float(max(residuals)) if residuals else 0.0
    return {"instances": len(residuals), "max_residual": worst, "pass": bool(worst <= tol)}


def run_diagnostics(g: WeightedGraph, seed=0, instances: int = 20, t_max: int = 30,
                    n_max: int = 60, max_power: int = 8, n_jobs=None) -> dict:
    """Identity residuals and bound violations as ``{name: {instances, max_residual, pass}}``.

    Bound entries report the largest violation, so zero means satisfied.
    """
    if not is_connected(g):
        raise ValueError("graph must be connected")
    if g.n < 2:
        raise ValueError("need at least two vertices")
    root = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(i,)))
            for i in range(instances)]
    report = {}

    def green_case(rng):
        A = _random_proper_subset(rng, g.n)
        c = int(rng.choice(A))
        return green_return_identity(g, A, c).residual

    def last_exit_case(rng):
        B = _random_proper_subset(rng, g.n)
        A = np.sort(rng.choice(B, size=int(rng.integers(1, B.size + 1)), replace=False))
        return last_exit_identity(g, A, B).residual

    def series_case(rng):
        A = _random_proper_subset(rng, g.n)
        G = killed_green(g, A).matrix
        Q = transition_matrix(g)[A][:, A].toarray()
        return float(np.max(np.abs(G - killed_green_series(g, A, _series_terms(Q)))))

    report["green_return"] = _entry(_map(green_case, rngs, n_jobs), TOLERANCES["green_return"])
    report["last_exit"] = _entry(_map(last_exit_case, rngs, n_jobs), TOLERANCES["last_exit"])
    report["killed_green_series"] = _entry(_map(series_case, rngs, n_jobs),
                                           TOLERANCES["killed_green_series"])

    P = transition_matrix(g)
    report["duality"] = _entry([verify_duality(P, n) for n in range(max_power + 1)],
                               TOLERANCES["duality"])

    carne = carne_check(g, t_max)
    report["carne_varopoulos"] = {"instances": carne.pairs_checked,
                                  "max_residual": max(0.0, -carne.min_slack),
                                  "pass": carne.passed}
    cases, violations, slack = hoeffding_tail_check(n_max)
    report["hoeffding_tail"] = {"instances": cases, "max_residual": max(0.0, -slack),
                                "pass": violations == 0}

    stats = walk_statistics(g, 0.25)
    oli = stats.bound_checks["oliveira_hitting"]
    report["oliveira_hitting"] = {"instances": 1, "max_residual": max(0.0, oli.value - oli.bound),
                                  "pass": bool(oli.satisfied)}
    if "lovasz_mixing" in stats.bound_checks and not is_bipartite(g):
        lov = stats.bound_checks["lovasz_mixing"]
        report["lovasz_mixing"] = {"instances": 1,
                                   "max_residual": max(0.0, lov.value - lov.bound),
                                   "pass": bool(lov.satisfied)}
    report["_statistics"] = {
        "mixing_time": None if math.isinf(stats.mixing_time) else stats.mixing_time,
        "relaxation_time": stats.relaxation_time,
        "hitting_time": stats.hitting_time,
    }
    return report


def all_passed(report: dict) -> bool:
    return all(v["pass"] for k, v in report.items() if not k.startswith("_"))
