"""Mixing, relaxation and hitting times, with the classical bounds relating
them evaluated as runnable diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as la

from .graph import (WeightedGraph, all_pairs_distances, is_bipartite, is_connected,
                    transition_matrix)
from .walks import rw_step_distribution

#: brute-force conductance profiles enumerate all subsets up to this size
MAX_PROFILE_VERTICES = 14


class BoundCheck(NamedTuple):
    value: float
    bound: float
    satisfied: bool


@dataclass
class CarneReport:
    pairs_checked: int
    violations: int
    min_slack: float
    worst: tuple = field(default=())

    @property
    def passed(self):
        return self.violations == 0


def carne_check(g: WeightedGraph, t_max: int) -> CarneReport:
    """Check ``p^t(x, y) <= 2 sqrt(omega_y / omega_x) exp(-d(x, y)^2 / (2t))``.

    Every ordered pair and ``1 <= t <= t_max`` is evaluated exactly.
    ``min_slack`` is the smallest ``bound - p^t`` observed.
    """
    if not is_connected(g):
        raise ValueError("graph must be connected")
    P = transition_matrix(g).toarray()
    D = all_pairs_distances(g)
    ratio = 2.0 * np.sqrt(g.omega[None, :] / g.omega[:, None])
    Pt = np.eye(g.n)
    violations, min_slack, worst = 0, np.inf, ()
    for t in range(1, t_max + 1):
        Pt = Pt @ P
        slack = ratio * np.exp(-D ** 2 / (2.0 * t)) - Pt
        violations += int((slack < 0).sum())
        i = np.unravel_index(np.argmin(slack), slack.shape)
        if slack[i] < min_slack:
            min_slack = float(slack[i])
            worst = (int(i[0]), int(i[1]), t)
    return CarneReport(g.n * g.n * t_max, violations, min_slack, worst)


def hoeffding_tail_check(n_max: int) -> tuple[int, int, float]:
    """Compare ``sum_{|k| >= d} P(S_n = k)`` with ``2 exp(-d^2 / (2n))``.

    Covers the simple symmetric walk for ``1 <= n <= n_max`` and every
    ``0 <= d <= n + 1``. Returns ``(cases, violations, min_slack)``.
    """
    cases = violations = 0
    min_slack = math.inf
    for n in range(1, n_max + 1):
        law = rw_step_distribution(n, 0.5)
        for d in range(n + 2):
            tail = sum(p for k, p in law.items() if abs(k) >= d)
            slack = 2.0 * math.exp(-d * d / (2.0 * n)) - tail
            cases += 1
            violations += slack < 0
            min_slack = min(min_slack, slack)
    return cases, violations, min_slack


def stationary_distribution(g: WeightedGraph) -> np.ndarray:
    return g.omega / g.omega.sum()


def mixing_time(g: WeightedGraph, eps: float, max_steps: int = 100_000) -> float:
    """Smallest ``n`` with ``max_x TV(p^n(x, .), pi) <= eps``; ``inf`` for periodic chains."""
    if is_bipartite(g):
        return math.inf
    P = transition_matrix(g).toarray()
    pi = stationary_distribution(g)
    Pn = np.eye(g.n)
    for n in range(max_steps + 1):
        if 0.5 * np.abs(Pn - pi).sum(axis=1).max() <= eps:
            return float(n)
        Pn = Pn @ P
    return math.inf


def relaxation_time(g: WeightedGraph) -> float:
    """``1 / (1 - lambda_2)`` from the symmetrised kernel ``D^-1/2 W D^-1/2``."""
    s = 1.0 / np.sqrt(g.omega)
    S = (g.adjacency.toarray() * s[:, None]) * s[None, :]
    lam = np.sort(la.eigvalsh(S))[::-1]
    if g.n < 2:
        return 0.0
    gap = 1.0 - lam[1]
    return math.inf if gap <= 1e-14 else 1.0 / gap


def hitting_times(g: WeightedGraph) -> np.ndarray:
    """Matrix of expected hitting times ``E_x[T_y]`` via the fundamental matrix."""
    P = transition_matrix(g).toarray()
    pi = stationary_distribution(g)
    Z = la.inv(np.eye(g.n) - P + np.outer(np.ones(g.n), pi))
    return (np.diag(Z)[None, :] - Z) / pi[None, :]


def conductance_profile(g: WeightedGraph):
    """All nonempty proper subsets as ``(pi(S), phi(S))`` arrays (brute force)."""
    n = g.n
    if n > MAX_PROFILE_VERTICES:
        raise ValueError(f"profile enumeration limited to {MAX_PROFILE_VERTICES} vertices")
    masks = np.arange(1, 2 ** n - 1)
    member = ((masks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    W = g.adjacency.toarray()
    vol = member @ g.omega
    total = g.omega.sum()
    cut = np.einsum("si,ij,sj->s", member, W, 1.0 - member)
    phi = cut / np.minimum(vol, total - vol)
    return vol / total, phi


def lovasz_integral(g: WeightedGraph) -> float:
    """``2000 * int_{pi_*}^{3/4} du / (u Phi(u)^2)`` with ``Phi(u) = min_{pi(S) <= u} phi(S)``."""
    mass, phi = conductance_profile(g)
    pi_star = stationary_distribution(g).min()
    order = np.argsort(mass, kind="stable")
    mass, phi = mass[order], np.minimum.accumulate(phi[order])
    # Phi is a right-continuous step function; integrate log(b / a) / Phi^2 per piece
    knots = np.concatenate((mass[mass < 0.75], [0.75]))
    values = phi[: knots.size - 1]
    lo = np.maximum(knots[:-1], pi_star)
    hi = np.maximum(knots[1:], pi_star)
    return 2000.0 * float(np.sum(np.log(hi / lo) / values ** 2))


@dataclass
class WalkStatistics:
    mixing_time: float
    relaxation_time: float
    hitting_time: float
    bound_checks: dict

    def as_dict(self):
        return {
            "mixing_time": self.mixing_time,
            "relaxation_time": self.relaxation_time,
            "hitting_time": self.hitting_time,
            "bound_checks": {k: v._asdict() for k, v in self.bound_checks.items()},
        }


def oliveira_bound(g: WeightedGraph, t_rel: float) -> float:
    return 20.0 * (g.omega.mean() / g.omega.min()) * g.n * math.sqrt(t_rel + 1.0)


def walk_statistics(g: WeightedGraph, eps: float = 0.25) -> WalkStatistics:
    """Mixing, relaxation and hitting times with their bound checks.

    The hitting bound is always checked; the Lovasz integral bound only for
    graphs small enough to enumerate the conductance profile.
    """
    if not is_connected(g):
        raise ValueError("graph must be connected")
    tau = mixing_time(g, eps)
    t_rel = relaxation_time(g)
    t_hit = float(hitting_times(g).max())
    checks = {}
    bound = oliveira_bound(g, t_rel)
    checks["oliveira_hitting"] = BoundCheck(t_hit, bound, t_hit <= bound)
    if g.n <= MAX_PROFILE_VERTICES and g.n >= 2 and eps == 0.25:
        lb = lovasz_integral(g)
        checks["lovasz_mixing"] = BoundCheck(tau, lb, tau <= lb)
    return WalkStatistics(tau, t_rel, t_hit, checks)
