"""Randomized-greedy inspection-order planning over target visit sequences.

The planner minimizes a per-leg fitness: a weighted blend of leg distance
and the slack between flight time and the departure target's processing
time.  Legs whose task cannot finish before arrival carry a large sentinel
surcharge (see ``_kernels.C8_SENTINEL``) so they are never chosen while a
feasible candidate exists, and routes report how many such legs remain.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .scenario import Position3, Scenario, TargetArea, Weights

EXHAUSTIVE_MAX_TARGETS = 10


@dataclass(frozen=True)
class Route:
    """A visit order plus its per-leg accounting.

    ``order`` is the target-id visit sequence; legs run base -> order[0] ->
    ... -> order[-1] -> base, so there are ``len(order) + 1`` legs.
    """

    order: tuple[int, ...]
    total_distance_m: float
    total_fitness: float
    leg_distances_m: tuple[float, ...]
    leg_slacks_s: tuple[float, ...]
    leg_fitness: tuple[float, ...]
    c8_violations: int

    @property
    def num_legs(self) -> int:
        return len(self.order) + 1


def leg_time(a: Position3, b: Position3, speed_m_s: float) -> float:
    """Seconds to fly the straight leg a -> b at constant speed."""
    if speed_m_s <= 0.0:
        raise ValueError("speed must be > 0")
    return a.distance_to(b) / speed_m_s


def processing_time(task_size_gb: float, rate_gb_min: float) -> float:
    """Seconds for the swarm to chew through a target's data volume."""
    if rate_gb_min <= 0.0:
        raise ValueError("processing rate must be > 0")
    return task_size_gb / rate_gb_min * 60.0


def leg_fitness(current, candidate: TargetArea, speed_m_s: float,
                rate_gb_min: float, weights: Weights) -> float:
    """Fitness of moving from `current` (a TargetArea or the base Position3)
    to `candidate`; infeasible legs return the sentinel-inflated value."""
    if isinstance(current, TargetArea):
        pos, tq = current.center, processing_time(current.task_size_gb, rate_gb_min)
    else:
        pos, tq = current, 0.0
    d = pos.distance_to(candidate.center)
    t_next = d / speed_m_s
    fit = weights.vartheta_dist * d + weights.rho_task * (t_next - tq)
    if tq > t_next:
        fit += _kernels.C8_SENTINEL
    return fit


def select_first_target(scenario: Scenario) -> int:
    """Target maximizing task size over distance from base; ties to lowest id."""
    best_id = -1
    best_ratio = -math.inf
    for t in sorted(scenario.targets, key=lambda t: t.id):
        d = scenario.base.distance_to(t.center)
        ratio = math.inf if d == 0.0 else t.task_size_gb / d
        if ratio > best_ratio:
            best_ratio = ratio
            best_id = t.id
    return best_id


def _target_arrays(scenario: Scenario):
    targets = sorted(scenario.targets, key=lambda t: t.id)
    xs = np.array([t.center.x for t in targets], dtype=np.float64)
    ys = np.array([t.center.y for t in targets], dtype=np.float64)
    zs = np.array([t.center.z for t in targets], dtype=np.float64)
    proc = np.array([processing_time(t.task_size_gb, scenario.proc_rate_gb_min)
                     for t in targets], dtype=np.float64)
    ids = np.array([t.id for t in targets], dtype=np.int64)
    return xs, ys, zs, proc, ids


def _route_from_kernel(ids, order_idx, dists, slacks, fits, violations) -> Route:
    return Route(order=tuple(int(ids[i]) for i in order_idx),
                 total_distance_m=float(sum(dists)),
                 total_fitness=float(sum(fits)),
                 leg_distances_m=tuple(float(v) for v in dists),
                 leg_slacks_s=tuple(float(v) for v in slacks),
                 leg_fitness=tuple(float(v) for v in fits),
                 c8_violations=int(violations))


def _max_feasible_leg_fitness(scenario: Scenario, xs, ys, zs) -> float:
    span_x = max(float(xs.max()), scenario.base.x) - min(float(xs.min()), scenario.base.x)
    span_y = max(float(ys.max()), scenario.base.y) - min(float(ys.min()), scenario.base.y)
    span_z = max(float(zs.max()), scenario.base.z) - min(float(zs.min()), scenario.base.z)
    diameter = math.sqrt(span_x ** 2 + span_y ** 2 + span_z ** 2)
    return diameter * (scenario.weights.vartheta_dist
                       + scenario.weights.rho_task / scenario.flight.speed_m_s)


def _construct(scenario: Scenario, k: int, rng: np.random.Generator | None) -> Route:
    xs, ys, zs, proc, ids = _target_arrays(scenario)
    n = xs.shape[0]
    if _max_feasible_leg_fitness(scenario, xs, ys, zs) >= _kernels.C8_SENTINEL:
        raise ValueError("instance too large for the infeasible-leg sentinel "
                         "to dominate leg selection; shrink the arena or "
                         "rescale the fitness weights")
    first_id = select_first_target(scenario)
    first = int(np.searchsorted(ids, first_id))
    if rng is None:
        rand = np.zeros(1, dtype=np.float64)  # never consumed when k >= n
    else:
        rand = rng.random(n * k + 1)
    order = np.empty(n, dtype=np.int64)
    dists = np.empty(n + 1, dtype=np.float64)
    slacks = np.empty(n + 1, dtype=np.float64)
    fits = np.empty(n + 1, dtype=np.float64)
    violations = _kernels.greedy_route(
        xs, ys, zs, proc, scenario.base.x, scenario.base.y, scenario.base.z,
        scenario.flight.speed_m_s, scenario.weights.vartheta_dist,
        scenario.weights.rho_task, k, first, rand, order, dists, slacks, fits)
    return _route_from_kernel(ids, order, dists, slacks, fits, violations)


def plan_route(scenario: Scenario, k: int = 5, restarts: int = 20,
               seed: int = 0) -> Route:
    """Best of `restarts` randomized-greedy constructions.

    Each restart draws its uniforms from an independently spawned stream of
    `seed`, so results do not depend on evaluation order.  With k covering
    all targets every restart collapses to the deterministic greedy sweep.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    n = len(scenario.targets)
    best: Route | None = None
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        rng = np.random.default_rng(ss) if k < n else None
        route = _construct(scenario, k, rng)
        if best is None or route.total_fitness < best.total_fitness:
            best = route
    return best


def plan_route_pure_greedy(scenario: Scenario) -> Route:
    """Deterministic greedy sweep: full candidate set at every step."""
    return _construct(scenario, len(scenario.targets), None)


def route_from_order(scenario: Scenario, order) -> Route:
    """Evaluate an explicit visit order (any permutation of target ids)."""
    xs, ys, zs, proc, ids = _target_arrays(scenario)
    if sorted(order) != list(ids):
        raise ValueError("order must visit every target exactly once")
    idx = np.searchsorted(ids, np.asarray(order, dtype=np.int64))
    orders = idx.reshape(1, -1).astype(np.int64)
    fit = np.empty(1)
    dist = np.empty(1)
    viol = np.empty(1, dtype=np.int64)
    _kernels.eval_orders(xs, ys, zs, proc, scenario.base.x, scenario.base.y,
                         scenario.base.z, scenario.flight.speed_m_s,
                         scenario.weights.vartheta_dist,
                         scenario.weights.rho_task, orders, fit, dist, viol)
    # recover per-leg values for the Route record
    legs_d, legs_s, legs_f = [], [], []
    pos, tq = scenario.base, 0.0
    by_id = {t.id: t for t in scenario.targets}
    for tid in list(order) + [None]:
        nxt = scenario.base if tid is None else by_id[tid].center
        d = pos.distance_to(nxt)
        t_next = d / scenario.flight.speed_m_s
        slack = t_next - tq
        f = (scenario.weights.vartheta_dist * d
             + scenario.weights.rho_task * slack)
        if tq > t_next:
            f += _kernels.C8_SENTINEL
        legs_d.append(d)
        legs_s.append(slack)
        legs_f.append(f)
        if tid is not None:
            pos = by_id[tid].center
            tq = processing_time(by_id[tid].task_size_gb,
                                 scenario.proc_rate_gb_min)
    return Route(order=tuple(int(t) for t in order),
                 total_distance_m=float(dist[0]),
                 total_fitness=float(fit[0]),
                 leg_distances_m=tuple(legs_d),
                 leg_slacks_s=tuple(legs_s),
                 leg_fitness=tuple(legs_f),
                 c8_violations=int(viol[0]))


def exhaustive_best_route(scenario: Scenario) -> Route:
    """True optimum by evaluating every permutation; guarded to small W."""
    n = len(scenario.targets)
    if n > EXHAUSTIVE_MAX_TARGETS:
        raise ValueError(f"exhaustive search limited to "
                         f"{EXHAUSTIVE_MAX_TARGETS} targets, got {n}")
    xs, ys, zs, proc, ids = _target_arrays(scenario)
    orders = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    fit = np.empty(orders.shape[0])
    dist = np.empty(orders.shape[0])
    viol = np.empty(orders.shape[0], dtype=np.int64)
    _kernels.eval_orders(xs, ys, zs, proc, scenario.base.x, scenario.base.y,
                         scenario.base.z, scenario.flight.speed_m_s,
                         scenario.weights.vartheta_dist,
                         scenario.weights.rho_task, orders, fit, dist, viol)
    best = int(np.argmin(fit))
    return route_from_order(scenario, [int(ids[i]) for i in orders[best]])


ROUTE_CSV_HEADER = ("step", "target_id", "leg_distance_m", "leg_slack_s",
                    "cumulative_fitness")


def route_to_csv(route: Route) -> str:
    """CSV rows per leg; the return leg carries target_id 0."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROUTE_CSV_HEADER)
    cum = 0.0
    for step in range(route.num_legs):
        tid = route.order[step] if step < len(route.order) else 0
        cum += route.leg_fitness[step]
        w.writerow([step + 1, tid, repr(route.leg_distances_m[step]),
                    repr(route.leg_slacks_s[step]), repr(cum)])
    return buf.getvalue()
