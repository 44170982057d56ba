"""Hot inner loops of the route planner, JIT-compiled when numba is available.

The same source backs both paths: ``greedy_route_py`` / ``eval_orders_py``
are the plain-Python functions, ``greedy_route`` / ``eval_orders`` their
``@njit`` wrappings.  Set the environment variable ``SWARMDNN_NO_NUMBA=1``
before import to force the fallback everywhere (the benchmark script times
both).  Results are bit-identical across paths: scalar arithmetic order is
fixed and sampling consumes a pre-drawn uniform stream instead of an
internal RNG.
"""

import math
import os

import numpy as np

# Fitness surcharge for a leg whose departure task cannot finish before
# arrival.  A feasible leg's fitness is bounded by (w_dist + w_task/speed) *
# instance diameter, ~9e3 at the default 12 km / 20 m/s scales, so 1e5
# guarantees violated legs lose every per-step selection while keeping route
# totals informative instead of turning them into violation counts.  The
# planner refuses instances large enough to break the dominance bound.
C8_SENTINEL = 1.0e5

NUMBA_DISABLED = os.environ.get("SWARMDNN_NO_NUMBA", "") == "1"
try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via SWARMDNN_NO_NUMBA")
    from numba import njit
    NUMBA_ENABLED = True
except ImportError:
    NUMBA_ENABLED = False
    njit = None


def _greedy_route(xs, ys, zs, proc_s, bx, by, bz, speed, w_dist, w_task,
                  k, first, rand, order, dists, slacks, fits):
    """One greedy route construction starting at target index `first`.

    Targets are indexed 0..n-1 in id order.  At each step the candidate set
    is all unvisited targets when at most k remain, otherwise k targets
    sampled without replacement via partial Fisher-Yates driven by `rand`
    (consumes exactly k uniforms per sampled step).  The candidate with the
    smallest leg fitness wins, ties to the lowest index.  Outputs fill
    `order` (n) and the per-leg arrays (n+1 legs, return leg last).
    Returns the number of legs violating the finish-before-arrival rule.
    """
    n = xs.shape[0]
    pool = np.empty(n, np.int64)
    m = 0
    for i in range(n):
        if i != first:
            pool[m] = i
            m += 1

    # base -> first leg; nothing to process at the base
    order[0] = first
    d = math.sqrt((xs[first] - bx) ** 2 + (ys[first] - by) ** 2
                  + (zs[first] - bz) ** 2)
    t_next = d / speed
    dists[0] = d
    slacks[0] = t_next
    fits[0] = w_dist * d + w_task * t_next
    violations = 0
    cur = first
    rpos = 0
    step = 1

    while m > 0:
        if m <= k:
            ncand = m
        else:
            ncand = k
            for j in range(k):
                u = rand[rpos]
                rpos += 1
                idx = j + int(u * (m - j))
                if idx >= m:
                    idx = m - 1
                tmp = pool[j]
                pool[j] = pool[idx]
                pool[idx] = tmp
        tq = proc_s[cur]
        best = -1
        best_f = math.inf
        best_d = 0.0
        best_s = 0.0
        best_v = False
        for j in range(ncand):
            t = pool[j]
            d = math.sqrt((xs[t] - xs[cur]) ** 2 + (ys[t] - ys[cur]) ** 2
                          + (zs[t] - zs[cur]) ** 2)
            t_next = d / speed
            slack = t_next - tq
            fit = w_dist * d + w_task * slack
            viol = tq > t_next
            if viol:
                fit += C8_SENTINEL
            if fit < best_f or (fit == best_f and t < best):
                best = t
                best_f = fit
                best_d = d
                best_s = slack
                best_v = viol
        order[step] = best
        dists[step] = best_d
        slacks[step] = best_s
        fits[step] = best_f
        if best_v:
            violations += 1
        for j in range(m):
            if pool[j] == best:
                pool[j] = pool[m - 1]
                break
        m -= 1
        cur = best
        step += 1

    # return leg, processing the last target's task on the way home
    tq = proc_s[cur]
    d = math.sqrt((bx - xs[cur]) ** 2 + (by - ys[cur]) ** 2
                  + (bz - zs[cur]) ** 2)
    t_next = d / speed
    slack = t_next - tq
    fit = w_dist * d + w_task * slack
    if tq > t_next:
        fit += C8_SENTINEL
        violations += 1
    dists[n] = d
    slacks[n] = slack
    fits[n] = fit
    return violations


def _eval_orders(xs, ys, zs, proc_s, bx, by, bz, speed, w_dist, w_task,
                 orders, out_fit, out_dist, out_viol):
    """Total fitness/distance/violations for each visit order in `orders`.

    Rows of `orders` are permutations of target indices; legs are
    base -> o[0] -> ... -> o[n-1] -> base with the departure node's
    processing time defining the slack, exactly as in the constructor.
    """
    n_orders = orders.shape[0]
    n = orders.shape[1]
    for r in range(n_orders):
        total_f = 0.0
        total_d = 0.0
        viols = 0
        px, py, pz = bx, by, bz
        tq = 0.0
        for i in range(n + 1):
            if i < n:
                t = orders[r, i]
                nx, ny, nz = xs[t], ys[t], zs[t]
            else:
                nx, ny, nz = bx, by, bz
            d = math.sqrt((nx - px) ** 2 + (ny - py) ** 2 + (nz - pz) ** 2)
            t_next = d / speed
            slack = t_next - tq
            fit = w_dist * d + w_task * slack
            if tq > t_next:
                fit += C8_SENTINEL
                viols += 1
            total_f += fit
            total_d += d
            if i < n:
                px, py, pz = nx, ny, nz
                tq = proc_s[orders[r, i]]
        out_fit[r] = total_f
        out_dist[r] = total_d
        out_viol[r] = viols


# plain-Python references kept for the benchmark and A/B tests
greedy_route_py = _greedy_route
eval_orders_py = _eval_orders

if NUMBA_ENABLED:
    greedy_route = njit(cache=True)(_greedy_route)
    eval_orders = njit(cache=True)(_eval_orders)
else:
    greedy_route = _greedy_route
    eval_orders = _eval_orders
