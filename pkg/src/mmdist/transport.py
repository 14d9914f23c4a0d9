"""Transportation-polytope primitives used by the distance solvers.

Everything here works on plain arrays: row capacities, column capacities and
a boolean mask of admissible cells.  Masses are floats; the max-flow routine
uses shortest augmenting paths, whose augmentation count is bounded by the
graph size independently of capacities, so float capacities are safe.
"""

from __future__ import annotations

import numpy as np

from .errors import InternalInvariantError

_RESIDUAL_TOL = 1e-15


def northwest_plan(row_caps, col_caps, row_order=None, col_order=None) -> np.ndarray:
    """Greedy corner filling; returns an extreme point of the polytope.

    Requires equal totals.  With shuffled orders this sweeps the vertices of
    the transportation polytope.
    """
    r = np.array(row_caps, dtype=float)
    c = np.array(col_caps, dtype=float)
    rows = list(range(len(r))) if row_order is None else [int(i) for i in row_order]
    cols = list(range(len(c))) if col_order is None else [int(j) for j in col_order]
    plan = np.zeros((len(r), len(c)))
    a, b = 0, 0
    while a < len(rows) and b < len(cols):
        i, j = rows[a], cols[b]
        take = min(r[i], c[j])
        if take > 0.0:
            plan[i, j] += take
            r[i] -= take
            c[j] -= take
        if r[i] <= _RESIDUAL_TOL:
            a += 1
        elif c[j] <= _RESIDUAL_TOL:
            b += 1
        else:  # both exhausted to within tolerance dust
            a += 1
            b += 1
    return plan


def completion(plan, row_targets, col_targets) -> np.ndarray:
    """Extend a sub-coupling to a full coupling by routing the deficits.

    Any plan with row sums <= ``row_targets`` and column sums <=
    ``col_targets`` and matching total deficit extends; deficits are filled
    northwest-style, deterministically.
    """
    plan = np.array(plan, dtype=float)
    r = np.clip(np.asarray(row_targets, float) - plan.sum(axis=1), 0.0, None)
    c = np.clip(np.asarray(col_targets, float) - plan.sum(axis=0), 0.0, None)
    return plan + northwest_plan(r, c)


def max_flow(row_caps, col_caps, allowed) -> tuple[float, np.ndarray]:
    """Maximum mass routable through ``allowed`` cells, with an optimal plan.

    Edmonds-Karp on the bipartite source/sink network; deterministic
    (breadth-first in ascending index order).
    """
    r = np.asarray(row_caps, dtype=float)
    c = np.asarray(col_caps, dtype=float)
    mask = np.asarray(allowed, dtype=bool)
    nr, nc = mask.shape
    plan = np.zeros((nr, nc))
    while True:
        # BFS from the source over the residual network
        row_prev = np.full(nr, -2, dtype=int)  # -2 unvisited, -1 from source
        col_prev = np.full(nc, -2, dtype=int)
        row_slack = r - plan.sum(axis=1)
        col_slack = c - plan.sum(axis=0)
        frontier = [("r", i) for i in range(nr) if row_slack[i] > _RESIDUAL_TOL]
        for _, i in frontier:
            row_prev[i] = -1
        goal = -1
        while frontier and goal < 0:
            nxt = []
            for kind, k in frontier:
                if kind == "r":
                    for j in range(nc):
                        if mask[k, j] and col_prev[j] == -2:
                            col_prev[j] = k
                            if col_slack[j] > _RESIDUAL_TOL:
                                goal = j
                                break
                            nxt.append(("c", j))
                    if goal >= 0:
                        break
                else:
                    for i in range(nr):
                        if plan[i, k] > _RESIDUAL_TOL and row_prev[i] == -2:
                            row_prev[i] = k
                            nxt.append(("r", i))
            frontier = nxt
        if goal < 0:
            break
        # trace the augmenting path and its bottleneck
        path = []  # (i, j, forward?)
        j = goal
        bottleneck = float(col_slack[j])
        while True:
            i = col_prev[j]
            path.append((i, j, True))
            if row_prev[i] == -1:
                bottleneck = min(bottleneck, float(row_slack[i]))
                break
            j2 = row_prev[i]
            path.append((i, j2, False))
            bottleneck = min(bottleneck, float(plan[i, j2]))
            j = j2
        if bottleneck <= _RESIDUAL_TOL:
            break
        for i, j, forward in path:
            if forward:
                plan[i, j] += bottleneck
            else:
                plan[i, j] -= bottleneck
    return float(plan.sum()), plan


def max_flow_value(row_caps, col_caps, allowed) -> float:
    """Maximum routable mass, via min-cut enumeration over the smaller side.

    For a bipartite network the min cut keeps a subset ``A`` of rows and must
    then pay for every column reachable from ``A``; enumerating subsets is
    exact for float capacities and fast at the sizes this package targets.
    """
    r = np.asarray(row_caps, dtype=float)
    c = np.asarray(col_caps, dtype=float)
    mask = np.asarray(allowed, dtype=bool)
    if mask.shape[0] > mask.shape[1]:
        r, c, mask = c, r, mask.T
    nr, nc = mask.shape
    if nr > 20:  # fall back rather than enumerate 2^nr subsets
        return max_flow(r, c, mask)[0]
    col_bits = [sum(1 << j for j in range(nc) if mask[i, j]) for i in range(nr)]
    total_r = float(r.sum())
    best = np.inf
    col_caps_arr = [float(x) for x in c]
    for A in range(1 << nr):
        kept = 0.0
        reach = 0
        for i in range(nr):
            if A >> i & 1:
                kept += r[i]
                reach |= col_bits[i]
            # rows outside A pay their capacity
        cut = total_r - kept
        j = 0
        rb = reach
        while rb:
            if rb & 1:
                cut += col_caps_arr[j]
            rb >>= 1
            j += 1
        if cut < best:
            best = cut
    return float(min(best, total_r))


def prokhorov_distance(dist, mu, nu, *, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Exact Prokhorov distance between equal-mass weightings of one space.

    The distance is the smallest ``eps`` for which some coupling places all
    but ``eps`` of the mass on pairs at distance at most ``eps``; by max-flow
    duality this is the usual neighborhood inequality over all subsets.  The
    optimum lies either at a pairwise distance or at a mass breakpoint
    ``m - F`` of the flow value ``F``, both of which the search visits.

    Returns ``(eps, plan)`` where ``plan`` is an optimal full coupling.
    """
    d = np.asarray(dist, dtype=float)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    m = float(mu.sum())
    if abs(m - float(nu.sum())) > 1e-9:
        raise ValueError("prokhorov distance requires equal total masses")
    rows = np.flatnonzero(mu > 0.0)
    cols = np.flatnonzero(nu > 0.0)
    sub = d[np.ix_(rows, cols)]
    thresholds = np.unique(np.concatenate(([0.0], sub.ravel())))

    def flow_at(t: float) -> float:
        return max_flow_value(mu[rows], nu[cols], sub <= t + 1e-12)

    def feasible(t: float) -> bool:
        return flow_at(t) >= m - t - tol

    hi = len(thresholds) - 1
    if not feasible(thresholds[hi]):
        raise InternalInvariantError("prokhorov search lost feasibility at the diameter")
    if feasible(thresholds[0]):
        eps = float(thresholds[0])
    else:
        lo = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if feasible(thresholds[mid]):
                hi = mid
            else:
                lo = mid
        gap = m - flow_at(thresholds[lo])
        eps = float(min(thresholds[hi], max(thresholds[lo], gap)))
    _, sub_plan = max_flow(mu[rows], nu[cols], sub <= eps + 1e-12)
    plan = np.zeros_like(d)
    plan[np.ix_(rows, cols)] = sub_plan
    return eps, completion(plan, mu, nu)
