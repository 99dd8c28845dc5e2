"""Exhaustive branch-and-bound path oracles used only by the test suite.

Deliberately independent of the solver implementations: plain DFS over
simple paths with monotone-cost pruning. Prefixes are cut only when they
already exceed the incumbent strictly, so every optimal (and tied) path is
still visited; ties resolve by (objective, time, path cells).
"""

from __future__ import annotations

import math


def _dfs_best(graph, start, goal, node_value, better, bound_exceeded):
    """Generic simple-path DFS keeping the best (value, time, path) tuple.

    node_value(acc, v, j) returns the accumulated objective after stepping
    along edge j to v; bound_exceeded(acc, best_value) cuts the prefix.
    """
    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()
    etime = graph.etime.tolist()

    best = None
    path = [start]
    accs = [node_value(None, start, None)]
    times = [0.0]
    visited = 1 << start
    stack = [indptr[start]]
    while stack:
        j = stack[-1]
        u = path[-1]
        if j >= indptr[u + 1]:
            stack.pop()
            path.pop()
            accs.pop()
            times.pop()
            if path:
                visited &= ~(1 << u)
                stack[-1] += 1
            continue
        v = nbr[j]
        if visited & (1 << v):
            stack[-1] += 1
            continue
        acc = node_value(accs[-1], v, j)
        if best is not None and bound_exceeded(acc, best[0]):
            stack[-1] += 1
            continue
        t = times[-1] + etime[j]
        if v == goal:
            cand = (acc, t, tuple(graph.cell_of(n) for n in path) + (graph.cell_of(v),))
            if best is None or better(cand, best):
                best = cand
            stack[-1] += 1
            continue
        path.append(v)
        accs.append(acc)
        times.append(t)
        visited |= 1 << v
        stack.append(indptr[v])
    return best


def min_logrisk_path(graph, start, goal):
    """(log_risk, time, cells) of the exhaustive minimum-log-risk path."""
    lrisk = graph.node_log_risk.tolist()
    return _dfs_best(
        graph, start, goal,
        node_value=lambda acc, v, j: 0.0 if acc is None else acc + lrisk[v],
        better=lambda cand, best: cand < best,
        bound_exceeded=lambda acc, best: acc > best,
    )


def max_survival_path(graph, risk_form_raster, start, goal):
    """(negated survival, time, cells) of the exhaustive max-survival path."""
    rform = risk_form_raster
    cells = [graph.cell_of(v) for v in range(graph.node_count)]
    surv = [1.0 - rform[c] for c in cells]

    # store survival positively, compare negated so tuple ordering matches min
    best = _dfs_best(
        graph, start, goal,
        node_value=lambda acc, v, j: 1.0 if acc is None else acc * surv[v],
        better=lambda cand, best: (-cand[0], cand[1], cand[2]) < (-best[0], best[1], best[2]),
        bound_exceeded=lambda acc, best: acc < best,
    )
    return best


def min_time_path_under_ceiling(graph, rform_by_node, ceiling, start, goal):
    """(time, time, cells) minimum-time path over cells at or under the ceiling."""
    etime = graph.etime.tolist()
    allowed = [r <= ceiling + 1e-12 for r in rform_by_node]
    if not (allowed[start] and allowed[goal]):
        return None

    indptr = graph.indptr.tolist()
    nbr = graph.nbr.tolist()

    best = None
    path = [start]
    times = [0.0]
    visited = 1 << start
    stack = [indptr[start]]
    while stack:
        j = stack[-1]
        u = path[-1]
        if j >= indptr[u + 1]:
            stack.pop()
            path.pop()
            times.pop()
            if path:
                visited &= ~(1 << u)
                stack[-1] += 1
            continue
        v = nbr[j]
        if (visited & (1 << v)) or not allowed[v]:
            stack[-1] += 1
            continue
        t = times[-1] + etime[j]
        if best is not None and t > best[0]:
            stack[-1] += 1
            continue
        if v == goal:
            cand = (t, t, tuple(graph.cell_of(n) for n in path) + (graph.cell_of(v),))
            if best is None or cand < best:
                best = cand
            stack[-1] += 1
            continue
        path.append(v)
        times.append(t)
        visited |= 1 << v
        stack.append(indptr[v])
    return best


def min_balanced_cost_path(graph, start, goal, alpha, t_ref, l_ref):
    """Exhaustive minimum of alpha*T/T_ref + (1-alpha)*L/L_ref."""
    lrisk = graph.node_log_risk.tolist()
    etime = graph.etime.tolist()

    def value(acc, v, j):
        if acc is None:
            return 0.0
        return acc + alpha * etime[j] / t_ref + (1.0 - alpha) * lrisk[v] / l_ref

    return _dfs_best(
        graph, start, goal,
        node_value=value,
        better=lambda cand, best: cand < best,
        bound_exceeded=lambda acc, best: acc > best,
    )
