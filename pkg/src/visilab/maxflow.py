"""Exact integer max-flow / min-cut on adjacency lists (FIFO push-relabel).

Capacities are int64 (the cut metric's 2^40-scaled weights fit comfortably).
The solver runs phase 1 only: the returned flow value equals the min cut,
and after the final relabel the nodes that cannot reach the sink in the
residual graph form the source side of a minimum cut.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNREACHED_FACTOR = 2  # label sentinel: 2 * nnodes


@njit(cache=True)
def build_arcs(U, V, C, CR, nnodes):
    m = len(U)
    to = np.empty(2 * m, np.int64)
    cap = np.empty(2 * m, np.int64)
    nxt = np.full(2 * m, -1, np.int64)
    head = np.full(nnodes, -1, np.int64)
    for i in range(m):
        e = 2 * i
        to[e] = V[i]
        cap[e] = C[i]
        nxt[e] = head[U[i]]
        head[U[i]] = e
        to[e + 1] = U[i]
        cap[e + 1] = CR[i]
        nxt[e + 1] = head[V[i]]
        head[V[i]] = e + 1
    return head, nxt, to, cap


@njit(cache=True)
def _global_relabel(head, nxt, to, cap, d, s, t, n, bfsq):
    two_n = UNREACHED_FACTOR * n
    for i in range(n):
        d[i] = two_n
    d[t] = 0
    bfsq[0] = t
    qh, qt = 0, 1
    while qh < qt:
        v = bfsq[qh]
        qh += 1
        e = head[v]
        while e != -1:
            u = to[e]
            if cap[e ^ 1] > 0 and d[u] == two_n:
                d[u] = d[v] + 1
                bfsq[qt] = u
                qt += 1
            e = nxt[e]
    d[s] = n


@njit(cache=True)
def pr_maxflow(head, nxt, to, cap, s, t, n):
    """Returns (flow, labels); labels == 2n marks the source side of a min cut."""
    two_n = UNREACHED_FACTOR * n
    d = np.empty(n, np.int64)
    excess = np.zeros(n, np.int64)
    cur = np.empty(n, np.int64)
    bfsq = np.empty(n, np.int64)
    ring = np.empty(n + 2, np.int64)
    rcap = n + 2
    inq = np.zeros(n, np.uint8)
    cnt = np.zeros(two_n + 2, np.int64)

    _global_relabel(head, nxt, to, cap, d, s, t, n, bfsq)
    for i in range(n):
        cur[i] = head[i]
        cnt[d[i]] += 1

    qh, qt = 0, 0
    e = head[s]
    while e != -1:
        if cap[e] > 0:
            v = to[e]
            excess[v] += cap[e]
            cap[e ^ 1] += cap[e]
            cap[e] = 0
            if v != t and v != s and inq[v] == 0:
                ring[qt % rcap] = v
                qt += 1
                inq[v] = 1
        e = nxt[e]

    work = 0
    budget = 8 * n
    while qh < qt:
        v = ring[qh % rcap]
        qh += 1
        inq[v] = 0
        if excess[v] == 0 or d[v] >= n:
            continue
        while excess[v] > 0 and d[v] < n:
            e = cur[v]
            if e == -1:
                old = d[v]
                newd = two_n
                ee = head[v]
                while ee != -1:
                    if cap[ee] > 0 and d[to[ee]] + 1 < newd:
                        newd = d[to[ee]] + 1
                    ee = nxt[ee]
                    work += 1
                cnt[old] -= 1
                if cnt[old] == 0 and old < n:
                    # gap heuristic: labels above a hole can never reach t
                    for u in range(n):
                        if u != s and old < d[u] < n:
                            cnt[d[u]] -= 1
                            d[u] = n + 1
                            cnt[n + 1] += 1
                    if newd > n + 1:
                        newd = n + 1
                d[v] = newd
                cnt[newd] += 1
                cur[v] = head[v]
            else:
                u = to[e]
                if cap[e] > 0 and d[v] == d[u] + 1:
                    f = excess[v] if excess[v] < cap[e] else cap[e]
                    cap[e] -= f
                    cap[e ^ 1] += f
                    excess[v] -= f
                    excess[u] += f
                    if u != s and u != t and inq[u] == 0:
                        ring[qt % rcap] = u
                        qt += 1
                        inq[u] = 1
                else:
                    cur[v] = nxt[e]
                    work += 1
        if work > budget:
            work = 0
            _global_relabel(head, nxt, to, cap, d, s, t, n, bfsq)
            for i in range(two_n + 2):
                cnt[i] = 0
            for i in range(n):
                cur[i] = head[i]
                cnt[d[i]] += 1
            qh, qt = 0, 0
            for u in range(n):
                inq[u] = 0
            for u in range(n):
                if u != s and u != t and excess[u] > 0 and d[u] < n:
                    ring[qt % rcap] = u
                    qt += 1
                    inq[u] = 1
    _global_relabel(head, nxt, to, cap, d, s, t, n, bfsq)
    return excess[t], d


def solve_min_cut(U, V, C, CR, nnodes, s, t):
    """Min cut value and source-side membership for the given undirected arc list."""
    U = np.ascontiguousarray(U, dtype=np.int64)
    V = np.ascontiguousarray(V, dtype=np.int64)
    C = np.ascontiguousarray(C, dtype=np.int64)
    CR = np.ascontiguousarray(CR, dtype=np.int64)
    total = int(C.sum()) + int(CR.sum())
    if total >= (1 << 61):
        raise OverflowError("total capacity exceeds the int64 safety budget")
    if len(U) == 0:
        return 0, np.zeros(nnodes, dtype=bool)
    head, nxt, to, cap = build_arcs(U, V, C, CR, nnodes)
    flow, d = pr_maxflow(head, nxt, to, cap, s, t, nnodes)
    source_side = np.asarray(d) >= UNREACHED_FACTOR * nnodes
    source_side[s] = True
    source_side[t] = False
    return int(flow), source_side
