"""Optionally JIT-compiled inner kernels.

The two hot loops of the package live here: the unit-capacity max-flow
search (called once per candidate edge subset inside every identification
sweep) and the rooted confounded-tree subset search (called per node per
graph in ensemble checks).  Both are written in nopython-compatible style
so the exact same code runs compiled under numba or interpreted as plain
Python/numpy.

Set ``LINSEMID_NO_NUMBA=1`` to force the interpreted path; the results are
identical either way.  ``benchmarks/bench_kernels.py`` times both paths.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("LINSEMID_NO_NUMBA", "") not in ("1", "true", "yes")


def maybe_njit(func):
    if USE_NUMBA:
        return njit(cache=True)(func)
    return func


def _max_flow_py(adj_start, adj_arc, arc_to, arc_cap, n_nodes, source, sink):
    """Ford-Fulkerson on a residual arc list; arc ``a ^ 1`` reverses ``a``.

    Mutates ``arc_cap`` in place and returns the flow value.  Augmenting
    paths are found depth-first with arcs tried in CSR (ordinal) order, so
    low-ordinal sources are saturated first and the result is reproducible.
    """
    total = 0
    prev_arc = np.empty(n_nodes, np.int32)
    stack = np.empty(n_nodes, np.int32)
    ptr = np.empty(n_nodes, np.int32)
    while True:
        prev_arc[:] = -1
        prev_arc[source] = -2
        for u in range(n_nodes):
            ptr[u] = adj_start[u]
        depth = 0
        stack[0] = source
        found = False
        while depth >= 0:
            u = stack[depth]
            if u == sink:
                found = True
                break
            advanced = False
            while ptr[u] < adj_start[u + 1]:
                k = ptr[u]
                ptr[u] += 1
                a = adj_arc[k]
                v = arc_to[a]
                if arc_cap[a] > 0 and prev_arc[v] == -1:
                    prev_arc[v] = a
                    depth += 1
                    stack[depth] = v
                    advanced = True
                    break
            if not advanced:
                depth -= 1
        if not found:
            break
        bottleneck = np.int32(2 ** 30)
        v = sink
        while v != source:
            a = prev_arc[v]
            if arc_cap[a] < bottleneck:
                bottleneck = arc_cap[a]
            v = arc_to[a ^ 1]
        v = sink
        while v != source:
            a = prev_arc[v]
            arc_cap[a] -= bottleneck
            arc_cap[a ^ 1] += bottleneck
            v = arc_to[a ^ 1]
        total += int(bottleneck)
    return total


def _rooted_ctree_py(root, anc_mask, child_mask, sib_mask):
    """True iff some node subset T (|T| >= 2, root included, T within the
    root's ancestor mask) admits a directed in-tree toward ``root`` and is
    connected through bidirected edges.

    In an acyclic graph any choice of one in-T child per non-root node
    already forms an in-tree rooted at the only childless node, so existence
    reduces to a per-node "has a child inside T" test plus connectivity.
    Masks are int64 bitsets over node ordinals.
    """
    sub = anc_mask
    while True:
        t_mask = sub
        if (t_mask >> root) & 1:
            size = 0
            m = t_mask
            while m:
                size += 1
                m &= m - 1
            if size >= 2:
                ok = True
                m = t_mask & ~(np.int64(1) << root)
                while m:
                    low = m & (-m)
                    u = 0
                    while ((low >> u) & 1) == 0:
                        u += 1
                    if (child_mask[u] & t_mask) == 0:
                        ok = False
                        break
                    m &= m - 1
                if ok:
                    low = t_mask & (-t_mask)
                    seen = low
                    changed = True
                    while changed:
                        changed = False
                        m = seen
                        while m:
                            low = m & (-m)
                            u = 0
                            while ((low >> u) & 1) == 0:
                                u += 1
                            add = sib_mask[u] & t_mask & ~seen
                            if add:
                                seen |= add
                                changed = True
                            m &= m - 1
                    if seen == t_mask:
                        return True
        if sub == 0:
            return False
        sub = (sub - 1) & anc_mask


max_flow = maybe_njit(_max_flow_py)
rooted_ctree = maybe_njit(_rooted_ctree_py)
