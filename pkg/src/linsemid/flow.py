"""Half-trek system search as unit-capacity max flow.

For a candidate source pool ``A`` and a target edge set ``E`` with head
``v``, a flow of value ``|E|`` certifies a system of half-treks from some
``Y``, a subset of ``A``, onto the tails of ``E`` whose right-hand vertex
sets are pairwise disjoint.  Right-side vertex disjointness is enforced by
splitting every right copy into an in/out pair joined by a capacity-one
arc; a half-trek that starts with a bidirected edge skips its own right
copy by entering at the sibling instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .graph import EdgeSet, MixedGraph


@dataclass
class FlowNetwork:
    """Residual arc-list network; arc ``a ^ 1`` reverses arc ``a``."""

    n_nodes: int
    source: int
    sink: int
    adj_start: np.ndarray
    adj_arc: np.ndarray
    arc_to: np.ndarray
    arc_cap: np.ndarray
    pool: tuple[int, ...]
    source_arc: dict[int, int]


def build_flow_network(g: MixedGraph, edge_set: EdgeSet, pool) -> FlowNetwork:
    """Layered network: source -> left copies of ``pool`` -> right in/out
    copies of all nodes -> sink at the tails of ``edge_set``.

    Arc order is fixed by node ordinal so the augmenting search (and hence
    the returned source set) is reproducible.
    """
    n = g.n
    pool = tuple(sorted(pool))
    source, sink = 0, 1

    def left(y):
        return 2 + y

    def rin(w):
        return 2 + n + w

    def rout(w):
        return 2 + 2 * n + w

    n_nodes = 2 + 3 * n
    arcs: list[tuple[int, int]] = []
    source_arc: dict[int, int] = {}

    def add(u, v):
        arcs.append((u, v))

    for y in pool:
        source_arc[y] = 2 * len(arcs)
        add(source, left(y))
    for y in pool:
        add(left(y), rin(y))
        for s in g.siblings(y):
            add(left(y), rin(s))
    for w in range(n):
        add(rin(w), rout(w))
    for e in g.directed:
        add(rout(e.tail), rin(e.head))
    for t in edge_set.tails:
        add(rout(t), sink)

    m = len(arcs)
    arc_to = np.empty(2 * m, np.int32)
    arc_cap = np.empty(2 * m, np.int32)
    arc_from = np.empty(2 * m, np.int32)
    for i, (u, v) in enumerate(arcs):
        arc_to[2 * i] = v
        arc_cap[2 * i] = 1
        arc_from[2 * i] = u
        arc_to[2 * i + 1] = u
        arc_cap[2 * i + 1] = 0
        arc_from[2 * i + 1] = v

    order = np.argsort(arc_from, kind="stable").astype(np.int32)
    adj_start = np.zeros(n_nodes + 1, np.int32)
    np.add.at(adj_start, arc_from + 1, 1)
    adj_start = np.cumsum(adj_start).astype(np.int32)

    return FlowNetwork(
        n_nodes=n_nodes,
        source=source,
        sink=sink,
        adj_start=adj_start,
        adj_arc=order,
        arc_to=arc_to,
        arc_cap=arc_cap,
        pool=pool,
        source_arc=source_arc,
    )


def max_flow_admissible(g: MixedGraph, edge_set: EdgeSet, pool) -> tuple[int, ...] | None:
    """Return a source set ``Y`` of size ``|edge_set|`` drawn from ``pool``
    that realizes a vertex-disjoint half-trek system onto the tails, or
    ``None`` if the max flow falls short."""
    if len(pool) < len(edge_set.edges):
        return None
    net = build_flow_network(g, edge_set, pool)
    value = _accel.max_flow(
        net.adj_start, net.adj_arc, net.arc_to, net.arc_cap, net.n_nodes, net.source, net.sink
    )
    if value != len(edge_set.edges):
        return None
    return tuple(y for y in net.pool if net.arc_cap[net.source_arc[y]] == 0)
