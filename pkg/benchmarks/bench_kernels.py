"""Times the two hot kernels under the JIT and the plain-Python paths.

The compiled functions and their interpreted sources live side by side in
``linsemid._accel``, so both paths run on identical inputs here.  Invoke as

    python benchmarks/bench_kernels.py [--graphs 200] [--nodes 9]

Setting ``LINSEMID_NO_NUMBA=1`` makes the whole package use the interpreted
path; this script always times both.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from linsemid import _accel
from linsemid.flow import build_flow_network
from linsemid.graph import EdgeSet
from linsemid.oracle import EnsembleConfig, ensemble_models


def collect_flow_inputs(n_graphs, n_nodes):
    nets = []
    cfg = EnsembleConfig(n=n_nodes, p_directed=0.4, p_bidirected=0.3, seed=99, draws=n_graphs)
    for _, (g, _) in ensemble_models(cfg):
        for v in range(g.n):
            incoming = g.incoming(v)
            if not incoming:
                continue
            pool = [y for y in range(g.n) if y != v and y not in g.siblings(v)]
            if not pool:
                continue
            nets.append(build_flow_network(g, EdgeSet(v, incoming), pool))
    return nets


def collect_ctree_inputs(n_graphs, n_nodes):
    items = []
    cfg = EnsembleConfig(n=n_nodes, p_directed=0.35, p_bidirected=0.3, seed=98, draws=n_graphs)
    for _, (g, _) in ensemble_models(cfg):
        child_mask = np.zeros(g.n, np.int64)
        sib_mask = np.zeros(g.n, np.int64)
        for e in g.directed:
            child_mask[e.tail] |= np.int64(1) << e.head
        for a, b in g.bidirected:
            sib_mask[a] |= np.int64(1) << b
            sib_mask[b] |= np.int64(1) << a
        for y in range(g.n):
            anc_mask = np.int64(0)
            for v in g.ancestors(y):
                anc_mask |= np.int64(1) << v
            items.append((np.int64(y), anc_mask, child_mask, sib_mask))
    return items


def time_flow(func, nets):
    caps = [net.arc_cap.copy() for net in nets]
    start = time.perf_counter()
    total = 0
    for net, cap in zip(nets, caps):
        total += func(net.adj_start, net.adj_arc, net.arc_to, cap, net.n_nodes, net.source, net.sink)
    return time.perf_counter() - start, total


def time_ctree(func, items):
    start = time.perf_counter()
    hits = 0
    for y, anc, child, sib in items:
        if func(y, anc, child, sib):
            hits += 1
    return time.perf_counter() - start, hits


def main():
    parser = argparse.ArgumentParser(description="Benchmark JIT vs interpreted kernels")
    parser.add_argument("--graphs", type=int, default=200)
    parser.add_argument("--nodes", type=int, default=9)
    args = parser.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba not installed: timing the interpreted path against itself")
    jit_flow = _accel.maybe_njit(_accel._max_flow_py) if _accel.USE_NUMBA else _accel.max_flow
    jit_ctree = _accel.maybe_njit(_accel._rooted_ctree_py) if _accel.USE_NUMBA else _accel.rooted_ctree

    nets = collect_flow_inputs(args.graphs, args.nodes)
    items = collect_ctree_inputs(args.graphs, min(args.nodes, 12))
    print(f"inputs: {len(nets)} flow networks, {len(items)} tree queries "
          f"({args.graphs} graphs, {args.nodes} nodes)")

    # warm-up triggers compilation so it is not billed to the timing run
    if nets:
        time_flow(jit_flow, nets[:1])
    if items:
        time_ctree(jit_ctree, items[:1])

    t_jit, total_jit = time_flow(jit_flow, nets)
    t_py, total_py = time_flow(_accel._max_flow_py, nets)
    assert total_jit == total_py, "flow kernels disagree"
    print(f"max-flow     jit: {t_jit:8.4f}s   python: {t_py:8.4f}s   "
          f"speedup: {t_py / max(t_jit, 1e-9):6.1f}x   (total flow {total_jit})")

    t_jit, hits_jit = time_ctree(jit_ctree, items)
    t_py, hits_py = time_ctree(_accel._rooted_ctree_py, items)
    assert hits_jit == hits_py, "tree kernels disagree"
    print(f"rooted-tree  jit: {t_jit:8.4f}s   python: {t_py:8.4f}s   "
          f"speedup: {t_py / max(t_jit, 1e-9):6.1f}x   (trees found {hits_jit})")


if __name__ == "__main__":
    main()
