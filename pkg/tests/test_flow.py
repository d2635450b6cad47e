import numpy as np
from hypothesis import given, settings

from linsemid import _accel
from linsemid.flow import build_flow_network, max_flow_admissible
from linsemid.fixtures import chain_graph, iv_graph
from linsemid.graph import EdgeSet, MixedGraph
from linsemid.oracle import brute_system_exists

from conftest import mixed_graphs


def edge_set_into(g, head_name):
    v = g.node_id(head_name)
    return EdgeSet(v, g.incoming(v))


def test_chain_single_path():
    g = chain_graph()
    es = edge_set_into(g, "y")  # tails: {x}
    assert max_flow_admissible(g, es, [g.node_id("z")]) == (g.node_id("z"),)


def test_empty_pool_fails():
    g = chain_graph()
    assert max_flow_admissible(g, edge_set_into(g, "y"), []) is None


def test_iv_instrument_found():
    g = iv_graph()
    es = edge_set_into(g, "y")
    assert max_flow_admissible(g, es, [g.node_id("z")]) == (g.node_id("z"),)
    assert brute_system_exists(g, [g.node_id("z")], list(es.tails))


def test_shared_intermediate_blocks_second_unit():
    # s -> a -> {p, q} -> v: covering both p and q from {s, a} would route
    # two paths through a's right copy.
    g = MixedGraph(
        ["s", "a", "p", "q", "v"],
        [
            ("s", "a", "e1"),
            ("a", "p", "e2"),
            ("a", "q", "e3"),
            ("p", "v", "e4"),
            ("q", "v", "e5"),
        ],
    )
    es = edge_set_into(g, "v")
    pool = [g.node_id("s"), g.node_id("a")]
    assert max_flow_admissible(g, es, pool) is None
    assert not brute_system_exists(g, pool, list(es.tails))


def test_bidirected_start_skips_own_right_copy():
    # y <-> s with s in Ta(E): the bare bidirected arc is a valid system.
    g = MixedGraph(["y", "s", "v"], [("s", "v", "e")], [("y", "s")])
    es = edge_set_into(g, "v")
    assert max_flow_admissible(g, es, [g.node_id("y")]) == (g.node_id("y"),)


def test_low_ordinal_source_preferred():
    # Both z and x can cover x; the search should settle on the lower ordinal.
    g = chain_graph()
    es = edge_set_into(g, "y")
    pool = [g.node_id("z"), g.node_id("x")]
    assert max_flow_admissible(g, es, pool) == (g.node_id("z"),)


def test_network_shape():
    g = iv_graph()
    es = edge_set_into(g, "y")
    net = build_flow_network(g, es, [g.node_id("z")])
    assert net.n_nodes == 2 + 3 * g.n
    # one source arc, capacity 1
    arc = net.source_arc[g.node_id("z")]
    assert net.arc_cap[arc] == 1 and net.arc_cap[arc ^ 1] == 0


@settings(max_examples=100, deadline=None)
@given(mixed_graphs(max_nodes=5))
def test_flow_agrees_with_brute_system_search(g):
    for v in range(g.n):
        incoming = g.incoming(v)
        if not incoming:
            continue
        es = EdgeSet(v, incoming)
        pool = [y for y in range(g.n) if y != v and y not in g.siblings(v)]
        got = max_flow_admissible(g, es, pool)
        expected = brute_system_exists(g, pool, list(es.tails))
        assert (got is not None) == expected, (g.to_dict(), v)
        if got is not None:
            assert len(got) == len(es.edges)
            assert set(got) <= set(pool)
            assert brute_system_exists(g, got, list(es.tails))


def test_python_and_jit_paths_agree():
    # The jitted kernel and its plain-Python source must produce identical
    # flows and identical residual capacities.
    g = iv_graph()
    es = edge_set_into(g, "y")
    pool = [g.node_id("z")]
    net1 = build_flow_network(g, es, pool)
    net2 = build_flow_network(g, es, pool)
    v1 = _accel.max_flow(
        net1.adj_start, net1.adj_arc, net1.arc_to, net1.arc_cap, net1.n_nodes, net1.source, net1.sink
    )
    v2 = _accel._max_flow_py(
        net2.adj_start, net2.adj_arc, net2.arc_to, net2.arc_cap, net2.n_nodes, net2.source, net2.sink
    )
    assert v1 == v2 == 1
    assert np.array_equal(net1.arc_cap, net2.arc_cap)
