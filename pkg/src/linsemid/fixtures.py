"""Reference graphs used across the test suite and CLI examples.

The three larger fixtures were constructed so that each exhibits one
specific capability gap between identification strategies; the properties
claimed here are asserted by tests/test_fixtures.py.
"""

from __future__ import annotations

from .graph import MixedGraph


def chain_graph() -> MixedGraph:
    """z -> x -> y, no confounding; every coefficient is a regression."""
    return MixedGraph(["z", "x", "y"], [("z", "x", "a"), ("x", "y", "b")])


def iv_graph() -> MixedGraph:
    """z -> x -> y with x <-> y: the classic instrument layout."""
    return MixedGraph(
        ["z", "x", "y"],
        [("z", "x", "a"), ("x", "y", "b")],
        [("x", "y")],
    )


def bow_graph() -> MixedGraph:
    """x -> y with x <-> y: the canonical non-identifiable pattern."""
    return MixedGraph(["x", "y"], [("x", "y", "b")], [("x", "y")])


def subset_identifiable_graph() -> MixedGraph:
    """Four nodes where an edge is recoverable only as a strict subset of
    its connected edge set.

    V2 -> V3 ("b") and V4 -> V3 ("d") form one connected edge set because
    V4 -> V2 links their tails.  The set as a whole has no admissible
    sources (nothing besides the head's sibling V4 has a half-trek to V4),
    so whole-set identification fails and "d" is unrecoverable outright.
    The subset {b} succeeds with source V1: V1 has no half-trek to V4 and
    its only path to V4 collides at V2, so its plain covariance row is
    clean.
    """
    return MixedGraph(
        ["V1", "V2", "V3", "V4"],
        [
            ("V1", "V2", "a"),
            ("V2", "V3", "b"),
            ("V4", "V2", "c"),
            ("V4", "V3", "d"),
        ],
        [("V3", "V4")],
    )


def sequential_identifiable_graph() -> MixedGraph:
    """Four nodes where one edge unlocks another.

    "a" (V1 -> V3) shares its connected edge set with the unrecoverable
    "c" (V4 -> V3; both of V3's other potential sources V2, V4 are its
    siblings), so whole-set strategies never recover it.  V1 itself is
    half-trek reachable from V3 (through V3 <-> V4 -> V1), hence usable
    only once its incoming "b" (V4 -> V1) is known; "b" falls first to
    source V2, and then V1 certifies "a" alone.
    """
    return MixedGraph(
        ["V1", "V2", "V3", "V4"],
        [
            ("V1", "V3", "a"),
            ("V4", "V1", "b"),
            ("V4", "V3", "c"),
            ("V2", "V4", "d"),
        ],
        [("V3", "V4"), ("V2", "V3")],
    )


def decomposition_required_graph() -> MixedGraph:
    """Six nodes, one bidirected component, where the half-trek sweep alone
    recovers only "a" but decomposition recovers everything.

    Dropping the childless v6 splits the bidirected part into {v2, v3, v5}
    and {v1, v4}; each resulting sub-model is fully identifiable (v4's
    exogenized parents are independent there, and v5 frees itself from v4's
    interference).  With all other coefficients known, v3, v4 and v5 become
    usable sources back in the full graph and certify "h" in a later
    fixpoint round.  No subset of v5's ancestors forms a confounded in-tree
    rooted at v5, so its incoming edges are identifiable, matching what the
    decomposition delivers.
    """
    return MixedGraph(
        ["v1", "v2", "v3", "v4", "v5", "v6"],
        [
            ("v1", "v2", "a"),
            ("v1", "v3", "b"),
            ("v2", "v3", "c"),
            ("v2", "v4", "d"),
            ("v3", "v4", "e"),
            ("v4", "v5", "f"),
            ("v1", "v5", "g"),
            ("v5", "v6", "h"),
        ],
        [
            ("v1", "v4"),
            ("v2", "v3"),
            ("v2", "v5"),
            ("v1", "v6"),
            ("v2", "v6"),
        ],
    )


FIXTURES = {
    "chain": chain_graph,
    "iv": iv_graph,
    "bow": bow_graph,
    "subset-gain": subset_identifiable_graph,
    "sequential-gain": sequential_identifiable_graph,
    "decomposition-gain": decomposition_required_graph,
}
