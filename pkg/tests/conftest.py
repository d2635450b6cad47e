import itertools

from hypothesis import strategies as st

from linsemid.graph import MixedGraph


@st.composite
def mixed_graphs(draw, max_nodes=6, acyclic=True):
    """Random small mixed graphs; directed part acyclic along the ordinal
    order unless requested otherwise."""
    n = draw(st.integers(min_value=2, max_value=max_nodes))
    names = [f"v{i}" for i in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    directed = []
    for a, b in pairs:
        pick = draw(st.sampled_from(["none", "fwd", "bwd"] if not acyclic else ["none", "fwd"]))
        if pick == "fwd":
            directed.append((names[a], names[b], f"{names[a]}->{names[b]}"))
        elif pick == "bwd":
            directed.append((names[b], names[a], f"{names[b]}->{names[a]}"))
    bidirected = [
        (names[a], names[b]) for a, b in pairs if draw(st.booleans())
    ]
    return MixedGraph(names, directed, bidirected)
