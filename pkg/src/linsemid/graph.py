"""Mixed graphs (directed + bidirected edges) and the structural queries
used throughout coefficient identification.

Nodes are dense ordinals 0..n-1 with unique display names.  Directed edges
carry a label naming their structural coefficient; bidirected edges mark
correlated error terms.  All query results are deterministic: sets are
computed from ordinal-sorted adjacency, so repeated runs produce identical
output.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator


class GraphFormatError(ValueError):
    """Raised for malformed graph input; message carries the offending position."""


class CyclicGraphError(ValueError):
    """Raised when an operation requires an acyclic directed part."""


@dataclass(frozen=True)
class DirectedEdge:
    tail: int
    head: int
    label: str


@dataclass(frozen=True)
class EdgeSet:
    """A nonempty set of directed edges sharing one head, ordered by tail ordinal."""

    head: int
    edges: tuple[DirectedEdge, ...]

    def __post_init__(self):
        if not self.edges:
            raise ValueError("edge set must be nonempty")
        if any(e.head != self.head for e in self.edges):
            raise ValueError("edge set mixes heads")
        tails = [e.tail for e in self.edges]
        if len(set(tails)) != len(tails):
            raise ValueError("edge set repeats a tail")

    @property
    def tails(self) -> tuple[int, ...]:
        return tuple(e.tail for e in self.edges)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.edges)


class MixedGraph:
    """Immutable causal structure ``(V, D, B)``.

    Construction validates names, rejects self-loops, duplicate edges and
    duplicate labels.  All relational queries (parents, descendants,
    half-trek reach, ...) are pure; derived tables are cached lazily.
    """

    def __init__(
        self,
        names: Iterable[str],
        directed: Iterable[tuple[str, str, str]] = (),
        bidirected: Iterable[tuple[str, str]] = (),
    ):
        self.names: tuple[str, ...] = tuple(names)
        if not all(self.names):
            raise GraphFormatError("nodes: names must be nonempty strings")
        if len(set(self.names)) != len(self.names):
            dup = next(n for i, n in enumerate(self.names) if n in self.names[:i])
            raise GraphFormatError(f"nodes: duplicate name {dup!r}")
        self._index = {name: i for i, name in enumerate(self.names)}

        dir_edges: list[DirectedEdge] = []
        seen_pairs: set[tuple[int, int]] = set()
        seen_labels: set[str] = set()
        for pos, (tail, head, label) in enumerate(directed):
            t, h = self._resolve(tail, f"directed[{pos}]"), self._resolve(head, f"directed[{pos}]")
            if t == h:
                raise GraphFormatError(f"directed[{pos}]: self-loop on {tail!r}")
            if (t, h) in seen_pairs:
                raise GraphFormatError(f"directed[{pos}]: duplicate edge {tail!r}->{head!r}")
            if not label:
                raise GraphFormatError(f"directed[{pos}]: empty label")
            if label in seen_labels:
                raise GraphFormatError(f"directed[{pos}]: duplicate label {label!r}")
            seen_pairs.add((t, h))
            seen_labels.add(label)
            dir_edges.append(DirectedEdge(t, h, label))

        bi_edges: set[frozenset[int]] = set()
        for pos, (a, b) in enumerate(bidirected):
            x, y = self._resolve(a, f"bidirected[{pos}]"), self._resolve(b, f"bidirected[{pos}]")
            if x == y:
                raise GraphFormatError(f"bidirected[{pos}]: self-loop on {a!r}")
            pair = frozenset((x, y))
            if pair in bi_edges:
                raise GraphFormatError(f"bidirected[{pos}]: duplicate edge {a!r}<->{b!r}")
            bi_edges.add(pair)

        self.directed: tuple[DirectedEdge, ...] = tuple(
            sorted(dir_edges, key=lambda e: (e.tail, e.head))
        )
        self.bidirected: tuple[tuple[int, int], ...] = tuple(
            sorted(tuple(sorted(p)) for p in bi_edges)
        )

        n = len(self.names)
        self._pa: list[tuple[int, ...]] = [()] * n
        self._ch: list[tuple[int, ...]] = [()] * n
        self._sib: list[tuple[int, ...]] = [()] * n
        pa = [[] for _ in range(n)]
        ch = [[] for _ in range(n)]
        sib = [[] for _ in range(n)]
        for e in self.directed:
            pa[e.head].append(e.tail)
            ch[e.tail].append(e.head)
        for x, y in self.bidirected:
            sib[x].append(y)
            sib[y].append(x)
        for i in range(n):
            self._pa[i] = tuple(sorted(pa[i]))
            self._ch[i] = tuple(sorted(ch[i]))
            self._sib[i] = tuple(sorted(sib[i]))

        self._edge_by_pair = {(e.tail, e.head): e for e in self.directed}
        self._label_to_edge = {e.label: e for e in self.directed}
        self._topo: tuple[int, ...] | None = None
        self._de_cache: dict[int, frozenset[int]] = {}
        self._htr_cache: dict[int, frozenset[int]] = {}
        self.acyclic: bool = self._check_acyclic()

    def _resolve(self, name: str, where: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GraphFormatError(f"{where}: unknown node {name!r}") from None

    # -- basic accessors ---------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.names)

    def node_id(self, name: str) -> int:
        return self._resolve(name, "node")

    def name_of(self, v: int) -> str:
        return self.names[v]

    def edge(self, tail: int, head: int) -> DirectedEdge | None:
        return self._edge_by_pair.get((tail, head))

    def edge_by_label(self, label: str) -> DirectedEdge:
        return self._label_to_edge[label]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(e.label for e in self.directed)

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise KeyError(f"unknown node ordinal {v}")

    def parents(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self._pa[v]

    def children(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self._ch[v]

    def siblings(self, v: int) -> tuple[int, ...]:
        self._check(v)
        return self._sib[v]

    def incoming(self, v: int) -> tuple[DirectedEdge, ...]:
        self._check(v)
        return tuple(self._edge_by_pair[(p, v)] for p in self._pa[v])

    # -- closures ----------------------------------------------------------

    def descendants(self, v: int) -> frozenset[int]:
        """Reflexive descendant set of ``v`` along directed edges."""
        self._check(v)
        cached = self._de_cache.get(v)
        if cached is not None:
            return cached
        seen = {v}
        stack = [v]
        while stack:
            for c in self._ch[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        result = frozenset(seen)
        self._de_cache[v] = result
        return result

    def ancestors(self, v: int) -> frozenset[int]:
        """Reflexive ancestor set of ``v`` along directed edges."""
        self._check(v)
        seen = {v}
        stack = [v]
        while stack:
            for p in self._pa[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return frozenset(seen)

    def half_trek_reachable(self, v: int) -> frozenset[int]:
        """Nodes reachable from ``v`` by a half-trek (never includes ``v``).

        A half-trek is a directed path, or a bidirected edge followed by a
        directed path (possibly empty).
        """
        self._check(v)
        cached = self._htr_cache.get(v)
        if cached is not None:
            return cached
        reach: set[int] = set()
        for c in self._ch[v]:
            reach |= self.descendants(c)
        for s in self._sib[v]:
            reach |= self.descendants(s)
        reach.discard(v)
        result = frozenset(reach)
        self._htr_cache[v] = result
        return result

    # -- path connectivity -------------------------------------------------

    def unblocked_connected(self, a: int, b: int, avoid: frozenset[int] | set[int] = frozenset()) -> bool:
        """True iff a collider-free path joins ``a`` and ``b`` without
        touching ``avoid``.

        With the empty conditioning set a path is unblocked exactly when it
        has no collider, so connectivity reduces to a two-state reachability
        search: a walk may leave backwards over directed edges or over one
        bidirected edge, after which only forward directed steps remain.
        """
        self._check(a)
        self._check(b)
        if a == b:
            raise ValueError("endpoints must differ")
        if a in avoid or b in avoid:
            raise ValueError("endpoints may not be in the avoid set")
        # State False: may still move "up" (backward edges / bidirected).
        # State True: arrived via an edge pointing in; only forward moves left.
        seen: set[tuple[int, bool]] = set()
        stack: list[tuple[int, bool]] = [(a, False)]
        while stack:
            node, came_in = stack.pop()
            if (node, came_in) in seen:
                continue
            seen.add((node, came_in))
            for c in self._ch[node]:
                if c == b:
                    return True
                if c not in avoid:
                    stack.append((c, True))
            if not came_in:
                for p in self._pa[node]:
                    if p == b:
                        return True
                    if p not in avoid:
                        stack.append((p, False))
                for s in self._sib[node]:
                    if s == b:
                        return True
                    if s not in avoid:
                        stack.append((s, True))
        return False

    def connected_edge_sets(self, v: int) -> tuple[EdgeSet, ...]:
        """Partition of ``v``'s incoming edges by unblocked connectivity of
        their tails (paths may not traverse ``v``)."""
        self._check(v)
        pa = self._pa[v]
        if not pa:
            return ()
        # Union-find over parents; merge when connected avoiding v.
        root = {p: p for p in pa}

        def find(x):
            while root[x] != x:
                root[x] = root[root[x]]
                x = root[x]
            return x

        for p, q in combinations(pa, 2):
            if find(p) != find(q) and self.unblocked_connected(p, q, frozenset({v})):
                root[find(q)] = find(p)
        blocks: dict[int, list[int]] = {}
        for p in pa:
            blocks.setdefault(find(p), []).append(p)
        out = []
        for tails in sorted(blocks.values()):
            out.append(EdgeSet(v, tuple(self._edge_by_pair[(t, v)] for t in sorted(tails))))
        return tuple(out)

    # -- bidirected components ----------------------------------------------

    def c_component(self, v: int) -> frozenset[int]:
        """Bidirected-connected component containing ``v`` (reflexive)."""
        self._check(v)
        seen = {v}
        stack = [v]
        while stack:
            for s in self._sib[stack.pop()]:
                if s not in seen:
                    seen.add(s)
                    stack.append(s)
        return frozenset(seen)

    def c_components(self) -> tuple[frozenset[int], ...]:
        """All bidirected components, ordered by smallest member ordinal."""
        remaining = set(range(self.n))
        out = []
        while remaining:
            v = min(remaining)
            comp = self.c_component(v)
            out.append(comp)
            remaining -= comp
        return tuple(out)

    # -- order and descendant-closed sets ------------------------------------

    def _check_acyclic(self) -> bool:
        try:
            self.topological_order()
            return True
        except CyclicGraphError:
            return False

    def topological_order(self) -> tuple[int, ...]:
        """Parents-before-children order, ties broken by ordinal."""
        if self._topo is not None:
            return self._topo
        indeg = {v: len(self._pa[v]) for v in range(self.n)}
        ready = sorted(v for v in range(self.n) if indeg[v] == 0)
        order: list[int] = []
        heapq.heapify(ready)
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self._ch[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != self.n:
            member = min(v for v in range(self.n) if indeg[v] > 0)
            raise CyclicGraphError(f"directed part has a cycle through {self.names[member]!r}")
        self._topo = tuple(order)
        return self._topo

    def descendant_sets(self) -> Iterator[frozenset[int]]:
        """Yield every nonempty, proper, descendant-closed subset of V,
        smallest first, ties by sorted member ordinals."""
        if not self.acyclic:
            raise CyclicGraphError("descendant sets require an acyclic graph")
        n = self.n
        de_mask = [0] * n
        for v in range(n):
            for d in self.descendants(v):
                de_mask[v] |= 1 << d
        closed: list[tuple[int, list[int], int]] = []
        full = (1 << n) - 1
        for mask in range(1, full):
            members = [v for v in range(n) if mask >> v & 1]
            if all(de_mask[v] & ~mask == 0 for v in members):
                closed.append((len(members), members, mask))
        closed.sort(key=lambda item: (item[0], item[1]))
        for _, members, _ in closed:
            yield frozenset(members)

    # -- surgery -------------------------------------------------------------

    def induced_subgraph(self, keep: Iterable[int]) -> "MixedGraph":
        """Subgraph on ``keep``; edge labels are preserved."""
        keep_set = set(keep)
        names = [self.names[v] for v in sorted(keep_set)]
        directed = [
            (self.names[e.tail], self.names[e.head], e.label)
            for e in self.directed
            if e.tail in keep_set and e.head in keep_set
        ]
        bidirected = [
            (self.names[x], self.names[y])
            for x, y in self.bidirected
            if x in keep_set and y in keep_set
        ]
        return MixedGraph(names, directed, bidirected)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.names),
            "directed": [[self.names[e.tail], self.names[e.head], e.label] for e in self.directed],
            "bidirected": [[self.names[x], self.names[y]] for x, y in self.bidirected],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MixedGraph":
        if not isinstance(data, dict):
            raise GraphFormatError("graph: expected a JSON object")
        for key in ("nodes",):
            if key not in data:
                raise GraphFormatError(f"graph: missing key {key!r}")
        nodes = data["nodes"]
        if not isinstance(nodes, list) or not all(isinstance(x, str) for x in nodes):
            raise GraphFormatError("nodes: expected a list of strings")
        directed = []
        for pos, item in enumerate(data.get("directed", [])):
            if not (isinstance(item, list) and len(item) == 3 and all(isinstance(x, str) for x in item)):
                raise GraphFormatError(f"directed[{pos}]: expected [tail, head, label]")
            directed.append(tuple(item))
        bidirected = []
        for pos, item in enumerate(data.get("bidirected", [])):
            if not (isinstance(item, list) and len(item) == 2 and all(isinstance(x, str) for x in item)):
                raise GraphFormatError(f"bidirected[{pos}]: expected [a, b]")
            bidirected.append(tuple(item))
        return cls(nodes, directed, bidirected)

    @classmethod
    def from_json(cls, text: str) -> "MixedGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"graph: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    def __repr__(self) -> str:
        return (
            f"MixedGraph({self.n} nodes, {len(self.directed)} directed, "
            f"{len(self.bidirected)} bidirected)"
        )
