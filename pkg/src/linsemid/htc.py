"""Half-trek identification: admissible-source search, the sweep algorithm,
and executable certificates.

A certificate for an edge set ``E`` with head ``v`` freezes, at search
time, everything estimation needs later: the source nodes ``Y``, a row kind
per source (``plain`` covariance row versus a row cleaned by subtracting
already-identified incoming coefficients of the source), the cleanup edge
list itself, and the context the covariance must be transformed into.
Evaluating the certificate against any covariance matrix yields a linear
system whose solution is the coefficient vector of ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .flow import max_flow_admissible
from .graph import EdgeSet, MixedGraph
from .linalg import CovarianceMatrix, solve

MODES = ("htc", "edge-set", "g-htc", "decomp")

ROOT_CONTEXT = "root"


class MissingDependencyError(KeyError):
    """A certificate was evaluated without values for its cleanup edges."""

    def __init__(self, labels):
        self.labels = tuple(sorted(labels))
        super().__init__(f"missing dependency values for edges: {', '.join(self.labels)}")


@dataclass(frozen=True)
class CertificateRow:
    """One equation of a certificate system.

    ``cleanup`` lists ``(parent name, edge label)`` pairs whose estimated
    coefficients are subtracted from the source's covariance row; incoming
    edges of the source that were unidentified when the certificate was
    issued are left out, which is equivalent to using a zero coefficient.
    """

    source: str
    kind: str  # "plain" | "cleaned"
    cleanup: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Certificate:
    head: str
    tails: tuple[str, ...]
    labels: tuple[str, ...]
    rows: tuple[CertificateRow, ...]
    dependencies: tuple[str, ...]
    context_id: str

    def to_dict(self) -> dict:
        return {
            "head": self.head,
            "edges": [[t, self.head, lab] for t, lab in zip(self.tails, self.labels)],
            "labels": list(self.labels),
            "sources": [r.source for r in self.rows],
            "row_kinds": [r.kind for r in self.rows],
            "cleanups": [[[p, lab] for p, lab in r.cleanup] for r in self.rows],
            "dependencies": list(self.dependencies),
            "context": self.context_id,
        }


@dataclass
class IdStatus:
    """Running identification state: identified edge labels plus the
    certificates in witness (dependency-consistent) order."""

    identified: set[str] = field(default_factory=set)
    certificates: list[Certificate] = field(default_factory=list)

    def copy(self) -> "IdStatus":
        return IdStatus(set(self.identified), list(self.certificates))


def _connected_to_any(g: MixedGraph, node: int, targets, avoid: frozenset[int]) -> bool:
    return any(node != q and g.unblocked_connected(node, q, avoid) for q in targets)


def allowed_nodes(g: MixedGraph, edge_set: EdgeSet, id_edges: set[str], *, strict_solved: bool = False) -> tuple[int, ...]:
    """Source pool for ``edge_set``: nodes that can head a half-trek system
    without contaminating the resulting linear system.

    Excluded outright: the head, its siblings, the head's other parents,
    and any node with a half-trek into one of those other parents (their
    cleaned rows would keep a nonzero column there).  A remaining node is
    allowed if it is unreachable from the head and unconnected to the other
    parents, or if every incoming edge of it that interferes (lies on a
    half-trek from the head or on an unblocked path to an other-parent) is
    already identified.

    ``strict_solved`` switches to the coarser rule used by whole-node
    identification: reachable sources must have all incoming edges
    identified.
    """
    v = edge_set.head
    ta = set(edge_set.tails)
    pvt = frozenset(set(g.parents(v)) - ta)
    avoid = frozenset({v})
    htr_v = g.half_trek_reachable(v)
    banned = {v} | set(g.siblings(v)) | pvt

    out = []
    for y in range(g.n):
        if y in banned:
            continue
        if g.half_trek_reachable(y) & pvt:
            continue
        in_htr = y in htr_v
        connected = _connected_to_any(g, y, pvt, avoid)
        if not in_htr and not connected:
            out.append(y)
            continue
        if strict_solved:
            if all(e.label in id_edges for e in g.incoming(y)):
                out.append(y)
            continue
        deps = interfering_edges(g, edge_set, y)
        if all(e.label in id_edges for e in deps):
            out.append(y)
    return tuple(out)


def interfering_edges(g: MixedGraph, edge_set: EdgeSet, y: int):
    """Incoming edges of ``y`` that must carry known coefficients before
    ``y`` can source a row for ``edge_set``: those whose tail lies on a
    half-trek from the head and those whose tail connects to an
    other-parent of the head."""
    v = edge_set.head
    pvt = set(g.parents(v)) - set(edge_set.tails)
    avoid = frozenset({v})
    htr_v = g.half_trek_reachable(v)
    deps = []
    for e in g.incoming(y):
        k = e.tail
        if k in htr_v or k == v:
            deps.append(e)
        elif k in pvt or _connected_to_any(g, k, pvt, avoid):
            deps.append(e)
    return tuple(deps)


def _build_certificate(
    g: MixedGraph, edge_set: EdgeSet, y_nodes, id_edges: set[str], context_id: str
) -> Certificate:
    v = edge_set.head
    pvt = set(g.parents(v)) - set(edge_set.tails)
    avoid = frozenset({v})
    htr_v = g.half_trek_reachable(v)
    rows = []
    for y in y_nodes:
        cleaned = y in htr_v or _connected_to_any(g, y, pvt, avoid)
        if cleaned:
            cleanup = tuple(
                (g.name_of(e.tail), e.label) for e in g.incoming(y) if e.label in id_edges
            )
            rows.append(CertificateRow(g.name_of(y), "cleaned", cleanup))
        else:
            rows.append(CertificateRow(g.name_of(y), "plain", ()))
    deps = sorted({lab for r in rows for _, lab in r.cleanup})
    return Certificate(
        head=g.name_of(v),
        tails=tuple(g.name_of(t) for t in edge_set.tails),
        labels=edge_set.labels,
        rows=tuple(rows),
        dependencies=tuple(deps),
        context_id=context_id,
    )


_EXHAUSTIVE_LIMIT = 12  # all-subsets enumeration bound per head


def _candidate_edge_sets(g: MixedGraph, v: int, mode: str):
    """Edge sets to try for head ``v``, largest first, in deterministic order.

    Whole-node identification tries only the full incoming set.  The
    edge-set strategy tries every union of connected edge sets (never
    splitting one), which keeps it at least as strong as whole-node
    identification: a source can have half-treks into two different edge
    sets only through sibling arcs, a collider pattern no unblocked path
    replicates, so a failed edge set does not rule out a successful union.
    The general strategy tries every subset of the incoming edges, falling
    back to per-set subsets plus unions above the enumeration bound.
    """
    incoming = g.incoming(v)
    if not incoming:
        return
    if mode == "htc":
        yield EdgeSet(v, incoming)
        return
    blocks = g.connected_edge_sets(v)
    if mode == "edge-set" or (mode == "g-htc" and len(incoming) > _EXHAUSTIVE_LIMIT):
        union_sets = []
        for size in range(len(blocks), 0, -1):
            for combo in combinations(blocks, size):
                edges = tuple(sorted((e for b in combo for e in b.edges), key=lambda e: e.tail))
                union_sets.append(EdgeSet(v, edges))
        union_sets.sort(key=lambda es: (-len(es.edges), es.tails))
        yield from union_sets
        if mode == "edge-set":
            return
        for ces in blocks:
            if len(ces.edges) > _EXHAUSTIVE_LIMIT:
                continue
            for size in range(len(ces.edges) - 1, 0, -1):
                for combo in combinations(ces.edges, size):
                    yield EdgeSet(v, combo)
        return
    for size in range(len(incoming), 0, -1):
        for combo in combinations(incoming, size):
            yield EdgeSet(v, combo)


def identify_edges(
    g: MixedGraph,
    mode: str = "g-htc",
    status: IdStatus | None = None,
    context_id: str = ROOT_CONTEXT,
) -> IdStatus:
    """Sweep all heads repeatedly, certifying every edge set that acquires
    an admissible source set, until a sweep adds nothing.

    ``mode`` selects the granularity: ``htc`` tries each node's full
    incoming set, ``edge-set`` unions of connected edge sets, ``g-htc``
    every incoming subset.  Already-identified edges are never
    re-certified.  Returns the (possibly partial) status; shared ``status``
    lets decomposition accumulate knowledge across contexts.
    """
    if mode not in ("htc", "edge-set", "g-htc"):
        raise ValueError(f"unknown mode {mode!r}")
    if status is None:
        status = IdStatus()
    strict = mode == "htc"
    changed = True
    while changed:
        changed = False
        for v in range(g.n):
            for edge_set in _candidate_edge_sets(g, v, mode):
                if set(edge_set.labels) <= status.identified:
                    continue
                pool = allowed_nodes(g, edge_set, status.identified, strict_solved=strict)
                y_nodes = max_flow_admissible(g, edge_set, pool)
                if y_nodes is None:
                    continue
                cert = _build_certificate(g, edge_set, y_nodes, status.identified, context_id)
                status.certificates.append(cert)
                status.identified.update(edge_set.labels)
                changed = True
    return status


def certificate_system(
    cert: Certificate, lambda_hat: dict[str, float], cov: CovarianceMatrix
) -> tuple[np.ndarray, np.ndarray]:
    """Materialize the linear system ``A @ coeffs = b`` encoded by a
    certificate against a covariance over the certificate's context nodes.

    Raises :class:`MissingDependencyError` when ``lambda_hat`` lacks a
    cleanup coefficient.
    """
    missing = [lab for row in cert.rows for _, lab in row.cleanup if lab not in lambda_hat]
    if missing:
        raise MissingDependencyError(missing)
    idx = {name: i for i, name in enumerate(cov.names)}
    k = len(cert.tails)
    a = np.empty((k, k))
    b = np.empty(k)
    tail_idx = [idx[t] for t in cert.tails]
    head_idx = idx[cert.head]
    for i, row in enumerate(cert.rows):
        r = cov.values[idx[row.source]].astype(np.float64, copy=True)
        for parent, lab in row.cleanup:
            r -= lambda_hat[lab] * cov.values[idx[parent]]
        a[i] = r[tail_idx]
        b[i] = r[head_idx]
    return a, b


def evaluate_certificate(
    cert: Certificate, lambda_hat: dict[str, float], cov: CovarianceMatrix
) -> tuple[dict[str, float], float]:
    """Solve a certificate's system; returns new coefficient values keyed by
    label plus the system's condition number."""
    a, b = certificate_system(cert, lambda_hat, cov)
    x, cond = solve(a, b)
    return {lab: float(val) for lab, val in zip(cert.labels, x)}, cond
