"""Recursive component decomposition and certificate estimation.

Identification alone never touches numbers: the recursion explores
descendant-closed removals and bidirected components symbolically,
recording for each certificate the chain of covariance transforms
(marginalize a descendant-closed set; extract a component's implied
sub-model distribution) that estimation must replay before evaluating it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import CyclicGraphError, MixedGraph
from .htc import ROOT_CONTEXT, IdStatus, evaluate_certificate, identify_edges
from .linalg import CovarianceMatrix, prefix_regression


@dataclass(frozen=True)
class RemoveDescendants:
    """Marginalize a descendant-closed node set out of graph and covariance."""

    nodes: tuple[str, ...]

    @property
    def tag(self) -> str:
        return "rm:" + ",".join(self.nodes)


@dataclass(frozen=True)
class ExtractComponent:
    """Restrict to one bidirected component S plus its parents, replacing the
    joint with the product of S's prefix conditionals and independent
    parent marginals."""

    component: tuple[str, ...]
    kept: tuple[str, ...]

    @property
    def tag(self) -> str:
        return "ec:" + ",".join(self.component)


Transform = RemoveDescendants | ExtractComponent


def context_id_of(transforms) -> str:
    if not transforms:
        return ROOT_CONTEXT
    return "|".join(t.tag for t in transforms)


@dataclass
class DecompResult:
    """Identification output: status plus the transform chain per context.

    ``cert_iteration[i]`` records which outer fixpoint iteration issued
    ``status.certificates[i]``.
    """

    status: IdStatus
    contexts: dict[str, tuple[Transform, ...]] = field(default_factory=dict)
    iterations: int = 0
    cert_iteration: list[int] = field(default_factory=list)

    @property
    def identified(self) -> set[str]:
        return self.status.identified


def sub_model_graph(g: MixedGraph, component) -> MixedGraph:
    """Graph of the sub-model for bidirected component ``component``:
    the component plus its parents, keeping directed edges into the
    component and bidirected edges within it.  Parents become exogenous and
    mutually independent, so bidirected edges touching them are dropped.
    """
    comp = frozenset(component)
    for v in comp:
        if g.c_component(v) != comp:
            raise ValueError(f"{g.name_of(v)!r} is not in a bidirected component equal to S")
    kept = set(comp)
    for v in comp:
        kept.update(g.parents(v))
    keep_sorted = sorted(kept)
    names = [g.names[v] for v in keep_sorted]
    directed = [
        (g.names[e.tail], g.names[e.head], e.label) for e in g.directed if e.head in comp
    ]
    bidirected = [
        (g.names[x], g.names[y]) for x, y in g.bidirected if x in comp and y in comp
    ]
    return MixedGraph(names, directed, bidirected)


def sub_model_covariance(
    sigma: CovarianceMatrix, order_names, component, kept
) -> CovarianceMatrix:
    """Covariance implied by the component factorization: each component
    member is regressed on its full prefix (in ``order_names``), every other
    node keeps its marginal variance as an independent exogenous variable;
    the result is restricted to ``kept``.
    """
    comp = set(component)
    order = [n for n in order_names if n in set(sigma.names)]
    if set(order) != set(sigma.names):
        raise ValueError("order_names must cover the covariance nodes")
    if comp == set(sigma.names):
        return sigma  # factorization reproduces the joint identically
    pos = {n: i for i, n in enumerate(order)}
    src = [sigma.index(n) for n in order]
    sig = sigma.values[np.ix_(src, src)]
    k = len(order)
    out = np.zeros((k, k))
    for i, name in enumerate(order):
        if name in comp:
            beta, resid = prefix_regression(sig, i, range(i))
            if i:
                cross = out[:i, :i] @ beta
                out[i, :i] = cross
                out[:i, i] = cross
                out[i, i] = float(beta @ cross) + resid
            else:
                out[i, i] = resid
        else:
            out[i, i] = sig[i, i]
    keep_idx = [pos[n] for n in kept]
    return CovarianceMatrix.create(tuple(kept), out[np.ix_(keep_idx, keep_idx)])


def remove_descendants(
    g: MixedGraph, sigma: CovarianceMatrix, removed
) -> tuple[MixedGraph, CovarianceMatrix]:
    """Marginalize a descendant-closed node set: induced subgraph plus the
    corresponding covariance block."""
    rem = frozenset(removed)
    if not rem or rem >= set(range(g.n)):
        raise ValueError("removed set must be nonempty and proper")
    for v in rem:
        if not g.descendants(v) <= rem:
            raise ValueError(
                f"removing {g.name_of(v)!r} without its descendants would fold its "
                "influence into a child's error term"
            )
    keep = [v for v in range(g.n) if v not in rem]
    sub = g.induced_subgraph(keep)
    return sub, sigma.restrict(tuple(g.names[v] for v in keep))


def _bidirected_endpoints(g: MixedGraph) -> set[int]:
    out = set()
    for x, y in g.bidirected:
        out.add(x)
        out.add(y)
    return out


def decomp_ht_id(g: MixedGraph, *, max_nodes: int = 16) -> DecompResult:
    """Fixpoint of: decompose into bidirected components, run the half-trek
    sweep on each sub-model, then recurse over descendant-closed removals;
    repeat from the root until an iteration identifies nothing new.

    Removals that touch no bidirected endpoint are skipped (they cannot
    split a component, and every surviving sub-model is unchanged), and
    node sets already visited within an iteration are not re-explored.
    Identified labels are shared globally, so knowledge flows freely
    between contexts.
    """
    if not g.acyclic:
        raise CyclicGraphError("decomposition requires an acyclic graph")
    if g.n > max_nodes:
        raise ValueError(
            f"graph has {g.n} nodes; descendant-set recursion is bounded at {max_nodes} "
            "(raise max_nodes to override)"
        )
    result = DecompResult(status=IdStatus())
    result.contexts[ROOT_CONTEXT] = ()
    all_labels = set(g.labels)
    iteration = 0
    while True:
        iteration += 1
        before = set(result.status.identified)
        n_before = len(result.status.certificates)
        visited: set[frozenset[str]] = set()
        _rec_decomp(g, (), result, visited)
        result.cert_iteration.extend(
            [iteration] * (len(result.status.certificates) - n_before)
        )
        if result.status.identified >= all_labels or result.status.identified == before:
            break
    result.iterations = iteration
    return result


def _rec_decomp(
    g: MixedGraph,
    prefix: tuple[Transform, ...],
    result: DecompResult,
    visited: set[frozenset[str]],
) -> None:
    status = result.status
    # Sweep the current graph as-is first: certificates issued here evaluate
    # against the cheapest covariance, and the decomposition can only add to
    # what the plain sweep finds.
    if not {e.label for e in g.directed} <= status.identified:
        cid = context_id_of(prefix)
        result.contexts.setdefault(cid, prefix)
        identify_edges(g, mode="g-htc", status=status, context_id=cid)
    components = g.c_components()
    for comp in components:
        if len(comp) == g.n:
            continue  # sub-model of an all-covering component is the graph itself
        labels_here = {e.label for e in g.directed if e.head in comp}
        if not labels_here or labels_here <= status.identified:
            continue
        kept = sorted(set(comp) | {p for v in comp for p in g.parents(v)})
        transform = ExtractComponent(
            component=tuple(g.names[v] for v in sorted(comp)),
            kept=tuple(g.names[v] for v in kept),
        )
        ctx = prefix + (transform,)
        sub = sub_model_graph(g, comp)
        cid = context_id_of(ctx)
        result.contexts.setdefault(cid, ctx)
        identify_edges(sub, mode="g-htc", status=status, context_id=cid)

    if set(g.labels) <= status.identified:
        return
    bid_nodes = _bidirected_endpoints(g)
    for removed in g.descendant_sets():
        if not removed & bid_nodes:
            continue
        keep_names = frozenset(g.names[v] for v in range(g.n) if v not in removed)
        if keep_names in visited:
            continue
        visited.add(keep_names)
        transform = RemoveDescendants(tuple(g.names[v] for v in sorted(removed)))
        sub = g.induced_subgraph([v for v in range(g.n) if v not in removed])
        _rec_decomp(sub, prefix + (transform,), result, visited)


def materialize_context(
    transforms, g_root: MixedGraph, sigma_root: CovarianceMatrix
) -> CovarianceMatrix:
    """Replay a context's transform chain against the root covariance."""
    order_names = [g_root.names[v] for v in g_root.topological_order()]
    sigma = sigma_root
    graph = g_root
    for t in transforms:
        if isinstance(t, RemoveDescendants):
            removed = [graph.node_id(n) for n in t.nodes]
            graph, sigma = remove_descendants(graph, sigma, frozenset(removed))
        else:
            sigma = sub_model_covariance(sigma, order_names, t.component, t.kept)
            graph = sub_model_graph(graph, [graph.node_id(n) for n in t.component])
    return sigma


def estimate(
    result: DecompResult, g_root: MixedGraph, sigma: CovarianceMatrix
) -> tuple[dict[str, float], list[str]]:
    """Replay every certificate in witness order against ``sigma``.

    Returns the estimated coefficient map and a list of conditioning
    warnings (certificates whose system had 1-norm condition above 1e10;
    their values are still reported).
    """
    missing = sorted(set(g_root.names) - set(sigma.names))
    if missing:
        raise ValueError(f"covariance is missing nodes: {', '.join(missing)}")
    if sigma.names != g_root.names:
        sigma = sigma.restrict(g_root.names)
    lam: dict[str, float] = {}
    notes: list[str] = []
    cache: dict[str, CovarianceMatrix] = {}
    for cert in result.status.certificates:
        try:
            transforms = result.contexts[cert.context_id]
        except KeyError:
            raise RuntimeError(f"certificate references unknown context {cert.context_id!r}") from None
        if cert.context_id not in cache:
            cache[cert.context_id] = materialize_context(transforms, g_root, sigma)
        values, cond = evaluate_certificate(cert, lam, cache[cert.context_id])
        if cond > 1e10:
            notes.append(
                f"certificate for {','.join(cert.labels)} ill-conditioned (cond={cond:.2e})"
            )
        lam.update(values)
    return lam, notes
