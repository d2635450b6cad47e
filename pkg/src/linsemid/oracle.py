"""Independent verification machinery.

Everything here checks the identification engine from the outside: random
seeded models with known parameters, brute-force path and half-trek
enumeration, covariance-matched counterexample search, the rooted
confounded-tree test, and mode-by-mode comparison tables.  Nothing in this
module reuses the flow search or the sweep internals beyond their public
results.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from . import _accel
from .decomp import DecompResult, decomp_ht_id, estimate
from .graph import EdgeSet, MixedGraph
from .htc import ROOT_CONTEXT, IdStatus, identify_edges
from .linalg import ModelInstance, implied_covariance


@dataclass(frozen=True)
class EnsembleConfig:
    """Seeded recipe for random (graph, parameters) draws."""

    n: int = 5
    p_directed: float = 0.4
    p_bidirected: float = 0.25
    seed: int = 0
    draws: int = 100

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one node")
        for p in (self.p_directed, self.p_bidirected):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"edge probability {p} outside [0, 1]")

    def draw_seed(self, index: int) -> int:
        return int(np.random.SeedSequence([self.seed, index]).generate_state(1)[0])


# -- random models -----------------------------------------------------------


def _draw_parameters(g: MixedGraph, rng: np.random.Generator) -> ModelInstance:
    n = g.n
    lam = np.zeros((n, n))
    for e in g.directed:
        lam[e.tail, e.head] = rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1.2)
    omega = np.zeros((n, n))
    for i in range(n):
        omega[i, i] = 1.0 + rng.uniform(0.0, 0.5)
    for x, y in g.bidirected:
        val = rng.choice([-1.0, 1.0]) * rng.uniform(0.15, 0.5)
        omega[x, y] = omega[y, x] = val
    # Diagonal dominance: scale confounding down if any row would tip over.
    off_sums = np.sum(np.abs(omega), axis=1) - np.diag(omega)
    with np.errstate(divide="ignore"):
        limits = np.where(off_sums > 0, 0.9 * np.diag(omega) / off_sums, np.inf)
    scale = min(1.0, float(np.min(limits)))
    omega = np.diag(np.diag(omega)) + scale * (omega - np.diag(np.diag(omega)))
    return ModelInstance(g.names, lam, omega)


def random_instance(g: MixedGraph, seed: int = 0) -> ModelInstance:
    """Generic parameter draw for a fixed graph: coefficients uniform in
    +-[0.3, 1.2], diagonally dominant error covariance."""
    return _draw_parameters(g, np.random.default_rng(seed))


def random_model(cfg: EnsembleConfig) -> tuple[MixedGraph, ModelInstance]:
    """Random acyclic mixed graph plus a generic parameter draw.

    The directed skeleton is upper-triangular under a random node
    permutation; parameters follow :func:`random_instance`'s distribution.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    perm = rng.permutation(n)
    names = [f"x{i}" for i in range(n)]
    directed = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < cfg.p_directed:
                t, h = int(perm[a]), int(perm[b])
                directed.append((names[t], names[h], f"{names[t]}->{names[h]}"))
    bidirected = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < cfg.p_bidirected:
                bidirected.append((names[a], names[b]))
    g = MixedGraph(names, directed, bidirected)
    return g, _draw_parameters(g, rng)


# -- brute-force structural enumeration ---------------------------------------


def _edge_steps(g: MixedGraph, node: int):
    """All single-edge moves out of ``node`` as (next, points_into_node,
    points_into_next) triples."""
    for c in g.children(node):
        yield c, False, True
    for p in g.parents(node):
        yield p, True, False
    for s in g.siblings(node):
        yield s, True, True


def brute_unblocked_connected(g: MixedGraph, a: int, b: int, avoid=frozenset()) -> bool:
    """Path enumeration reference for collider-free connectivity.

    Walks every simple mixed path from ``a``; a non-endpoint node blocks the
    path when both adjacent edges point into it.
    """

    def extend(node, arrived_into, visited) -> bool:
        for nxt, departs_into_node, arrives_into_next in _edge_steps(g, node):
            if arrived_into and departs_into_node:
                continue  # collider at 'node'
            if nxt == b:
                return True
            if nxt in visited or nxt in avoid:
                continue
            if extend(nxt, arrives_into_next, visited | {nxt}):
                return True
        return False

    # The first edge out of 'a' has no predecessor, so no collider test at 'a'.
    for nxt, _, arrives_into_next in _edge_steps(g, a):
        if nxt == b:
            return True
        if nxt in avoid:
            continue
        if extend(nxt, arrives_into_next, {a, nxt}):
            return True
    return False


def brute_half_treks(g: MixedGraph, v: int):
    """All simple half-treks from ``v`` as (right_set, endpoint) pairs."""
    out = []

    def directed_paths(start, visited, right):
        for c in g.children(start):
            if c in visited:
                continue
            yield right | {c}, c
            yield from directed_paths(c, visited | {c}, right | {c})

    # Pure directed paths: every vertex, including v, is on the right.
    for right, end in directed_paths(v, {v}, frozenset({v})):
        out.append((right, end))
    # Bidirected first: the right side starts at the sibling.
    for s in g.siblings(v):
        out.append((frozenset({s}), s))
        for right, end in directed_paths(s, {v, s}, frozenset({s})):
            out.append((right, end))
    return out


def brute_half_trek_reachable(g: MixedGraph, v: int) -> frozenset[int]:
    return frozenset(end for _, end in brute_half_treks(g, v) if end != v)


def brute_system_exists(g: MixedGraph, sources, tails) -> bool:
    """Reference check for a half-trek system with pairwise-disjoint right
    sides from ``sources`` onto ``tails`` (order-free)."""
    sources = list(sources)
    tails = list(tails)
    if len(sources) < len(tails):
        return False
    treks = {y: brute_half_treks(g, y) for y in sources}

    def assign(i, chosen_sources, used_right):
        if i == len(tails):
            return True
        t = tails[i]
        for y in sources:
            if y in chosen_sources:
                continue
            options = [r for r, end in treks[y] if end == t]
            if t == y:
                options.append(frozenset({y}))  # zero-length trek
            for right in options:
                if right & used_right:
                    continue
                if assign(i + 1, chosen_sources | {y}, used_right | right):
                    return True
        return False

    return assign(0, set(), frozenset())


def satisfies_admissibility(g: MixedGraph, edge_set: EdgeSet, y_nodes) -> bool:
    """Post-hoc check of the four admissibility conditions for ``y_nodes``
    against ``edge_set``, via brute-force enumeration."""
    v = edge_set.head
    ys = set(y_nodes)
    if len(ys) != len(edge_set.edges):
        return False
    if ys & ({v} | set(g.siblings(v))):
        return False
    pvt = set(g.parents(v)) - set(edge_set.tails)
    reach = set()
    for y in ys:
        reach |= brute_half_trek_reachable(g, y)
    if reach & pvt:
        return False
    return brute_system_exists(g, ys, list(edge_set.tails))


# -- rooted confounded trees ---------------------------------------------------


def c_tree_exists(g: MixedGraph, y: int, *, max_nodes: int = 16) -> bool:
    """True iff some subgraph is a confounded in-tree rooted at ``y``:
    at least two nodes, every non-root with exactly one child inside, all
    of it one bidirected component.  Brute force over ancestor subsets."""
    if g.n > max_nodes:
        raise ValueError(f"graph has {g.n} nodes; brute-force bound is {max_nodes}")
    if not g.acyclic:
        raise ValueError("rooted-tree search requires an acyclic graph")
    anc = g.ancestors(y)
    anc_mask = np.int64(0)
    for v in anc:
        anc_mask |= np.int64(1) << v
    child_mask = np.zeros(g.n, np.int64)
    sib_mask = np.zeros(g.n, np.int64)
    for e in g.directed:
        child_mask[e.tail] |= np.int64(1) << e.head
    for a, b in g.bidirected:
        sib_mask[a] |= np.int64(1) << b
        sib_mask[b] |= np.int64(1) << a
    return bool(_accel.rooted_ctree(np.int64(y), anc_mask, child_mask, sib_mask))


# -- round trips and counterexamples ------------------------------------------


def as_result(status_or_result) -> DecompResult:
    if isinstance(status_or_result, DecompResult):
        return status_or_result
    result = DecompResult(status=status_or_result)
    result.contexts[ROOT_CONTEXT] = ()
    return result


def true_coefficients(g: MixedGraph, m: ModelInstance) -> dict[str, float]:
    return {e.label: float(m.lam[e.tail, e.head]) for e in g.directed}


def verify_round_trip(g: MixedGraph, m: ModelInstance, status_or_result) -> dict:
    """Estimate every identified coefficient from the exact implied
    covariance and report the worst absolute error."""
    result = as_result(status_or_result)
    sigma = implied_covariance(m)
    lam_hat, notes = estimate(result, g, sigma)
    truth = true_coefficients(g, m)
    errors = {lab: abs(lam_hat[lab] - truth[lab]) for lab in lam_hat}
    return {
        "identified": sorted(result.identified),
        "estimates": lam_hat,
        "max_abs_error": max(errors.values()) if errors else 0.0,
        "errors": errors,
        "warnings": notes,
    }


def _implied_raw(lam: np.ndarray, omega: np.ndarray) -> np.ndarray:
    n = lam.shape[0]
    a = np.eye(n) - lam
    t = np.linalg.solve(a.T, omega)
    return np.linalg.solve(a.T, t.T).T


def nonident_witness(
    g: MixedGraph,
    m: ModelInstance,
    label: str,
    *,
    tries: int = 40,
    min_delta: float = 1e-3,
    sigma_tol: float = 1e-8,
) -> tuple[ModelInstance, ModelInstance] | None:
    """Search for a second parameterization matching the implied covariance
    of ``m`` while moving the coefficient ``label`` by at least
    ``min_delta``.  Returns the pair, or ``None`` (absence proves nothing).
    """
    target = implied_covariance(m).values
    pinned = g.edge_by_label(label)
    free_lam = [(e.tail, e.head) for e in g.directed if e.label != label]
    omega_diag = list(range(g.n))
    omega_off = [(x, y) for x, y in g.bidirected]
    base_lam = m.lam.copy()
    rng = np.random.default_rng(12345)
    iu = np.triu_indices(g.n)

    def unpack(theta, pin_value):
        lam = np.zeros_like(m.lam)
        lam[pinned.tail, pinned.head] = pin_value
        k = 0
        for i, j in free_lam:
            lam[i, j] = theta[k]
            k += 1
        omega = np.zeros_like(m.omega)
        for i in omega_diag:
            omega[i, i] = theta[k]
            k += 1
        for i, j in omega_off:
            omega[i, j] = omega[j, i] = theta[k]
            k += 1
        return lam, omega

    def residual(theta, pin_value):
        lam, omega = unpack(theta, pin_value)
        try:
            sigma = _implied_raw(lam, omega)
        except np.linalg.LinAlgError:
            return np.full(len(iu[0]), 1e6)
        return (sigma - target)[iu]

    base_theta = np.concatenate(
        [
            [base_lam[i, j] for i, j in free_lam],
            [m.omega[i, i] for i in omega_diag],
            [m.omega[i, j] for i, j in omega_off],
        ]
    )
    offsets = [0.5, -0.5, 0.25, -0.25, 1.0, -1.0]
    for attempt in range(tries):
        offset = offsets[attempt % len(offsets)]
        pin_value = float(base_lam[pinned.tail, pinned.head] + offset)
        start = base_theta + (0.0 if attempt < len(offsets) else rng.normal(0, 0.3, base_theta.shape))
        fit = scipy.optimize.least_squares(
            residual, start, args=(pin_value,), method="lm", xtol=1e-14, ftol=1e-14
        )
        if np.max(np.abs(fit.fun)) > sigma_tol:
            continue
        lam2, omega2 = unpack(fit.x, pin_value)
        try:
            np.linalg.cholesky(omega2)
        except np.linalg.LinAlgError:
            continue
        if abs(lam2[pinned.tail, pinned.head] - base_lam[pinned.tail, pinned.head]) < min_delta:
            continue
        return m, ModelInstance(m.names, lam2, omega2)
    return None


# -- criterion comparison -------------------------------------------------------


MODE_ORDER = ("htc", "edge-set", "g-htc", "decomp")


def compare_criteria(g: MixedGraph, *, max_nodes: int = 16) -> dict:
    """Identified-label sets for all four strategies, plus containment flags
    for each adjacent pair in the power ordering."""
    sets: dict[str, set[str]] = {}
    results: dict[str, DecompResult] = {}
    for mode in ("htc", "edge-set", "g-htc"):
        status = identify_edges(g, mode=mode)
        sets[mode] = set(status.identified)
        results[mode] = as_result(status)
    dres = decomp_ht_id(g, max_nodes=max_nodes)
    sets["decomp"] = set(dres.identified)
    results["decomp"] = dres
    containment = {
        f"{a}<={b}": sets[a] <= sets[b] for a, b in zip(MODE_ORDER, MODE_ORDER[1:])
    }
    return {"sets": sets, "results": results, "containment": containment}


def compare_rows(graph_id: str, comparison: dict) -> list[tuple[str, str, str]]:
    """CSV-ready rows: (graph id, mode, semicolon-joined labels)."""
    return [
        (graph_id, mode, ";".join(sorted(comparison["sets"][mode]))) for mode in MODE_ORDER
    ]


# -- ensemble suites -------------------------------------------------------------


def ensemble_models(cfg: EnsembleConfig):
    for i in range(cfg.draws):
        yield i, random_model(replace(cfg, seed=cfg.draw_seed(i)))


def soundness_suite(cfg: EnsembleConfig, *, tol: float = 1e-6, corrupt: bool = False) -> dict:
    """Round-trip every mode on every draw; flags any identified coefficient
    whose estimate from the exact covariance misses the truth by > tol.

    ``corrupt`` deliberately breaks the first usable certificate (self-test
    hook: the suite must then report a violation).
    """
    violations = []
    checked = 0
    worst = 0.0
    for i, (g, m) in ensemble_models(cfg):
        comparison = compare_criteria(g)
        for mode in MODE_ORDER:
            result = comparison["results"][mode]
            if corrupt and result.status.certificates:
                _corrupt_certificate(result.status)
            report = verify_round_trip(g, m, result)
            checked += len(report["errors"])
            if report["errors"]:
                worst = max(worst, report["max_abs_error"])
            for lab, err in report["errors"].items():
                if err > tol:
                    violations.append(
                        {"draw": i, "mode": mode, "label": lab, "error": err}
                    )
    return {"draws": cfg.draws, "checked": checked, "max_abs_error": worst, "violations": violations}


def _corrupt_certificate(status: IdStatus) -> None:
    """Self-test hook: strip the cleanup lists from the last certificate that
    has any (its estimate then evaluates against uncleaned rows)."""
    from .htc import Certificate, CertificateRow

    for idx in range(len(status.certificates) - 1, -1, -1):
        cert = status.certificates[idx]
        if any(row.cleanup for row in cert.rows):
            rows = tuple(CertificateRow(r.source, r.kind, ()) for r in cert.rows)
            status.certificates[idx] = Certificate(
                cert.head, cert.tails, cert.labels, rows, (), cert.context_id
            )
            return


def containment_suite(cfg: EnsembleConfig) -> dict:
    """Checks the power ordering of the four strategies on every draw."""
    violations = []
    for i, (g, _) in ensemble_models(cfg):
        comparison = compare_criteria(g)
        for pair, ok in comparison["containment"].items():
            if not ok:
                violations.append({"draw": i, "pair": pair, "sets": {
                    k: sorted(v) for k, v in comparison["sets"].items()
                }})
    return {"draws": cfg.draws, "violations": violations}


def ctree_suite(cfg: EnsembleConfig) -> dict:
    """On every draw: whenever no confounded in-tree is rooted at a node,
    all of that node's incoming coefficients must be identified by the
    decomposition strategy."""
    violations = []
    nodes_checked = 0
    for i, (g, _) in ensemble_models(cfg):
        result = decomp_ht_id(g)
        for y in range(g.n):
            incoming = g.incoming(y)
            if not incoming:
                continue
            nodes_checked += 1
            if c_tree_exists(g, y):
                continue
            missing = [e.label for e in incoming if e.label not in result.identified]
            if missing:
                violations.append({"draw": i, "node": g.name_of(y), "missing": missing})
    return {"draws": cfg.draws, "nodes_checked": nodes_checked, "violations": violations}
