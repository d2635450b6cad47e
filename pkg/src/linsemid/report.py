"""Analysis-report serialization.

A report captures everything needed to re-run estimation without repeating
identification: per-edge status, the certificates in witness order, and
each context's transform chain.  Reports are emitted with sorted keys so a
fixed input always produces byte-identical output.
"""

from __future__ import annotations

import json

from .decomp import DecompResult, ExtractComponent, RemoveDescendants, context_id_of
from .graph import MixedGraph
from .htc import ROOT_CONTEXT, Certificate, CertificateRow, IdStatus


class ReportFormatError(ValueError):
    pass


def _transform_to_dict(t) -> dict:
    if isinstance(t, RemoveDescendants):
        return {"op": "remove", "nodes": list(t.nodes)}
    return {"op": "extract", "component": list(t.component), "kept": list(t.kept)}


def _transform_from_dict(data: dict):
    op = data.get("op")
    if op == "remove":
        return RemoveDescendants(tuple(data["nodes"]))
    if op == "extract":
        return ExtractComponent(tuple(data["component"]), tuple(data["kept"]))
    raise ReportFormatError(f"context transform: unknown op {op!r}")


def build_report(g: MixedGraph, result: DecompResult, mode: str) -> dict:
    cert_index: dict[str, int] = {}
    for i, cert in enumerate(result.status.certificates):
        for lab in cert.labels:
            cert_index.setdefault(lab, i)
    edges = {}
    for e in g.directed:
        if e.label in result.identified:
            edges[e.label] = {
                "status": "identified",
                "certificate": cert_index[e.label],
                "context": result.status.certificates[cert_index[e.label]].context_id,
            }
        else:
            edges[e.label] = {"status": "undecided", "certificate": None, "context": None}
    used = {c.context_id for c in result.status.certificates}
    return {
        "mode": mode,
        "graph": g.to_dict(),
        "edges": edges,
        "certificates": [c.to_dict() for c in result.status.certificates],
        "contexts": {
            cid: [_transform_to_dict(t) for t in chain]
            for cid, chain in sorted(result.contexts.items())
            if cid in used
        },
        "iterations": result.iterations,
    }


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _certificate_from_dict(data: dict) -> Certificate:
    try:
        rows = tuple(
            CertificateRow(src, kind, tuple((p, lab) for p, lab in cleanup))
            for src, kind, cleanup in zip(
                data["sources"], data["row_kinds"], data["cleanups"]
            )
        )
        return Certificate(
            head=data["head"],
            tails=tuple(t for t, _, _ in data["edges"]),
            labels=tuple(data["labels"]),
            rows=rows,
            dependencies=tuple(data["dependencies"]),
            context_id=data["context"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportFormatError(f"certificate: malformed entry ({exc})") from None


def result_from_report(report: dict) -> tuple[MixedGraph, DecompResult]:
    """Rebuild graph and identification result from a parsed report."""
    if not isinstance(report, dict) or "graph" not in report:
        raise ReportFormatError("report: expected object with 'graph'")
    g = MixedGraph.from_dict(report["graph"])
    status = IdStatus()
    for cert_data in report.get("certificates", []):
        cert = _certificate_from_dict(cert_data)
        status.certificates.append(cert)
        status.identified.update(cert.labels)
    result = DecompResult(status=status, iterations=report.get("iterations", 0))
    for cid, chain in report.get("contexts", {}).items():
        transforms = tuple(_transform_from_dict(t) for t in chain)
        if context_id_of(transforms) != cid:
            raise ReportFormatError(f"context {cid!r}: transform chain does not match id")
        result.contexts[cid] = transforms
    result.contexts.setdefault(ROOT_CONTEXT, ())
    return g, result
