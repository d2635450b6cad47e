"""Command-line front end.

Subcommands: ``identify`` (analyze a graph file), ``estimate`` (evaluate
certificates against a covariance), ``compare`` (strategy comparison
table), ``random-check`` (seeded ensemble property suites).

Exit codes: 0 success / everything identified, 1 input error, 2 partial
identification, 3 ensemble property violation.  Flags ``--seed``,
``--max-nodes`` and ``--tolerance`` fall back to the environment variables
``LINSEMID_SEED``, ``LINSEMID_MAX_NODES`` and ``LINSEMID_TOLERANCE``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace

from .decomp import decomp_ht_id, estimate
from .graph import CyclicGraphError, GraphFormatError, MixedGraph
from .htc import identify_edges
from .linalg import CovarianceFormatError, CovarianceMatrix
from .oracle import (
    EnsembleConfig,
    as_result,
    compare_criteria,
    compare_rows,
    containment_suite,
    ctree_suite,
    soundness_suite,
)
from .report import ReportFormatError, build_report, dump_report, result_from_report

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PARTIAL = 2
EXIT_VIOLATION = 3

ENV_PREFIX = "LINSEMID_"


class InputError(Exception):
    pass


def _env_default(name: str, fallback, cast):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(f"error: environment {ENV_PREFIX + name}={raw!r} is not a valid {cast.__name__}")


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_graph(path: str) -> MixedGraph:
    try:
        return MixedGraph.from_json(_read_text(path))
    except GraphFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_covariance(path: str) -> CovarianceMatrix:
    text = _read_text(path)
    try:
        if path.endswith(".csv"):
            return CovarianceMatrix.from_csv(text)
        return CovarianceMatrix.from_json(text)
    except CovarianceFormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _parse_ensemble(spec: str) -> EnsembleConfig:
    """Parse ``n=7,p_directed=0.4,p_bidirected=0.3,seed=42,draws=200``."""
    cfg = EnsembleConfig()
    aliases = {"n": "n", "p_directed": "p_directed", "p_dir": "p_directed",
               "p_bidirected": "p_bidirected", "p_bi": "p_bidirected",
               "seed": "seed", "draws": "draws"}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise InputError(f"ensemble spec: expected key=value, got {part!r}")
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in aliases:
            raise InputError(f"ensemble spec: unknown key {key!r}")
        field = aliases[key]
        try:
            cast = int if field in ("n", "seed", "draws") else float
            cfg = replace(cfg, **{field: cast(value)})
        except ValueError as exc:
            raise InputError(f"ensemble spec: bad value for {key!r}: {value!r} ({exc})") from None
    return cfg


def _run_identification(g: MixedGraph, mode: str, max_nodes: int):
    if mode == "decomp":
        return decomp_ht_id(g, max_nodes=max_nodes)
    return as_result(identify_edges(g, mode=mode))


def cmd_identify(args) -> int:
    g = _load_graph(args.graph)
    try:
        result = _run_identification(g, args.mode, args.max_nodes)
    except CyclicGraphError as exc:
        raise InputError(str(exc)) from None
    report = build_report(g, result, args.mode)
    _write_text(args.out, dump_report(report))
    return EXIT_OK if result.identified >= set(g.labels) else EXIT_PARTIAL


def cmd_estimate(args) -> int:
    cov = _load_covariance(args.cov)
    if args.report:
        try:
            g, result = result_from_report(json.loads(_read_text(args.report)))
        except (json.JSONDecodeError, ReportFormatError) as exc:
            raise InputError(f"{args.report}: {exc}") from None
        if args.graph and _load_graph(args.graph).to_dict() != g.to_dict():
            raise InputError(f"{args.graph} does not match the graph inside {args.report}")
    else:
        if not args.graph:
            raise InputError("estimate: need --graph or --report")
        g = _load_graph(args.graph)
        try:
            result = _run_identification(g, "decomp", args.max_nodes)
        except CyclicGraphError as exc:
            raise InputError(str(exc)) from None
    missing = sorted(set(g.names) - set(cov.names))
    if missing:
        raise InputError(f"covariance is missing nodes: {', '.join(missing)}")
    values, warnings_ = estimate(result, g, cov)
    payload = {
        "estimates": {k: values[k] for k in sorted(values)},
        "undecided": sorted(set(g.labels) - result.identified),
        "warnings": warnings_,
    }
    _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if not payload["undecided"] else EXIT_PARTIAL


def cmd_compare(args) -> int:
    rows = []
    if args.graph:
        g = _load_graph(args.graph)
        try:
            comparison = compare_criteria(g, max_nodes=args.max_nodes)
        except CyclicGraphError as exc:
            raise InputError(str(exc)) from None
        rows.extend(compare_rows(os.path.basename(args.graph), comparison))
    else:
        cfg = _parse_ensemble(args.ensemble)
        cfg = replace(cfg, seed=args.seed if args.seed is not None else cfg.seed)
        from .oracle import ensemble_models

        for i, (g, _) in ensemble_models(cfg):
            comparison = compare_criteria(g, max_nodes=args.max_nodes)
            rows.extend(compare_rows(f"draw{i}", comparison))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["graph", "mode", "identified"])
    writer.writerows(rows)
    _write_text(args.out, buf.getvalue())
    return EXIT_OK


def cmd_random_check(args) -> int:
    cfg = _parse_ensemble(args.ensemble)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    corrupt = os.environ.get(ENV_PREFIX + "SELF_TEST_CORRUPT", "") == "1"
    soundness = soundness_suite(cfg, tol=args.tolerance, corrupt=corrupt)
    containment = containment_suite(cfg)
    ctree = ctree_suite(cfg)
    payload = {
        "config": {
            "n": cfg.n,
            "p_directed": cfg.p_directed,
            "p_bidirected": cfg.p_bidirected,
            "seed": cfg.seed,
            "draws": cfg.draws,
        },
        "soundness": soundness,
        "containment": containment,
        "ctree_property": ctree,
    }
    _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    bad = (
        soundness["violations"] or containment["violations"] or ctree["violations"]
    )
    return EXIT_VIOLATION if bad else EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linsemid",
        description="Decide which linear-SEM coefficients are recoverable from a "
        "covariance matrix and evaluate the resulting estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument(
            "--max-nodes",
            type=int,
            default=_env_default("MAX_NODES", 16, int),
            help="node bound for the decomposition recursion (default 16)",
        )

    p = sub.add_parser("identify", help="analyze a graph file")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--mode", choices=["htc", "edge-set", "g-htc", "decomp"], default="decomp")
    common(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("estimate", help="evaluate certificates against a covariance")
    p.add_argument("--graph", help="graph JSON file")
    p.add_argument("--cov", required=True, help="covariance CSV or JSON file")
    p.add_argument("--report", help="existing identification report (skips re-analysis)")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", help="identified sets under all four strategies")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--graph", help="graph JSON file")
    group.add_argument("--ensemble", help="spec like n=6,p_dir=0.4,p_bi=0.3,seed=1,draws=50")
    p.add_argument("--seed", type=int, default=_env_default("SEED", None, int))
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("random-check", help="run seeded ensemble property suites")
    p.add_argument("--ensemble", required=True, help="spec like n=7,seed=42,draws=200")
    p.add_argument("--seed", type=int, default=_env_default("SEED", None, int))
    p.add_argument(
        "--tolerance",
        type=float,
        default=_env_default("TOLERANCE", 1e-6, float),
        help="round-trip error tolerance (default 1e-6)",
    )
    common(p)
    p.set_defaults(func=cmd_random_check)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
