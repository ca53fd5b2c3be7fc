"""Writers for records, credibilities, networks, scores, projections and reports."""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any

from .centrality import ScoreVector
from .exceptions import InputError
from .ingest import AccountCredibility, LabelSets, PostRecord, SourceRating
from .networks import BipartiteGraph, WeightedGraph, core_numbers, node_strengths

if TYPE_CHECKING:
    from .coordinator import EvalReport
    from .embedding import PcaProjection

_LOGGER = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1


def _format(value: float | None) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _write_rows(path: Path, header: Iterable[str], rows: Iterable[Iterable[Any]]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as err:
        raise InputError(f"Cannot write {path}") from err
    _LOGGER.debug("Wrote %s", path)
    return path


def _write_json(path: Path, data: Any) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as err:
        raise InputError(f"Cannot write {path}") from err
    _LOGGER.debug("Wrote %s", path)
    return path


def write_records(records: Iterable[PostRecord], path: Path) -> Path:
    """Write post records as JSON Lines."""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record.as_dict(), sort_keys=True) + "\n")
    except OSError as err:
        raise InputError(f"Cannot write {path}") from err
    return path


def write_ratings(ratings: Iterable[SourceRating], path: Path) -> Path:
    """Write source ratings as a ``domain,score`` CSV sorted by domain."""
    rows = sorted((r.domain, _format(r.score)) for r in ratings)
    return _write_rows(path, ("domain", "score"), rows)


def write_credibilities(credibilities: Iterable[AccountCredibility], path: Path) -> Path:
    """Write ``account_id,score,label,confidence`` rows sorted by account."""
    rows = (
        (c.account_id, _format(c.score), str(c.label) if c.label else "", _format(c.confidence))
        for c in sorted(credibilities, key=lambda c: c.account_id)
    )
    return _write_rows(path, ("account_id", "score", "label", "confidence"), rows)


def write_edges(g: WeightedGraph | BipartiteGraph, path: Path) -> Path:
    """Write a ``src,dst,weight`` edge list sorted by endpoints."""
    rows = sorted(g.iter_edges())
    return _write_rows(path, ("src", "dst", "weight"), ((s, d, _format(w)) for s, d, w in rows))


def write_node_attributes(
    g: WeightedGraph | BipartiteGraph,
    path: Path,
    scores: Mapping[str, float],
    labels: LabelSets,
) -> Path:
    """Write ``node,kind,score,label,core_number,strength`` rows.

    Strength is in-strength for directed networks, total weight otherwise.
    """
    core = core_numbers(g)
    if isinstance(g, BipartiteGraph):
        nodes = [(a, "account") for a in g.accounts] + [(d, "source") for d in g.sources]
        strength = node_strengths(g)
    else:
        nodes = [(n, "account") for n in g.nodes]
        strength = node_strengths(g, "in" if g.directed else "total")

    rows = []
    for i, (node, kind) in enumerate(nodes):
        label = labels.label_of(node) if kind == "account" else None
        rows.append(
            (
                node,
                kind,
                _format(scores.get(node)) if kind == "account" else "",
                str(label) if label else "",
                int(core[i]),
                _format(strength[i]),
            )
        )
    rows.sort(key=lambda row: (row[1], row[0]))
    header = ("node", "kind", "score", "label", "core_number", "strength")
    return _write_rows(path, header, rows)


def write_scores(vector: ScoreVector, path: Path) -> Path:
    """Write ``node,score,polarity,algorithm,converged,iterations`` by descending suspicion."""
    rows = (
        (
            node,
            _format(score),
            str(vector.polarity),
            vector.algorithm,
            int(vector.converged),
            vector.iterations,
        )
        for node, score in vector.ranked()
    )
    header = ("node", "score", "polarity", "algorithm", "converged", "iterations")
    return _write_rows(path, header, rows)


def write_pca(
    projection: PcaProjection,
    path: Path,
    scores: Mapping[str, float],
    labels: LabelSets,
) -> Path:
    """Write ``node,x,y,score,label`` rows sorted by node."""
    rows = []
    for node, (x, y) in zip(projection.nodes, projection.coordinates.tolist(), strict=True):
        label = labels.label_of(node)
        rows.append((node, _format(x), _format(y), _format(scores.get(node)), label or ""))
    rows.sort()
    return _write_rows(path, ("node", "x", "y", "score", "label"), rows)


def report_document(reports: Iterable[EvalReport]) -> dict[str, Any]:
    """Return the versioned JSON document of a benchmark."""
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "reports": [report.as_dict() for report in reports],
    }


def write_report_json(reports: Iterable[EvalReport], path: Path) -> Path:
    """Write benchmark reports as a versioned JSON document."""
    return _write_json(path, report_document(reports))


def write_report_csv(reports: Iterable[EvalReport], path: Path) -> Path:
    """Write one ``algorithm,network,fold,auc,f1,threshold`` row per fold."""
    rows = []
    for report in reports:
        if report.not_applicable:
            rows.append((report.algorithm, report.network, "", "NA", "NA", "NA"))
            continue
        for fold in report.folds:
            rows.append(
                (
                    report.algorithm,
                    report.network,
                    fold.fold,
                    _format(fold.auc),
                    _format(fold.f1),
                    _format(fold.threshold),
                )
            )
    return _write_rows(path, ("algorithm", "network", "fold", "auc", "f1", "threshold"), rows)


def write_json(data: Any, path: Path) -> Path:
    """Write any JSON-serializable document with sorted keys."""
    return _write_json(path, data)
