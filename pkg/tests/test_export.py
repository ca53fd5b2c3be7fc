"""Test the CSV and JSON writers."""

import json
from pathlib import Path

import numpy as np

from credibility.centrality import Polarity, ScoreVector
from credibility.coordinator import EvalReport
from credibility.export import (
    REPORT_SCHEMA_VERSION,
    write_credibilities,
    write_edges,
    write_node_attributes,
    write_report_csv,
    write_report_json,
    write_scores,
)
from credibility.ingest import AccountCredibility, CredibilityLabel, LabelSets
from credibility.metrics import FoldResult

from . import coshare_graph, directed_graph, read_csv_rows


def _reports() -> list[EvalReport]:
    return [
        EvalReport(
            algorithm="locred",
            network="reshare",
            folds=(FoldResult(0, 0.75, 0.5, 0.25, 4), FoldResult(1, None, None, None, 2, "one")),
            seed=1,
            fingerprint="abc",
        ),
        EvalReport(
            algorithm="pagerank_trust",
            network="trust",
            seed=1,
            fingerprint="abc",
            not_applicable="no trust edges",
        ),
    ]


def test_scores_by_descending_suspicion(tmp_path: Path) -> None:
    """Test credibility scores are written least credible first, ties by node id."""
    vector = ScoreVector(
        nodes=("c", "a", "b", "d"),
        values=np.array([0.5, 0.2, 0.5, 0.9]),
        polarity=Polarity.CREDIBILITY,
        algorithm="ppr_trust",
        iterations=7,
    )
    rows = read_csv_rows(write_scores(vector, tmp_path / "scores.csv"))
    assert rows[0] == ["node", "score", "polarity", "algorithm", "converged", "iterations"]
    assert [row[0] for row in rows[1:]] == ["a", "b", "c", "d"]
    assert rows[1] == ["a", "0.2", "credibility", "ppr_trust", "1", "7"]


def test_credibilities(tmp_path: Path) -> None:
    """Test the credibility table layout, with empty cells for unscored accounts."""
    creds = [
        AccountCredibility("b", None, 0.0),
        AccountCredibility("a", 75.0, 1.0, CredibilityLabel.HIGH),
    ]
    rows = read_csv_rows(write_credibilities(creds, tmp_path / "creds.csv"))
    assert rows == [
        ["account_id", "score", "label", "confidence"],
        ["a", "75.0", "high", "1.0"],
        ["b", "", "", "0.0"],
    ]


def test_edges_sorted(tmp_path: Path) -> None:
    """Test edge lists are sorted and undirected pairs are written once."""
    g = coshare_graph([[0, 0.5, 0], [0.5, 0, 1], [0, 1, 0]], ["c", "a", "b"])
    rows = read_csv_rows(write_edges(g, tmp_path / "edges.csv"))
    assert rows[0] == ["src", "dst", "weight"]
    assert len(rows) == 3
    assert rows[1:] == sorted(rows[1:])


def test_node_attributes(tmp_path: Path) -> None:
    """Test node rows carry score, label, core number and in-strength."""
    g = directed_graph([[0, 2, 0], [0, 0, 1], [1, 0, 0]], ["a", "b", "c"])
    labels = LabelSets(high=frozenset({"a"}), low=frozenset({"c"}))
    path = write_node_attributes(g, tmp_path / "nodes.csv", {"a": 90.0, "c": 20.0}, labels)
    rows = read_csv_rows(path)
    assert rows[0] == ["node", "kind", "score", "label", "core_number", "strength"]
    assert rows[1] == ["a", "account", "90.0", "high", rows[1][4], "1.0"]
    assert rows[2][2:4] == ["", ""]
    assert rows[2][5] == "2.0"


def test_report_csv_marks_not_applicable(tmp_path: Path) -> None:
    """Test skipped folds have empty metrics and inapplicable algorithms NA rows."""
    rows = read_csv_rows(write_report_csv(_reports(), tmp_path / "report.csv"))
    assert rows == [
        ["algorithm", "network", "fold", "auc", "f1", "threshold"],
        ["locred", "reshare", "0", "0.75", "0.5", "0.25"],
        ["locred", "reshare", "1", "", "", ""],
        ["pagerank_trust", "trust", "", "NA", "NA", "NA"],
    ]


def test_report_json(tmp_path: Path) -> None:
    """Test the JSON report is versioned and aggregates each algorithm."""
    path = write_report_json(_reports(), tmp_path / "report.json")
    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["schema_version"] == REPORT_SCHEMA_VERSION
    locred, pagerank = document["reports"]
    assert locred["auc_mean"] == 0.75
    assert locred["auc_std"] is None
    assert locred["skipped_folds"] == 1
    assert locred["fold_count"] == 2
    assert pagerank["not_applicable"] == "no trust edges"
    assert pagerank["auc_mean"] is None
