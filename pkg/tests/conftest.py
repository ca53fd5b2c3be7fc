"""Fixtures for credibility tests."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from credibility.centrality import PropagationConfig
from credibility.dataset import CredibilityDataset
from credibility.embedding import Node2vecParams
from credibility.synthetic import SyntheticConfig, SyntheticDataset, generate_synthetic

from . import write_posts

# Reshare triangle a→b→c→a plus the pendant d, who reshares a.
TINY_POSTS = [
    {"account": "a", "post": "p1", "domains": ["foo.com"]},
    {"account": "b", "post": "p2", "domains": ["foo.com"], "reshared_from": "a"},
    {"account": "c", "post": "p3", "domains": ["foo.com"], "reshared_from": "b"},
    {"account": "a", "post": "p4", "domains": ["bar.org"], "reshared_from": "c"},
    {"account": "d", "post": "p5", "domains": ["bar.org"], "reshared_from": "a"},
    {"account": "c", "post": "p6", "domains": ["youtube.com"]},
]
TINY_RATINGS = {"foo.com": 90, "bar.org": 20}
TINY_SCORES = {"a": 55.0, "b": 90.0, "c": 90.0, "d": 20.0}

PLANTED_HIGH = 180
PLANTED_LOW = 120

# Walk and training sizes small enough for the test suite.
FAST_NODE2VEC = Node2vecParams(
    dimension=32, window=5, walks_per_node=5, walk_length=20, epochs=5, batch_size=128, seed=7
)

EXACT = PropagationConfig(tolerance=1e-13, max_iterations=10_000)


@pytest.fixture
def rng() -> np.random.Generator:
    """Provide a seeded random generator."""
    return np.random.default_rng(20240101)


def write_inputs(
    directory: Path, posts: list[dict], ratings: dict[str, float] | None = None
) -> dict[str, Path]:
    """Write posts, ratings and a filter-free config file into a directory."""
    directory.mkdir(parents=True, exist_ok=True)
    ratings_path = directory / "ratings.csv"
    rows = "".join(f"{d},{s}\n" for d, s in (ratings or TINY_RATINGS).items())
    ratings_path.write_text("domain,score\n" + rows, encoding="utf-8")
    config_path = directory / "config.yaml"
    config_path.write_text(
        yaml.safe_dump(
            {
                "filters": {"min_account_links": 0, "min_domain_shares": 0},
                "node2vec": {
                    "dimension": 8,
                    "window": 3,
                    "walks_per_node": 2,
                    "walk_length": 10,
                    "epochs": 1,
                },
            }
        ),
        encoding="utf-8",
    )
    return {
        "posts": write_posts(directory / "posts.jsonl", posts),
        "ratings": ratings_path,
        "config": config_path,
    }


@pytest.fixture
def tiny_inputs(tmp_path: Path) -> dict[str, Path]:
    """Provide the four-account fixture files."""
    return write_inputs(tmp_path / "inputs", TINY_POSTS)


@pytest.fixture
def reshare_free_inputs(tmp_path: Path) -> dict[str, Path]:
    """Provide fixture files without a single reshare."""
    posts = [{k: v for k, v in post.items() if k != "reshared_from"} for post in TINY_POSTS]
    return write_inputs(tmp_path / "inputs", posts)


@pytest.fixture(scope="session")
def planted() -> SyntheticDataset:
    """Provide a small planted benchmark at μ = 0.05."""
    return generate_synthetic(
        SyntheticConfig(high_accounts=PLANTED_HIGH, low_accounts=PLANTED_LOW, seed=7)
    )


@pytest.fixture(scope="session")
def planted_dataset(planted: SyntheticDataset) -> CredibilityDataset:
    """Provide the planted benchmark as a filtered, labeled dataset."""
    return CredibilityDataset.from_records(planted.records, planted.ratings, name="planted")
