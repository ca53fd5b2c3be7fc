"""Infer account credibility from news-sharing networks."""

from .centrality import Polarity, PropagationConfig, ScoreVector
from .coordinator import BenchmarkCoordinator, EvalReport, run_benchmark
from .dataset import CredibilityDataset
from .embedding import KnnConfig, Node2vecParams
from .ingest import LabelSets, PostRecord, SourceRating
from .synthetic import SyntheticConfig, generate_synthetic

__all__ = [
    "BenchmarkCoordinator",
    "CredibilityDataset",
    "EvalReport",
    "KnnConfig",
    "LabelSets",
    "Node2vecParams",
    "Polarity",
    "PostRecord",
    "PropagationConfig",
    "ScoreVector",
    "SourceRating",
    "SyntheticConfig",
    "generate_synthetic",
    "run_benchmark",
]
