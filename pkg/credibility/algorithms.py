"""Registry of credibility algorithms and the networks they run on."""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

from .centrality import (
    BipartiteVariant,
    PropagationConfig,
    ScoreVector,
    bipartite_label_propagation,
    cocred,
    hits,
    locred,
    pagerank_trust,
    personalized_pagerank_trust,
    reputation_scaling,
    trustrank,
)
from .const import (
    DEFAULT_FOLDS,
    DEFAULT_PQ_GRID,
    NETWORK_BIPARTITE,
    NETWORK_COSHARE,
    NETWORK_RESHARE,
    NETWORK_TRUST,
)
from .dataset import CredibilityDataset
from .embedding import KnnConfig, Node2vecParams, grid_search_pq, knn_score
from .exceptions import ConfigurationError
from .ingest import LabelSets
from .networks import WeightedGraph

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, kw_only=True)
class AlgorithmSettings:
    """Parameters of every algorithm in a run."""

    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    node2vec: Node2vecParams = field(default_factory=Node2vecParams)
    knn: KnnConfig = field(default_factory=KnnConfig)
    grid_search: bool = False
    pq_grid: tuple[float, ...] = DEFAULT_PQ_GRID
    inner_folds: int = DEFAULT_FOLDS

    def as_dict(self) -> dict[str, Any]:
        """Return a serializable snapshot."""
        return {
            "propagation": self.propagation.as_dict(),
            "node2vec": self.node2vec.as_dict(),
            "knn": self.knn.as_dict(),
            "grid_search": self.grid_search,
            "pq_grid": list(self.pq_grid),
            "inner_folds": self.inner_folds,
        }


type ScoreFn = Callable[[CredibilityDataset, LabelSets, AlgorithmSettings], ScoreVector]


@dataclass(frozen=True, kw_only=True)
class CredibilityAlgorithmDescription:
    """Describes an algorithm: its key, network and scoring function."""

    key: str
    network: str
    value_fn: ScoreFn
    sources_fn: ScoreFn | None = None
    uses_embedding: bool = False


def _node2vec_knn(network: str) -> ScoreFn:
    def score(
        dataset: CredibilityDataset, labels: LabelSets, settings: AlgorithmSettings
    ) -> ScoreVector:
        graph = dataset.network(network)
        params = settings.node2vec
        if settings.grid_search and isinstance(graph, WeightedGraph):
            result = grid_search_pq(
                graph,
                labels,
                params,
                settings.pq_grid,
                settings.knn,
                settings.inner_folds,
            )
            params = params.with_pq(*result.best)
        emb = dataset.embedding(network, params)
        vector = knn_score(emb, labels, emb.nodes, settings.knn)
        return dataclasses.replace(vector, algorithm=f"node2vec_{network}")

    return score


def _bipartite(variant: BipartiteVariant, side: int) -> ScoreFn:
    def score(
        dataset: CredibilityDataset, labels: LabelSets, settings: AlgorithmSettings
    ) -> ScoreVector:
        vectors = bipartite_label_propagation(
            dataset.bipartite, labels.high, labels.low, settings.propagation, variant
        )
        return vectors[side]

    return score


def _cocred(side: int) -> ScoreFn:
    def score(
        dataset: CredibilityDataset, labels: LabelSets, settings: AlgorithmSettings
    ) -> ScoreVector:
        return cocred(dataset.bipartite, labels.high, labels.low, settings.propagation)[side]

    return score


ALGORITHM_TYPES: tuple[CredibilityAlgorithmDescription, ...] = (
    CredibilityAlgorithmDescription(
        key="pagerank_trust",
        network=NETWORK_TRUST,
        value_fn=lambda ds, labels, s: pagerank_trust(ds.trust, s.propagation),
    ),
    CredibilityAlgorithmDescription(
        key="ppr_trust",
        network=NETWORK_TRUST,
        value_fn=lambda ds, labels, s: personalized_pagerank_trust(
            ds.trust, labels.high, s.propagation
        ),
    ),
    CredibilityAlgorithmDescription(
        key="trustrank",
        network=NETWORK_TRUST,
        value_fn=lambda ds, labels, s: trustrank(ds.trust, labels.high, labels.low, s.propagation),
    ),
    CredibilityAlgorithmDescription(
        key="locred",
        network=NETWORK_RESHARE,
        value_fn=lambda ds, labels, s: locred(ds.reshare, labels.low, s.propagation),
    ),
    CredibilityAlgorithmDescription(
        key="reputation_scaling",
        network=NETWORK_RESHARE,
        value_fn=lambda ds, labels, s: reputation_scaling(
            personalized_pagerank_trust(ds.trust, labels.high, s.propagation),
            locred(ds.reshare, labels.low, s.propagation),
            s.propagation.reputation_scale,
        ),
    ),
    CredibilityAlgorithmDescription(
        key="node2vec_reshare",
        network=NETWORK_RESHARE,
        value_fn=_node2vec_knn(NETWORK_RESHARE),
        uses_embedding=True,
    ),
    CredibilityAlgorithmDescription(
        key="hits",
        network=NETWORK_BIPARTITE,
        value_fn=lambda ds, labels, s: hits(ds.bipartite, s.propagation)[0],
        sources_fn=lambda ds, labels, s: hits(ds.bipartite, s.propagation)[1],
    ),
    CredibilityAlgorithmDescription(
        key="cohits",
        network=NETWORK_BIPARTITE,
        value_fn=_bipartite(BipartiteVariant.COHITS, 0),
        sources_fn=_bipartite(BipartiteVariant.COHITS, 1),
    ),
    CredibilityAlgorithmDescription(
        key="bgrm",
        network=NETWORK_BIPARTITE,
        value_fn=_bipartite(BipartiteVariant.BGRM, 0),
        sources_fn=_bipartite(BipartiteVariant.BGRM, 1),
    ),
    CredibilityAlgorithmDescription(
        key="birank",
        network=NETWORK_BIPARTITE,
        value_fn=_bipartite(BipartiteVariant.BIRANK, 0),
        sources_fn=_bipartite(BipartiteVariant.BIRANK, 1),
    ),
    CredibilityAlgorithmDescription(
        key="cocred",
        network=NETWORK_BIPARTITE,
        value_fn=_cocred(0),
        sources_fn=_cocred(1),
    ),
    CredibilityAlgorithmDescription(
        key="node2vec_coshare",
        network=NETWORK_COSHARE,
        value_fn=_node2vec_knn(NETWORK_COSHARE),
        uses_embedding=True,
    ),
)

ALGORITHMS: dict[str, CredibilityAlgorithmDescription] = {a.key: a for a in ALGORITHM_TYPES}


def get_algorithm(key: str) -> CredibilityAlgorithmDescription:
    """Return the description of an algorithm by key."""
    try:
        return ALGORITHMS[key]
    except KeyError as err:
        raise ConfigurationError(
            f"Unknown algorithm {key!r}; choose from {', '.join(ALGORITHMS)}"
        ) from err


def resolve_algorithms(keys: list[str] | tuple[str, ...]) -> list[CredibilityAlgorithmDescription]:
    """Expand ``all`` and validate algorithm keys, keeping registry order."""
    if "all" in keys:
        return list(ALGORITHM_TYPES)
    return [get_algorithm(key) for key in dict.fromkeys(keys)]


def run_algorithm(
    description: CredibilityAlgorithmDescription,
    dataset: CredibilityDataset,
    labels: LabelSets,
    settings: AlgorithmSettings,
) -> ScoreVector:
    """Score a dataset with one algorithm after checking that its network has edges."""
    dataset.require_edges(description.network)
    _LOGGER.debug("Running %s on the %s network", description.key, description.network)
    return description.value_fn(dataset, labels, settings)
