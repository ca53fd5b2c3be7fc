"""Labeled post records with lazily built networks."""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections.abc import Iterable
from dataclasses import dataclass, field
from functools import cached_property

from .const import (
    DEFAULT_CONFIDENCE_FLOOR,
    DEFAULT_LABEL_THRESHOLD,
    DEFAULT_MIN_ACCOUNT_LINKS,
    DEFAULT_MIN_DOMAIN_SHARES,
    NETWORK_BIPARTITE,
    NETWORK_COSHARE,
    NETWORK_RESHARE,
    NETWORK_TRUST,
)
from .embedding import EmbeddingMatrix, Node2vecParams, node2vec
from .exceptions import ConfigurationError, IncompatibleNetworkError
from .ingest import (
    AccountCredibility,
    LabelSets,
    PostRecord,
    SourceRating,
    apply_activity_filters,
    label_accounts,
    score_accounts,
)
from .networks import (
    BipartiteGraph,
    CoShareGraph,
    DirectedWeightedGraph,
    WeightedGraph,
    build_bipartite_network,
    build_coshare_network,
    build_reshare_network,
    transpose_graph,
)

_LOGGER = logging.getLogger(__name__)


@dataclass(eq=False)
class CredibilityDataset:
    """Filtered records, account credibilities and ground-truth labels."""

    records: tuple[PostRecord, ...]
    credibilities: tuple[AccountCredibility, ...]
    labels: LabelSets
    name: str = "dataset"
    _embeddings: dict[tuple[str, Node2vecParams], EmbeddingMatrix] = field(
        default_factory=dict, init=False, repr=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    @classmethod
    def from_records(
        cls,
        records: Iterable[PostRecord],
        ratings: Iterable[SourceRating],
        *,
        name: str = "dataset",
        min_account_links: int = DEFAULT_MIN_ACCOUNT_LINKS,
        min_domain_shares: int = DEFAULT_MIN_DOMAIN_SHARES,
        threshold: float = DEFAULT_LABEL_THRESHOLD,
        confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
    ) -> CredibilityDataset:
        """Filter records, score accounts and collect the known accounts."""
        filtered = apply_activity_filters(records, min_account_links, min_domain_shares)
        credibilities, labels = label_accounts(
            score_accounts(filtered, ratings), threshold, confidence_floor
        )
        _LOGGER.info(
            "%s: %d records, %d accounts, %d high and %d low credibility",
            name,
            len(filtered),
            len(credibilities),
            len(labels.high),
            len(labels.low),
        )
        return cls(
            records=tuple(filtered),
            credibilities=tuple(credibilities),
            labels=labels,
            name=name,
        )

    @cached_property
    def fingerprint(self) -> str:
        """Return a SHA-256 digest of the records."""
        digest = hashlib.sha256()
        for record in self.records:
            digest.update(json.dumps(record.as_dict(), sort_keys=True).encode())
            digest.update(b"\n")
        return digest.hexdigest()

    @cached_property
    def scores(self) -> dict[str, float]:
        """Return the credibility score of every scored account."""
        return {c.account_id: c.score for c in self.credibilities if c.score is not None}

    @cached_property
    def reshare(self) -> DirectedWeightedGraph:
        """Return the reshare network."""
        return build_reshare_network(self.records)

    @cached_property
    def trust(self) -> DirectedWeightedGraph:
        """Return the trust network."""
        return transpose_graph(self.reshare)

    @cached_property
    def bipartite(self) -> BipartiteGraph:
        """Return the account-source network."""
        return build_bipartite_network(self.records)

    @cached_property
    def coshare(self) -> CoShareGraph:
        """Return the co-share network."""
        return build_coshare_network(self.bipartite)

    def network(self, name: str) -> WeightedGraph | BipartiteGraph:
        """Return a network by name."""
        if name == NETWORK_RESHARE:
            return self.reshare
        if name == NETWORK_TRUST:
            return self.trust
        if name == NETWORK_BIPARTITE:
            return self.bipartite
        if name == NETWORK_COSHARE:
            return self.coshare
        raise ConfigurationError(f"Unknown network: {name}")

    def require_edges(self, name: str) -> None:
        """Raise when a network has no edges."""
        if self.network(name).n_edges == 0:
            raise IncompatibleNetworkError(f"{self.name} has no {name} edges")

    def embedding(self, name: str, params: Node2vecParams) -> EmbeddingMatrix:
        """Return node2vec embeddings of a network, trained once per parameter set."""
        key = (name, params)
        with self._lock:
            if key not in self._embeddings:
                graph = self.network(name)
                if not isinstance(graph, WeightedGraph):
                    raise IncompatibleNetworkError(f"Cannot embed the {name} network")
                self._embeddings[key] = node2vec(graph, params)
            return self._embeddings[key]
