"""Reshare, trust, bipartite and co-share networks and their structural analysis."""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from sklearn.metrics.pairwise import cosine_similarity

from .const import (
    BACKBONE_SIGNIFICANCE_PRESET,
    COSHARE_CORE_NODE_FRACTION,
    COSHARE_TOP_EDGE_FRACTION,
)
from .exceptions import ConfigurationError
from .ingest import PostRecord

_LOGGER = logging.getLogger(__name__)

type NodeMask = np.ndarray


def _csr(
    rows: Iterable[int], cols: Iterable[int], data: Iterable[float], shape: tuple[int, int]
) -> sp.csr_matrix:
    matrix = sp.coo_matrix(
        (
            np.fromiter(data, dtype=np.float64),
            (np.fromiter(rows, dtype=np.int64), np.fromiter(cols, dtype=np.int64)),
        ),
        shape=shape,
    ).tocsr()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Weighted graph over account ids held as a sparse adjacency matrix."""

    nodes: tuple[str, ...]
    adjacency: sp.csr_matrix

    directed: ClassVar[bool] = True

    def __post_init__(self) -> None:
        """Check the adjacency shape against the node list."""
        n = len(self.nodes)
        if self.adjacency.shape != (n, n):
            raise ValueError(f"Adjacency shape {self.adjacency.shape} does not match {n} nodes")

    @cached_property
    def index(self) -> dict[str, int]:
        """Return the dense index of every node."""
        return {node: i for i, node in enumerate(self.nodes)}

    @property
    def n_nodes(self) -> int:
        """Return the number of nodes."""
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        """Return the number of edges, counting undirected pairs once."""
        nnz = int(self.adjacency.nnz)
        return nnz if self.directed else nnz // 2

    @cached_property
    def binary(self) -> sp.csr_matrix:
        """Return the unweighted adjacency."""
        pattern = self.adjacency.copy()
        pattern.data = np.ones_like(pattern.data)
        return pattern

    @cached_property
    def out_strength(self) -> np.ndarray:
        """Return the summed outgoing edge weight per node."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @cached_property
    def in_strength(self) -> np.ndarray:
        """Return the summed incoming edge weight per node."""
        return np.asarray(self.adjacency.sum(axis=0)).ravel()

    @cached_property
    def out_degree(self) -> np.ndarray:
        """Return the number of out-neighbors per node."""
        return np.diff(self.adjacency.indptr)

    @cached_property
    def in_degree(self) -> np.ndarray:
        """Return the number of in-neighbors per node."""
        return np.bincount(self.adjacency.indices, minlength=self.n_nodes)

    def neighbors(self, node: int) -> np.ndarray:
        """Return the out-neighbors of a node index."""
        start, end = self.adjacency.indptr[node], self.adjacency.indptr[node + 1]
        return self.adjacency.indices[start:end]

    def iter_edges(self) -> Iterator[tuple[str, str, float]]:
        """Yield ``(src, dst, weight)``; undirected pairs are yielded once."""
        coo = self.adjacency.tocoo()
        for i, j, w in zip(coo.row, coo.col, coo.data, strict=True):
            if self.directed or i < j:
                yield self.nodes[i], self.nodes[j], float(w)

    def subgraph(self, keep: NodeMask) -> WeightedGraph:
        """Return the subgraph induced by a boolean node mask."""
        keep = np.asarray(keep, dtype=bool)
        idx = np.flatnonzero(keep)
        return type(self)(
            nodes=tuple(self.nodes[i] for i in idx),
            adjacency=self.adjacency[idx][:, idx].tocsr(),
        )

    def with_adjacency(self, adjacency: sp.spmatrix) -> WeightedGraph:
        """Return a graph over the same nodes with another edge set."""
        adjacency = sp.csr_matrix(adjacency)
        adjacency.eliminate_zeros()
        return type(self)(nodes=self.nodes, adjacency=adjacency)

    def same_as(self, other: WeightedGraph) -> bool:
        """Return whether both graphs have identical nodes and weighted edges."""
        return (
            self.nodes == other.nodes
            and self.directed == other.directed
            and (self.adjacency != other.adjacency).nnz == 0
        )


class DirectedWeightedGraph(WeightedGraph):
    """Directed reshare network G or its transpose, the trust network."""

    directed = True


class CoShareGraph(WeightedGraph):
    """Undirected account projection weighted by TF-IDF cosine similarity."""

    directed = False


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Account × source incidence weighted by share counts."""

    accounts: tuple[str, ...]
    sources: tuple[str, ...]
    incidence: sp.csr_matrix

    @cached_property
    def account_index(self) -> dict[str, int]:
        """Return the dense index of every account."""
        return {a: i for i, a in enumerate(self.accounts)}

    @cached_property
    def source_index(self) -> dict[str, int]:
        """Return the dense index of every source."""
        return {d: j for j, d in enumerate(self.sources)}

    @property
    def n_edges(self) -> int:
        """Return the number of account-source edges."""
        return int(self.incidence.nnz)

    @cached_property
    def account_strength(self) -> np.ndarray:
        """Return the number of link shares per account."""
        return np.asarray(self.incidence.sum(axis=1)).ravel()

    @cached_property
    def source_strength(self) -> np.ndarray:
        """Return the number of link shares per source."""
        return np.asarray(self.incidence.sum(axis=0)).ravel()

    @cached_property
    def account_degree(self) -> np.ndarray:
        """Return the number of distinct sources per account."""
        return np.diff(self.incidence.indptr)

    @cached_property
    def source_degree(self) -> np.ndarray:
        """Return the number of distinct accounts per source."""
        return np.bincount(self.incidence.indices, minlength=len(self.sources))

    @cached_property
    def binary(self) -> sp.csr_matrix:
        """Return A with A_ij = 1 iff G_ij > 0."""
        pattern = self.incidence.copy()
        pattern.data = np.ones_like(pattern.data)
        return pattern

    def iter_edges(self) -> Iterator[tuple[str, str, float]]:
        """Yield ``(account, source, weight)`` triples."""
        coo = self.incidence.tocoo()
        for i, j, w in zip(coo.row, coo.col, coo.data, strict=True):
            yield self.accounts[i], self.sources[j], float(w)

    def restrict(self, keep_accounts: NodeMask, keep_sources: NodeMask) -> BipartiteGraph:
        """Return the bipartite subgraph induced by account and source masks."""
        rows = np.flatnonzero(keep_accounts)
        cols = np.flatnonzero(keep_sources)
        return BipartiteGraph(
            accounts=tuple(self.accounts[i] for i in rows),
            sources=tuple(self.sources[j] for j in cols),
            incidence=self.incidence[rows][:, cols].tocsr(),
        )


def build_reshare_network(records: Iterable[PostRecord]) -> DirectedWeightedGraph:
    """Build the reshare network: edge i→j weighted by how often j reshared i."""
    records = list(records)
    accounts = {r.account_id for r in records}
    accounts.update(r.reshared_from for r in records if r.reshared_from)
    nodes = tuple(sorted(accounts))
    index = {node: i for i, node in enumerate(nodes)}

    reshares: Counter[tuple[int, int]] = Counter()
    self_loops = 0
    for record in records:
        if not record.reshared_from:
            continue
        if record.reshared_from == record.account_id:
            self_loops += 1
            continue
        reshares[index[record.reshared_from], index[record.account_id]] += 1
    if self_loops:
        _LOGGER.debug("Dropped %d self-reshares", self_loops)

    adjacency = _csr(
        (src for src, _ in reshares),
        (dst for _, dst in reshares),
        reshares.values(),
        (len(nodes), len(nodes)),
    )
    return DirectedWeightedGraph(nodes=nodes, adjacency=adjacency)


def transpose_graph(g: DirectedWeightedGraph) -> DirectedWeightedGraph:
    """Reverse every edge, turning the reshare network into the trust network."""
    return DirectedWeightedGraph(nodes=g.nodes, adjacency=g.adjacency.transpose().tocsr())


def build_bipartite_network(records: Iterable[PostRecord]) -> BipartiteGraph:
    """Build the account-source network from link shares."""
    shares: Counter[tuple[str, str]] = Counter()
    for record in records:
        for domain in dict.fromkeys(record.domains):
            shares[record.account_id, domain] += 1

    accounts = tuple(sorted({a for a, _ in shares}))
    sources = tuple(sorted({d for _, d in shares}))
    account_index = {a: i for i, a in enumerate(accounts)}
    source_index = {d: j for j, d in enumerate(sources)}
    incidence = _csr(
        (account_index[a] for a, _ in shares),
        (source_index[d] for _, d in shares),
        shares.values(),
        (len(accounts), len(sources)),
    )
    return BipartiteGraph(accounts=accounts, sources=sources, incidence=incidence)


def tfidf_matrix(b: BipartiteGraph) -> sp.csr_matrix:
    """Return account TF-IDF vectors: raw share counts times ln(|U| / df)."""
    n_accounts = len(b.accounts)
    df = b.source_degree.astype(np.float64)
    idf = np.log(n_accounts / np.maximum(df, 1.0))
    return sp.csr_matrix(b.incidence @ sp.diags(idf))


def build_coshare_network(b: BipartiteGraph) -> CoShareGraph:
    """Project the bipartite network onto accounts with TF-IDF cosine weights."""
    if not b.accounts:
        raise ConfigurationError("Co-share network needs at least one account")
    tfidf = tfidf_matrix(b)
    similarity = sp.csr_matrix(cosine_similarity(tfidf, dense_output=False))
    similarity.setdiag(0.0)
    similarity.data = np.clip(similarity.data, 0.0, 1.0)
    similarity.eliminate_zeros()

    keep = np.diff(similarity.indptr) > 0
    zero_vectors = int(np.count_nonzero(np.diff(tfidf.indptr) == 0))
    if zero_vectors:
        _LOGGER.debug("%d accounts share only universal domains and stay isolated", zero_vectors)
    idx = np.flatnonzero(keep)
    return CoShareGraph(
        nodes=tuple(b.accounts[i] for i in idx),
        adjacency=similarity[idx][:, idx].tocsr(),
    )


def _degree_fn(
    g: WeightedGraph | BipartiteGraph,
) -> tuple[int, Callable[[np.ndarray], np.ndarray]]:
    """Return the node count and a function mapping an alive mask to degrees."""
    if isinstance(g, BipartiteGraph):
        incidence = g.binary
        n_accounts = len(g.accounts)

        def bipartite_degree(alive: np.ndarray) -> np.ndarray:
            alive_f = alive.astype(np.float64)
            deg_accounts = incidence @ alive_f[n_accounts:]
            deg_sources = incidence.T @ alive_f[:n_accounts]
            return np.concatenate([deg_accounts, deg_sources])

        return n_accounts + len(g.sources), bipartite_degree

    adjacency = g.binary

    def graph_degree(alive: np.ndarray) -> np.ndarray:
        alive_f = alive.astype(np.float64)
        degree = adjacency @ alive_f
        if g.directed:
            degree = degree + adjacency.T @ alive_f
        return np.asarray(degree)

    return g.n_nodes, graph_degree


def _peel(degree_fn: Callable[[np.ndarray], np.ndarray], alive: np.ndarray, k: int) -> np.ndarray:
    alive = alive.copy()
    while True:
        drop = alive & (degree_fn(alive) < k)
        if not drop.any():
            return alive
        alive &= ~drop


def _restrict(
    g: WeightedGraph | BipartiteGraph, alive: np.ndarray
) -> WeightedGraph | BipartiteGraph:
    if isinstance(g, BipartiteGraph):
        n_accounts = len(g.accounts)
        return g.restrict(alive[:n_accounts], alive[n_accounts:])
    return g.subgraph(alive)


def k_core(g: WeightedGraph | BipartiteGraph, k: int) -> WeightedGraph | BipartiteGraph:
    """Return the maximal subgraph whose nodes all have degree ≥ k.

    Directed graphs use total (in + out) degree; bipartite graphs are peeled as
    undirected graphs over accounts and sources.
    """
    if k < 0:
        raise ConfigurationError(f"k must be non-negative, got {k}")
    n, degree_fn = _degree_fn(g)
    alive = _peel(degree_fn, np.ones(n, dtype=bool), k)
    _LOGGER.debug("%d-core keeps %d of %d nodes", k, int(alive.sum()), n)
    return _restrict(g, alive)


def core_numbers(g: WeightedGraph | BipartiteGraph) -> np.ndarray:
    """Return the core number of every node (accounts then sources for bipartite)."""
    n, degree_fn = _degree_fn(g)
    core = np.zeros(n, dtype=np.int64)
    alive = np.ones(n, dtype=bool)
    k = 0
    while alive.any():
        k += 1
        survivors = _peel(degree_fn, alive, k)
        core[alive & ~survivors] = k - 1
        alive = survivors
    return core


def disparity_pvalues(g: WeightedGraph) -> tuple[sp.coo_matrix, np.ndarray, np.ndarray]:
    """Return edges with their disparity p-values at the source and target endpoint.

    The p-value at an endpoint with degree k is ``(1 - w / s) ** (k - 1)`` where s
    is its strength; directed graphs use out-edges at the source and in-edges at
    the target.
    """
    coo = g.adjacency.tocoo()
    if g.directed:
        src_strength, src_degree = g.out_strength, g.out_degree
        dst_strength, dst_degree = g.in_strength, g.in_degree
    else:
        src_strength, src_degree = g.out_strength, g.out_degree
        dst_strength, dst_degree = g.out_strength, g.out_degree

    p_src = np.power(1.0 - coo.data / src_strength[coo.row], src_degree[coo.row] - 1.0)
    p_dst = np.power(1.0 - coo.data / dst_strength[coo.col], dst_degree[coo.col] - 1.0)
    return coo, p_src, p_dst


def disparity_backbone(
    g: WeightedGraph, significance: float = BACKBONE_SIGNIFICANCE_PRESET
) -> WeightedGraph:
    """Keep edges significant at either endpoint under the disparity filter."""
    if not 0.0 < significance < 1.0:
        raise ConfigurationError(f"Significance must be in (0, 1), got {significance}")
    coo, p_src, p_dst = disparity_pvalues(g)
    if g.directed:
        src_degree, dst_degree = g.out_degree[coo.row], g.in_degree[coo.col]
    else:
        src_degree, dst_degree = g.out_degree[coo.row], g.out_degree[coo.col]

    keep = (p_src < significance) | (p_dst < significance) | (src_degree == 1) | (dst_degree == 1)
    kept = sp.coo_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=g.adjacency.shape
    )
    _LOGGER.debug("Backbone at %.3g keeps %d of %d edges", significance, keep.sum(), coo.nnz)
    return g.with_adjacency(kept)


def credibility_assortativity(g: WeightedGraph, scores: Mapping[str, float]) -> float | None:
    """Return the Pearson correlation of scores across edge endpoints.

    Only edges whose endpoints both have a score count; weights are ignored.
    Returns None when fewer than two such edges exist or either side has no variance.
    """
    values = np.array([scores.get(node, np.nan) for node in g.nodes], dtype=np.float64)
    coo = g.adjacency.tocoo()
    x = values[coo.row]
    y = values[coo.col]
    scored = ~(np.isnan(x) | np.isnan(y))
    x, y = x[scored], y[scored]
    if x.size < 2:
        _LOGGER.warning("Assortativity undefined: %d scored edges", x.size)
        return None
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        _LOGGER.warning("Assortativity undefined: no score variance across edges")
        return None
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def node_strengths(g: WeightedGraph | BipartiteGraph, direction: str = "in") -> np.ndarray:
    """Return node strengths (in, out or total; accounts then sources for bipartite)."""
    if isinstance(g, BipartiteGraph):
        return np.concatenate([g.account_strength, g.source_strength])
    if direction == "in":
        return g.in_strength
    if direction == "out":
        return g.out_strength
    if direction == "total":
        return g.in_strength + g.out_strength if g.directed else g.out_strength
    raise ConfigurationError(f"Unknown strength direction: {direction}")


def top_edges(g: WeightedGraph, fraction: float) -> WeightedGraph:
    """Keep the heaviest fraction of edges; ties keep the earlier edge."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"Edge fraction must be in (0, 1], got {fraction}")
    coo = sp.triu(g.adjacency).tocoo() if not g.directed else g.adjacency.tocoo()
    n_keep = math.ceil(fraction * coo.nnz)
    order = np.argsort(-coo.data, kind="stable")[:n_keep]
    kept = sp.coo_matrix((coo.data[order], (coo.row[order], coo.col[order])), shape=coo.shape)
    if not g.directed:
        kept = kept + kept.T
    return g.with_adjacency(kept)


def innermost_core(g: WeightedGraph, fraction: float) -> WeightedGraph:
    """Keep the fraction of nodes with the highest core numbers."""
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError(f"Node fraction must be in (0, 1], got {fraction}")
    core = core_numbers(g)
    n_keep = math.ceil(fraction * g.n_nodes)
    keep = np.zeros(g.n_nodes, dtype=bool)
    keep[np.argsort(-core, kind="stable")[:n_keep]] = True
    return g.subgraph(keep)


def giant_component(g: WeightedGraph) -> WeightedGraph:
    """Keep the largest weakly connected component."""
    if g.n_nodes == 0:
        return g
    _, labels = connected_components(g.adjacency, directed=g.directed, connection="weak")
    largest = np.argmax(np.bincount(labels))
    return g.subgraph(labels == largest)


def coshare_visual_filter(
    g: CoShareGraph,
    edge_fraction: float = COSHARE_TOP_EDGE_FRACTION,
    node_fraction: float = COSHARE_CORE_NODE_FRACTION,
    significance: float = BACKBONE_SIGNIFICANCE_PRESET,
) -> WeightedGraph:
    """Filter a dense co-share network for visualization.

    Heaviest edges, then the innermost core nodes, then the disparity backbone,
    then the giant component.
    """
    filtered = top_edges(g, edge_fraction)
    filtered = innermost_core(filtered, node_fraction)
    filtered = disparity_backbone(filtered, significance)
    return giant_component(filtered)


@dataclass(frozen=True, slots=True)
class NetworkSummary:
    """Descriptive statistics of a network."""

    nodes: int
    edges: int
    average_degree: float
    assortativity: float | None


def describe_network(
    g: WeightedGraph | BipartiteGraph, scores: Mapping[str, float] | None = None
) -> NetworkSummary:
    """Summarize node and edge counts, average degree and credibility assortativity."""
    if isinstance(g, BipartiteGraph):
        n_accounts = len(g.accounts)
        return NetworkSummary(
            nodes=n_accounts + len(g.sources),
            edges=g.n_edges,
            average_degree=g.n_edges / n_accounts if n_accounts else 0.0,
            assortativity=None,
        )
    edges = g.n_edges
    if g.n_nodes:
        average = edges / g.n_nodes if g.directed else 2 * edges / g.n_nodes
    else:
        average = 0.0
    return NetworkSummary(
        nodes=g.n_nodes,
        edges=edges,
        average_degree=average,
        assortativity=credibility_assortativity(g, scores) if scores is not None else None,
    )
