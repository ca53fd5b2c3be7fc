"""node2vec embeddings, KNN credibility ranking and PCA projection."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from collections.abc import Iterable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np
import scipy.sparse as sp
import torch
from sklearn.decomposition import PCA
from sklearn.metrics import pairwise_distances
from torch import nn

from .centrality import Polarity, ScoreVector
from .const import (
    DEFAULT_DIMENSION,
    DEFAULT_EPOCHS,
    DEFAULT_FOLDS,
    DEFAULT_KNN_K,
    DEFAULT_LEARNING_RATE,
    DEFAULT_NEGATIVES,
    DEFAULT_PQ_GRID,
    DEFAULT_SEED,
    DEFAULT_WALK_LENGTH,
    DEFAULT_WALKS_PER_NODE,
    DEFAULT_WINDOW,
)
from .exceptions import ConfigurationError, EvaluationError, IncompatibleNetworkError, InputError
from .ingest import LabelSets
from .metrics import check_no_leakage, kfold_split, roc_auc
from .networks import WeightedGraph

_LOGGER = logging.getLogger(__name__)

EMBEDDING_MAGIC = b"N2VE"
EMBEDDING_VERSION = 1
EMBEDDING_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u8"), ("dim", "<u8")])
INDEX_HEADER = ("index", "node")

# Transition tables of at most this many cached entries are kept per walker.
TRANSITION_CACHE_LIMIT = 2_000_000

# Learning rate floor as a fraction of the initial rate.
MIN_LR_FRACTION = 1e-4

DEFAULT_BATCH_SIZE = 4096


@dataclass(frozen=True, kw_only=True)
class Node2vecParams:
    """Walk and skip-gram hyperparameters.

    A walk takes ``walk_length`` steps and so visits ``walk_length + 1`` nodes.
    """

    p: float = 1.0
    q: float = 1.0
    dimension: int = DEFAULT_DIMENSION
    window: int = DEFAULT_WINDOW
    walks_per_node: int = DEFAULT_WALKS_PER_NODE
    walk_length: int = DEFAULT_WALK_LENGTH
    epochs: int = DEFAULT_EPOCHS
    negatives: int = DEFAULT_NEGATIVES
    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = DEFAULT_SEED
    workers: int = 1
    deterministic: bool = True

    def __post_init__(self) -> None:
        """Reject non-positive parameters."""
        for name in (
            "p",
            "q",
            "dimension",
            "window",
            "walks_per_node",
            "walk_length",
            "epochs",
            "negatives",
            "learning_rate",
            "batch_size",
            "workers",
        ):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"node2vec {name} must be positive")

    def with_pq(self, p: float, q: float) -> Node2vecParams:
        """Return a copy with other walk biases."""
        return dataclasses.replace(self, p=p, q=q)

    def as_dict(self) -> dict[str, Any]:
        """Return a serializable snapshot."""
        return dataclasses.asdict(self)


class KnnDistance(StrEnum):
    """Distance used to find nearest labeled accounts."""

    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


@dataclass(frozen=True, kw_only=True)
class KnnConfig:
    """Nearest-neighbor ranking parameters."""

    k: int = DEFAULT_KNN_K
    distance: KnnDistance = KnnDistance.COSINE

    def __post_init__(self) -> None:
        """Validate k and normalize the distance name."""
        if self.k < 1:
            raise ConfigurationError(f"k must be at least 1, got {self.k}")
        object.__setattr__(self, "distance", KnnDistance(self.distance))

    def as_dict(self) -> dict[str, Any]:
        """Return a serializable snapshot."""
        return {"k": self.k, "distance": str(self.distance)}


@dataclass(frozen=True, eq=False)
class WalkCorpus:
    """Random walks as node-index arrays over a fixed node list."""

    nodes: tuple[str, ...]
    walks: list[np.ndarray]

    def __len__(self) -> int:
        """Return the number of walks."""
        return len(self.walks)

    def as_ids(self) -> Iterator[list[str]]:
        """Yield every walk as node ids."""
        for walk in self.walks:
            yield [self.nodes[i] for i in walk]


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """One embedding row per node."""

    nodes: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        """Check shape and finiteness."""
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.nodes):
            raise ValueError(f"{self.vectors.shape} embedding for {len(self.nodes)} nodes")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("Embedding has non-finite entries")

    @cached_property
    def index(self) -> dict[str, int]:
        """Return the row of every node."""
        return {node: i for i, node in enumerate(self.nodes)}

    @property
    def dimension(self) -> int:
        """Return the vector length."""
        return int(self.vectors.shape[1])


class _Walker:
    """Second-order biased walker over a CSR adjacency."""

    def __init__(self, g: WeightedGraph, p: float, q: float) -> None:
        self.adjacency = g.adjacency
        self.incoming = sp.csr_matrix(g.adjacency.T)
        self.inv_p = 1.0 / p
        self.inv_q = 1.0 / q
        self._first: dict[int, np.ndarray] = {}
        self._second: dict[tuple[int, int], np.ndarray] = {}

    def _row(self, matrix: sp.csr_matrix, node: int) -> tuple[np.ndarray, np.ndarray]:
        start, end = matrix.indptr[node], matrix.indptr[node + 1]
        return matrix.indices[start:end], matrix.data[start:end]

    def weights(self, prev: int | None, cur: int) -> tuple[np.ndarray, np.ndarray]:
        """Return the neighbors of ``cur`` and their unnormalized transition weights."""
        neighbors, weights = self._row(self.adjacency, cur)
        if prev is None:
            return neighbors, weights
        bias = np.full(neighbors.size, self.inv_q)
        linked_to_prev, _ = self._row(self.incoming, prev)
        bias[np.isin(neighbors, linked_to_prev, assume_unique=True)] = 1.0
        bias[neighbors == prev] = self.inv_p
        return neighbors, weights * bias

    def _cumulative(self, prev: int | None, cur: int) -> np.ndarray:
        if prev is None:
            table = self._first.get(cur)
            if table is None:
                table = np.cumsum(self.weights(None, cur)[1])
                self._first[cur] = table
            return table
        key = (prev, cur)
        table = self._second.get(key)
        if table is None:
            table = np.cumsum(self.weights(prev, cur)[1])
            if len(self._second) < TRANSITION_CACHE_LIMIT:
                self._second[key] = table
        return table

    def walk(self, start: int, steps: int, rng: np.random.Generator) -> np.ndarray:
        """Take up to ``steps`` steps from ``start``, stopping at a node without out-edges."""
        walk = [start]
        prev: int | None = None
        while len(walk) <= steps:
            cur = walk[-1]
            neighbors, _ = self._row(self.adjacency, cur)
            if neighbors.size == 0:
                break
            table = self._cumulative(prev, cur)
            pick = int(np.searchsorted(table, rng.random() * table[-1], side="right"))
            walk.append(int(neighbors[min(pick, neighbors.size - 1)]))
            prev = cur
        return np.asarray(walk, dtype=np.int64)


def transition_probabilities(
    g: WeightedGraph, p: float, q: float, prev: str | None, cur: str
) -> dict[str, float]:
    """Return the probability of each next node when at ``cur`` having come from ``prev``."""
    walker = _Walker(g, p, q)
    index = g.index
    neighbors, weights = walker.weights(None if prev is None else index[prev], index[cur])
    total = weights.sum()
    return {g.nodes[n]: float(w / total) for n, w in zip(neighbors, weights, strict=True)}


def generate_biased_walks(g: WeightedGraph, params: Node2vecParams) -> WalkCorpus:
    """Generate ``walks_per_node`` biased walks from every node.

    Each walk draws from its own generator seeded by (seed, node, walk index),
    so the corpus does not depend on the number of workers.
    """
    if g.n_edges == 0:
        raise IncompatibleNetworkError("Random walks need a network with at least one edge")
    walker = _Walker(g, params.p, params.q)
    jobs = [(node, w) for w in range(params.walks_per_node) for node in range(g.n_nodes)]

    def run(job: tuple[int, int]) -> np.ndarray:
        node, w = job
        rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(node, w)))
        return walker.walk(node, params.walk_length, rng)

    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as pool:
            walks = list(pool.map(run, jobs))
    else:
        walks = [run(job) for job in jobs]
    _LOGGER.debug(
        "Generated %d walks (p=%s, q=%s) over %d nodes", len(walks), params.p, params.q, g.n_nodes
    )
    return WalkCorpus(nodes=g.nodes, walks=walks)


class SkipGramModel(nn.Module):
    """Skip-gram with negative sampling: center and context embedding tables."""

    def __init__(self, n_nodes: int, dimension: int, generator: torch.Generator) -> None:
        """Initialize center vectors uniformly in ±0.5/dim and context vectors at zero."""
        super().__init__()
        self.center = nn.Embedding(n_nodes, dimension, sparse=True)
        self.context = nn.Embedding(n_nodes, dimension, sparse=True)
        bound = 0.5 / dimension
        with torch.no_grad():
            self.center.weight.uniform_(-bound, bound, generator=generator)
            self.context.weight.zero_()

    def forward(
        self, centers: torch.Tensor, contexts: torch.Tensor, negatives: torch.Tensor
    ) -> torch.Tensor:
        """Return the summed negative log-likelihood of a batch."""
        v = self.center(centers)
        u = self.context(contexts)
        positive = nn.functional.logsigmoid((u * v).sum(dim=1))
        u_neg = self.context(negatives)
        negative = nn.functional.logsigmoid(-torch.bmm(u_neg, v.unsqueeze(2)).squeeze(2))
        return -(positive.sum() + negative.sum())


def skipgram_pairs(corpus: WalkCorpus, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (center, context) index pairs within ``window`` steps on the same walk."""
    if not corpus.walks:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    tokens = np.concatenate(corpus.walks)
    walk_ids = np.repeat(np.arange(len(corpus.walks)), [w.size for w in corpus.walks])
    centers: list[np.ndarray] = []
    contexts: list[np.ndarray] = []
    for offset in range(1, window + 1):
        same_walk = walk_ids[:-offset] == walk_ids[offset:]
        left, right = tokens[:-offset][same_walk], tokens[offset:][same_walk]
        centers.extend((left, right))
        contexts.extend((right, left))
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


@contextmanager
def _torch_threads(count: int) -> Iterator[None]:
    previous = torch.get_num_threads()
    torch.set_num_threads(count)
    try:
        yield
    finally:
        torch.set_num_threads(previous)


def train_embeddings(corpus: WalkCorpus, params: Node2vecParams) -> EmbeddingMatrix:
    """Train skip-gram with negative sampling on a walk corpus.

    Negatives are drawn from the unigram distribution raised to 0.75 and the
    learning rate decays linearly. Deterministic mode runs on one thread and
    is bitwise reproducible for a fixed seed.
    """
    if not corpus.walks:
        raise ConfigurationError("Cannot train embeddings on an empty corpus")
    n_nodes = len(corpus.nodes)
    centers_np, contexts_np = skipgram_pairs(corpus, params.window)

    trained = np.zeros(n_nodes, dtype=bool)
    trained[centers_np] = True
    if untrained := int((~trained).sum()):
        _LOGGER.warning("%d nodes have no training context and get zero vectors", untrained)

    generator = torch.Generator().manual_seed(params.seed)
    model = SkipGramModel(n_nodes, params.dimension, generator)
    if centers_np.size == 0:
        return EmbeddingMatrix(corpus.nodes, np.zeros((n_nodes, params.dimension)))

    counts = np.bincount(np.concatenate(corpus.walks), minlength=n_nodes).astype(np.float64)
    noise = torch.from_numpy(counts**0.75)
    centers = torch.from_numpy(centers_np)
    contexts = torch.from_numpy(contexts_np)

    n_pairs = centers.numel()
    batches_per_epoch = math.ceil(n_pairs / params.batch_size)
    total_steps = batches_per_epoch * params.epochs
    optimizer = torch.optim.SGD(model.parameters(), lr=params.learning_rate)
    schedule = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(MIN_LR_FRACTION, 1.0 - step / total_steps)
    )

    with _torch_threads(1 if params.deterministic else params.workers):
        for epoch in range(params.epochs):
            order = torch.randperm(n_pairs, generator=generator)
            epoch_loss = 0.0
            for start in range(0, n_pairs, params.batch_size):
                batch = order[start : start + params.batch_size]
                negatives = torch.multinomial(
                    noise, batch.numel() * params.negatives, replacement=True, generator=generator
                ).view(batch.numel(), params.negatives)
                optimizer.zero_grad()
                loss = model(centers[batch], contexts[batch], negatives)
                loss.backward()
                optimizer.step()
                schedule.step()
                epoch_loss += float(loss.item())
            _LOGGER.debug("Epoch %d/%d loss %.4f", epoch + 1, params.epochs, epoch_loss / n_pairs)

    vectors = model.center.weight.detach().numpy().astype(np.float64)
    vectors[~trained] = 0.0
    return EmbeddingMatrix(corpus.nodes, vectors)


def node2vec(g: WeightedGraph, params: Node2vecParams) -> EmbeddingMatrix:
    """Embed the nodes of a network with biased walks and skip-gram training."""
    return train_embeddings(generate_biased_walks(g, params), params)


def knn_score(
    emb: EmbeddingMatrix,
    train_labels: LabelSets,
    targets: Iterable[str],
    cfg: KnnConfig | None = None,
) -> ScoreVector:
    """Score targets by the fraction of their k nearest labeled accounts that are low credibility.

    Neighbor distance ties go to the smaller account id; a target never counts
    as its own neighbor.
    """
    cfg = cfg or KnnConfig()
    targets = tuple(targets)
    labeled = sorted(a for a in train_labels.known if a in emb.index)
    if not labeled:
        raise EvaluationError("KNN scoring needs at least one labeled account with an embedding")

    is_low = np.array([a in train_labels.low for a in labeled], dtype=bool)
    base_rate = float(is_low.mean())
    scores = np.full(len(targets), base_rate)

    present = [i for i, a in enumerate(targets) if a in emb.index]
    if missing := len(targets) - len(present):
        _LOGGER.warning(
            "%d targets have no embedding and get the base rate %.3f", missing, base_rate
        )
    if present:
        train_rows = emb.vectors[[emb.index[a] for a in labeled]]
        target_rows = emb.vectors[[emb.index[targets[i]] for i in present]]
        distances = pairwise_distances(target_rows, train_rows, metric=str(cfg.distance))
        labeled_pos = {a: j for j, a in enumerate(labeled)}
        for row, i in enumerate(present):
            if (j := labeled_pos.get(targets[i])) is not None:
                distances[row, j] = np.inf

        k = min(cfg.k, len(labeled))
        nearest = np.argsort(distances, axis=1, kind="stable")[:, :k]
        valid = np.isfinite(np.take_along_axis(distances, nearest, axis=1))
        counts = valid.sum(axis=1)
        low_counts = (is_low[nearest] & valid).sum(axis=1)
        fractions = np.divide(
            low_counts, counts, out=np.full(len(present), base_rate), where=counts > 0
        )
        scores[present] = fractions

    return ScoreVector(nodes=targets, values=scores, polarity=Polarity.SUSPICION, algorithm="knn")


@dataclass(frozen=True)
class GridSearchResult:
    """Best walk biases and the mean ROC AUC of every grid cell."""

    best: tuple[float, float]
    cells: dict[tuple[float, float], float]


def _pick_best(cells: dict[tuple[float, float], float]) -> tuple[float, float]:
    scored = {pq: auc for pq, auc in cells.items() if not math.isnan(auc)}
    if not scored:
        raise EvaluationError("No grid cell produced a defined ROC AUC")
    top = max(scored.values())
    winners = sorted(pq for pq, auc in scored.items() if auc == top)
    return (1.0, 1.0) if (1.0, 1.0) in winners else winners[0]


def grid_search_pq(
    g: WeightedGraph,
    labels: LabelSets,
    params: Node2vecParams | None = None,
    grid: Sequence[float] = DEFAULT_PQ_GRID,
    knn: KnnConfig | None = None,
    folds: int = DEFAULT_FOLDS,
) -> GridSearchResult:
    """Pick (p, q) maximizing the cross-validated KNN ROC AUC over ``grid × grid``.

    Ties prefer (1, 1), then the lexicographically smallest cell.
    """
    params = params or Node2vecParams()
    labels = labels.restrict(g.nodes)
    if not len(labels):
        raise EvaluationError("Grid search needs labeled accounts in the network")
    splits = kfold_split(labels.known, folds, params.seed)
    cells: dict[tuple[float, float], float] = {}
    for p in grid:
        for q in grid:
            emb = node2vec(g, params.with_pq(p, q))
            aucs = []
            for split in splits:
                train, test = split.split_labels(labels)
                check_no_leakage(test.known, train, "grid search training labels")
                if not len(train):
                    continue
                targets = sorted(test.known)
                vector = knn_score(emb, train, targets, knn)
                try:
                    aucs.append(roc_auc(vector.values, [a in test.low for a in targets]))
                except EvaluationError as err:
                    _LOGGER.debug("Grid cell (%s, %s) fold %d skipped: %s", p, q, split.index, err)
            cells[p, q] = float(np.mean(aucs)) if aucs else math.nan
            _LOGGER.debug("Grid cell (%s, %s): mean AUC %.4f", p, q, cells[p, q])

    best = _pick_best(cells)
    _LOGGER.info("Best node2vec biases p=%s q=%s (AUC %.4f)", *best, cells[best])
    return GridSearchResult(best=best, cells=cells)


@dataclass(frozen=True, eq=False)
class PcaProjection:
    """Two-dimensional coordinates of embedded nodes."""

    nodes: tuple[str, ...]
    coordinates: np.ndarray
    explained_variance: np.ndarray


def pca_project_2d(emb: EmbeddingMatrix) -> PcaProjection:
    """Project embeddings on their top two principal components.

    Each component's sign is chosen so that its largest-magnitude loading is positive.
    """
    n = len(emb.nodes)
    if n < 2:
        raise ConfigurationError("PCA projection needs at least two nodes")
    centered = emb.vectors - emb.vectors.mean(axis=0)
    rank = int(np.linalg.matrix_rank(centered))
    n_components = min(2, rank)
    if n_components < 2:
        _LOGGER.warning("Embedding has rank %d; padding the projection with zeros", rank)

    coordinates = np.zeros((n, 2))
    variance = np.zeros(2)
    if n_components:
        pca = PCA(n_components=n_components, svd_solver="full")
        projected = pca.fit_transform(emb.vectors)
        for c, component in enumerate(pca.components_):
            if component[np.argmax(np.abs(component))] < 0:
                projected[:, c] = -projected[:, c]
        coordinates[:, :n_components] = projected
        variance[:n_components] = pca.explained_variance_
    return PcaProjection(nodes=emb.nodes, coordinates=coordinates, explained_variance=variance)


def _index_path(path: Path) -> Path:
    return path.with_name(path.name + ".nodes.csv")


def save_embeddings(emb: EmbeddingMatrix, path: Path) -> tuple[Path, Path]:
    """Write a binary row-major matrix with header plus the sidecar node index CSV."""
    header = np.array(
        [(EMBEDDING_MAGIC, EMBEDDING_VERSION, len(emb.nodes), emb.dimension)],
        dtype=EMBEDDING_HEADER,
    )
    index_path = _index_path(path)
    try:
        with path.open("wb") as handle:
            handle.write(header.tobytes())
            handle.write(np.ascontiguousarray(emb.vectors, dtype="<f8").tobytes())
        with index_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(INDEX_HEADER)
            writer.writerows(enumerate(emb.nodes))
    except OSError as err:
        raise InputError(f"Cannot write embeddings to {path}") from err
    return path, index_path


def load_embeddings(path: Path) -> EmbeddingMatrix:
    """Read embeddings written by :func:`save_embeddings`."""
    try:
        raw = path.read_bytes()
        with _index_path(path).open(encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as err:
        raise InputError(f"Cannot read embeddings from {path}") from err
    if len(raw) < EMBEDDING_HEADER.itemsize:
        raise InputError(f"{path} is too short for an embedding header")
    header = np.frombuffer(raw[: EMBEDDING_HEADER.itemsize], dtype=EMBEDDING_HEADER)[0]
    if header["magic"] != EMBEDDING_MAGIC or header["version"] != EMBEDDING_VERSION:
        raise InputError(f"{path} is not a version {EMBEDDING_VERSION} embedding file")
    n, dim = int(header["n"]), int(header["dim"])
    vectors = np.frombuffer(raw[EMBEDDING_HEADER.itemsize :], dtype="<f8")
    if vectors.size != n * dim:
        raise InputError(f"{path} holds {vectors.size} values, expected {n}×{dim}")
    if not rows or tuple(rows[0]) != INDEX_HEADER or any(len(row) != 2 for row in rows[1:]):
        raise InputError(f"{_index_path(path)} is not an embedding node index")
    nodes = tuple(node for _, node in rows[1:])
    if len(nodes) != n:
        raise InputError(f"{_index_path(path)} lists {len(nodes)} nodes, expected {n}")
    return EmbeddingMatrix(nodes=nodes, vectors=vectors.reshape(n, dim).astype(np.float64))
