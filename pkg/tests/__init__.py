"""Tests for the credibility toolkit."""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from credibility.networks import BipartiteGraph, CoShareGraph, DirectedWeightedGraph


def node_names(n: int, prefix: str = "n") -> tuple[str, ...]:
    """Return zero-padded node ids."""
    return tuple(f"{prefix}{i:02d}" for i in range(n))


def directed_graph(
    dense: np.ndarray | Sequence[Sequence[float]], nodes: Sequence[str] | None = None
) -> DirectedWeightedGraph:
    """Build a directed graph from a dense adjacency matrix."""
    dense = np.asarray(dense, dtype=np.float64)
    names = tuple(nodes) if nodes is not None else node_names(dense.shape[0])
    return DirectedWeightedGraph(nodes=names, adjacency=sp.csr_matrix(dense))


def coshare_graph(
    dense: np.ndarray | Sequence[Sequence[float]], nodes: Sequence[str] | None = None
) -> CoShareGraph:
    """Build an undirected graph from a symmetric dense adjacency matrix."""
    dense = np.asarray(dense, dtype=np.float64)
    names = tuple(nodes) if nodes is not None else node_names(dense.shape[0])
    return CoShareGraph(nodes=names, adjacency=sp.csr_matrix(dense))


def bipartite_graph(
    dense: np.ndarray | Sequence[Sequence[float]],
    accounts: Sequence[str] | None = None,
    sources: Sequence[str] | None = None,
) -> BipartiteGraph:
    """Build an account × source graph from a dense incidence matrix."""
    dense = np.asarray(dense, dtype=np.float64)
    return BipartiteGraph(
        accounts=tuple(accounts) if accounts is not None else node_names(dense.shape[0], "u"),
        sources=tuple(sources)
        if sources is not None
        else tuple(f"s{j:02d}.example" for j in range(dense.shape[1])),
        incidence=sp.csr_matrix(dense),
    )


def random_directed(rng: np.random.Generator, n: int, density: float = 0.15) -> np.ndarray:
    """Return a random integer-weighted adjacency without self-loops."""
    weights = rng.integers(1, 6, size=(n, n)).astype(np.float64)
    weights[rng.random((n, n)) >= density] = 0.0
    np.fill_diagonal(weights, 0.0)
    return weights


def random_undirected(rng: np.random.Generator, n: int, density: float = 0.2) -> np.ndarray:
    """Return a random symmetric integer-weighted adjacency without self-loops."""
    upper = np.triu(random_directed(rng, n, density), k=1)
    return upper + upper.T


def random_incidence(
    rng: np.random.Generator, n_accounts: int, n_sources: int, density: float = 0.2
) -> np.ndarray:
    """Return a random share-count incidence where every account and source has an edge."""
    mask = rng.random((n_accounts, n_sources)) < density
    mask[np.arange(n_accounts), rng.integers(n_sources, size=n_accounts)] = True
    mask[rng.integers(n_accounts, size=n_sources), np.arange(n_sources)] = True
    return np.where(mask, rng.integers(1, 6, size=mask.shape), 0).astype(np.float64)


def dense_walk_oracle(
    adjacency: np.ndarray, teleport: np.ndarray, alpha: float, dangling: str = "teleport"
) -> np.ndarray:
    """Solve x = (1−α) P x + α t exactly, P column-stochastic over out-strengths."""
    n = adjacency.shape[0]
    transition = np.zeros((n, n))
    for j in range(n):
        strength = adjacency[j].sum()
        if strength > 0:
            transition[:, j] = adjacency[j] / strength
        elif dangling == "teleport":
            transition[:, j] = teleport
    return np.linalg.solve(np.eye(n) - (1.0 - alpha) * transition, alpha * teleport)


def _row_normalized(matrix: np.ndarray) -> np.ndarray:
    strength = matrix.sum(axis=1, keepdims=True)
    return np.divide(matrix, strength, out=np.zeros_like(matrix), where=strength > 0)


def _safe_inverse(values: np.ndarray) -> np.ndarray:
    return np.divide(1.0, values, out=np.zeros_like(values), where=values > 0)


def dense_bipartite_matrices(incidence: np.ndarray, variant: str) -> tuple[np.ndarray, np.ndarray]:
    """Return dense (account update, source update) matrices of a normalization variant."""
    if variant == "cohits":
        return _row_normalized(incidence), _row_normalized(incidence.T)
    inv_u = _safe_inverse(incidence.sum(axis=1))
    inv_d = _safe_inverse(incidence.sum(axis=0))
    if variant == "bgrm":
        scaled = inv_u[:, None] * incidence * inv_d[None, :]
    else:
        scaled = np.sqrt(inv_u)[:, None] * incidence * np.sqrt(inv_d)[None, :]
    return scaled, scaled.T


def dense_initial_accounts(
    accounts: Sequence[str], high: Iterable[str], low: Iterable[str]
) -> np.ndarray:
    """Return u⁰ built by hand: 0 on H, 1 on L, 1/|U| elsewhere, normalized."""
    high, low = set(high), set(low)
    u0 = np.array(
        [0.0 if a in high else 1.0 if a in low else 1.0 / len(accounts) for a in accounts]
    )
    return u0 / u0.sum()


def dense_bipartite_oracle(
    incidence: np.ndarray,
    u0: np.ndarray,
    alpha: float,
    beta: float,
    variant: str,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the coupled account/source fixed point as one linear system."""
    to_accounts, to_sources = dense_bipartite_matrices(incidence, variant)
    n_u, n_d = incidence.shape
    d0 = np.full(n_d, 1.0 / n_d)
    system = np.eye(n_u + n_d)
    system[:n_u, n_u:] = -(1.0 - alpha) * to_accounts
    system[n_u:, :n_u] = -(1.0 - beta) * to_sources
    solution = np.linalg.solve(system, np.concatenate([alpha * u0, beta * d0]))
    return solution[:n_u], solution[n_u:]


def dense_cocred_oracle(
    incidence: np.ndarray,
    u0: np.ndarray,
    labeled: np.ndarray,
    alpha: float,
    beta: float,
    tolerance: float = 1e-14,
    max_iterations: int = 20_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate pinned Co-HITS with dense loops until the L1 change is below tolerance."""
    to_accounts, to_sources = dense_bipartite_matrices(incidence, "cohits")
    n_d = incidence.shape[1]
    d0 = np.full(n_d, 1.0 / n_d)
    u, d = u0.copy(), d0.copy()
    for _ in range(max_iterations):
        u_next = alpha * u0 + (1.0 - alpha) * to_accounts @ d
        u_next = np.where(labeled, u0, u_next)
        d_next = beta * d0 + (1.0 - beta) * to_sources @ u
        u_next, d_next = u_next / u_next.sum(), d_next / d_next.sum()
        change = np.abs(u_next - u).sum() + np.abs(d_next - d).sum()
        u, d = u_next, d_next
        if change < tolerance:
            break
    return u, d


def principal_hub_vector(incidence: np.ndarray) -> np.ndarray:
    """Return the L1-normalized principal eigenvector of A Aᵀ for binarized A."""
    a = (incidence > 0).astype(np.float64)
    _, vectors = np.linalg.eigh(a @ a.T)
    principal = np.abs(vectors[:, -1])
    return principal / principal.sum()


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Return the cosine similarity of two vectors."""
    return float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))


def pairwise_auc(scores: Sequence[float], positives: Sequence[bool]) -> float:
    """Return the Mann-Whitney AUC by comparing every positive with every negative."""
    pos = [s for s, y in zip(scores, positives, strict=True) if y]
    neg = [s for s, y in zip(scores, positives, strict=True) if not y]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def _f1_at(rescaled: np.ndarray, positives: np.ndarray, threshold: float) -> float:
    predicted = rescaled >= threshold
    true_pos = int((predicted & positives).sum())
    return 2.0 * true_pos / (int(predicted.sum()) + int(positives.sum()))


def _rescale(scores: Sequence[float]) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    spread = s.max() - s.min()
    return (s - s.min()) / spread if spread > 0 else np.zeros_like(s)


def grid_f1(
    scores: Sequence[float], positives: Sequence[bool], n_thresholds: int
) -> tuple[float, float]:
    """Return the best F1 over the threshold grid by evaluating every grid point."""
    rescaled = _rescale(scores)
    y = np.asarray(positives, dtype=bool)
    best, best_threshold = -1.0, 0.0
    for threshold in np.linspace(0.0, 1.0, n_thresholds):
        f1 = _f1_at(rescaled, y, float(threshold))
        if f1 > best:
            best, best_threshold = f1, float(threshold)
    return best, best_threshold


def exhaustive_f1(scores: Sequence[float], positives: Sequence[bool]) -> float:
    """Return the best F1 over every distinct rescaled score used as a threshold."""
    rescaled = _rescale(scores)
    y = np.asarray(positives, dtype=bool)
    return max(_f1_at(rescaled, y, float(t)) for t in np.unique(rescaled))


def write_posts(path: Path, posts: Iterable[dict]) -> Path:
    """Write post dictionaries as JSON Lines."""
    path.write_text("".join(json.dumps(post) + "\n" for post in posts), encoding="utf-8")
    return path


def read_csv_rows(path: Path) -> list[list[str]]:
    """Return the rows of a CSV file, header included."""
    return [line.split(",") for line in path.read_text(encoding="utf-8").splitlines()]
