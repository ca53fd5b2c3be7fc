"""Label-propagation and centrality credibility scorers."""

from __future__ import annotations

import dataclasses
import logging
import math
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import scipy.sparse as sp

from .const import (
    DANGLING_DROP,
    DANGLING_TELEPORT,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_SEED_FRACTION,
    DEFAULT_TOLERANCE,
    REPUTATION_SCALE_MAX,
    REPUTATION_SCALE_RAW,
)
from .exceptions import ConfigurationError
from .networks import BipartiteGraph, DirectedWeightedGraph

_LOGGER = logging.getLogger(__name__)


class Polarity(StrEnum):
    """Whether larger scores mean more or less credible."""

    CREDIBILITY = "credibility"
    SUSPICION = "suspicion"


class BipartiteVariant(StrEnum):
    """Edge normalization of the bipartite label propagation."""

    COHITS = "cohits"
    BGRM = "bgrm"
    BIRANK = "birank"


@dataclass(frozen=True, kw_only=True)
class PropagationConfig:
    """Parameters shared by every propagation scorer."""

    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    tolerance: float = DEFAULT_TOLERANCE
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    seed_fraction: float = DEFAULT_SEED_FRACTION
    dangling: str = DANGLING_TELEPORT
    reputation_scale: str = REPUTATION_SCALE_MAX
    hits_account_polarity: Polarity = Polarity.SUSPICION

    def __post_init__(self) -> None:
        """Validate parameter ranges."""
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ConfigurationError(f"{name} must be in (0, 1], got {value}")
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations <= 0:
            raise ConfigurationError(f"max_iterations must be positive, got {self.max_iterations}")
        if not 0.0 < self.seed_fraction <= 1.0:
            raise ConfigurationError(f"seed_fraction must be in (0, 1], got {self.seed_fraction}")
        if self.dangling not in (DANGLING_TELEPORT, DANGLING_DROP):
            raise ConfigurationError(f"Unknown dangling mode: {self.dangling}")
        if self.reputation_scale not in (REPUTATION_SCALE_MAX, REPUTATION_SCALE_RAW):
            raise ConfigurationError(f"Unknown reputation scale: {self.reputation_scale}")
        object.__setattr__(self, "hits_account_polarity", Polarity(self.hits_account_polarity))

    def as_dict(self) -> dict[str, Any]:
        """Return a serializable snapshot."""
        return {
            key: str(value) if isinstance(value, StrEnum) else value
            for key, value in dataclasses.asdict(self).items()
        }


@dataclass(frozen=True, kw_only=True, eq=False)
class ScoreVector:
    """Per-node scores with their polarity and convergence record."""

    nodes: tuple[str, ...]
    values: np.ndarray
    polarity: Polarity
    algorithm: str
    converged: bool = True
    iterations: int = 0
    residuals: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        """Check shape and finiteness."""
        if self.values.shape != (len(self.nodes),):
            raise ValueError(
                f"{self.algorithm}: {self.values.shape} values for {len(self.nodes)} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.algorithm}: non-finite scores")

    def as_mapping(self) -> dict[str, float]:
        """Return the scores keyed by node."""
        return dict(zip(self.nodes, self.values.tolist(), strict=True))

    def suspicion(self) -> np.ndarray:
        """Return scores oriented so that larger means less credible."""
        return self.values if self.polarity is Polarity.SUSPICION else -self.values

    def ranked(self) -> list[tuple[str, float]]:
        """Return ``(node, score)`` pairs by descending suspicion, ties by node id."""
        order = sorted(range(len(self.nodes)), key=lambda i: self.nodes[i])
        suspicion = self.suspicion()
        order.sort(key=lambda i: -suspicion[i])
        return [(self.nodes[i], float(self.values[i])) for i in order]


def _iterate(
    step: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    cfg: PropagationConfig,
    algorithm: str,
) -> tuple[np.ndarray, bool, int, tuple[float, ...]]:
    """Run a fixed-point iteration until the L1 change drops below tolerance."""
    x = start
    residuals: list[float] = []
    for iteration in range(1, cfg.max_iterations + 1):
        updated = step(x)
        delta = float(np.abs(updated - x).sum())
        residuals.append(delta)
        x = updated
        if delta < cfg.tolerance:
            _LOGGER.debug("%s converged after %d iterations", algorithm, iteration)
            return x, True, iteration, tuple(residuals)
    _LOGGER.warning(
        "%s did not converge within %d iterations (L1 change %.3g)",
        algorithm,
        cfg.max_iterations,
        residuals[-1],
    )
    return x, False, cfg.max_iterations, tuple(residuals)


def _indicator(nodes: tuple[str, ...], members: Iterable[str], what: str) -> np.ndarray:
    """Return a 0/1 vector over nodes marking the given members."""
    index = {node: i for i, node in enumerate(nodes)}
    members = set(members)
    missing = members - index.keys()
    if missing:
        _LOGGER.warning("%d %s accounts are not in the network and are ignored", len(missing), what)
    mask = np.zeros(len(nodes), dtype=np.float64)
    mask[[index[m] for m in members if m in index]] = 1.0
    return mask


def _personalized_walk(
    g: DirectedWeightedGraph,
    teleport: np.ndarray,
    cfg: PropagationConfig,
    algorithm: str,
    polarity: Polarity,
) -> ScoreVector:
    """Iterate x ← (1−α) Σ_j (G_ji / Σ_ℓ G_jℓ) x_j + α·teleport_i."""
    if g.n_nodes == 0:
        raise ConfigurationError(f"{algorithm} needs at least one node")
    strength = g.out_strength
    dangling = strength == 0
    inverse = np.divide(1.0, strength, out=np.zeros_like(strength), where=~dangling)
    walk = sp.csr_matrix(g.adjacency.T)
    alpha = cfg.alpha
    redistribute = cfg.dangling == DANGLING_TELEPORT

    def step(x: np.ndarray) -> np.ndarray:
        spread = walk @ (x * inverse)
        if redistribute:
            spread = spread + x[dangling].sum() * teleport
        return (1.0 - alpha) * spread + alpha * teleport

    values, converged, iterations, residuals = _iterate(step, teleport.copy(), cfg, algorithm)
    return ScoreVector(
        nodes=g.nodes,
        values=values,
        polarity=polarity,
        algorithm=algorithm,
        converged=converged,
        iterations=iterations,
        residuals=residuals,
    )


def pagerank_trust(trust_net: DirectedWeightedGraph, cfg: PropagationConfig) -> ScoreVector:
    """Score accounts by weighted PageRank on the trust network."""
    n = trust_net.n_nodes
    if n == 0:
        raise ConfigurationError("pagerank_trust needs at least one node")
    teleport = np.full(n, 1.0 / n)
    return _personalized_walk(trust_net, teleport, cfg, "pagerank_trust", Polarity.CREDIBILITY)


def personalized_pagerank_trust(
    trust_net: DirectedWeightedGraph, high: Iterable[str], cfg: PropagationConfig
) -> ScoreVector:
    """Score accounts by PageRank on the trust network restarting at high-credibility accounts."""
    teleport = _indicator(trust_net.nodes, high, "high-credibility")
    if not teleport.any():
        raise ConfigurationError("personalized_pagerank_trust needs a non-empty H")
    teleport /= teleport.sum()
    return _personalized_walk(trust_net, teleport, cfg, "ppr_trust", Polarity.CREDIBILITY)


def trustrank_seeds(trust_net: DirectedWeightedGraph, cfg: PropagationConfig) -> np.ndarray:
    """Return the indices of the top PageRank Trust accounts, ties by node order."""
    ranks = pagerank_trust(trust_net, cfg).values
    n_seeds = max(1, math.ceil(cfg.seed_fraction * trust_net.n_nodes))
    return np.argsort(-ranks, kind="stable")[:n_seeds]


def trustrank(
    trust_net: DirectedWeightedGraph,
    high: Iterable[str],
    low: Iterable[str],
    cfg: PropagationConfig,
) -> ScoreVector:
    """Score accounts by TrustRank seeded with the top PageRank Trust accounts."""
    high_mask = _indicator(trust_net.nodes, high, "high-credibility").astype(bool)
    low_mask = _indicator(trust_net.nodes, low, "low-credibility").astype(bool)
    if not (high_mask.any() or low_mask.any()):
        raise ConfigurationError("trustrank needs a non-empty H ∪ L")

    seeds = trustrank_seeds(trust_net, cfg)
    teleport = np.zeros(trust_net.n_nodes)
    teleport[seeds] = np.where(high_mask[seeds], 1.0, np.where(low_mask[seeds], 0.0, 0.5))
    if not (high_mask[seeds] | low_mask[seeds]).any():
        _LOGGER.warning("No TrustRank seed is labeled; personalization is uniform over seeds")
    if teleport.sum() == 0:
        _LOGGER.warning("Every TrustRank seed is low credibility; using uniform seed weights")
        teleport[seeds] = 1.0
    teleport /= teleport.sum()
    return _personalized_walk(trust_net, teleport, cfg, "trustrank", Polarity.CREDIBILITY)


def locred(
    reshare_net: DirectedWeightedGraph, low: Iterable[str], cfg: PropagationConfig
) -> ScoreVector:
    """Score accounts by how much low-credibility content flows to them on the reshare network."""
    teleport = _indicator(reshare_net.nodes, low, "low-credibility")
    if not teleport.any():
        raise ConfigurationError("locred needs a non-empty L")
    teleport /= teleport.sum()
    return _personalized_walk(reshare_net, teleport, cfg, "locred", Polarity.SUSPICION)


def reputation_scaling(
    tau: ScoreVector, s: ScoreVector, scale: str = REPUTATION_SCALE_MAX
) -> ScoreVector:
    """Combine trust and LoCred scores as r = τ (1 − s)."""
    if tau.nodes != s.nodes:
        raise ConfigurationError("reputation_scaling needs scores over the same nodes")
    suspicion = s.values
    if scale == REPUTATION_SCALE_MAX:
        peak = suspicion.max(initial=0.0)
        if peak > 0:
            suspicion = suspicion / peak
    elif scale != REPUTATION_SCALE_RAW:
        raise ConfigurationError(f"Unknown reputation scale: {scale}")
    return ScoreVector(
        nodes=tau.nodes,
        values=tau.values * (1.0 - suspicion),
        polarity=Polarity.CREDIBILITY,
        algorithm="reputation_scaling",
        converged=tau.converged and s.converged,
        iterations=max(tau.iterations, s.iterations),
    )


def _inverse(strength: np.ndarray) -> np.ndarray:
    out = np.zeros(strength.shape, dtype=np.float64)
    return np.divide(1.0, strength, out=out, where=strength > 0)


def _l1_normalize(x: np.ndarray) -> np.ndarray:
    total = x.sum()
    return x / total if total > 0 else x


def hits(b: BipartiteGraph, cfg: PropagationConfig) -> tuple[ScoreVector, ScoreVector]:
    """Score accounts (hubs) and sources (authorities) with HITS on the binarized network."""
    if not b.accounts or not b.sources:
        raise ConfigurationError("hits needs a non-empty bipartite network")
    a = b.binary
    a_t = sp.csr_matrix(a.T)
    n_accounts = len(b.accounts)

    def step(x: np.ndarray) -> np.ndarray:
        u = _l1_normalize(a @ x[n_accounts:])
        d = _l1_normalize(a_t @ u)
        return np.concatenate([u, d])

    start = np.concatenate(
        [np.full(n_accounts, 1.0 / n_accounts), np.full(len(b.sources), 1.0 / len(b.sources))]
    )
    values, converged, iterations, residuals = _iterate(step, start, cfg, "hits")
    polarity = cfg.hits_account_polarity
    return (
        ScoreVector(
            nodes=b.accounts,
            values=values[:n_accounts],
            polarity=polarity,
            algorithm="hits",
            converged=converged,
            iterations=iterations,
            residuals=residuals,
        ),
        ScoreVector(
            nodes=b.sources,
            values=values[n_accounts:],
            polarity=polarity,
            algorithm="hits",
            converged=converged,
            iterations=iterations,
            residuals=residuals,
        ),
    )


def initial_account_scores(
    b: BipartiteGraph, high: Iterable[str], low: Iterable[str]
) -> np.ndarray:
    """Return u⁰: 0 on H, 1 on L, 1/|U| elsewhere, normalized to sum 1."""
    high_mask = _indicator(b.accounts, high, "high-credibility").astype(bool)
    low_mask = _indicator(b.accounts, low, "low-credibility").astype(bool)
    if not (high_mask.any() or low_mask.any()):
        raise ConfigurationError("Bipartite propagation needs a non-empty H ∪ L")
    u0 = np.full(len(b.accounts), 1.0 / len(b.accounts))
    u0[high_mask] = 0.0
    u0[low_mask] = 1.0
    if u0.sum() == 0:
        raise ConfigurationError("Every account is labeled high; u⁰ cannot be normalized")
    return u0 / u0.sum()


def propagation_matrices(
    b: BipartiteGraph, variant: BipartiteVariant
) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Return (account update, source update) matrices for a normalization variant."""
    g = b.incidence
    inv_accounts = _inverse(b.account_strength)
    inv_sources = _inverse(b.source_strength)
    if variant is BipartiteVariant.COHITS:
        to_accounts = sp.diags(inv_accounts) @ g
        to_sources = sp.diags(inv_sources) @ g.T
        return sp.csr_matrix(to_accounts), sp.csr_matrix(to_sources)
    if variant is BipartiteVariant.BGRM:
        scaled = sp.diags(inv_accounts) @ g @ sp.diags(inv_sources)
    else:
        scaled = sp.diags(np.sqrt(inv_accounts)) @ g @ sp.diags(np.sqrt(inv_sources))
    scaled = sp.csr_matrix(scaled)
    return scaled, sp.csr_matrix(scaled.T)


def _bipartite_vectors(
    b: BipartiteGraph,
    values: np.ndarray,
    algorithm: str,
    converged: bool,
    iterations: int,
    residuals: tuple[float, ...],
) -> tuple[ScoreVector, ScoreVector]:
    n_accounts = len(b.accounts)
    common: dict[str, Any] = {
        "polarity": Polarity.SUSPICION,
        "algorithm": algorithm,
        "converged": converged,
        "iterations": iterations,
        "residuals": residuals,
    }
    return (
        ScoreVector(nodes=b.accounts, values=values[:n_accounts], **common),
        ScoreVector(nodes=b.sources, values=values[n_accounts:], **common),
    )


def bipartite_label_propagation(
    b: BipartiteGraph,
    high: Iterable[str],
    low: Iterable[str],
    cfg: PropagationConfig,
    variant: BipartiteVariant | str = BipartiteVariant.COHITS,
) -> tuple[ScoreVector, ScoreVector]:
    """Propagate account labels over the bipartite network (Co-HITS, BGRM or BiRank)."""
    variant = BipartiteVariant(variant)
    if not b.sources:
        raise ConfigurationError(f"{variant} needs a non-empty bipartite network")
    u0 = initial_account_scores(b, high, low)
    d0 = np.full(len(b.sources), 1.0 / len(b.sources))
    to_accounts, to_sources = propagation_matrices(b, variant)
    n_accounts = len(b.accounts)
    alpha, beta = cfg.alpha, cfg.beta

    def step(x: np.ndarray) -> np.ndarray:
        u, d = x[:n_accounts], x[n_accounts:]
        return np.concatenate(
            [
                alpha * u0 + (1.0 - alpha) * (to_accounts @ d),
                beta * d0 + (1.0 - beta) * (to_sources @ u),
            ]
        )

    values, converged, iterations, residuals = _iterate(
        step, np.concatenate([u0, d0]), cfg, str(variant)
    )
    return _bipartite_vectors(b, values, str(variant), converged, iterations, residuals)


def cocred(
    b: BipartiteGraph,
    high: Iterable[str],
    low: Iterable[str],
    cfg: PropagationConfig,
) -> tuple[ScoreVector, ScoreVector]:
    """Co-HITS propagation that keeps labeled accounts pinned to their initial scores."""
    high = set(high)
    low = set(low)
    if not b.sources:
        raise ConfigurationError("cocred needs a non-empty bipartite network")
    u0 = initial_account_scores(b, high, low)
    labeled = _indicator(b.accounts, high | low, "labeled").astype(bool)
    d0 = np.full(len(b.sources), 1.0 / len(b.sources))
    to_accounts, to_sources = propagation_matrices(b, BipartiteVariant.COHITS)
    n_accounts = len(b.accounts)
    alpha, beta = cfg.alpha, cfg.beta

    def step(x: np.ndarray) -> np.ndarray:
        u, d = x[:n_accounts], x[n_accounts:]
        u_next = alpha * u0 + (1.0 - alpha) * (to_accounts @ d)
        u_next[labeled] = u0[labeled]
        d_next = beta * d0 + (1.0 - beta) * (to_sources @ u)
        return np.concatenate([_l1_normalize(u_next), _l1_normalize(d_next)])

    values, converged, iterations, residuals = _iterate(
        step, np.concatenate([u0, d0]), cfg, "cocred"
    )
    return _bipartite_vectors(b, values, "cocred", converged, iterations, residuals)
