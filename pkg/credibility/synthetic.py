"""Planted two-block benchmark with tunable credibility homophily."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .const import DEFAULT_SEED
from .exceptions import ConfigurationError
from .ingest import LabelSets, PostRecord, SourceRating

_LOGGER = logging.getLogger(__name__)

HIGH_POOL_RATING = 90.0
LOW_POOL_RATING = 20.0
MIN_ACTIVITY = 5


@dataclass(frozen=True, kw_only=True)
class SyntheticConfig:
    """Sizes, mixing and activity of the planted benchmark."""

    high_accounts: int = 1200
    low_accounts: int = 800
    high_sources: int = 50
    low_sources: int = 50
    mu: float = 0.05
    mean_activity: float = 20.0
    reshare_fraction: float = 0.5
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        """Reject degenerate sizes and probabilities."""
        for name in ("high_accounts", "low_accounts", "high_sources", "low_sources"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigurationError(f"mu must be in [0, 1], got {self.mu}")
        if self.mean_activity <= 0:
            raise ConfigurationError("mean_activity must be positive")
        if not 0.0 <= self.reshare_fraction <= 1.0:
            raise ConfigurationError("reshare_fraction must be in [0, 1]")

    def as_dict(self) -> dict[str, Any]:
        """Return a serializable snapshot."""
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SyntheticDataset:
    """Generated posts, source ratings and the planted labels."""

    records: list[PostRecord]
    ratings: list[SourceRating]
    labels: LabelSets


def _block_ids(prefix: str, size: int) -> list[str]:
    width = len(str(size))
    return [f"{prefix}{i:0{width}d}" for i in range(size)]


def generate_synthetic(cfg: SyntheticConfig) -> SyntheticDataset:
    """Generate a two-block dataset.

    Each post links one domain, drawn from the author's own block pool with
    probability 1 − μ and from the other pool otherwise. A post is a reshare
    with probability ``reshare_fraction``; its origin is another account of the
    author's block with probability 1 − μ and of the other block otherwise.
    """
    rng = np.random.default_rng(cfg.seed)
    accounts = [_block_ids("high", cfg.high_accounts), _block_ids("low", cfg.low_accounts)]
    pools = [
        [f"{name}.example.com" for name in _block_ids("trusted-news", cfg.high_sources)],
        [f"{name}.example.net" for name in _block_ids("junk-news", cfg.low_sources)],
    ]

    records: list[PostRecord] = []
    for block, members in enumerate(accounts):
        for position, account in enumerate(members):
            n_posts = max(MIN_ACTIVITY, int(rng.poisson(cfg.mean_activity)))
            crosses_domain = rng.random(n_posts) < cfg.mu
            is_reshare = rng.random(n_posts) < cfg.reshare_fraction
            crosses_reshare = rng.random(n_posts) < cfg.mu
            domain_draws = rng.random(n_posts)
            origin_draws = rng.random(n_posts)

            for k in range(n_posts):
                pool = pools[1 - block if crosses_domain[k] else block]
                domain = pool[int(domain_draws[k] * len(pool))]
                origin = None
                if is_reshare[k]:
                    origin_block = 1 - block if crosses_reshare[k] else block
                    candidates = accounts[origin_block]
                    pick = int(origin_draws[k] * len(candidates))
                    if origin_block == block and pick == position:
                        pick = (pick + 1) % len(candidates)
                    if not (origin_block == block and pick == position):
                        origin = candidates[pick]
                records.append(PostRecord(account, f"{account}-{k}", (domain,), origin))

    ratings = [SourceRating(d, HIGH_POOL_RATING) for d in pools[0]]
    ratings += [SourceRating(d, LOW_POOL_RATING) for d in pools[1]]
    labels = LabelSets(high=frozenset(accounts[0]), low=frozenset(accounts[1]))
    _LOGGER.debug(
        "Generated %d posts for %d accounts (mu=%s, seed=%d)",
        len(records),
        len(labels),
        cfg.mu,
        cfg.seed,
    )
    return SyntheticDataset(records=records, ratings=ratings, labels=labels)
