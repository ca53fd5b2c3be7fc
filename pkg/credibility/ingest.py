"""Parse post records and derive account credibility labels from source ratings."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    DEFAULT_CONFIDENCE_FLOOR,
    DEFAULT_LABEL_THRESHOLD,
    DEFAULT_MIN_ACCOUNT_LINKS,
    DEFAULT_MIN_DOMAIN_SHARES,
    PLATFORM_DOMAINS,
)
from .exceptions import ConfigurationError, InputError

_LOGGER = logging.getLogger(__name__)

RATING_MIN = 0.0
RATING_MAX = 100.0

_TEXT = vol.All(vol.Coerce(str), str.strip)

POST_SCHEMA = vol.Schema(
    {
        vol.Optional("account", default=None): vol.Any(None, _TEXT),
        vol.Optional("post", default=None): vol.Any(None, _TEXT),
        vol.Optional("domains", default=list): vol.Any(None, [vol.Coerce(str)]),
        vol.Optional("reshared_from", default=None): vol.Any(None, _TEXT),
    },
    extra=vol.ALLOW_EXTRA,
)


class CredibilityLabel(StrEnum):
    """Binary credibility class of an account."""

    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True, slots=True)
class PostRecord:
    """One sharing event."""

    account_id: str
    post_id: str
    domains: tuple[str, ...]
    reshared_from: str | None = None

    def as_dict(self) -> dict[str, Any]:
        """Return the JSON-Lines representation."""
        data: dict[str, Any] = {
            "account": self.account_id,
            "post": self.post_id,
            "domains": list(self.domains),
        }
        if self.reshared_from is not None:
            data["reshared_from"] = self.reshared_from
        return data


@dataclass(frozen=True, slots=True)
class SourceRating:
    """Third-party credibility rating of a news domain."""

    domain: str
    score: float

    def __post_init__(self) -> None:
        """Validate the rating range."""
        if not RATING_MIN <= self.score <= RATING_MAX:
            raise InputError(f"Rating for {self.domain} out of range: {self.score}")


@dataclass(frozen=True, slots=True)
class AccountCredibility:
    """Credibility score, label and label confidence of an account."""

    account_id: str
    score: float | None
    confidence: float
    label: CredibilityLabel | None = None


@dataclass(frozen=True)
class LabelSets:
    """Accounts known to have high (H) and low (L) credibility."""

    high: frozenset[str] = field(default_factory=frozenset)
    low: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        """Reject overlapping label sets."""
        if overlap := self.high & self.low:
            raise ConfigurationError(
                f"Accounts labeled both high and low: {sorted(overlap)[:5]}"
            )

    @property
    def known(self) -> frozenset[str]:
        """Return every labeled account."""
        return self.high | self.low

    def __len__(self) -> int:
        """Return the number of labeled accounts."""
        return len(self.high) + len(self.low)

    def restrict(self, accounts: Iterable[str]) -> LabelSets:
        """Return the labels of the given accounts only."""
        keep = frozenset(accounts)
        return LabelSets(high=self.high & keep, low=self.low & keep)

    def label_of(self, account_id: str) -> CredibilityLabel | None:
        """Return the label of an account, if known."""
        if account_id in self.low:
            return CredibilityLabel.LOW
        if account_id in self.high:
            return CredibilityLabel.HIGH
        return None


@dataclass
class ParseStats:
    """Counters collected while parsing a post stream."""

    lines: int = 0
    malformed: int = 0
    missing_account: int = 0
    empty_domains: int = 0

    @property
    def skipped(self) -> int:
        """Return the number of lines that produced no record."""
        return self.malformed + self.missing_account + self.empty_domains


def _normalize_domain(domain: str, domain_map: Mapping[str, str]) -> str:
    domain = domain.strip().lower()
    return domain_map.get(domain, domain)


def parse_posts(
    lines: Iterable[str],
    *,
    blocklist: Iterable[str] = PLATFORM_DOMAINS,
    domain_map: Mapping[str, str] | None = None,
    stats: ParseStats | None = None,
) -> list[PostRecord]:
    """Parse JSON-Lines post records.

    Malformed lines and records without an account are skipped with a warning.
    Domains are lowercased, expanded through ``domain_map`` and stripped of
    platform domains; records left without a domain are dropped.
    """
    stats = stats if stats is not None else ParseStats()
    blocked = frozenset(d.lower() for d in blocklist)
    expand = domain_map or {}
    records: list[PostRecord] = []

    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        stats.lines += 1
        try:
            raw = POST_SCHEMA(json.loads(line))
        except (ValueError, vol.Invalid) as err:
            stats.malformed += 1
            _LOGGER.warning("Skipping malformed line %d: %s", lineno, err)
            continue

        account = raw["account"] or ""
        post = raw["post"] or ""
        domains_raw = raw["domains"] or []
        reshared = raw["reshared_from"]

        if not account:
            stats.missing_account += 1
            _LOGGER.warning("Skipping line %d: missing account", lineno)
            continue

        domains = tuple(
            dict.fromkeys(
                domain
                for domain in (_normalize_domain(d, expand) for d in domains_raw)
                if domain and domain not in blocked
            )
        )
        if not domains:
            stats.empty_domains += 1
            continue

        records.append(
            PostRecord(
                account_id=account,
                post_id=post,
                domains=domains,
                reshared_from=reshared or None,
            )
        )

    if stats.skipped:
        _LOGGER.info(
            "Parsed %d records from %d lines (%d malformed, %d no account, %d no domains)",
            len(records),
            stats.lines,
            stats.malformed,
            stats.missing_account,
            stats.empty_domains,
        )
    return records


def read_posts(
    path: Path,
    *,
    blocklist: Iterable[str] = PLATFORM_DOMAINS,
    domain_map: Mapping[str, str] | None = None,
    stats: ParseStats | None = None,
) -> list[PostRecord]:
    """Read and parse a JSON-Lines post file."""
    try:
        with path.open(encoding="utf-8") as handle:
            return parse_posts(handle, blocklist=blocklist, domain_map=domain_map, stats=stats)
    except (OSError, UnicodeDecodeError) as err:
        raise InputError(f"Cannot read posts from {path}") from err


def load_ratings(path: Path) -> list[SourceRating]:
    """Read source ratings from a ``domain,score`` CSV file."""
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None or not {"domain", "score"} <= set(reader.fieldnames):
                raise InputError(f"{path} must have a domain,score header")
            ratings = []
            for row in reader:
                try:
                    score = float(row["score"])
                except (TypeError, ValueError) as err:
                    raise InputError(f"Bad score for {row.get('domain')!r} in {path}") from err
                ratings.append(SourceRating(domain=row["domain"].strip().lower(), score=score))
    except OSError as err:
        raise InputError(f"Cannot read ratings from {path}") from err
    return ratings


def load_domain_map(path: Path) -> dict[str, str]:
    """Read a pre-expanded ``domain,expanded`` mapping of shortened link domains."""
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            return {
                row["domain"].strip().lower(): row["expanded"].strip().lower()
                for row in csv.DictReader(handle)
                if row.get("domain") and row.get("expanded")
            }
    except (OSError, KeyError) as err:
        raise InputError(f"Cannot read domain map from {path}") from err


def ratings_by_domain(ratings: Iterable[SourceRating]) -> dict[str, float]:
    """Index ratings by domain; the last rating of a duplicated domain wins."""
    table: dict[str, float] = {}
    for rating in ratings:
        if rating.domain in table and table[rating.domain] != rating.score:
            _LOGGER.warning(
                "Duplicate rating for %s: %s replaces %s",
                rating.domain,
                rating.score,
                table[rating.domain],
            )
        table[rating.domain] = rating.score
    return table


def apply_activity_filters(
    records: Iterable[PostRecord],
    min_account_links: int = DEFAULT_MIN_ACCOUNT_LINKS,
    min_domain_shares: int = DEFAULT_MIN_DOMAIN_SHARES,
) -> list[PostRecord]:
    """Drop rarely shared domains, then accounts sharing too few links.

    A single pass: the domain filter runs first and the account filter sees the
    remaining link shares only.
    """
    if min_account_links < 0 or min_domain_shares < 0:
        raise ConfigurationError("Activity thresholds must be non-negative")
    records = list(records)

    domain_shares = Counter(domain for record in records for domain in record.domains)
    kept_domains = {d for d, count in domain_shares.items() if count >= min_domain_shares}

    trimmed: list[PostRecord] = []
    for record in records:
        domains = tuple(d for d in record.domains if d in kept_domains)
        if not domains:
            continue
        if len(domains) != len(record.domains):
            record = PostRecord(record.account_id, record.post_id, domains, record.reshared_from)
        trimmed.append(record)

    account_links: Counter[str] = Counter()
    for record in trimmed:
        account_links[record.account_id] += len(record.domains)
    filtered = [r for r in trimmed if account_links[r.account_id] >= min_account_links]

    _LOGGER.debug(
        "Activity filters kept %d of %d records (%d domains, %d accounts)",
        len(filtered),
        len(records),
        len(kept_domains),
        len({r.account_id for r in filtered}),
    )
    return filtered


def share_counts(records: Iterable[PostRecord]) -> dict[str, Counter[str]]:
    """Return per-account link share counts of each domain."""
    counts: dict[str, Counter[str]] = defaultdict(Counter)
    for record in records:
        counts[record.account_id].update(record.domains)
    return counts


def score_accounts(
    records: Iterable[PostRecord], ratings: Iterable[SourceRating]
) -> list[AccountCredibility]:
    """Score accounts by the share-weighted mean rating of their sources."""
    table = ratings_by_domain(ratings)
    results = []
    for account_id, counts in sorted(share_counts(records).items()):
        rated = {d: n for d, n in counts.items() if d in table}
        confidence = len(rated) / len(counts)
        score = None
        if rated:
            score = sum(n * table[d] for d, n in rated.items()) / sum(rated.values())
        results.append(AccountCredibility(account_id, score, confidence))
    return results


def label_accounts(
    credibilities: Iterable[AccountCredibility],
    threshold: float = DEFAULT_LABEL_THRESHOLD,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
) -> tuple[list[AccountCredibility], LabelSets]:
    """Label scored accounts and collect the ground-truth label sets.

    Scores below ``threshold`` are low credibility. Only accounts whose label
    confidence reaches ``confidence_floor`` enter the label sets.
    """
    if not RATING_MIN <= threshold <= RATING_MAX:
        raise ConfigurationError(f"Label threshold must be within [0, 100], got {threshold}")
    if not 0.0 <= confidence_floor <= 1.0:
        raise ConfigurationError(f"Confidence floor must be within [0, 1], got {confidence_floor}")

    labeled: list[AccountCredibility] = []
    high: set[str] = set()
    low: set[str] = set()
    for cred in credibilities:
        if cred.score is None:
            labeled.append(AccountCredibility(cred.account_id, None, cred.confidence))
            continue
        label = CredibilityLabel.LOW if cred.score < threshold else CredibilityLabel.HIGH
        labeled.append(AccountCredibility(cred.account_id, cred.score, cred.confidence, label))
        if cred.confidence >= confidence_floor:
            (low if label is CredibilityLabel.LOW else high).add(cred.account_id)

    return labeled, LabelSets(high=frozenset(high), low=frozenset(low))


def ground_truth(
    credibilities: Iterable[AccountCredibility],
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
) -> LabelSets:
    """Return the label sets of already labeled accounts meeting the confidence floor."""
    high = set()
    low = set()
    for cred in credibilities:
        if cred.label is None or cred.confidence < confidence_floor:
            continue
        (low if cred.label is CredibilityLabel.LOW else high).add(cred.account_id)
    return LabelSets(high=frozenset(high), low=frozenset(low))
