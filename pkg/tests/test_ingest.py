"""Test post parsing, activity filters and account labels."""

import json
import logging
from pathlib import Path

import pytest

from credibility.exceptions import ConfigurationError, InputError
from credibility.ingest import (
    AccountCredibility,
    CredibilityLabel,
    LabelSets,
    ParseStats,
    PostRecord,
    SourceRating,
    apply_activity_filters,
    ground_truth,
    label_accounts,
    load_domain_map,
    load_ratings,
    parse_posts,
    ratings_by_domain,
    read_posts,
    score_accounts,
)


def _line(**fields) -> str:
    return json.dumps(fields)


def _shares(account: str, domain: str, times: int, start: int = 0) -> list[PostRecord]:
    return [PostRecord(account, f"{account}-{start + i}", (domain,)) for i in range(times)]


def test_parse_single_record() -> None:
    """Test a well-formed line becomes one record."""
    records = parse_posts(
        [_line(account="a", post="p1", domains=["Foo.com"], reshared_from="b")]
    )
    assert records == [PostRecord("a", "p1", ("foo.com",), "b")]


def test_parse_empty_input() -> None:
    """Test an empty stream parses to no records."""
    assert parse_posts([]) == []


def test_parse_drops_platform_only_posts() -> None:
    """Test posts linking only platform domains are dropped."""
    stats = ParseStats()
    records = parse_posts([_line(account="a", post="p1", domains=["youtube.com"])], stats=stats)
    assert records == []
    assert stats.empty_domains == 1
    assert stats.skipped == 1


def test_parse_strips_platform_domains_and_duplicates() -> None:
    """Test platform domains are removed and repeated domains collapse."""
    records = parse_posts(
        [_line(account="a", post="p1", domains=["foo.com", "youtube.com", "FOO.com", "bar.org"])]
    )
    assert records[0].domains == ("foo.com", "bar.org")


@pytest.mark.parametrize(
    ("line", "counter"),
    [
        ("{not json", "malformed"),
        ("null", "malformed"),
        ('["a", "list"]', "malformed"),
        (_line(account="a", post="p", domains="foo.com"), "malformed"),
        (_line(post="p", domains=["foo.com"]), "missing_account"),
    ],
)
def test_parse_skips_bad_lines(line: str, counter: str, caplog: pytest.LogCaptureFixture) -> None:
    """Test malformed lines and lines without an account are skipped with a warning."""
    stats = ParseStats()
    good = _line(account="b", post="p2", domains=["foo.com"])
    with caplog.at_level(logging.WARNING):
        records = parse_posts([line, good], stats=stats)
    assert [r.account_id for r in records] == ["b"]
    assert getattr(stats, counter) == 1
    assert "line 1" in caplog.text


def test_parse_coerces_fields() -> None:
    """Test ids are coerced to trimmed strings and unknown fields are ignored."""
    line = _line(account=7, post=3, domains=["foo.com"], reshared_from=" b ", lang="en")
    assert parse_posts([line]) == [PostRecord("7", "3", ("foo.com",), "b")]


def test_parse_expands_short_links() -> None:
    """Test the domain map expands shortened link domains before filtering."""
    records = parse_posts(
        [_line(account="a", post="p1", domains=["bit.ly", "youtu.be"])],
        domain_map={"bit.ly": "foo.com"},
    )
    assert records[0].domains == ("foo.com",)


def test_read_posts_missing_file(tmp_path: Path) -> None:
    """Test a missing posts file raises InputError."""
    with pytest.raises(InputError):
        read_posts(tmp_path / "missing.jsonl")


def test_load_ratings(tmp_path: Path) -> None:
    """Test ratings are read and domains lowercased."""
    path = tmp_path / "ratings.csv"
    path.write_text("domain,score\nFoo.com,92.5\nbar.org,20\n", encoding="utf-8")
    assert load_ratings(path) == [SourceRating("foo.com", 92.5), SourceRating("bar.org", 20.0)]


@pytest.mark.parametrize(
    "content",
    ["domain,score\nfoo.com,101\n", "domain,score\nfoo.com,high\n", "site,rating\nfoo.com,90\n"],
)
def test_load_ratings_rejects_bad_files(tmp_path: Path, content: str) -> None:
    """Test out-of-range scores, unparsable scores and wrong headers are rejected."""
    path = tmp_path / "ratings.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(InputError):
        load_ratings(path)


def test_duplicate_rating_last_wins(caplog: pytest.LogCaptureFixture) -> None:
    """Test a duplicated domain keeps its last rating and warns."""
    with caplog.at_level(logging.WARNING):
        table = ratings_by_domain([SourceRating("foo.com", 80), SourceRating("foo.com", 30)])
    assert table == {"foo.com": 30}
    assert "Duplicate rating" in caplog.text


def test_load_domain_map(tmp_path: Path) -> None:
    """Test the short-link table is read and lowercased."""
    path = tmp_path / "map.csv"
    path.write_text("domain,expanded\nBit.ly,Foo.com\n", encoding="utf-8")
    assert load_domain_map(path) == {"bit.ly": "foo.com"}


def test_account_with_four_links_is_dropped() -> None:
    """Test accounts below the link threshold are removed."""
    records = _shares("a", "foo.com", 4) + _shares("b", "foo.com", 5)
    filtered = apply_activity_filters(records, min_account_links=5, min_domain_shares=0)
    assert {r.account_id for r in filtered} == {"b"}


def test_domain_with_exactly_five_shares_is_kept() -> None:
    """Test a domain shared exactly five times survives the domain filter."""
    records = _shares("a", "foo.com", 5) + _shares("a", "rare.org", 4, start=5)
    filtered = apply_activity_filters(records, min_account_links=0, min_domain_shares=5)
    assert {d for r in filtered for d in r.domains} == {"foo.com"}


def test_zero_thresholds_keep_everything() -> None:
    """Test zero thresholds leave the records unchanged."""
    records = _shares("a", "foo.com", 1) + _shares("b", "bar.org", 2)
    assert apply_activity_filters(records, 0, 0) == records


def test_domain_filter_runs_before_account_filter() -> None:
    """Test account link counts only see domains that survived the domain filter."""
    records = _shares("a", "foo.com", 3) + _shares("a", "rare.org", 2, start=3)
    records += _shares("b", "foo.com", 3)
    filtered = apply_activity_filters(records, min_account_links=5, min_domain_shares=3)
    assert filtered == []


def test_raising_thresholds_never_adds_records() -> None:
    """Test filtering is monotone in both thresholds."""
    records = (
        _shares("a", "foo.com", 6)
        + _shares("b", "foo.com", 3)
        + _shares("b", "bar.org", 4, start=3)
        + _shares("c", "baz.net", 7)
    )
    previous = None
    for threshold in range(9):
        kept = set(apply_activity_filters(records, threshold, threshold))
        if previous is not None:
            assert kept <= previous
        previous = kept


def test_negative_threshold() -> None:
    """Test negative thresholds are a configuration error."""
    with pytest.raises(ConfigurationError):
        apply_activity_filters([], min_account_links=-1)


def test_weighted_mean_score() -> None:
    """Test the score is the share-weighted mean of rated domains."""
    records = _shares("a", "x.com", 3) + _shares("a", "y.com", 1, start=3)
    ratings = [SourceRating("x.com", 90), SourceRating("y.com", 30)]
    [cred] = score_accounts(records, ratings)
    assert cred.score == pytest.approx(75.0)
    assert cred.confidence == 1.0


def test_confidence_counts_distinct_domains() -> None:
    """Test confidence is the fraction of distinct shared domains that are rated."""
    domains = ["a.com", "b.com", "c.com", "d.com", "e.com"]
    records = [PostRecord("u", f"p{i}", (d,)) for i, d in enumerate(domains)]
    records += _shares("u", "a.com", 10, start=10)
    ratings = [SourceRating(d, 50) for d in domains[:4]]
    [cred] = score_accounts(records, ratings)
    assert cred.confidence == pytest.approx(0.8)


def test_unrated_account() -> None:
    """Test an account sharing only unrated domains has no score and zero confidence."""
    [cred] = score_accounts(_shares("a", "unknown.net", 3), [SourceRating("foo.com", 90)])
    assert cred.score is None
    assert cred.confidence == 0.0


def test_scores_sorted_and_within_rating_range() -> None:
    """Test output order and that scores stay within the shared domains' ratings."""
    records = _shares("b", "x.com", 2) + _shares("a", "y.com", 1) + _shares("a", "x.com", 4)
    ratings = [SourceRating("x.com", 70), SourceRating("y.com", 10)]
    creds = score_accounts(records, ratings)
    assert [c.account_id for c in creds] == ["a", "b"]
    assert all(10 <= c.score <= 70 for c in creds if c.score is not None)


@pytest.mark.parametrize(
    ("score", "label"),
    [(59.9, CredibilityLabel.LOW), (60.0, CredibilityLabel.HIGH), (0.0, CredibilityLabel.LOW)],
)
def test_label_threshold(score: float, label: CredibilityLabel) -> None:
    """Test scores below 60 are low and 60 or above high."""
    [cred], labels = label_accounts([AccountCredibility("a", score, 1.0)])
    assert cred.label is label
    assert labels.label_of("a") is label


def test_confidence_floor_excludes_partial_accounts() -> None:
    """Test accounts with partial confidence are labeled but not known."""
    creds, labels = label_accounts(
        [AccountCredibility("a", 75.0, 0.8), AccountCredibility("b", 30.0, 1.0)]
    )
    assert creds[0].label is CredibilityLabel.HIGH
    assert labels.high == frozenset()
    assert labels.low == frozenset({"b"})


def test_label_sets_cover_confident_scored_accounts() -> None:
    """Test H and L are disjoint and cover exactly the confident scored accounts."""
    creds = [
        AccountCredibility("a", 90.0, 1.0),
        AccountCredibility("b", 10.0, 1.0),
        AccountCredibility("c", None, 0.0),
        AccountCredibility("d", 65.0, 0.5),
    ]
    labeled, labels = label_accounts(creds)
    assert labels.high.isdisjoint(labels.low)
    assert labels.known == {"a", "b"}
    assert ground_truth(labeled) == labels


@pytest.mark.parametrize("threshold", [-1.0, 100.5])
def test_label_threshold_out_of_range(threshold: float) -> None:
    """Test thresholds outside [0, 100] are rejected."""
    with pytest.raises(ConfigurationError):
        label_accounts([], threshold=threshold)


def test_overlapping_label_sets() -> None:
    """Test an account cannot be both high and low credibility."""
    with pytest.raises(ConfigurationError):
        LabelSets(high=frozenset({"a"}), low=frozenset({"a", "b"}))


def test_label_sets_restrict() -> None:
    """Test restricting label sets to a subset of accounts."""
    labels = LabelSets(high=frozenset({"a", "b"}), low=frozenset({"c"}))
    assert labels.restrict(["a", "c", "z"]) == LabelSets(frozenset({"a"}), frozenset({"c"}))
    assert len(labels) == 3
