"""Cross-validation splits and ranking metrics."""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import roc_auc_score
from sklearn.model_selection import KFold

from .const import DEFAULT_F1_THRESHOLDS, DEFAULT_FOLDS, DEFAULT_SEED
from .exceptions import ConfigurationError, EvaluationError, LabelLeakageError
from .ingest import LabelSets

_LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class FoldSplit:
    """One cross-validation fold over the known accounts."""

    index: int
    train: frozenset[str]
    test: frozenset[str]

    def split_labels(self, labels: LabelSets) -> tuple[LabelSets, LabelSets]:
        """Return the (train, test) label sets of this fold."""
        return labels.restrict(self.train), labels.restrict(self.test)


def kfold_split(
    known_accounts: Iterable[str], folds: int = DEFAULT_FOLDS, seed: int = DEFAULT_SEED
) -> list[FoldSplit]:
    """Partition the known accounts into shuffled, equal-as-possible test sets."""
    if folds < 2:
        raise ConfigurationError(f"Need at least 2 folds, got {folds}")
    accounts = np.array(sorted(set(known_accounts)), dtype=object)
    if len(accounts) < folds:
        raise EvaluationError(f"{len(accounts)} known accounts cannot fill {folds} folds")

    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    return [
        FoldSplit(
            index=index,
            train=frozenset(accounts[train_idx].tolist()),
            test=frozenset(accounts[test_idx].tolist()),
        )
        for index, (train_idx, test_idx) in enumerate(splitter.split(accounts))
    ]


def check_no_leakage(test: Iterable[str], train_labels: LabelSets, where: str) -> None:
    """Raise if any held-out account is part of the training labels."""
    leaked = train_labels.known & frozenset(test)
    if leaked:
        raise LabelLeakageError(
            f"{len(leaked)} test accounts leaked into {where}: {sorted(leaked)[:5]}"
        )


def _as_arrays(scores: Iterable[float], positives: Iterable[bool]) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(list(scores), dtype=np.float64)
    y = np.asarray(list(positives), dtype=bool)
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores for {y.size} labels")
    return s, y


def roc_auc(scores: Iterable[float], positives: Iterable[bool]) -> float:
    """Return the ROC AUC of suspicion-aligned scores; positive means low credibility.

    Ties between a positive and a negative count one half.
    """
    s, y = _as_arrays(scores, positives)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise EvaluationError("ROC AUC needs at least one positive and one negative")
    return float(roc_auc_score(y, s))


def best_f1(
    scores: Iterable[float],
    positives: Iterable[bool],
    n_thresholds: int = DEFAULT_F1_THRESHOLDS,
) -> tuple[float, float]:
    """Return the best F1 over evenly spaced thresholds and its smallest threshold.

    Scores are min-max rescaled to [0, 1] first; an account is predicted
    positive when its rescaled score is at least the threshold.
    """
    s, y = _as_arrays(scores, positives)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise EvaluationError("F1 needs at least one positive label")
    if n_thresholds < 2:
        raise ConfigurationError(f"Need at least 2 thresholds, got {n_thresholds}")

    spread = np.ptp(s)
    rescaled = (s - s.min()) / spread if spread > 0 else np.zeros_like(s)
    thresholds = np.linspace(0.0, 1.0, n_thresholds)

    all_sorted = np.sort(rescaled)
    pos_sorted = np.sort(rescaled[y])
    predicted = s.size - np.searchsorted(all_sorted, thresholds, side="left")
    true_pos = n_pos - np.searchsorted(pos_sorted, thresholds, side="left")
    f1 = 2.0 * true_pos / (predicted + n_pos)

    best = int(np.argmax(f1))
    return float(f1[best]), float(thresholds[best])


@dataclass(frozen=True, slots=True)
class FoldResult:
    """Metrics of one algorithm on one fold; ``auc`` is None for a skipped fold.

    ``n_unscored`` counts held-out accounts the algorithm gave no score; they are
    not part of ``n_test``.
    """

    fold: int
    auc: float | None
    f1: float | None
    threshold: float | None
    n_test: int
    skipped: str | None = None
    n_unscored: int = 0


def evaluate_fold(
    fold: int,
    nodes: tuple[str, ...],
    suspicion: np.ndarray,
    test_labels: LabelSets,
    n_thresholds: int = DEFAULT_F1_THRESHOLDS,
) -> FoldResult:
    """Score the held-out accounts of a fold that the algorithm ranked."""
    index = {node: i for i, node in enumerate(nodes)}
    test = sorted(a for a in test_labels.known if a in index)
    if missing := len(test_labels) - len(test):
        _LOGGER.warning(
            "Fold %d: %d of %d test accounts are outside the scored network",
            fold,
            missing,
            len(test_labels),
        )

    s = suspicion[[index[a] for a in test]] if test else np.zeros(0)
    y = np.array([a in test_labels.low for a in test], dtype=bool)
    try:
        auc = roc_auc(s, y)
    except EvaluationError as err:
        _LOGGER.warning("Skipping fold %d: %s", fold, err)
        return FoldResult(fold, None, None, None, len(test), skipped=str(err), n_unscored=missing)
    f1, threshold = best_f1(s, y, n_thresholds)
    return FoldResult(fold, auc, f1, threshold, len(test), n_unscored=missing)
