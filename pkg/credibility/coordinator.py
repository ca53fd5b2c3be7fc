"""Cross-validated benchmark of credibility algorithms."""

from __future__ import annotations

import asyncio
import logging
import statistics
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from .algorithms import (
    AlgorithmSettings,
    CredibilityAlgorithmDescription,
    resolve_algorithms,
    run_algorithm,
)
from .const import DEFAULT_F1_THRESHOLDS, DEFAULT_FOLDS, DEFAULT_SEED
from .dataset import CredibilityDataset
from .exceptions import (
    ConfigurationError,
    EvaluationError,
    IncompatibleNetworkError,
    LabelLeakageError,
    fmt_error,
)
from .metrics import FoldResult, FoldSplit, check_no_leakage, evaluate_fold, kfold_split

_LOGGER = logging.getLogger(__name__)

# Per-fold failures that skip the fold instead of aborting the benchmark.
_FOLD_ERRORS = (ConfigurationError, EvaluationError)


def _mean_std(values: Sequence[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = sum(values) / len(values)
    std = statistics.stdev(values) if len(values) > 1 else None
    return mean, std


@dataclass(frozen=True, kw_only=True)
class EvalReport:
    """Per-fold and aggregate metrics of one algorithm on one dataset."""

    algorithm: str
    network: str
    folds: tuple[FoldResult, ...] = ()
    seed: int
    fingerprint: str
    config: dict[str, Any] = field(default_factory=dict)
    not_applicable: str | None = None

    @property
    def fold_count(self) -> int:
        """Return the number of folds run."""
        return len(self.folds)

    @property
    def skipped_folds(self) -> int:
        """Return the number of folds without a defined metric."""
        return sum(1 for fold in self.folds if fold.auc is None)

    @property
    def auc(self) -> tuple[float | None, float | None]:
        """Return the mean and sample standard deviation of the fold ROC AUCs."""
        return _mean_std([f.auc for f in self.folds if f.auc is not None])

    @property
    def f1(self) -> tuple[float | None, float | None]:
        """Return the mean and sample standard deviation of the fold F1 scores."""
        return _mean_std([f.f1 for f in self.folds if f.f1 is not None])

    def as_dict(self) -> dict[str, Any]:
        """Return the JSON representation."""
        auc_mean, auc_std = self.auc
        f1_mean, f1_std = self.f1
        return {
            "algorithm": self.algorithm,
            "network": self.network,
            "not_applicable": self.not_applicable,
            "fold_count": self.fold_count,
            "skipped_folds": self.skipped_folds,
            "auc_mean": auc_mean,
            "auc_std": auc_std,
            "f1_mean": f1_mean,
            "f1_std": f1_std,
            "folds": [
                {
                    "fold": f.fold,
                    "auc": f.auc,
                    "f1": f.f1,
                    "threshold": f.threshold,
                    "n_test": f.n_test,
                    "n_unscored": f.n_unscored,
                    "skipped": f.skipped,
                }
                for f in self.folds
            ],
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            "config": self.config,
        }


class BenchmarkCoordinator:
    """Run every (algorithm, fold) pair concurrently and assemble the reports."""

    def __init__(
        self,
        dataset: CredibilityDataset,
        algorithms: Iterable[CredibilityAlgorithmDescription],
        settings: AlgorithmSettings,
        *,
        folds: int = DEFAULT_FOLDS,
        seed: int = DEFAULT_SEED,
        threads: int = 1,
        f1_thresholds: int = DEFAULT_F1_THRESHOLDS,
    ) -> None:
        """Initialize."""
        self.dataset = dataset
        self.algorithms = list(algorithms)
        self.settings = settings
        self.folds = folds
        self.seed = seed
        self.f1_thresholds = f1_thresholds
        self._semaphore = asyncio.Semaphore(max(1, threads))

    @property
    def config(self) -> dict[str, Any]:
        """Return the configuration snapshot stored in every report."""
        return {
            **self.settings.as_dict(),
            "folds": self.folds,
            "f1_thresholds": self.f1_thresholds,
        }

    def _not_applicable(self, description: CredibilityAlgorithmDescription) -> str | None:
        try:
            self.dataset.require_edges(description.network)
        except IncompatibleNetworkError as err:
            return str(err)
        return None

    def _prepare(self, runnable: list[CredibilityAlgorithmDescription]) -> None:
        """Build label-independent networks and embeddings once, before the folds fan out."""
        for description in runnable:
            self.dataset.network(description.network)
            if description.uses_embedding and not self.settings.grid_search:
                self.dataset.embedding(description.network, self.settings.node2vec)

    def _run_fold(
        self, description: CredibilityAlgorithmDescription, split: FoldSplit
    ) -> FoldResult:
        train, test = split.split_labels(self.dataset.labels)
        check_no_leakage(test.known, train, f"{description.key} training labels")
        try:
            vector = run_algorithm(description, self.dataset, train, self.settings)
        except _FOLD_ERRORS as err:
            _LOGGER.warning(
                "%s fold %d skipped: %s", description.key, split.index, fmt_error(err)
            )
            return FoldResult(split.index, None, None, None, len(test), skipped=fmt_error(err))
        return evaluate_fold(
            split.index, vector.nodes, vector.suspicion(), test, self.f1_thresholds
        )

    async def _async_run_fold(
        self, description: CredibilityAlgorithmDescription, split: FoldSplit
    ) -> FoldResult:
        async with self._semaphore:
            return await asyncio.to_thread(self._run_fold, description, split)

    async def async_run(self) -> list[EvalReport]:
        """Evaluate every algorithm on every fold."""
        splits = kfold_split(self.dataset.labels.known, self.folds, self.seed)
        skipped = {d.key: reason for d in self.algorithms if (reason := self._not_applicable(d))}
        for key, reason in skipped.items():
            _LOGGER.warning("%s is not applicable: %s", key, reason)
        runnable = [d for d in self.algorithms if d.key not in skipped]
        await asyncio.to_thread(self._prepare, runnable)

        jobs = [(d, split) for d in runnable for split in splits]
        try:
            results = await asyncio.gather(*(self._async_run_fold(d, s) for d, s in jobs))
        except LabelLeakageError:
            _LOGGER.error("Label leakage detected; aborting benchmark")
            raise

        by_algorithm: dict[str, list[FoldResult]] = {d.key: [] for d in runnable}
        for (description, _), result in zip(jobs, results, strict=True):
            by_algorithm[description.key].append(result)

        config = self.config
        reports = []
        for description in self.algorithms:
            report = EvalReport(
                algorithm=description.key,
                network=description.network,
                folds=tuple(by_algorithm.get(description.key, ())),
                seed=self.seed,
                fingerprint=self.dataset.fingerprint,
                config=config,
                not_applicable=skipped.get(description.key),
            )
            auc_mean, auc_std = report.auc
            _LOGGER.info(
                "%s: AUC %s ± %s over %d folds (%d skipped)",
                description.key,
                "n/a" if auc_mean is None else f"{auc_mean:.3f}",
                "n/a" if auc_std is None else f"{auc_std:.3f}",
                report.fold_count,
                report.skipped_folds,
            )
            reports.append(report)
        return reports


def run_benchmark(
    dataset: CredibilityDataset,
    algorithms: Iterable[str | CredibilityAlgorithmDescription],
    settings: AlgorithmSettings | None = None,
    *,
    folds: int = DEFAULT_FOLDS,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
    f1_thresholds: int = DEFAULT_F1_THRESHOLDS,
) -> list[EvalReport]:
    """Cross-validate algorithms on a labeled dataset and return one report each.

    Keys and descriptions may be mixed; reports follow the order given, with ``all``
    expanded in place and repeats dropped.
    """
    resolved: dict[str, CredibilityAlgorithmDescription] = {}
    for item in algorithms:
        for description in resolve_algorithms([item]) if isinstance(item, str) else [item]:
            resolved.setdefault(description.key, description)
    descriptions = list(resolved.values())
    coordinator = BenchmarkCoordinator(
        dataset,
        descriptions,
        settings or AlgorithmSettings(),
        folds=folds,
        seed=seed,
        threads=threads,
        f1_thresholds=f1_thresholds,
    )
    return asyncio.run(coordinator.async_run())
