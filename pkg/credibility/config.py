"""Run configuration: YAML file, schema validation and command-line overrides."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import voluptuous as vol
import yaml

from .algorithms import AlgorithmSettings
from .centrality import Polarity, PropagationConfig
from .const import (
    CONF_ALPHA,
    CONF_BETA,
    CONF_DANGLING,
    CONF_MAX_ITERATIONS,
    CONF_SEED_FRACTION,
    CONF_TOLERANCE,
    DANGLING_DROP,
    DANGLING_TELEPORT,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_CONFIDENCE_FLOOR,
    DEFAULT_DIMENSION,
    DEFAULT_EPOCHS,
    DEFAULT_F1_THRESHOLDS,
    DEFAULT_FOLDS,
    DEFAULT_KNN_K,
    DEFAULT_LABEL_THRESHOLD,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_MIN_ACCOUNT_LINKS,
    DEFAULT_MIN_DOMAIN_SHARES,
    DEFAULT_NEGATIVES,
    DEFAULT_PQ_GRID,
    DEFAULT_SEED,
    DEFAULT_SEED_FRACTION,
    DEFAULT_TOLERANCE,
    DEFAULT_WALK_LENGTH,
    DEFAULT_WALKS_PER_NODE,
    DEFAULT_WINDOW,
    PLATFORM_DOMAINS,
    PQ_PRESETS,
    REPUTATION_SCALE_MAX,
    REPUTATION_SCALE_RAW,
)
from .embedding import DEFAULT_BATCH_SIZE, KnnConfig, KnnDistance, Node2vecParams
from .exceptions import ConfigurationError, InputError, fmt_error
from .synthetic import SyntheticConfig

_LOGGER = logging.getLogger(__name__)

_POSITIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=1))
_NON_NEGATIVE_INT = vol.All(vol.Coerce(int), vol.Range(min=0))
_UNIT = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0))
_POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_OPTIONAL_PATH = vol.Any(None, vol.Coerce(Path))

INPUTS_SCHEMA = vol.Schema(
    {
        vol.Optional("posts", default=None): _OPTIONAL_PATH,
        vol.Optional("ratings", default=None): _OPTIONAL_PATH,
        vol.Optional("domain_map", default=None): _OPTIONAL_PATH,
    }
)

FILTERS_SCHEMA = vol.Schema(
    {
        vol.Optional("min_account_links", default=DEFAULT_MIN_ACCOUNT_LINKS): _NON_NEGATIVE_INT,
        vol.Optional("min_domain_shares", default=DEFAULT_MIN_DOMAIN_SHARES): _NON_NEGATIVE_INT,
        vol.Optional("label_threshold", default=DEFAULT_LABEL_THRESHOLD): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=100.0)
        ),
        vol.Optional("confidence_floor", default=DEFAULT_CONFIDENCE_FLOOR): _UNIT,
        vol.Optional("platform_domains", default=sorted(PLATFORM_DOMAINS)): [
            vol.All(str, vol.Lower)
        ],
    }
)

PROPAGATION_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_ALPHA, default=DEFAULT_ALPHA): _UNIT,
        vol.Optional(CONF_BETA, default=DEFAULT_BETA): _UNIT,
        vol.Optional(CONF_TOLERANCE, default=DEFAULT_TOLERANCE): _POSITIVE_FLOAT,
        vol.Optional(CONF_MAX_ITERATIONS, default=DEFAULT_MAX_ITERATIONS): _POSITIVE_INT,
        vol.Optional(CONF_SEED_FRACTION, default=DEFAULT_SEED_FRACTION): _UNIT,
        vol.Optional(CONF_DANGLING, default=DANGLING_TELEPORT): vol.In(
            [DANGLING_TELEPORT, DANGLING_DROP]
        ),
        vol.Optional("reputation_scale", default=REPUTATION_SCALE_MAX): vol.In(
            [REPUTATION_SCALE_MAX, REPUTATION_SCALE_RAW]
        ),
        vol.Optional("hits_account_polarity", default=str(Polarity.SUSPICION)): vol.In(
            [str(p) for p in Polarity]
        ),
    }
)

NODE2VEC_SCHEMA = vol.Schema(
    {
        vol.Optional("p", default=1.0): _POSITIVE_FLOAT,
        vol.Optional("q", default=1.0): _POSITIVE_FLOAT,
        vol.Optional("dimension", default=DEFAULT_DIMENSION): _POSITIVE_INT,
        vol.Optional("window", default=DEFAULT_WINDOW): _POSITIVE_INT,
        vol.Optional("walks_per_node", default=DEFAULT_WALKS_PER_NODE): _POSITIVE_INT,
        vol.Optional("walk_length", default=DEFAULT_WALK_LENGTH): _POSITIVE_INT,
        vol.Optional("epochs", default=DEFAULT_EPOCHS): _POSITIVE_INT,
        vol.Optional("negatives", default=DEFAULT_NEGATIVES): _POSITIVE_INT,
        vol.Optional("learning_rate", default=DEFAULT_LEARNING_RATE): _POSITIVE_FLOAT,
        vol.Optional("batch_size", default=DEFAULT_BATCH_SIZE): _POSITIVE_INT,
    }
)

KNN_SCHEMA = vol.Schema(
    {
        vol.Optional("k", default=DEFAULT_KNN_K): _POSITIVE_INT,
        vol.Optional("distance", default=str(KnnDistance.COSINE)): vol.In(
            [str(d) for d in KnnDistance]
        ),
    }
)

EVALUATION_SCHEMA = vol.Schema(
    {
        vol.Optional("folds", default=DEFAULT_FOLDS): vol.All(vol.Coerce(int), vol.Range(min=2)),
        vol.Optional("f1_thresholds", default=DEFAULT_F1_THRESHOLDS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
        vol.Optional("grid_search", default=False): vol.Boolean(),
        vol.Optional("pq_grid", default=list(DEFAULT_PQ_GRID)): vol.All(
            [_POSITIVE_FLOAT], vol.Length(min=1)
        ),
        vol.Optional("inner_folds", default=DEFAULT_FOLDS): vol.All(
            vol.Coerce(int), vol.Range(min=2)
        ),
    }
)

SYNTHETIC_SCHEMA = vol.Schema(
    {
        vol.Optional("high_accounts", default=1200): _POSITIVE_INT,
        vol.Optional("low_accounts", default=800): _POSITIVE_INT,
        vol.Optional("high_sources", default=50): _POSITIVE_INT,
        vol.Optional("low_sources", default=50): _POSITIVE_INT,
        vol.Optional("mu", default=0.05): _UNIT,
        vol.Optional("mean_activity", default=20.0): _POSITIVE_FLOAT,
        vol.Optional("reshare_fraction", default=0.5): _UNIT,
    }
)

CONFIG_SCHEMA = vol.Schema(
    {
        vol.Optional("inputs", default={}): INPUTS_SCHEMA,
        vol.Optional("filters", default={}): FILTERS_SCHEMA,
        vol.Optional("algorithms", default=["all"]): vol.Any([str], vol.All(str, lambda v: [v])),
        vol.Optional("propagation", default={}): PROPAGATION_SCHEMA,
        vol.Optional("node2vec", default={}): NODE2VEC_SCHEMA,
        vol.Optional("knn", default={}): KNN_SCHEMA,
        vol.Optional("evaluation", default={}): EVALUATION_SCHEMA,
        vol.Optional("synthetic", default={}): SYNTHETIC_SCHEMA,
        vol.Optional("seed", default=DEFAULT_SEED): _NON_NEGATIVE_INT,
        vol.Optional("threads", default=1): _POSITIVE_INT,
        vol.Optional("deterministic", default=True): vol.Boolean(),
        vol.Optional("out_dir", default="out"): vol.Coerce(Path),
    }
)


@dataclass(frozen=True, kw_only=True)
class RunConfig:
    """Validated settings of one command-line run."""

    posts: Path | None = None
    ratings: Path | None = None
    domain_map: Path | None = None
    min_account_links: int = DEFAULT_MIN_ACCOUNT_LINKS
    min_domain_shares: int = DEFAULT_MIN_DOMAIN_SHARES
    label_threshold: float = DEFAULT_LABEL_THRESHOLD
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
    platform_domains: frozenset[str] = PLATFORM_DOMAINS
    algorithms: tuple[str, ...] = ("all",)
    settings: AlgorithmSettings = field(default_factory=AlgorithmSettings)
    folds: int = DEFAULT_FOLDS
    f1_thresholds: int = DEFAULT_F1_THRESHOLDS
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    seed: int = DEFAULT_SEED
    threads: int = 1
    deterministic: bool = True
    out_dir: Path = Path("out")

    def require_inputs(self, *names: str) -> None:
        """Raise InputError unless the named input files are set and exist."""
        for name in names:
            path: Path | None = getattr(self, name)
            if path is None:
                raise InputError(f"No {name} file configured")
            if not path.is_file():
                raise InputError(f"{name} file not found: {path}")

    def as_dict(self) -> dict[str, Any]:
        """Return the resolved configuration, defaults included."""
        return {
            "inputs": {
                "posts": str(self.posts) if self.posts else None,
                "ratings": str(self.ratings) if self.ratings else None,
                "domain_map": str(self.domain_map) if self.domain_map else None,
            },
            "filters": {
                "min_account_links": self.min_account_links,
                "min_domain_shares": self.min_domain_shares,
                "label_threshold": self.label_threshold,
                "confidence_floor": self.confidence_floor,
                "platform_domains": sorted(self.platform_domains),
            },
            "algorithms": list(self.algorithms),
            "propagation": self.settings.propagation.as_dict(),
            "node2vec": self.settings.node2vec.as_dict(),
            "knn": self.settings.knn.as_dict(),
            "evaluation": {
                "folds": self.folds,
                "f1_thresholds": self.f1_thresholds,
                "grid_search": self.settings.grid_search,
                "pq_grid": list(self.settings.pq_grid),
                "inner_folds": self.settings.inner_folds,
            },
            "synthetic": self.synthetic.as_dict(),
            "seed": self.seed,
            "threads": self.threads,
            "deterministic": self.deterministic,
            "out_dir": str(self.out_dir),
        }


def _merge(base: dict[str, Any], overrides: Mapping[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def read_config_file(path: Path) -> dict[str, Any]:
    """Read a YAML (or JSON) configuration file."""
    try:
        with path.open(encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as err:
        raise InputError(f"Cannot read config file {path}") from err
    except yaml.YAMLError as err:
        raise ConfigurationError(f"Invalid config file {path}: {fmt_error(err)}") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"Config file {path} must hold a mapping")
    return data


def _strip_none(data: Mapping[str, Any]) -> dict[str, Any]:
    return {
        key: _strip_none(value) if isinstance(value, Mapping) else value
        for key, value in data.items()
        if value is not None
    }


def build_config(
    data: Mapping[str, Any] | None = None, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """Validate raw settings, apply overrides and build a RunConfig."""
    raw = _merge(_strip_none(data or {}), overrides or {})
    node2vec = dict(raw.get("node2vec") or {})
    if (preset := node2vec.pop("preset", None)) is not None:
        if preset not in PQ_PRESETS:
            raise ConfigurationError(
                f"Unknown node2vec preset {preset!r}; choose from {', '.join(PQ_PRESETS)}"
            )
        p, q = PQ_PRESETS[preset]
        node2vec.setdefault("p", p)
        node2vec.setdefault("q", q)
        raw["node2vec"] = node2vec
    try:
        conf = CONFIG_SCHEMA(raw)
    except vol.Invalid as err:
        raise ConfigurationError(f"Invalid configuration: {err}") from err

    seed = conf["seed"]
    deterministic = conf["deterministic"]
    evaluation = conf["evaluation"]
    try:
        settings = AlgorithmSettings(
            propagation=PropagationConfig(**conf["propagation"]),
            node2vec=Node2vecParams(
                **conf["node2vec"],
                seed=seed,
                workers=conf["threads"],
                deterministic=deterministic,
            ),
            knn=KnnConfig(**conf["knn"]),
            grid_search=evaluation["grid_search"],
            pq_grid=tuple(evaluation["pq_grid"]),
            inner_folds=evaluation["inner_folds"],
        )
        synthetic = SyntheticConfig(**conf["synthetic"], seed=seed)
    except TypeError as err:
        raise ConfigurationError(f"Invalid configuration: {fmt_error(err)}") from err

    return RunConfig(
        posts=conf["inputs"]["posts"],
        ratings=conf["inputs"]["ratings"],
        domain_map=conf["inputs"]["domain_map"],
        min_account_links=conf["filters"]["min_account_links"],
        min_domain_shares=conf["filters"]["min_domain_shares"],
        label_threshold=conf["filters"]["label_threshold"],
        confidence_floor=conf["filters"]["confidence_floor"],
        platform_domains=frozenset(conf["filters"]["platform_domains"]),
        algorithms=tuple(conf["algorithms"]),
        settings=settings,
        folds=evaluation["folds"],
        f1_thresholds=evaluation["f1_thresholds"],
        synthetic=synthetic,
        seed=seed,
        threads=conf["threads"],
        deterministic=deterministic,
        out_dir=conf["out_dir"],
    )


def load_config(path: Path | None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Load a config file (if any) and apply command-line overrides."""
    data = read_config_file(path) if path is not None else {}
    config = build_config(data, overrides)
    _LOGGER.debug("Resolved configuration: %s", config.as_dict())
    return config


def dotted_overrides(pairs: Iterable[tuple[str, Any]]) -> dict[str, Any]:
    """Turn ``("node2vec.p", 2.0)`` pairs into a nested override mapping."""
    nested: dict[str, Any] = {}
    for key, value in pairs:
        if value is None:
            continue
        *parents, leaf = key.split(".")
        target = nested
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return nested
