"""Command-line front end: ingest, build, rank, embed, evaluate and synth."""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any, cast

from .algorithms import get_algorithm, resolve_algorithms, run_algorithm
from .config import RunConfig, dotted_overrides, load_config
from .const import (
    BIPARTITE_KCORE_PRESET,
    DOMAIN,
    NETWORK_COSHARE,
    NETWORK_RESHARE,
    NETWORK_TRUST,
    NETWORKS,
    PQ_PRESETS,
    RESHARE_KCORE_PRESET,
)
from .coordinator import BenchmarkCoordinator
from .dataset import CredibilityDataset
from .diagnostics import write_manifest
from .embedding import pca_project_2d, save_embeddings
from .exceptions import (
    ConfigurationError,
    EvaluationError,
    IncompatibleNetworkError,
    InputError,
    fmt_error,
)
from .export import (
    write_credibilities,
    write_edges,
    write_node_attributes,
    write_pca,
    write_ratings,
    write_records,
    write_report_csv,
    write_report_json,
    write_scores,
)
from .ingest import ParseStats, load_domain_map, load_ratings, read_posts
from .networks import (
    BipartiteGraph,
    CoShareGraph,
    WeightedGraph,
    coshare_visual_filter,
    describe_network,
    disparity_backbone,
    k_core,
)
from .synthetic import generate_synthetic

_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCOMPATIBLE = 3

type Command = Callable[[argparse.Namespace, RunConfig], int]


def load_dataset(config: RunConfig) -> CredibilityDataset:
    """Parse, filter, score and label the configured inputs."""
    config.require_inputs("posts", "ratings")
    posts = cast(Path, config.posts)
    ratings = cast(Path, config.ratings)
    domain_map = load_domain_map(config.domain_map) if config.domain_map else None
    stats = ParseStats()
    records = read_posts(
        posts,
        blocklist=config.platform_domains,
        domain_map=domain_map,
        stats=stats,
    )
    return CredibilityDataset.from_records(
        records,
        load_ratings(ratings),
        name=posts.stem,
        min_account_links=config.min_account_links,
        min_domain_shares=config.min_domain_shares,
        threshold=config.label_threshold,
        confidence_floor=config.confidence_floor,
    )


def cmd_ingest(args: argparse.Namespace, config: RunConfig) -> int:
    """Write account credibilities and the filtered records."""
    dataset = load_dataset(config)
    outputs = [
        write_credibilities(dataset.credibilities, config.out_dir / "credibilities.csv"),
        write_records(dataset.records, config.out_dir / "records.jsonl"),
    ]
    write_manifest(
        "ingest",
        config,
        outputs,
        {"accounts": len(dataset.credibilities), "known": len(dataset.labels)},
    )
    return EXIT_OK


def cmd_build(args: argparse.Namespace, config: RunConfig) -> int:
    """Write the edge list and node attributes of a network."""
    dataset = load_dataset(config)
    if args.network in (NETWORK_RESHARE, NETWORK_TRUST):
        dataset.require_edges(args.network)
    graph: WeightedGraph | BipartiteGraph = dataset.network(args.network)

    k = args.k_core
    if args.figure_preset:
        if isinstance(graph, CoShareGraph):
            graph = coshare_visual_filter(graph)
        elif k is None and isinstance(graph, BipartiteGraph):
            k = BIPARTITE_KCORE_PRESET
        elif k is None:
            k = RESHARE_KCORE_PRESET
    if k is not None:
        graph = k_core(graph, k)
    if args.backbone is not None:
        if not isinstance(graph, WeightedGraph):
            raise IncompatibleNetworkError("The disparity backbone needs a one-mode network")
        graph = disparity_backbone(graph, args.backbone)

    summary = describe_network(graph, dataset.scores)
    outputs = [
        write_edges(graph, config.out_dir / f"{args.network}_edges.csv"),
        write_node_attributes(
            graph, config.out_dir / f"{args.network}_nodes.csv", dataset.scores, dataset.labels
        ),
    ]
    write_manifest("build", config, outputs, {"network": dataclasses.asdict(summary)})
    return EXIT_OK


def cmd_rank(args: argparse.Namespace, config: RunConfig) -> int:
    """Score every account with one algorithm using all known labels."""
    description = get_algorithm(args.algorithm)
    if args.network is not None and args.network != description.network:
        raise IncompatibleNetworkError(
            f"{description.key} runs on the {description.network} network, not {args.network}"
        )
    dataset = load_dataset(config)
    vector = run_algorithm(description, dataset, dataset.labels, config.settings)
    outputs = [write_scores(vector, config.out_dir / f"scores_{description.key}.csv")]
    if description.sources_fn is not None:
        sources = description.sources_fn(dataset, dataset.labels, config.settings)
        outputs.append(write_scores(sources, config.out_dir / f"sources_{description.key}.csv"))
    write_manifest(
        "rank",
        config,
        outputs,
        {"algorithm": description.key, "converged": vector.converged},
    )
    return EXIT_OK


def cmd_embed(args: argparse.Namespace, config: RunConfig) -> int:
    """Train node2vec embeddings and export them with their PCA projection."""
    dataset = load_dataset(config)
    dataset.require_edges(args.network)
    emb = dataset.embedding(args.network, config.settings.node2vec)
    projection = pca_project_2d(emb)
    matrix, index = save_embeddings(emb, config.out_dir / f"embedding_{args.network}.bin")
    outputs = [
        matrix,
        index,
        write_pca(
            projection, config.out_dir / f"pca_{args.network}.csv", dataset.scores, dataset.labels
        ),
    ]
    write_manifest(
        "embed",
        config,
        outputs,
        {"explained_variance": projection.explained_variance.tolist()},
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    """Cross-validate the selected algorithms and write the reports."""
    dataset = load_dataset(config)
    coordinator = BenchmarkCoordinator(
        dataset,
        resolve_algorithms(config.algorithms),
        config.settings,
        folds=config.folds,
        seed=config.seed,
        threads=config.threads,
        f1_thresholds=config.f1_thresholds,
    )
    reports = asyncio.run(coordinator.async_run())
    outputs = [
        write_report_json(reports, config.out_dir / "report.json"),
        write_report_csv(reports, config.out_dir / "report.csv"),
    ]
    write_manifest("evaluate", config, outputs, {"fingerprint": dataset.fingerprint})
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    """Write a planted benchmark in the standard input formats."""
    synthetic = generate_synthetic(config.synthetic)
    outputs = [
        write_records(synthetic.records, config.out_dir / "posts.jsonl"),
        write_ratings(synthetic.ratings, config.out_dir / "ratings.csv"),
    ]
    write_manifest(
        "synth",
        config,
        outputs,
        {"high": len(synthetic.labels.high), "low": len(synthetic.labels.low)},
    )
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML or JSON config file")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="single-threaded, bit-reproducible execution",
    )
    parser.add_argument("--out-dir", type=Path, help="output directory")
    parser.add_argument("--posts", type=Path, help="JSON-Lines post records")
    parser.add_argument("--ratings", type=Path, help="domain,score CSV of source ratings")
    parser.add_argument("--domain-map", type=Path, help="domain,expanded CSV of short links")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(prog=DOMAIN, description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest = subparsers.add_parser("ingest", help="score and label accounts")
    ingest.set_defaults(func=cmd_ingest)

    build = subparsers.add_parser("build", help="export a network")
    build.add_argument("--network", choices=NETWORKS, required=True)
    build.add_argument("--k-core", type=int, help="keep the k-core")
    build.add_argument("--backbone", type=float, help="disparity backbone significance")
    build.add_argument(
        "--figure-preset",
        action="store_true",
        help="k-core (reshare, trust, bipartite) or visualization filter (co-share) preset",
    )
    build.set_defaults(func=cmd_build)

    rank = subparsers.add_parser("rank", help="rank accounts with one algorithm")
    rank.add_argument("--algorithm", required=True)
    rank.add_argument("--network", choices=NETWORKS)
    rank.set_defaults(func=cmd_rank)

    embed = subparsers.add_parser("embed", help="train node2vec embeddings")
    embed.add_argument(
        "--network", choices=(NETWORK_RESHARE, NETWORK_COSHARE), default=NETWORK_RESHARE
    )
    embed.add_argument("--p", type=float, dest="p")
    embed.add_argument("--q", type=float, dest="q")
    embed.add_argument("--preset", choices=sorted(PQ_PRESETS), help="best (p, q) preset")
    embed.set_defaults(func=cmd_embed)

    evaluate = subparsers.add_parser("evaluate", help="cross-validate algorithms")
    evaluate.add_argument("--algorithms", nargs="+", help="algorithm keys or 'all'")
    evaluate.add_argument("--folds", type=int)
    evaluate.add_argument(
        "--grid-search",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="tune node2vec p and q on each fold's training labels",
    )
    evaluate.set_defaults(func=cmd_evaluate)

    synth = subparsers.add_parser("synth", help="generate a planted benchmark")
    synth.add_argument("--mu", type=float)
    synth.add_argument("--high-accounts", type=int)
    synth.add_argument("--low-accounts", type=int)
    synth.add_argument("--high-sources", type=int)
    synth.add_argument("--low-sources", type=int)
    synth.add_argument("--mean-activity", type=float)
    synth.add_argument("--reshare-fraction", type=float)
    synth.set_defaults(func=cmd_synth)

    for sub in (ingest, build, rank, embed, evaluate, synth):
        _add_common(sub)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    def arg(name: str) -> Any:
        return getattr(args, name, None)

    return dotted_overrides(
        [
            ("seed", arg("seed")),
            ("threads", arg("threads")),
            ("deterministic", arg("deterministic")),
            ("out_dir", arg("out_dir")),
            ("inputs.posts", arg("posts")),
            ("inputs.ratings", arg("ratings")),
            ("inputs.domain_map", arg("domain_map")),
            ("algorithms", arg("algorithms")),
            ("evaluation.folds", arg("folds")),
            ("evaluation.grid_search", arg("grid_search")),
            ("node2vec.p", arg("p")),
            ("node2vec.q", arg("q")),
            ("node2vec.preset", arg("preset")),
            ("synthetic.mu", arg("mu")),
            ("synthetic.high_accounts", arg("high_accounts")),
            ("synthetic.low_accounts", arg("low_accounts")),
            ("synthetic.high_sources", arg("high_sources")),
            ("synthetic.low_sources", arg("low_sources")),
            ("synthetic.mean_activity", arg("mean_activity")),
            ("synthetic.reshare_fraction", arg("reshare_fraction")),
        ]
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return its exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    command: Command = args.func
    try:
        config = load_config(args.config, _overrides(args))
        return command(args, config)
    except (ConfigurationError, InputError, EvaluationError) as err:
        _LOGGER.error("%s", fmt_error(err))
        return EXIT_CONFIG
    except IncompatibleNetworkError as err:
        _LOGGER.error("%s", fmt_error(err))
        return EXIT_INCOMPATIBLE


if __name__ == "__main__":
    sys.exit(main())
