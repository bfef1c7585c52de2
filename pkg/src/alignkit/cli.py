"""Command-line entry point.

Subcommands: ingest, derive, eval, baseline, analyze. All options can come
from a JSON config file (--config); explicit command-line flags override
config values, which override defaults. One run seed feeds every named
randomness substream, so reruns with identical (input, config, seed) are
byte-identical.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional, Sequence

from . import analytics, baselines, metrics, tasks
from .clusters import build_clusters
from .corpus import AlignmentSet, coverage_ratio, load_topics, scan_topics
from .errors import AlignkitError, UsageError

logger = logging.getLogger("alignkit")

EVAL_MODES = ("macro", "micro")


@dataclass(frozen=True)
class RunConfig:
    """Declarative run parameters shared by all subcommands."""

    input: Optional[str] = None
    out: str = "out"
    seed: int = 0
    split: str = "data"
    iou_threshold: float = 0.5
    evidence_threshold: float = 0.5
    clustering_stop_threshold: float = 0.5
    salience_k_per_doc: int = 1
    planning_group_size: Optional[int] = None
    tasks: tuple[str, ...] = tasks.TASK_NAMES
    mode: Optional[str] = None
    annotator: Optional[str] = None
    candidates: Optional[str] = None

    def validate(self) -> None:
        if not 0.0 < self.iou_threshold <= 1.0:
            raise UsageError(f"iou_threshold must be in (0, 1], got {self.iou_threshold}")
        if not 0.0 < self.evidence_threshold <= 1.0:
            raise UsageError(
                f"evidence_threshold must be in (0, 1], got {self.evidence_threshold}"
            )
        if not 0.0 <= self.clustering_stop_threshold <= 1.0:
            raise UsageError(
                "clustering_stop_threshold must be in [0, 1], "
                f"got {self.clustering_stop_threshold}"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise UsageError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.salience_k_per_doc < 1:
            raise UsageError("salience_k_per_doc must be positive")
        if self.planning_group_size is not None and self.planning_group_size < 1:
            raise UsageError("planning_group_size must be positive")
        if not self.split or os.sep in self.split:
            raise UsageError(f"split must be a bare name, got {self.split!r}")
        unknown = [t for t in self.tasks if t not in tasks.TASK_NAMES]
        if unknown:
            raise UsageError(f"unknown tasks: {', '.join(unknown)}")
        if self.mode is not None and self.mode not in EVAL_MODES:
            raise UsageError(f"mode must be one of {EVAL_MODES}, got {self.mode!r}")


_CONFIG_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file, and explicit flags."""
    values: dict = {}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError(f"config file {config_path} must hold a JSON object")
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for name in _CONFIG_FIELDS:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    if "tasks" in values and not isinstance(values["tasks"], tuple):
        raw = values["tasks"]
        if isinstance(raw, str):
            raw = [t.strip() for t in raw.split(",") if t.strip()]
        values["tasks"] = tuple(raw)
    config = RunConfig(**values)
    config.validate()
    return config


def _parse_tasks(raw: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in raw.split(",") if t.strip())


def _ordered_tasks(config: RunConfig) -> tuple[str, ...]:
    requested = set(config.tasks)
    return tuple(t for t in tasks.TASK_NAMES if t in requested)


def _require_input(config: RunConfig) -> str:
    if not config.input:
        raise UsageError("an --input path is required")
    if not os.path.exists(config.input):
        raise UsageError(f"input path does not exist: {config.input}")
    return config.input


def _select_sets(sets: Sequence[AlignmentSet], annotator: Optional[str]) -> list[AlignmentSet]:
    """One alignment set per topic, resolving multi-annotator records."""
    by_topic: dict[str, list[AlignmentSet]] = {}
    for aset in sets:
        by_topic.setdefault(aset.topic.topic_id, []).append(aset)
    selected = []
    for topic_id, group in by_topic.items():
        if annotator is not None:
            matches = [s for s in group if s.annotator_id == annotator]
            if not matches:
                raise UsageError(
                    f"topic {topic_id!r} has no alignments from annotator {annotator!r}"
                )
            selected.append(matches[0])
        elif len(group) == 1:
            selected.append(group[0])
        else:
            names = ", ".join(str(s.annotator_id) for s in group)
            raise UsageError(
                f"topic {topic_id!r} has multiple annotators ({names}); pass --annotator"
            )
    return selected


def _clustered_corpus(config: RunConfig) -> list:
    sets = load_topics(_require_input(config))
    selected = _select_sets(sets, config.annotator)
    return [build_clusters(aset, config.iou_threshold) for aset in selected]


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def cmd_ingest(config: RunConfig) -> int:
    """Validate a topic file and write a per-topic report."""
    sets, diagnostics = scan_topics(_require_input(config))
    by_topic: dict[str, list[AlignmentSet]] = {}
    for aset in sets:
        by_topic.setdefault(aset.topic.topic_id, []).append(aset)
    topics = []
    for topic_id, group in by_topic.items():
        topic = group[0].topic
        topics.append(
            {
                "topic_id": topic_id,
                "documents": len(topic.documents),
                "summary_sentences": len(topic.summary_sentences),
                "alignment_sets": len(group),
                "alignments": sum(len(s.alignments) for s in group),
                "coverage": min(coverage_ratio(s) for s in group),
            }
        )
    report = {
        "input": config.input,
        "topics": len(by_topic),
        "alignments": sum(t["alignments"] for t in topics),
        "errors": diagnostics,
        "per_topic": topics,
    }
    os.makedirs(config.out, exist_ok=True)
    _write_json(report, os.path.join(config.out, "ingest_report.json"))
    for diag in diagnostics:
        logger.error("line %s: %s", diag["line"], diag["error"])
    logger.info(
        "ingested %d topics, %d alignments, %d errors",
        report["topics"], report["alignments"], len(diagnostics),
    )
    return 1 if diagnostics else 0


def cmd_derive(config: RunConfig) -> int:
    """Derive the selected task datasets and the derivation report."""
    corpus = _clustered_corpus(config)
    selected = _ordered_tasks(config)
    datasets, report = tasks.derive_all(corpus, config.seed, selected)
    written = tasks.write_datasets(datasets, report, config.out, config.split, config.seed)
    for task in selected:
        logger.info("%s: %d instances", task, len(datasets[task]))
    logger.info("wrote %d files to %s", len(written), config.out)
    return 0


def cmd_baseline(config: RunConfig) -> int:
    """Run the heuristic baselines over derived datasets."""
    input_dir = _require_input(config)
    selected = _ordered_tasks(config)
    datasets = {}
    for task in selected:
        path = os.path.join(input_dir, tasks.dataset_filename(task, config.split))
        if not os.path.exists(path):
            raise UsageError(f"derived dataset not found: {path}")
        datasets[task] = [tasks.parse_instance(r) for r in tasks.read_records(path)]
    external = baselines.load_candidates(config.candidates) if config.candidates else None
    baseline_config = baselines.BaselineConfig(
        salience_k_per_doc=config.salience_k_per_doc,
        stop_threshold=config.clustering_stop_threshold,
        evidence_threshold=config.evidence_threshold,
        group_size=config.planning_group_size,
    )
    predictions = baselines.run_baselines(datasets, baseline_config, external)
    os.makedirs(config.out, exist_ok=True)
    report = {
        "input": input_dir,
        "split": config.split,
        "seed": config.seed,
        "config": {
            "salience_k_per_doc": baseline_config.salience_k_per_doc,
            "stop_threshold": baseline_config.stop_threshold,
            "evidence_threshold": baseline_config.evidence_threshold,
            "group_size": baseline_config.group_size,
        },
        "predictions": {},
    }
    for task in selected:
        path = os.path.join(config.out, f"{task}.{config.split}.predictions.jsonl")
        tasks.write_records(predictions[task], path)
        report["predictions"][task] = len(predictions[task])
        logger.info("%s: %d prediction records", task, len(predictions[task]))
    _write_json(report, os.path.join(config.out, "baseline_report.json"))
    return 0


def cmd_eval(config: RunConfig, task: str, gold_path: str, pred_path: str) -> int:
    """Score a prediction file against a derived dataset file."""
    if task not in tasks.TASK_NAMES:
        raise UsageError(f"unknown task {task!r}")
    for path in (gold_path, pred_path):
        if not os.path.exists(path):
            raise UsageError(f"file does not exist: {path}")
    result = metrics.evaluate_task(
        task, tasks.read_records(gold_path), tasks.read_records(pred_path)
    )
    reports = [
        r for r in result.reports if config.mode is None or r.mode == config.mode
    ]
    if not reports:
        raise UsageError(f"no {task} report matches mode {config.mode!r}")
    os.makedirs(config.out, exist_ok=True)
    for report in reports:
        path = os.path.join(config.out, f"{task}.{report.metric}.{report.mode}.json")
        _write_json(report.to_json(), path)
        print(f"{task} {report.metric} ({report.mode}): {report.corpus:.4f}")
    if result.skipped:
        logger.info("skipped %d undefined instances: %s",
                    len(result.skipped), ", ".join(result.skipped))
    return 0


def cmd_analyze(config: RunConfig) -> int:
    """Write corpus statistics, overlap measures, and spread reports."""
    corpus = _clustered_corpus(config)
    os.makedirs(config.out, exist_ok=True)

    stats = analytics.corpus_stats(corpus)
    stats_json = {"input": config.input, **analytics.stats_report(stats)}
    _write_json(stats_json, os.path.join(config.out, "corpus_stats.json"))
    stats_text = analytics.render_stats_text(stats)
    with open(os.path.join(config.out, "corpus_stats.txt"), "w", encoding="utf-8") as fh:
        fh.write(stats_text)

    rows = analytics.abstractiveness_table(corpus)
    slices = [analytics.abstractiveness_scores(corpus, n) for n in (1, 2, 3)]
    abs_json = {"input": config.input, **analytics.abstractiveness_report(rows, slices)}
    _write_json(abs_json, os.path.join(config.out, "abstractiveness.json"))
    with open(os.path.join(config.out, "abstractiveness.txt"), "w", encoding="utf-8") as fh:
        fh.write(analytics.render_abstractiveness_text(rows))

    spread = analytics.document_spread(corpus)
    spread_json = {"input": config.input, **analytics.spread_report(spread)}
    _write_json(spread_json, os.path.join(config.out, "document_spread.json"))
    with open(os.path.join(config.out, "document_spread.txt"), "w", encoding="utf-8") as fh:
        fh.write(analytics.render_spread_text(spread))

    print(stats_text, end="")
    if stats.empty:
        logger.warning("empty corpus: all statistics are zero")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--input", help="input path (topic file or dataset directory)")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, help="run seed (default: 0)")
    parser.add_argument("--split", help="split label used in dataset filenames")
    parser.add_argument("--iou-threshold", dest="iou_threshold", type=float,
                        help="cluster-linking token IoU threshold (default: 0.5)")
    parser.add_argument("--evidence-threshold", dest="evidence_threshold", type=float,
                        help="evidence baseline similarity cut, strict (default: 0.5)")
    parser.add_argument("--stop-threshold", dest="clustering_stop_threshold", type=float,
                        help="clustering baseline merge stop threshold (default: 0.5)")
    parser.add_argument("--k-per-doc", dest="salience_k_per_doc", type=int,
                        help="salience baseline spans per document (default: 1)")
    parser.add_argument("--group-size", dest="planning_group_size", type=int,
                        help="planning baseline group size (default: corpus average)")
    parser.add_argument("--tasks", type=_parse_tasks,
                        help="comma-separated task subset (default: all six)")
    parser.add_argument("--mode", choices=EVAL_MODES,
                        help="restrict eval output to one aggregation mode")
    parser.add_argument("--annotator", help="annotator id to select on multi-annotator topics")
    parser.add_argument("--candidates", help="external candidate spans file (JSONL)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alignkit",
        description="Turn summary-source span alignments into task datasets, "
                    "baselines, scores, and corpus reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, doc in (
        ("ingest", "validate a topic file and write an ingest report"),
        ("derive", "derive task datasets from a topic file"),
        ("baseline", "run heuristic baselines over derived datasets"),
        ("analyze", "compute corpus statistics and overlap reports"),
    ):
        _add_common_flags(sub.add_parser(name, help=doc))

    eval_parser = sub.add_parser("eval", help="score a prediction file against gold")
    _add_common_flags(eval_parser)
    eval_parser.add_argument("--task", required=True, help="task to score")
    eval_parser.add_argument("--gold", required=True, help="derived dataset file")
    eval_parser.add_argument("--pred", required=True, help="prediction file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "ingest":
            return cmd_ingest(config)
        if args.command == "derive":
            return cmd_derive(config)
        if args.command == "baseline":
            return cmd_baseline(config)
        if args.command == "eval":
            return cmd_eval(config, args.task, args.gold, args.pred)
        return cmd_analyze(config)
    except AlignkitError as exc:
        logger.error("%s", exc)
        return 1
    except FileNotFoundError as exc:
        logger.error("file not found: %s", exc.filename or exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
