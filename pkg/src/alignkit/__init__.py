"""Toolkit for proposition-level summary-source alignment corpora.

Given topics (document sets plus a reference summary) annotated with aligned
span pairs, this package groups alignments into proposition clusters, derives
six task datasets (salience, clustering, evidence, planning, and two fusion
tasks), scores predictions with oracle-checked metrics, runs deterministic
heuristic baselines, and computes corpus-level statistics.
"""
from .clusters import ClusteredTopic, PropositionCluster, build_clusters, pairwise_iou
from .corpus import (
    Alignment,
    AlignmentSet,
    Document,
    Topic,
    coverage_ratio,
    dump_topics,
    inter_annotator_iou,
    load_topics,
    mean_pairwise_agreement,
    parse_topic_record,
    scan_topics,
)
from .errors import (
    AlignkitError,
    ParseError,
    UndefinedResultError,
    UsageError,
    ValidationError,
)
from .metrics import (
    MetricReport,
    TokenLabeling,
    clustering_scores,
    evaluate_task,
    kendall_tau,
    plan_grouping_scores,
    rouge_f1,
    spans_to_labeling,
    token_f1,
)
from .seeding import GENERATOR_VERSION, DeterministicRng, substream
from .tasks import (
    SCHEMA_VERSION,
    TASK_NAMES,
    derive_all,
    derive_clustering,
    derive_evidence,
    derive_incontext_fusion,
    derive_planning,
    derive_salience,
    derive_sentence_fusion,
)
from .textops import SpanFragments, TokenizedText, iou, tokenize

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AlignmentSet",
    "AlignkitError",
    "ClusteredTopic",
    "Document",
    "DeterministicRng",
    "GENERATOR_VERSION",
    "MetricReport",
    "ParseError",
    "PropositionCluster",
    "SCHEMA_VERSION",
    "SpanFragments",
    "TASK_NAMES",
    "TokenLabeling",
    "TokenizedText",
    "Topic",
    "UndefinedResultError",
    "UsageError",
    "ValidationError",
    "build_clusters",
    "clustering_scores",
    "coverage_ratio",
    "derive_all",
    "derive_clustering",
    "derive_evidence",
    "derive_incontext_fusion",
    "derive_planning",
    "derive_salience",
    "derive_sentence_fusion",
    "dump_topics",
    "evaluate_task",
    "inter_annotator_iou",
    "iou",
    "kendall_tau",
    "load_topics",
    "mean_pairwise_agreement",
    "pairwise_iou",
    "parse_topic_record",
    "plan_grouping_scores",
    "rouge_f1",
    "scan_topics",
    "spans_to_labeling",
    "substream",
    "token_f1",
    "tokenize",
    "__version__",
]
