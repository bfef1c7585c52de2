"""Deriving the six task datasets from clustered topics.

Each derivation is a pure function of (clustered topic, seed). Datasets are
written as line-delimited JSON, one record per instance, with a common
envelope: topic_id, task, schema_version, seed. Item and unit order in the
clustering and planning tasks is shuffled with a seeded generator so the
serialized order leaks nothing about the gold answer; all other tasks are
seed-independent.

Tasks:
    salience          find every aligned span in the documents
    clustering        group aligned spans that state the same proposition
    evidence          find all document mentions of one summary proposition
    planning          order and group propositions into a sentence plan
    sentence_fusion   write one sentence merging a sentence's propositions
    incontext_fusion  write the full passage from highlighted documents
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .analytics import corpus_stats, stats_report
from .clusters import ClusteredTopic
from .corpus import Document
from .errors import ParseError, UsageError
from .seeding import substream
from .textops import merge_fragments, render_span

SCHEMA_VERSION = 1

TASK_SALIENCE = "salience"
TASK_CLUSTERING = "clustering"
TASK_EVIDENCE = "evidence"
TASK_PLANNING = "planning"
TASK_SENTENCE_FUSION = "sentence_fusion"
TASK_INCONTEXT_FUSION = "incontext_fusion"

TASK_NAMES = (
    TASK_SALIENCE,
    TASK_CLUSTERING,
    TASK_EVIDENCE,
    TASK_PLANNING,
    TASK_SENTENCE_FUSION,
    TASK_INCONTEXT_FUSION,
)


@dataclass(frozen=True)
class DocSpanRef:
    """A span inside one named document, as plain fragment pairs."""

    doc_id: str
    fragments: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SalienceInstance:
    topic_id: str
    documents: tuple[Document, ...]
    gold_spans: tuple[DocSpanRef, ...]

    @property
    def zero_alignment(self) -> bool:
        return not self.gold_spans


@dataclass(frozen=True)
class ClusterItem:
    item_id: str
    doc_id: str
    fragments: tuple[tuple[int, int], ...]
    text: str


@dataclass(frozen=True)
class ClusteringInstance:
    topic_id: str
    items: tuple[ClusterItem, ...]
    gold_assignment: dict[str, str] = field(compare=False)


@dataclass(frozen=True)
class EvidenceInstance:
    topic_id: str
    cluster_id: str
    query: str
    documents: tuple[Document, ...]
    gold_spans: tuple[DocSpanRef, ...]


@dataclass(frozen=True)
class PlanUnit:
    index: int
    text: str


@dataclass(frozen=True)
class PlanningInstance:
    topic_id: str
    units: tuple[PlanUnit, ...]
    gold_plan: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class SentenceFusionInstance:
    topic_id: str
    sentence_index: int
    input_clusters: tuple[tuple[str, ...], ...]
    gold_sentence: str


@dataclass(frozen=True)
class HighlightedDocument:
    doc_id: str
    text: str
    highlights: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class InContextFusionInstance:
    topic_id: str
    documents: tuple[HighlightedDocument, ...]
    gold_passage: str

    @property
    def zero_alignment(self) -> bool:
        return not any(d.highlights for d in self.documents)


def _render_member(ct: ClusteredTopic, member) -> str:
    doc_text = ct.topic.document(member.doc_id).text
    return render_span(doc_text, member.doc_span.fragments)


def derive_salience(ct: ClusteredTopic) -> SalienceInstance:
    """All aligned document spans of the topic, in alignment order."""
    gold = tuple(
        DocSpanRef(doc_id=a.doc_id, fragments=a.doc_span.fragments)
        for a in ct.alignment_set.alignments
    )
    return SalienceInstance(
        topic_id=ct.topic.topic_id, documents=ct.topic.documents, gold_spans=gold
    )


def derive_clustering(ct: ClusteredTopic, seed: int) -> ClusteringInstance:
    """All aligned spans as shuffled items, labeled with their cluster ids.

    Item identifiers are assigned after the shuffle, so neither item order nor
    identifier order reveals the gold grouping.
    """
    pairs = [(cluster, member) for cluster in ct.clusters for member in cluster.members]
    rng = substream(seed, "clustering", ct.topic.topic_id)
    rng.shuffle(pairs)
    items = []
    assignment: dict[str, str] = {}
    for k, (cluster, member) in enumerate(pairs):
        item_id = f"i{k:03d}"
        items.append(
            ClusterItem(
                item_id=item_id,
                doc_id=member.doc_id,
                fragments=member.doc_span.fragments,
                text=_render_member(ct, member),
            )
        )
        assignment[item_id] = cluster.cluster_id
    return ClusteringInstance(
        topic_id=ct.topic.topic_id, items=tuple(items), gold_assignment=assignment
    )


def derive_evidence(ct: ClusteredTopic) -> list[EvidenceInstance]:
    """One retrieval instance per cluster: query text plus member spans."""
    return [
        EvidenceInstance(
            topic_id=ct.topic.topic_id,
            cluster_id=cluster.cluster_id,
            query=ct.query_text(cluster),
            documents=ct.topic.documents,
            gold_spans=tuple(
                DocSpanRef(doc_id=m.doc_id, fragments=m.doc_span.fragments)
                for m in cluster.members
            ),
        )
        for cluster in ct.clusters
    ]


def derive_planning(ct: ClusteredTopic, seed: int) -> PlanningInstance:
    """Shuffled proposition units plus the gold ordering-and-grouping plan.

    Each unit is one rendered document span drawn uniformly from its cluster's
    members. The gold plan lists unit indices in cluster order, split at
    summary sentence boundaries.
    """
    rep_rng = substream(seed, "planning-representative", ct.topic.topic_id)
    representatives = [
        (cluster, _render_member(ct, rep_rng.choice(cluster.members)))
        for cluster in ct.clusters
    ]
    shuffled = list(representatives)
    substream(seed, "planning-shuffle", ct.topic.topic_id).shuffle(shuffled)
    unit_index = {cluster.cluster_id: k for k, (cluster, _) in enumerate(shuffled)}
    units = tuple(PlanUnit(index=k, text=text) for k, (_, text) in enumerate(shuffled))

    plan: list[tuple[int, ...]] = []
    group: list[int] = []
    current_sentence: Optional[int] = None
    for cluster in ct.clusters:
        if cluster.sentence_index != current_sentence:
            if group:
                plan.append(tuple(group))
            group = []
            current_sentence = cluster.sentence_index
        group.append(unit_index[cluster.cluster_id])
    if group:
        plan.append(tuple(group))
    return PlanningInstance(
        topic_id=ct.topic.topic_id, units=units, gold_plan=tuple(plan)
    )


def derive_sentence_fusion(ct: ClusteredTopic) -> list[SentenceFusionInstance]:
    """One instance per summary sentence with at least one cluster."""
    by_sentence: dict[int, list] = {}
    for cluster in ct.clusters:
        by_sentence.setdefault(cluster.sentence_index, []).append(cluster)
    instances = []
    for sentence_index in sorted(by_sentence):
        start, end = ct.topic.summary_sentences[sentence_index]
        instances.append(
            SentenceFusionInstance(
                topic_id=ct.topic.topic_id,
                sentence_index=sentence_index,
                input_clusters=tuple(
                    tuple(_render_member(ct, m) for m in cluster.members)
                    for cluster in by_sentence[sentence_index]
                ),
                gold_sentence=ct.topic.summary_text[start:end],
            )
        )
    return instances


def derive_incontext_fusion(ct: ClusteredTopic) -> InContextFusionInstance:
    """Documents with aligned spans merged into highlight intervals."""
    per_doc: dict[str, list[tuple[int, int]]] = {}
    for a in ct.alignment_set.alignments:
        per_doc.setdefault(a.doc_id, []).extend(a.doc_span.fragments)
    docs = tuple(
        HighlightedDocument(
            doc_id=d.doc_id,
            text=d.text,
            highlights=merge_fragments(per_doc[d.doc_id]) if d.doc_id in per_doc else (),
        )
        for d in ct.topic.documents
    )
    return InContextFusionInstance(
        topic_id=ct.topic.topic_id, documents=docs, gold_passage=ct.topic.summary_text
    )


def _envelope(task: str, topic_id: str, seed: int) -> dict:
    return {
        "topic_id": topic_id,
        "task": task,
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
    }


def _span_refs(spans: Iterable[DocSpanRef]) -> list[dict]:
    return [
        {"doc_id": s.doc_id, "fragments": [list(f) for f in s.fragments]} for s in spans
    ]


def instance_record(instance, seed: int) -> dict:
    """Serialize one derived instance into its JSONL record."""
    if isinstance(instance, SalienceInstance):
        record = _envelope(TASK_SALIENCE, instance.topic_id, seed)
        record["documents"] = [{"doc_id": d.doc_id, "text": d.text} for d in instance.documents]
        record["gold_spans"] = _span_refs(instance.gold_spans)
        record["zero_alignment"] = instance.zero_alignment
        return record
    if isinstance(instance, ClusteringInstance):
        record = _envelope(TASK_CLUSTERING, instance.topic_id, seed)
        record["items"] = [
            {
                "item_id": i.item_id,
                "doc_id": i.doc_id,
                "fragments": [list(f) for f in i.fragments],
                "text": i.text,
            }
            for i in instance.items
        ]
        record["gold_assignment"] = dict(instance.gold_assignment)
        return record
    if isinstance(instance, EvidenceInstance):
        record = _envelope(TASK_EVIDENCE, instance.topic_id, seed)
        record["cluster_id"] = instance.cluster_id
        record["query"] = instance.query
        record["documents"] = [{"doc_id": d.doc_id, "text": d.text} for d in instance.documents]
        record["gold_spans"] = _span_refs(instance.gold_spans)
        return record
    if isinstance(instance, PlanningInstance):
        record = _envelope(TASK_PLANNING, instance.topic_id, seed)
        record["units"] = [{"index": u.index, "text": u.text} for u in instance.units]
        record["gold_plan"] = [list(group) for group in instance.gold_plan]
        return record
    if isinstance(instance, SentenceFusionInstance):
        record = _envelope(TASK_SENTENCE_FUSION, instance.topic_id, seed)
        record["sentence_index"] = instance.sentence_index
        record["input_clusters"] = [list(group) for group in instance.input_clusters]
        record["gold_sentence"] = instance.gold_sentence
        return record
    if isinstance(instance, InContextFusionInstance):
        record = _envelope(TASK_INCONTEXT_FUSION, instance.topic_id, seed)
        record["documents"] = [
            {
                "doc_id": d.doc_id,
                "text": d.text,
                "highlights": [list(f) for f in d.highlights],
            }
            for d in instance.documents
        ]
        record["gold_passage"] = instance.gold_passage
        record["zero_alignment"] = instance.zero_alignment
        return record
    raise UsageError(f"unknown instance type {type(instance).__name__}")


def _pairs(raw, where: str) -> tuple[tuple[int, int], ...]:
    if not isinstance(raw, list):
        raise ParseError(f"{where}: expected a list of [start, end] pairs")
    out = []
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ParseError(f"{where}: fragment {item!r} is not an [int, int] pair")
        out.append((int(item[0]), int(item[1])))
    return tuple(out)


def parse_instance(record: dict):
    """Reconstruct a derived instance from its JSONL record."""
    if not isinstance(record, dict):
        raise ParseError("task record must be a JSON object")
    task = record.get("task")
    if task not in TASK_NAMES:
        raise ParseError(f"unknown task {task!r}")
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported schema_version {record.get('schema_version')!r} "
            f"(expected {SCHEMA_VERSION})"
        )
    topic_id = record.get("topic_id")
    if not isinstance(topic_id, str):
        raise ParseError("task record missing topic_id")
    where = f"{task} record for topic {topic_id!r}"

    if task == TASK_SALIENCE:
        return SalienceInstance(
            topic_id=topic_id,
            documents=tuple(
                Document(d["doc_id"], d["text"]) for d in record.get("documents", [])
            ),
            gold_spans=tuple(
                DocSpanRef(s["doc_id"], _pairs(s["fragments"], where))
                for s in record.get("gold_spans", [])
            ),
        )
    if task == TASK_CLUSTERING:
        return ClusteringInstance(
            topic_id=topic_id,
            items=tuple(
                ClusterItem(
                    item_id=i["item_id"],
                    doc_id=i["doc_id"],
                    fragments=_pairs(i["fragments"], where),
                    text=i["text"],
                )
                for i in record.get("items", [])
            ),
            gold_assignment=dict(record.get("gold_assignment", {})),
        )
    if task == TASK_EVIDENCE:
        return EvidenceInstance(
            topic_id=topic_id,
            cluster_id=record["cluster_id"],
            query=record["query"],
            documents=tuple(
                Document(d["doc_id"], d["text"]) for d in record.get("documents", [])
            ),
            gold_spans=tuple(
                DocSpanRef(s["doc_id"], _pairs(s["fragments"], where))
                for s in record.get("gold_spans", [])
            ),
        )
    if task == TASK_PLANNING:
        return PlanningInstance(
            topic_id=topic_id,
            units=tuple(PlanUnit(u["index"], u["text"]) for u in record.get("units", [])),
            gold_plan=tuple(tuple(g) for g in record.get("gold_plan", [])),
        )
    if task == TASK_SENTENCE_FUSION:
        return SentenceFusionInstance(
            topic_id=topic_id,
            sentence_index=record["sentence_index"],
            input_clusters=tuple(tuple(g) for g in record.get("input_clusters", [])),
            gold_sentence=record["gold_sentence"],
        )
    return InContextFusionInstance(
        topic_id=topic_id,
        documents=tuple(
            HighlightedDocument(
                doc_id=d["doc_id"],
                text=d["text"],
                highlights=_pairs(d.get("highlights", []), where),
            )
            for d in record.get("documents", [])
        ),
        gold_passage=record["gold_passage"],
    )


def write_records(records: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_records(path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}: line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"{path}: line {line_no}: record must be a JSON object")
            records.append(obj)
    return records


def dataset_filename(task: str, split: str) -> str:
    if task not in TASK_NAMES:
        raise UsageError(f"unknown task {task!r}")
    return f"{task}.{split}.jsonl"


def derive_all(
    corpus: Sequence[ClusteredTopic],
    seed: int,
    tasks: Sequence[str] = TASK_NAMES,
) -> tuple[dict[str, list], dict]:
    """Derive instances for the requested tasks plus a derivation report."""
    unknown = [t for t in tasks if t not in TASK_NAMES]
    if unknown:
        raise UsageError(f"unknown tasks: {', '.join(unknown)}")
    datasets: dict[str, list] = {t: [] for t in tasks}
    skipped_sentences: list[dict] = []
    zero_alignment_topics: list[str] = []
    for ct in corpus:
        if not ct.alignment_set.alignments:
            zero_alignment_topics.append(ct.topic.topic_id)
        clustered = {c.sentence_index for c in ct.clusters}
        for sentence_index in range(len(ct.topic.summary_sentences)):
            if sentence_index not in clustered:
                skipped_sentences.append(
                    {"topic_id": ct.topic.topic_id, "sentence_index": sentence_index}
                )
        if TASK_SALIENCE in datasets:
            datasets[TASK_SALIENCE].append(derive_salience(ct))
        if TASK_CLUSTERING in datasets:
            datasets[TASK_CLUSTERING].append(derive_clustering(ct, seed))
        if TASK_EVIDENCE in datasets:
            datasets[TASK_EVIDENCE].extend(derive_evidence(ct))
        if TASK_PLANNING in datasets:
            datasets[TASK_PLANNING].append(derive_planning(ct, seed))
        if TASK_SENTENCE_FUSION in datasets:
            datasets[TASK_SENTENCE_FUSION].extend(derive_sentence_fusion(ct))
        if TASK_INCONTEXT_FUSION in datasets:
            datasets[TASK_INCONTEXT_FUSION].append(derive_incontext_fusion(ct))

    def mean(values: list[float]) -> float:
        return sum(values) / len(values) if values else 0.0

    means = {}
    if TASK_SALIENCE in datasets:
        means["salience_gold_spans"] = mean([len(i.gold_spans) for i in datasets[TASK_SALIENCE]])
    if TASK_CLUSTERING in datasets:
        means["clustering_items"] = mean([len(i.items) for i in datasets[TASK_CLUSTERING]])
        means["clustering_clusters"] = mean(
            [len(set(i.gold_assignment.values())) for i in datasets[TASK_CLUSTERING]]
        )
    if TASK_EVIDENCE in datasets:
        means["evidence_gold_spans"] = mean([len(i.gold_spans) for i in datasets[TASK_EVIDENCE]])
    if TASK_PLANNING in datasets:
        means["planning_units"] = mean([len(i.units) for i in datasets[TASK_PLANNING]])
        means["planning_groups"] = mean([len(i.gold_plan) for i in datasets[TASK_PLANNING]])
    if TASK_SENTENCE_FUSION in datasets:
        means["sentence_fusion_inputs"] = mean(
            [sum(len(g) for g in i.input_clusters) for i in datasets[TASK_SENTENCE_FUSION]]
        )
    if TASK_INCONTEXT_FUSION in datasets:
        means["incontext_highlights"] = mean(
            [sum(len(d.highlights) for d in i.documents) for i in datasets[TASK_INCONTEXT_FUSION]]
        )

    report = {
        "seed": seed,
        "iou_threshold": corpus[0].iou_threshold if corpus else None,
        "tasks": list(tasks),
        "instances": {t: len(datasets[t]) for t in tasks},
        "zero_alignment_topics": zero_alignment_topics,
        "skipped_sentences": skipped_sentences,
        "means": means,
        "stats": stats_report(corpus_stats(corpus)),
    }
    return datasets, report


def write_datasets(
    datasets: dict[str, list], report: dict, out_dir, split: str, seed: int
) -> list[str]:
    """Write one JSONL file per task plus derivation_report.json; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for task, instances in datasets.items():
        path = os.path.join(out_dir, dataset_filename(task, split))
        write_records((instance_record(i, seed) for i in instances), path)
        written.append(path)
    report_path = os.path.join(out_dir, "derivation_report.json")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    written.append(report_path)
    return written
