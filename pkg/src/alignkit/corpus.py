"""Topic and alignment ingestion, validation, and serialization.

Topic files are line-delimited JSON, one topic per line:

    {"topic_id": str,
     "documents": [{"doc_id": str, "text": str}, ...],
     "summary": {"text": str, "sentences": [[int, int], ...]?},
     "alignments": [{"summary_fragments": [[int, int], ...],
                     "doc_id": str,
                     "doc_fragments": [[int, int], ...],
                     "annotator_id": str?}, ...]}

All offsets are half-open character offsets. When "sentences" is absent the
rule-based splitter supplies the boundaries. Multi-annotator records load as
one AlignmentSet per annotator, all sharing the same Topic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import ParseError, UsageError, ValidationError
from .sentences import split_sentences
from .textops import SpanFragments, TokenizedText, cached_tokenize, token_indices


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class Topic:
    """One document set with its reference summary and sentence boundaries."""

    topic_id: str
    documents: tuple[Document, ...]
    summary_text: str
    summary_sentences: tuple[tuple[int, int], ...]

    @property
    def summary_owner(self) -> str:
        return f"{self.topic_id}#summary"

    def doc_owner(self, doc_id: str) -> str:
        return f"{self.topic_id}#{doc_id}"

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise UsageError(f"topic {self.topic_id!r} has no document {doc_id!r}")

    def summary_tokens(self) -> TokenizedText:
        return cached_tokenize(self.summary_text, self.summary_owner)

    def doc_tokens(self, doc_id: str) -> TokenizedText:
        return cached_tokenize(self.document(doc_id).text, self.doc_owner(doc_id))

    def tokenized_documents(self) -> dict[str, TokenizedText]:
        return {doc.doc_id: self.doc_tokens(doc.doc_id) for doc in self.documents}

    def sentence_index_of(self, span: SpanFragments) -> int:
        """Index of the single summary sentence containing every fragment."""
        for idx, (s, e) in enumerate(self.summary_sentences):
            if all(s <= fs and fe <= e for fs, fe in span.fragments):
                return idx
        raise ValidationError(
            f"summary span {span.fragments} of topic {self.topic_id!r} "
            "does not lie within a single summary sentence"
        )


@dataclass(frozen=True)
class Alignment:
    """One summary-proposition / document-proposition span pair."""

    topic_id: str
    summary_span: SpanFragments
    doc_id: str
    doc_span: SpanFragments
    sentence_index: int
    annotator_id: Optional[str] = None


@dataclass(frozen=True)
class AlignmentSet:
    topic: Topic
    alignments: tuple[Alignment, ...]
    annotator_id: Optional[str] = None


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ParseError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _fragment_pairs(raw, where: str) -> list[tuple[int, int]]:
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{where}: expected a non-empty list of [start, end] pairs")
    pairs = []
    for item in raw:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or not all(isinstance(v, int) for v in item)
        ):
            raise ParseError(f"{where}: fragment {item!r} is not an [int, int] pair")
        pairs.append((item[0], item[1]))
    return pairs


def _validate_sentences(topic_id: str, text: str, sentences: Sequence[tuple[int, int]]) -> None:
    prev_end = 0
    for s, e in sentences:
        if not 0 <= s < e <= len(text):
            raise ValidationError(
                f"topic {topic_id!r}: sentence interval ({s}, {e}) out of bounds"
            )
        if s < prev_end:
            raise ValidationError(
                f"topic {topic_id!r}: sentence interval ({s}, {e}) overlaps or is unsorted"
            )
        prev_end = e
    covered = [False] * len(text)
    for s, e in sentences:
        for i in range(s, e):
            covered[i] = True
    for i, ch in enumerate(text):
        if not ch.isspace() and not covered[i]:
            raise ValidationError(
                f"topic {topic_id!r}: sentence intervals do not cover character {i} ({ch!r})"
            )


def parse_topic_record(obj: dict, line_no: Optional[int] = None) -> list[AlignmentSet]:
    """Validate one decoded topic record into AlignmentSets (one per annotator)."""
    where = f"line {line_no}" if line_no is not None else "record"
    topic_id = _require(obj, "topic_id", str, where)
    where = f"topic {topic_id!r} ({where})" if line_no is not None else f"topic {topic_id!r}"

    raw_docs = _require(obj, "documents", list, where)
    documents = []
    seen_ids = set()
    for d in raw_docs:
        if not isinstance(d, dict):
            raise ParseError(f"{where}: document entry must be an object")
        doc_id = _require(d, "doc_id", str, where)
        text = _require(d, "text", str, where)
        if doc_id in seen_ids:
            raise ValidationError(f"{where}: duplicate doc_id {doc_id!r}")
        seen_ids.add(doc_id)
        documents.append(Document(doc_id=doc_id, text=text))

    summary = _require(obj, "summary", dict, where)
    summary_text = _require(summary, "text", str, where)
    if summary.get("sentences") is not None:
        sentence_list = [
            (s, e) for s, e in _fragment_pairs(summary["sentences"], f"{where} summary sentences")
        ] if summary["sentences"] else []
        _validate_sentences(topic_id, summary_text, sentence_list)
        sentences = tuple(sentence_list)
    else:
        sentences = tuple(split_sentences(summary_text))

    topic = Topic(
        topic_id=topic_id,
        documents=tuple(documents),
        summary_text=summary_text,
        summary_sentences=sentences,
    )

    doc_lengths = {d.doc_id: len(d.text) for d in documents}
    grouped: dict[Optional[str], list[Alignment]] = {}
    for i, a in enumerate(obj.get("alignments", [])):
        ctx = f"{where} alignment {i}"
        if not isinstance(a, dict):
            raise ParseError(f"{ctx}: must be an object")
        doc_id = _require(a, "doc_id", str, ctx)
        if doc_id not in doc_lengths:
            raise ValidationError(f"{ctx}: unknown doc_id {doc_id!r}")
        summary_span = SpanFragments.from_pairs(
            _fragment_pairs(a.get("summary_fragments"), f"{ctx} summary_fragments"),
            owner=topic.summary_owner,
        )
        summary_span.validate_within(len(summary_text))
        doc_span = SpanFragments.from_pairs(
            _fragment_pairs(a.get("doc_fragments"), f"{ctx} doc_fragments"),
            owner=topic.doc_owner(doc_id),
        )
        doc_span.validate_within(doc_lengths[doc_id])
        annotator = a.get("annotator_id")
        if annotator is not None and not isinstance(annotator, str):
            raise ParseError(f"{ctx}: annotator_id must be a string")
        alignment = Alignment(
            topic_id=topic_id,
            summary_span=summary_span,
            doc_id=doc_id,
            doc_span=doc_span,
            sentence_index=topic.sentence_index_of(summary_span),
            annotator_id=annotator,
        )
        grouped.setdefault(annotator, []).append(alignment)

    if not grouped:
        return [AlignmentSet(topic=topic, alignments=(), annotator_id=None)]
    return [
        AlignmentSet(topic=topic, alignments=tuple(members), annotator_id=annotator)
        for annotator, members in grouped.items()
    ]


def load_topics(path) -> list[AlignmentSet]:
    """Strict loader: raises on the first malformed or invalid record."""
    sets: list[AlignmentSet] = []
    seen_topics: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ParseError(f"line {line_no}: topic record must be a JSON object")
            parsed = parse_topic_record(obj, line_no=line_no)
            topic_id = parsed[0].topic.topic_id
            if topic_id in seen_topics:
                raise ValidationError(f"line {line_no}: duplicate topic_id {topic_id!r}")
            seen_topics.add(topic_id)
            sets.extend(parsed)
    return sets


def scan_topics(path) -> tuple[list[AlignmentSet], list[dict]]:
    """Lenient loader for ingest reports: collects per-line diagnostics."""
    sets: list[AlignmentSet] = []
    diagnostics: list[dict] = []
    seen_topics: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ParseError(f"line {line_no}: topic record must be a JSON object")
                parsed = parse_topic_record(obj, line_no=line_no)
                topic_id = parsed[0].topic.topic_id
                if topic_id in seen_topics:
                    raise ValidationError(f"line {line_no}: duplicate topic_id {topic_id!r}")
                seen_topics.add(topic_id)
                sets.extend(parsed)
            except json.JSONDecodeError as exc:
                diagnostics.append({"line": line_no, "error": f"invalid JSON ({exc.msg})"})
            except (ParseError, ValidationError) as exc:
                diagnostics.append({"line": line_no, "error": str(exc)})
    return sets, diagnostics


def topic_record(sets: Sequence[AlignmentSet]) -> dict:
    """Canonical JSON object for one topic's AlignmentSets (stable field order)."""
    if not sets or any(s.topic.topic_id != sets[0].topic.topic_id for s in sets):
        raise UsageError("topic_record expects one or more sets sharing a topic")
    topic = sets[0].topic
    alignments = []
    for aset in sets:
        for a in aset.alignments:
            record = {
                "summary_fragments": [list(f) for f in a.summary_span.fragments],
                "doc_id": a.doc_id,
                "doc_fragments": [list(f) for f in a.doc_span.fragments],
            }
            if a.annotator_id is not None:
                record["annotator_id"] = a.annotator_id
            alignments.append(record)
    return {
        "topic_id": topic.topic_id,
        "documents": [{"doc_id": d.doc_id, "text": d.text} for d in topic.documents],
        "summary": {
            "text": topic.summary_text,
            "sentences": [list(s) for s in topic.summary_sentences],
        },
        "alignments": alignments,
    }


def dump_topics(sets: Iterable[AlignmentSet], path) -> None:
    """Serialize AlignmentSets back to canonical line-delimited JSON."""
    by_topic: dict[str, list[AlignmentSet]] = {}
    for aset in sets:
        by_topic.setdefault(aset.topic.topic_id, []).append(aset)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for group in by_topic.values():
            fh.write(json.dumps(topic_record(group), ensure_ascii=False) + "\n")


def coverage_ratio(aset: AlignmentSet) -> float:
    """Fraction of summary content tokens covered by at least one summary span.

    A summary with no content tokens counts as fully covered (1.0).
    """
    tokens = aset.topic.summary_tokens()
    all_content = token_indices(
        SpanFragments(fragments=((0, len(tokens.raw)),), owner=aset.topic.summary_owner),
        tokens,
        content_only=True,
    ).indices if tokens.raw else frozenset()
    if not all_content:
        return 1.0
    covered: set[int] = set()
    for a in aset.alignments:
        covered |= token_indices(a.summary_span, tokens, content_only=True).indices
    return len(covered & all_content) / len(all_content)


def _pooled_doc_indices(topic: Topic, alignments: Iterable[Alignment], sentence_index: int) -> frozenset:
    pooled: set[tuple[str, int]] = set()
    for a in alignments:
        if a.sentence_index != sentence_index:
            continue
        hits = token_indices(a.doc_span, topic.doc_tokens(a.doc_id), content_only=True)
        pooled |= {(a.doc_id, idx) for idx in hits.indices}
    return frozenset(pooled)


def inter_annotator_iou(
    topic: Topic,
    a: Sequence[Alignment],
    b: Sequence[Alignment],
    sentence_index: int,
) -> float:
    """Agreement between two annotators on one summary sentence.

    Pools each annotator's document content-token indices (disambiguated by
    doc_id) over alignments whose summary span lies in the given sentence,
    then returns the IoU of the two pooled sets.
    """
    if not 0 <= sentence_index < len(topic.summary_sentences):
        raise UsageError(
            f"sentence index {sentence_index} out of range for topic {topic.topic_id!r}"
        )
    pool_a = _pooled_doc_indices(topic, a, sentence_index)
    pool_b = _pooled_doc_indices(topic, b, sentence_index)
    if not pool_a and not pool_b:
        return 1.0
    return len(pool_a & pool_b) / len(pool_a | pool_b)


def mean_pairwise_agreement(sets: Sequence[AlignmentSet]) -> tuple[float, int]:
    """Mean inter-annotator IoU over all annotator pairs and summary sentences.

    Sentences where neither annotator of a pair aligned anything are skipped.
    Returns (mean, number of compared pairs); zero pairs yields (0.0, 0).
    """
    scores: list[float] = []
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if sets[i].topic.topic_id != sets[j].topic.topic_id:
                raise UsageError("agreement requires sets from the same topic")
            topic = sets[i].topic
            for sent in range(len(topic.summary_sentences)):
                pool_a = _pooled_doc_indices(topic, sets[i].alignments, sent)
                pool_b = _pooled_doc_indices(topic, sets[j].alignments, sent)
                if not pool_a and not pool_b:
                    continue
                scores.append(len(pool_a & pool_b) / len(pool_a | pool_b))
    if not scores:
        return 0.0, 0
    return sum(scores) / len(scores), len(scores)
