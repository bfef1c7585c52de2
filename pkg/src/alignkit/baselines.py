"""Deterministic heuristic baselines and output-repair procedures.

The baselines exist to exercise the dataset schemas and the metric suite end
to end, not to compete with learned models. Candidate spans come from a
rule-based generator (sentences plus clause splits); span pairing uses a
lexical similarity surrogate (harmonic mean of directional content-unigram
coverage). All randomness flows through named substreams of the run seed, so
outputs are byte-stable regardless of evaluation order.

The repair procedures normalize malformed structured predictions (plans that
drop, repeat, or invent unit indices; cluster assignments that skip items)
into schema-valid ones, so that downstream metrics never reject an output.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import Document
from .errors import UsageError
from .seeding import substream
from .sentences import split_sentences
from .tasks import (
    ClusteringInstance,
    EvidenceInstance,
    InContextFusionInstance,
    PlanningInstance,
    SalienceInstance,
    SentenceFusionInstance,
    read_records,
)
from .textops import (
    cached_tokenize,
    is_content_word,
    is_punctuation,
    ngram_coverage,
    ngrams,
    render_span,
    stopwords,
    tokenize,
)

logger = logging.getLogger(__name__)

# clause boundaries open before these words (coordinators and common subordinators)
CONNECTIVES = frozenset(
    {"and", "but", "or", "nor", "so", "yet", "because", "while", "although", "whereas"}
)
MIN_CLAUSE_CONTENT_TOKENS = 4

DEFAULT_SALIENCE_K = 1
DEFAULT_STOP_THRESHOLD = 0.5
DEFAULT_EVIDENCE_THRESHOLD = 0.5


@dataclass(frozen=True)
class CandidateSpan:
    """A document span the baselines may select as a proposition."""

    doc_id: str
    fragments: tuple[tuple[int, int], ...]
    text: str


def generate_candidates(doc_id: str, text: str) -> list[CandidateSpan]:
    """Sentences plus clause splits of one document, deduplicated, in order.

    Every sentence is a candidate. Within a sentence, clause boundaries open
    after commas and semicolons and before connective words; a clause becomes
    a candidate when it has at least four content tokens after trimming edge
    punctuation.
    """
    tokens = cached_tokenize(text).tokens
    stopword_set = stopwords()
    candidates: list[CandidateSpan] = []
    seen: set[tuple[int, int]] = set()

    def emit(start: int, end: int) -> None:
        if (start, end) not in seen:
            seen.add((start, end))
            candidates.append(
                CandidateSpan(
                    doc_id=doc_id,
                    fragments=((start, end),),
                    text=render_span(text, ((start, end),)),
                )
            )

    for s_start, s_end in split_sentences(text):
        emit(s_start, s_end)
        sentence_tokens = [t for t in tokens if t.start < s_end and s_start < t.end]
        runs: list[list] = [[]]
        for tok in sentence_tokens:
            if tok.surface.lower() in CONNECTIVES and runs[-1]:
                runs.append([])
            runs[-1].append(tok)
            if tok.surface in {",", ";"}:
                runs.append([])
        for run in runs:
            while run and is_punctuation(run[0].surface):
                run.pop(0)
            while run and is_punctuation(run[-1].surface):
                run.pop()
            if not run:
                continue
            content = sum(1 for t in run if is_content_word(t.surface, stopword_set))
            if content >= MIN_CLAUSE_CONTENT_TOKENS:
                emit(run[0].start, run[-1].end)
    return candidates


def _content_unigrams(text: str):
    stopword_set = stopwords()
    surfaces = [
        t.surface.lower()
        for t in tokenize(text).tokens
        if is_content_word(t.surface, stopword_set)
    ]
    return ngrams(surfaces, 1) if surfaces else None


def lexical_similarity(a: str, b: str) -> float:
    """Harmonic mean of directional content-unigram coverage, in [0, 1].

    Zero when either side has no content tokens.
    """
    grams_a = _content_unigrams(a)
    grams_b = _content_unigrams(b)
    if grams_a is None or grams_b is None:
        return 0.0
    cov_a = ngram_coverage(grams_a, grams_b) / 100.0
    cov_b = ngram_coverage(grams_b, grams_a) / 100.0
    if cov_a + cov_b == 0.0:
        return 0.0
    return 2.0 * cov_a * cov_b / (cov_a + cov_b)


def _instance_candidates(
    documents: Sequence[Document],
    external: Optional[Sequence[CandidateSpan]] = None,
) -> list[CandidateSpan]:
    if external is not None:
        return list(external)
    out: list[CandidateSpan] = []
    for doc in documents:
        out.extend(generate_candidates(doc.doc_id, doc.text))
    return out


def baseline_salience(
    instance: SalienceInstance,
    k_per_doc: int = DEFAULT_SALIENCE_K,
    candidates: Optional[Sequence[CandidateSpan]] = None,
) -> list[CandidateSpan]:
    """Lead heuristic: the first k candidate spans of each document."""
    if k_per_doc < 1:
        raise UsageError(f"k_per_doc must be positive, got {k_per_doc}")
    pool = _instance_candidates(instance.documents, candidates)
    picked: list[CandidateSpan] = []
    for doc in instance.documents:
        doc_pool = [c for c in pool if c.doc_id == doc.doc_id]
        picked.extend(doc_pool[:k_per_doc])
    return picked


def baseline_clustering(
    instance: ClusteringInstance, stop_threshold: float = DEFAULT_STOP_THRESHOLD
) -> dict[str, str]:
    """Average-linkage agglomerative grouping over lexical similarity.

    Merging stops when the best pairwise cluster similarity falls below the
    stop threshold. Ties prefer the pair with the lowest item indices, so the
    merge sequence is deterministic.
    """
    items = instance.items
    if not items:
        return {}
    sim = [[0.0] * len(items) for _ in items]
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            sim[i][j] = sim[j][i] = lexical_similarity(items[i].text, items[j].text)

    clusters: list[list[int]] = [[i] for i in range(len(items))]
    while len(clusters) > 1:
        best: Optional[tuple[float, tuple[int, int], int, int]] = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                linkage = sum(
                    sim[i][j] for i in clusters[a] for j in clusters[b]
                ) / (len(clusters[a]) * len(clusters[b]))
                key = (clusters[a][0], clusters[b][0])
                if best is None or linkage > best[0] or (linkage == best[0] and key < best[1]):
                    best = (linkage, key, a, b)
        if best is None or best[0] < stop_threshold:
            break
        _, _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]

    clusters.sort(key=lambda members: members[0])
    assignment: dict[str, str] = {}
    for label, members in enumerate(clusters):
        for i in members:
            assignment[items[i].item_id] = f"p{label}"
    return assignment


def baseline_evidence(
    instance: EvidenceInstance,
    threshold: float = DEFAULT_EVIDENCE_THRESHOLD,
    candidates: Optional[Sequence[CandidateSpan]] = None,
) -> list[CandidateSpan]:
    """Candidates whose similarity to the query is strictly above the threshold."""
    pool = _instance_candidates(instance.documents, candidates)
    return [c for c in pool if lexical_similarity(instance.query, c.text) > threshold]


def default_group_size(instances: Sequence[PlanningInstance]) -> int:
    """Average gold units-per-group across instances, rounded, at least 1."""
    ratios = [
        len(inst.units) / len(inst.gold_plan)
        for inst in instances
        if inst.gold_plan
    ]
    if not ratios:
        return 1
    return max(1, round(sum(ratios) / len(ratios)))


def baseline_planning(instance: PlanningInstance, group_size: int) -> list[list[int]]:
    """Units in index order, chunked into consecutive groups of group_size."""
    if group_size < 1:
        raise UsageError(f"group_size must be positive, got {group_size}")
    indices = [u.index for u in instance.units]
    return [indices[i : i + group_size] for i in range(0, len(indices), group_size)]


def _close_sentence(text: str) -> str:
    if text and text[-1] not in ".!?":
        return text + "."
    return text


def baseline_fusion(instance) -> str:
    """Extractive fusion surrogate.

    Sentence fusion takes the longest rendered span of each input cluster and
    joins them with "; ". In-context fusion walks the documents in order and
    emits one sentence per source sentence containing highlights, built from
    the highlighted fragments clipped to that sentence. Terminal punctuation
    is added only when missing.
    """
    if isinstance(instance, SentenceFusionInstance):
        parts = [
            max(group, key=len) for group in instance.input_clusters if group
        ]
        return _close_sentence("; ".join(parts))
    if isinstance(instance, InContextFusionInstance):
        sentences: list[str] = []
        for doc in instance.documents:
            if not doc.highlights:
                continue
            for s_start, s_end in split_sentences(doc.text):
                clipped = [
                    (max(fs, s_start), min(fe, s_end))
                    for fs, fe in doc.highlights
                    if fs < s_end and s_start < fe
                ]
                if clipped:
                    sentences.append(_close_sentence(render_span(doc.text, clipped)))
        return " ".join(sentences)
    raise UsageError(f"unsupported fusion instance type {type(instance).__name__}")


def repair_plan(
    raw_plan: Sequence[Sequence[int]],
    valid: Iterable[int],
    seed: int,
    instance_id: str = "",
) -> list[list[int]]:
    """Normalize a raw plan into a valid one over exactly the given indices.

    Out-of-universe indices are dropped, repeats keep their first occurrence,
    emptied groups disappear, and missing indices are appended as one final
    group in seeded random order. Valid plans pass through unchanged, so the
    procedure is idempotent.
    """
    universe = set(valid)
    seen: set[int] = set()
    repaired: list[list[int]] = []
    for group in raw_plan:
        kept = []
        for unit in group:
            if unit in universe and unit not in seen:
                seen.add(unit)
                kept.append(unit)
        if kept:
            repaired.append(kept)
    missing = sorted(universe - seen)
    if missing:
        substream(seed, "repair-plan", instance_id).shuffle(missing)
        repaired.append(missing)
    return repaired


def repair_cluster_assignment(
    raw: Mapping[str, str],
    items: Iterable[str],
    seed: int,
    instance_id: str = "",
) -> dict[str, str]:
    """Extend a partial cluster assignment to cover every item.

    Unassigned items draw a seeded-random label from the labels already in
    use; no new label is ever invented. An empty raw assignment collapses all
    items into one fallback cluster and logs a warning.
    """
    item_set = set(items)
    assignment = {k: v for k, v in raw.items() if k in item_set}
    if not assignment:
        logger.warning(
            "empty raw assignment for %s: collapsing %d items into one cluster",
            instance_id or "instance", len(item_set),
        )
        return {item: "c0" for item in item_set}
    labels = sorted(set(assignment.values()))
    rng = substream(seed, "repair-assignment", instance_id)
    for item in sorted(item_set - set(assignment)):
        assignment[item] = rng.choice(labels)
    return assignment


def locate_span(predicted_text: str, candidates: Sequence[CandidateSpan]) -> CandidateSpan:
    """The candidate most lexically similar to a predicted text.

    Ties keep the earliest candidate, so texts sharing no content words with
    any candidate resolve to the first one.
    """
    if not candidates:
        raise UsageError("locate_span requires at least one candidate")
    best = candidates[0]
    best_score = lexical_similarity(predicted_text, best.text)
    for candidate in candidates[1:]:
        score = lexical_similarity(predicted_text, candidate.text)
        if score > best_score:
            best, best_score = candidate, score
    return best


@dataclass(frozen=True)
class BaselineConfig:
    salience_k_per_doc: int = DEFAULT_SALIENCE_K
    stop_threshold: float = DEFAULT_STOP_THRESHOLD
    evidence_threshold: float = DEFAULT_EVIDENCE_THRESHOLD
    group_size: Optional[int] = None


def _span_records(spans: Sequence[CandidateSpan]) -> list[dict]:
    return [
        {"doc_id": c.doc_id, "fragments": [list(f) for f in c.fragments]}
        for c in spans
    ]


def load_candidates(path) -> dict[str, list[CandidateSpan]]:
    """External candidates: JSONL of {"topic_id", "candidates": [...]}.

    Each candidate needs doc_id, fragments, and text; these replace the
    rule-based generator for the listed topics.
    """
    by_topic: dict[str, list[CandidateSpan]] = {}
    for record in read_records(path):
        topic_id = record.get("topic_id")
        if not isinstance(topic_id, str):
            raise UsageError(f"candidate record missing topic_id: {record!r}")
        spans = []
        for c in record.get("candidates", []):
            spans.append(
                CandidateSpan(
                    doc_id=c["doc_id"],
                    fragments=tuple((int(a), int(b)) for a, b in c["fragments"]),
                    text=c["text"],
                )
            )
        by_topic[topic_id] = spans
    return by_topic


def run_baselines(
    datasets: Mapping[str, Sequence],
    config: BaselineConfig = BaselineConfig(),
    candidates_by_topic: Optional[Mapping[str, Sequence[CandidateSpan]]] = None,
) -> dict[str, list[dict]]:
    """Produce prediction records for every derived instance, per task."""
    external = candidates_by_topic or {}
    predictions: dict[str, list[dict]] = {}
    for task, instances in datasets.items():
        records: list[dict] = []
        if task == "salience":
            for inst in instances:
                spans = baseline_salience(
                    inst, config.salience_k_per_doc, external.get(inst.topic_id)
                )
                records.append(
                    {"topic_id": inst.topic_id, "predicted_spans": _span_records(spans)}
                )
        elif task == "clustering":
            for inst in instances:
                records.append(
                    {
                        "topic_id": inst.topic_id,
                        "predicted_assignment": baseline_clustering(
                            inst, config.stop_threshold
                        ),
                    }
                )
        elif task == "evidence":
            for inst in instances:
                spans = baseline_evidence(
                    inst, config.evidence_threshold, external.get(inst.topic_id)
                )
                records.append(
                    {
                        "topic_id": inst.topic_id,
                        "cluster_id": inst.cluster_id,
                        "predicted_spans": _span_records(spans),
                    }
                )
        elif task == "planning":
            group_size = config.group_size or default_group_size(list(instances))
            for inst in instances:
                records.append(
                    {
                        "topic_id": inst.topic_id,
                        "predicted_plan": baseline_planning(inst, group_size),
                    }
                )
        elif task == "sentence_fusion":
            for inst in instances:
                records.append(
                    {
                        "topic_id": inst.topic_id,
                        "sentence_index": inst.sentence_index,
                        "predicted_sentence": baseline_fusion(inst),
                    }
                )
        elif task == "incontext_fusion":
            for inst in instances:
                records.append(
                    {"topic_id": inst.topic_id, "predicted_passage": baseline_fusion(inst)}
                )
        else:
            raise UsageError(f"unknown task {task!r}")
        predictions[task] = records
    return predictions
