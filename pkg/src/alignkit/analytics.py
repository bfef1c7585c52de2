"""Corpus-level descriptive statistics over clustered alignment corpora.

Three report families:

* corpus_stats: counts and averages (topics, alignments, clusters, sentence
  and document ratios, summary coverage).
* abstractiveness: n-gram overlap between summary-side and document-side
  spans, at four granularities (per member pair, cluster max, pooled cluster,
  and within-cluster redundancy). Overlap uses lowercased all-token n-grams;
  stopwords are kept.
* document_spread: how many of a topic's documents actually contribute
  aligned content, per topic and per cluster.

All functions are pure folds over immutable inputs, so results are invariant
under topic reordering and safe to compute in parallel per topic.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from math import fsum
from typing import Optional, Sequence

from .clusters import ClusteredTopic, PropositionCluster
from .corpus import coverage_ratio
from .errors import UsageError
from .textops import SpanFragments, TokenizedText, ngram_coverage, ngrams, token_indices

ABSTRACTIVENESS_MEASURES = ("AlignmentPair", "ClusterMax", "FullCluster", "InCluster")


@dataclass(frozen=True)
class CorpusStats:
    topics: int
    documents: int
    alignments: int
    clusters: int
    singleton_clusters: int
    summary_sentences: int
    clustered_sentences: int
    avg_cluster_size: float
    avg_clusters_per_sentence: float
    avg_clusters_per_topic: float
    avg_alignments_per_topic: float
    avg_documents_per_topic: float
    mean_summary_coverage: float
    empty: bool


@dataclass(frozen=True)
class AbstractivenessSlice:
    """The four overlap measures for one n-gram order."""

    n: int
    alignment_pair: float
    cluster_max: float
    full_cluster: float
    in_cluster: float
    scored_clusters: int
    skipped_empty_clusters: int
    multi_member_clusters: int


@dataclass(frozen=True)
class AbstractivenessRow:
    measure: str
    unigram: float
    bigram: float
    trigram: float


@dataclass(frozen=True)
class DocumentSpread:
    docs_with_alignment_ratio: float
    docs_per_cluster_ratio: float


def _mean(values: Sequence[float]) -> float:
    # fsum keeps the mean invariant under input reordering
    return fsum(values) / len(values) if values else 0.0


def corpus_stats(corpus: Sequence[ClusteredTopic]) -> CorpusStats:
    """Counts and averages over one clustering per topic.

    Clusters-per-sentence averages over sentences that have at least one
    cluster. An empty corpus yields all-zero stats with the empty flag set.
    """
    if not corpus:
        return CorpusStats(
            topics=0, documents=0, alignments=0, clusters=0, singleton_clusters=0,
            summary_sentences=0, clustered_sentences=0, avg_cluster_size=0.0,
            avg_clusters_per_sentence=0.0, avg_clusters_per_topic=0.0,
            avg_alignments_per_topic=0.0, avg_documents_per_topic=0.0,
            mean_summary_coverage=0.0, empty=True,
        )
    topics = len(corpus)
    documents = sum(len(ct.topic.documents) for ct in corpus)
    alignments = sum(len(ct.alignment_set.alignments) for ct in corpus)
    clusters = sum(len(ct.clusters) for ct in corpus)
    singletons = sum(1 for ct in corpus for c in ct.clusters if c.size == 1)
    summary_sentences = sum(len(ct.topic.summary_sentences) for ct in corpus)
    clustered_sentences = sum(
        len({c.sentence_index for c in ct.clusters}) for ct in corpus
    )
    return CorpusStats(
        topics=topics,
        documents=documents,
        alignments=alignments,
        clusters=clusters,
        singleton_clusters=singletons,
        summary_sentences=summary_sentences,
        clustered_sentences=clustered_sentences,
        avg_cluster_size=alignments / clusters if clusters else 0.0,
        avg_clusters_per_sentence=clusters / clustered_sentences if clustered_sentences else 0.0,
        avg_clusters_per_topic=clusters / topics,
        avg_alignments_per_topic=alignments / topics,
        avg_documents_per_topic=documents / topics,
        mean_summary_coverage=_mean([coverage_ratio(ct.alignment_set) for ct in corpus]),
        empty=False,
    )


def span_surfaces(span: SpanFragments, text: TokenizedText) -> list[str]:
    """Surfaces of the tokens a span overlaps, in document order."""
    hits = token_indices(span, text)
    return [text.tokens[i].surface for i in sorted(hits.indices)]


@dataclass(frozen=True)
class ClusterGramScores:
    """Coverage of a cluster's summary-query n-grams by its document spans.

    All three values share the query grams as the target, so pooling can only
    help: full_cluster >= cluster_max >= every member score.
    """

    member_scores: tuple[float, ...]
    cluster_max: float
    full_cluster: float


def cluster_gram_scores(
    ct: ClusteredTopic, cluster: PropositionCluster, n: int
) -> Optional[ClusterGramScores]:
    """Per-cluster overlap scores for one n, or None when the query has no n-grams."""
    target = ngrams(span_surfaces(cluster.query, ct.topic.summary_tokens()), n)
    if not target:
        return None
    sources = [
        ngrams(span_surfaces(m.doc_span, ct.topic.doc_tokens(m.doc_id)), n)
        for m in cluster.members
    ]
    member_scores = tuple(ngram_coverage(target, src) for src in sources)
    pooled = sum(sources, Counter())
    return ClusterGramScores(
        member_scores=member_scores,
        cluster_max=max(member_scores),
        full_cluster=ngram_coverage(target, pooled),
    )


def _in_cluster_score(ct: ClusteredTopic, cluster: PropositionCluster, n: int) -> float:
    grams = [
        ngrams(span_surfaces(m.doc_span, ct.topic.doc_tokens(m.doc_id)), n)
        for m in cluster.members
    ]
    pair_scores = []
    for i in range(len(grams)):
        for j in range(i + 1, len(grams)):
            forward = ngram_coverage(grams[i], grams[j])
            backward = ngram_coverage(grams[j], grams[i])
            pair_scores.append((forward + backward) / 2.0)
    return _mean(pair_scores)


def abstractiveness_scores(corpus: Sequence[ClusteredTopic], n: int) -> AbstractivenessSlice:
    """The four corpus-level overlap measures for a single n-gram order.

    Clusters whose query yields no n-grams are skipped (and counted); the
    within-cluster redundancy measure uses only clusters with two or more
    members.
    """
    if n < 1:
        raise UsageError(f"n-gram order must be >= 1, got {n}")
    member_scores: list[float] = []
    max_scores: list[float] = []
    full_scores: list[float] = []
    in_scores: list[float] = []
    skipped = 0
    multi = 0
    for ct in corpus:
        for cluster in ct.clusters:
            scores = cluster_gram_scores(ct, cluster, n)
            if scores is None:
                skipped += 1
            else:
                member_scores.extend(scores.member_scores)
                max_scores.append(scores.cluster_max)
                full_scores.append(scores.full_cluster)
            if cluster.size >= 2:
                multi += 1
                in_scores.append(_in_cluster_score(ct, cluster, n))
    return AbstractivenessSlice(
        n=n,
        alignment_pair=_mean(member_scores),
        cluster_max=_mean(max_scores),
        full_cluster=_mean(full_scores),
        in_cluster=_mean(in_scores),
        scored_clusters=len(max_scores),
        skipped_empty_clusters=skipped,
        multi_member_clusters=multi,
    )


def abstractiveness_table(
    corpus: Sequence[ClusteredTopic], orders: Sequence[int] = (1, 2, 3)
) -> list[AbstractivenessRow]:
    """One row per measure with unigram/bigram/trigram columns."""
    if tuple(orders) != (1, 2, 3):
        raise UsageError("the measure table is defined for n-gram orders (1, 2, 3)")
    slices = {n: abstractiveness_scores(corpus, n) for n in orders}
    rows = []
    for measure, field in zip(
        ABSTRACTIVENESS_MEASURES,
        ("alignment_pair", "cluster_max", "full_cluster", "in_cluster"),
    ):
        values = [getattr(slices[n], field) for n in orders]
        rows.append(AbstractivenessRow(measure, *values))
    return rows


def document_spread(corpus: Sequence[ClusteredTopic]) -> DocumentSpread:
    """How widely aligned content is distributed across each topic's documents.

    The first ratio averages, per topic, the fraction of documents with at
    least one aligned span. The second averages, per cluster, the fraction of
    the topic's documents its members draw on.
    """
    topic_ratios: list[float] = []
    cluster_ratios: list[float] = []
    for ct in corpus:
        doc_count = len(ct.topic.documents)
        aligned_docs = {a.doc_id for a in ct.alignment_set.alignments}
        topic_ratios.append(len(aligned_docs) / doc_count)
        for cluster in ct.clusters:
            member_docs = {m.doc_id for m in cluster.members}
            cluster_ratios.append(len(member_docs) / doc_count)
    return DocumentSpread(
        docs_with_alignment_ratio=_mean(topic_ratios),
        docs_per_cluster_ratio=_mean(cluster_ratios),
    )


def stats_report(stats: CorpusStats) -> dict:
    return asdict(stats)


def abstractiveness_report(
    rows: Sequence[AbstractivenessRow], slices: Sequence[AbstractivenessSlice] = ()
) -> dict:
    report = {"rows": [asdict(r) for r in rows]}
    if slices:
        report["orders"] = [asdict(s) for s in slices]
    return report


def spread_report(spread: DocumentSpread) -> dict:
    return asdict(spread)


def _aligned(rows: Sequence[tuple[str, ...]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])]
        cells += [r[i].rjust(widths[i]) for i in range(1, len(r))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def render_stats_text(stats: CorpusStats) -> str:
    rows = [
        ("topics", str(stats.topics)),
        ("documents", str(stats.documents)),
        ("alignments", str(stats.alignments)),
        ("clusters", str(stats.clusters)),
        ("singleton clusters", str(stats.singleton_clusters)),
        ("summary sentences", str(stats.summary_sentences)),
        ("clustered sentences", str(stats.clustered_sentences)),
        ("avg cluster size", f"{stats.avg_cluster_size:.2f}"),
        ("avg clusters / sentence", f"{stats.avg_clusters_per_sentence:.2f}"),
        ("avg clusters / topic", f"{stats.avg_clusters_per_topic:.2f}"),
        ("avg alignments / topic", f"{stats.avg_alignments_per_topic:.2f}"),
        ("avg documents / topic", f"{stats.avg_documents_per_topic:.2f}"),
        ("mean summary coverage", f"{stats.mean_summary_coverage:.3f}"),
    ]
    if stats.empty:
        rows.append(("empty corpus", "yes"))
    return _aligned(rows)


def render_abstractiveness_text(rows: Sequence[AbstractivenessRow]) -> str:
    table = [("measure", "1-gram", "2-gram", "3-gram")]
    for r in rows:
        table.append((r.measure, f"{r.unigram:.2f}", f"{r.bigram:.2f}", f"{r.trigram:.2f}"))
    return _aligned(table)


def render_spread_text(spread: DocumentSpread) -> str:
    return _aligned(
        [
            ("docs with aligned content / topic", f"{spread.docs_with_alignment_ratio:.3f}"),
            ("docs drawn on / cluster", f"{spread.docs_per_cluster_ratio:.3f}"),
        ]
    )
