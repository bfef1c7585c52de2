"""Grouping alignments into proposition clusters.

Two alignments belong to the same cluster when their summary spans share
enough content tokens: single-link connected components over pairwise token
IoU at or above the threshold (the boundary is inclusive). Components are
built per summary sentence, so clusters never straddle sentences. A cluster's
evidence query is the union of its members' summary fragments, merged into
maximal disjoint intervals.
"""
from __future__ import annotations

from dataclasses import dataclass

from .corpus import Alignment, AlignmentSet
from .errors import UsageError
from .textops import SpanFragments, iou, merge_fragments, render_span, token_indices

DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class PropositionCluster:
    """One proposition: alignments whose summary spans describe the same fact."""

    cluster_id: str
    topic_id: str
    sentence_index: int
    members: tuple[Alignment, ...]
    query: SpanFragments

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusteredTopic:
    alignment_set: AlignmentSet
    clusters: tuple[PropositionCluster, ...]
    iou_threshold: float

    @property
    def topic(self):
        return self.alignment_set.topic

    def query_text(self, cluster: PropositionCluster) -> str:
        return render_span(self.topic.summary_text, cluster.query.fragments)


def summary_token_set(aset: AlignmentSet, alignment: Alignment):
    """Content-token indices of an alignment's summary span."""
    return token_indices(alignment.summary_span, aset.topic.summary_tokens(), content_only=True)


def pairwise_iou(aset: AlignmentSet) -> dict[tuple[int, int], float]:
    """Token IoU for every same-sentence alignment pair, keyed by index (i < j)."""
    sets = [summary_token_set(aset, a) for a in aset.alignments]
    table: dict[tuple[int, int], float] = {}
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if aset.alignments[i].sentence_index != aset.alignments[j].sentence_index:
                continue
            table[(i, j)] = iou(sets[i], sets[j])
    return table


def aggregate_query(aset: AlignmentSet, members: tuple[Alignment, ...]) -> SpanFragments:
    """Union of member summary fragments, merged into maximal intervals."""
    pairs: list[tuple[int, int]] = []
    for a in members:
        pairs.extend(a.summary_span.fragments)
    return SpanFragments(
        fragments=merge_fragments(pairs),
        owner=aset.topic.summary_owner,
    )


def build_clusters(aset: AlignmentSet, iou_threshold: float = DEFAULT_IOU_THRESHOLD) -> ClusteredTopic:
    """Partition a topic's alignments into proposition clusters.

    Deterministic: clusters are ordered by (sentence index, query start,
    query fragments) and member order follows the original alignment order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise UsageError(f"iou_threshold must be in [0, 1], got {iou_threshold}")

    by_sentence: dict[int, list[int]] = {}
    for idx, a in enumerate(aset.alignments):
        by_sentence.setdefault(a.sentence_index, []).append(idx)

    token_sets = [summary_token_set(aset, a) for a in aset.alignments]
    raw_components: list[tuple[int, list[int]]] = []
    for sentence_index in sorted(by_sentence):
        indices = by_sentence[sentence_index]
        parent = {i: i for i in indices}

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for pos_a in range(len(indices)):
            for pos_b in range(pos_a + 1, len(indices)):
                i, j = indices[pos_a], indices[pos_b]
                if iou(token_sets[i], token_sets[j]) >= iou_threshold:
                    parent[find(i)] = find(j)

        groups: dict[int, list[int]] = {}
        for i in indices:
            groups.setdefault(find(i), []).append(i)
        for members in groups.values():
            raw_components.append((sentence_index, sorted(members)))

    keyed = []
    for sentence_index, member_indices in raw_components:
        members = tuple(aset.alignments[i] for i in member_indices)
        query = aggregate_query(aset, members)
        keyed.append(((sentence_index, query.start, query.fragments), members, query))
    keyed.sort(key=lambda item: item[0])

    clusters = tuple(
        PropositionCluster(
            cluster_id=f"{aset.topic.topic_id}.c{ordinal:03d}",
            topic_id=aset.topic.topic_id,
            sentence_index=key[0],
            members=members,
            query=query,
        )
        for ordinal, (key, members, query) in enumerate(keyed)
    )
    return ClusteredTopic(alignment_set=aset, clusters=clusters, iou_threshold=iou_threshold)
