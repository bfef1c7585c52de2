"""Proposition clustering: IoU table, component building, query aggregation."""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alignkit.clusters import (
    aggregate_query,
    build_clusters,
    pairwise_iou,
    summary_token_set,
)
from alignkit.corpus import load_topics, parse_topic_record
from alignkit.errors import UsageError
from alignkit.textops import token_indices

from conftest import iou_topic_record, make_topic


def cluster_sizes(ct):
    return [c.size for c in ct.clusters]


class TestFixtureConformance:
    EXPECTED = {
        "storm": [2, 1],
        "election": [1, 1],
        "science": [1, 1],
        "sports": [3, 1],
        "markets": [2, 1],
    }

    def test_cluster_sizes(self, fixture_clustered):
        got = {ct.topic.topic_id: cluster_sizes(ct) for ct in fixture_clustered}
        assert got == self.EXPECTED

    def test_cluster_ids_sequential(self, fixture_clustered):
        for ct in fixture_clustered:
            ids = [c.cluster_id for c in ct.clusters]
            assert ids == [f"{ct.topic.topic_id}.c{k:03d}" for k in range(len(ids))]

    def test_clusters_partition_alignments(self, fixture_clustered):
        for ct in fixture_clustered:
            pooled = [a for c in ct.clusters for a in c.members]
            assert sorted(pooled, key=ct.alignment_set.alignments.index) == list(
                ct.alignment_set.alignments
            )
            assert len(pooled) == len(ct.alignment_set.alignments)

    def test_members_share_sentence(self, fixture_clustered):
        for ct in fixture_clustered:
            for c in ct.clusters:
                assert {a.sentence_index for a in c.members} == {c.sentence_index}

    def test_sentence_order(self, fixture_clustered):
        for ct in fixture_clustered:
            indices = [c.sentence_index for c in ct.clusters]
            assert indices == sorted(indices)


class TestIouTable:
    def test_ten_alignment_components(self, iou_topic_path):
        aset = load_topics(iou_topic_path)[0]
        ct = build_clusters(aset, iou_threshold=0.5)
        components = [
            frozenset(aset.alignments.index(a) for a in c.members) for c in ct.clusters
        ]
        assert set(components) == {
            frozenset({0, 1, 2}),
            frozenset({3, 4}),
            frozenset({5}),
            frozenset({6, 7}),
            frozenset({8}),
            frozenset({9}),
        }

    def test_pairwise_values(self, iou_topic_path):
        aset = load_topics(iou_topic_path)[0]
        table = pairwise_iou(aset)
        assert table[(0, 1)] == pytest.approx(1 / 3)
        assert table[(0, 2)] == pytest.approx(2 / 3)
        assert table[(3, 4)] == pytest.approx(0.5)
        # cross-sentence pairs are absent, same-sentence pairs all present
        assert (0, 8) not in table
        assert (8, 9) in table

    def test_transitive_linking(self, iou_topic_path):
        # a0-a1 scores 1/3 (below threshold) yet both join via a2
        aset = load_topics(iou_topic_path)[0]
        table = pairwise_iou(aset)
        assert table[(0, 1)] < 0.5 <= table[(0, 2)]
        ct = build_clusters(aset)
        sizes = {frozenset(aset.alignments.index(a) for a in c.members) for c in ct.clusters}
        assert frozenset({0, 1, 2}) in sizes

    def test_inclusive_boundary(self, iou_topic_path):
        # the (3, 4) pair sits exactly at 0.5 and must merge
        aset = load_topics(iou_topic_path)[0]
        assert pairwise_iou(aset)[(3, 4)] == 0.5
        ct = build_clusters(aset, iou_threshold=0.5)
        by_member = {}
        for c in ct.clusters:
            for a in c.members:
                by_member[aset.alignments.index(a)] = c.cluster_id
        assert by_member[3] == by_member[4]

    def test_above_boundary_splits(self, iou_topic_path):
        aset = load_topics(iou_topic_path)[0]
        ct = build_clusters(aset, iou_threshold=0.51)
        by_member = {}
        for c in ct.clusters:
            for a in c.members:
                by_member[aset.alignments.index(a)] = c.cluster_id
        assert by_member[3] != by_member[4]

    def test_threshold_zero_merges_sentence(self, iou_topic_path):
        # at 0 every same-sentence pair links, even with IoU 0.0
        aset = load_topics(iou_topic_path)[0]
        ct = build_clusters(aset, iou_threshold=0.0)
        sizes = sorted(cluster_sizes(ct), reverse=True)
        per_sentence = {}
        for a in aset.alignments:
            per_sentence[a.sentence_index] = per_sentence.get(a.sentence_index, 0) + 1
        assert sizes == sorted(per_sentence.values(), reverse=True)

    def test_threshold_above_one_rejected(self, iou_topic_path):
        aset = load_topics(iou_topic_path)[0]
        with pytest.raises(UsageError):
            build_clusters(aset, iou_threshold=1.5)


class TestAggregateQuery:
    def test_query_merges_overlapping_members(self, fixture_clustered):
        storm = next(ct for ct in fixture_clustered if ct.topic.topic_id == "storm")
        merged = storm.clusters[0]
        assert merged.size == 2
        starts = [f[0] for f in merged.query.fragments]
        assert starts == sorted(starts)
        # merged fragments are disjoint with gaps
        for (s1, e1), (s2, e2) in zip(merged.query.fragments, merged.query.fragments[1:]):
            assert e1 < s2

    def test_query_covers_all_member_tokens(self, fixture_clustered):
        for ct in fixture_clustered:
            tokens = ct.topic.summary_tokens()
            for c in ct.clusters:
                query_idx = token_indices(c.query, tokens, content_only=True).indices
                for a in c.members:
                    assert summary_token_set(ct.alignment_set, a).indices <= query_idx

    def test_singleton_query_equals_member_span(self, fixture_clustered):
        for ct in fixture_clustered:
            for c in ct.clusters:
                if c.size != 1:
                    continue
                member = c.members[0]
                merged = aggregate_query(ct.alignment_set, (member,))
                assert c.query == merged

    def test_query_text_renders_fragments(self, fixture_clustered):
        storm = next(ct for ct in fixture_clustered if ct.topic.topic_id == "storm")
        text = storm.query_text(storm.clusters[0])
        assert text
        assert text in storm.topic.summary_text or " " in text


class TestDeterminism:
    def test_rebuild_identical(self, fixture_sets):
        for aset in fixture_sets:
            assert build_clusters(aset) == build_clusters(aset)

    def test_member_order_matches_input(self, iou_topic_path):
        aset = load_topics(iou_topic_path)[0]
        ct = build_clusters(aset)
        for c in ct.clusters:
            positions = [aset.alignments.index(a) for a in c.members]
            assert positions == sorted(positions)


class TestContentEmptySpans:
    def test_two_stopword_spans_link(self):
        # IoU of two content-empty token sets is 1.0 by convention, so two
        # stopword-only spans in one sentence merge
        doc = "alpha bravo of the charlie."
        summary = "Of the alpha bravo charlie."
        record = make_topic(
            "stopRun",
            [("d1", doc)],
            summary,
            [
                ("Of the", "d1", "of the"),
                ("Of the", "d1", "the charlie"),
            ],
        )
        aset = parse_topic_record(record)[0]
        ct = build_clusters(aset)
        assert cluster_sizes(ct) == [2]


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_threshold_monotone_cluster_count(threshold):
    """Raising the threshold never reduces the number of clusters."""
    aset = parse_topic_record(iou_topic_record())[0]
    base = len(build_clusters(aset, iou_threshold=0.0).clusters)
    at_t = len(build_clusters(aset, iou_threshold=threshold).clusters)
    top = len(build_clusters(aset, iou_threshold=1.0).clusters)
    assert base <= at_t <= top
