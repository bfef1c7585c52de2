"""Acceptance gate: one test per criterion, one printed line per criterion.

Criterion 4 and the released-data half of criterion 5 depend on an export of
the manual test alignments; point ALIGNKIT_MANUAL_TEST_JSONL at that file to
enable them, otherwise they are reported as waived.
"""
import itertools
import math
import os
import time
from collections import Counter

import pytest

from alignkit.baselines import repair_cluster_assignment, repair_plan
from alignkit.cli import main
from alignkit.clusters import build_clusters, pairwise_iou
from alignkit.corpus import load_topics, parse_topic_record
from alignkit.metrics import clustering_scores, evaluate_task, kendall_tau
from alignkit.seeding import DeterministicRng
from alignkit.tasks import TASK_NAMES, derive_all, instance_record, read_records

from conftest import fixture_records, write_topics

MANUAL_DATA_VAR = "ALIGNKIT_MANUAL_TEST_JSONL"


class Criterion:
    """Prints the per-criterion verdict line whatever the outcome."""

    def __init__(self, number, name, budget=None):
        self.number = number
        self.name = name
        self.budget = budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        verdict = "PASS" if exc_type is None else "FAIL"
        print(f"acceptance criterion {self.number} ({self.name}): {verdict} [{elapsed:.2f}s]")
        if exc_type is None and self.budget is not None:
            assert elapsed < self.budget, (
                f"criterion {self.number} exceeded its {self.budget}s budget: {elapsed:.2f}s"
            )
        return False


def waived(number, name, reason):
    print(f"acceptance criterion {number} ({name}): WAIVED ({reason})")


# ---------------------------------------------------------------- helpers


def set_partitions(items):
    """Every partition of a sequence, as lists of lists."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in set_partitions(rest):
        for i in range(len(partition)):
            yield partition[:i] + [[first] + partition[i]] + partition[i + 1 :]
        yield [[first]] + partition


def partition_to_assignment(partition):
    return {item: f"g{k}" for k, group in enumerate(partition) for item in group}


def oracle_partition_scores(pred, gold):
    n = len(gold)
    gold_counts = Counter(gold.values())
    pred_counts = Counter(pred.values())
    joint = Counter((gold[k], pred[k]) for k in gold)
    h_g = -sum((c / n) * math.log(c / n) for c in gold_counts.values())
    h_p = -sum((c / n) * math.log(c / n) for c in pred_counts.values())
    h_g_given_p = -sum((c / n) * math.log(c / pred_counts[p]) for (g, p), c in joint.items())
    h_p_given_g = -sum((c / n) * math.log(c / gold_counts[g]) for (g, p), c in joint.items())
    h = 1.0 if h_g == 0 else 1.0 - h_g_given_p / h_g
    c = 1.0 if h_p == 0 else 1.0 - h_p_given_g / h_p
    v = 0.0 if h + c == 0 else 2 * h * c / (h + c)
    return h, c, v


def oracle_tau(pred_order, gold_order):
    pred_pos = {item: i for i, item in enumerate(pred_order)}
    gold_pos = {item: i for i, item in enumerate(gold_order)}
    items = list(gold_order)
    concordant = discordant = 0
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            d = (pred_pos[items[i]] - pred_pos[items[j]]) * (
                gold_pos[items[i]] - gold_pos[items[j]]
            )
            if d > 0:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (len(items) * (len(items) - 1) // 2)


VOCAB = (
    "storm flood river bridge council mayor budget school harvest train"
    " valley coast road power crew shelter market farm clinic tower"
).split()


def synthetic_cluster_corpus(count, seed):
    """Topics with one multi-member cluster each, words drawn from VOCAB.

    Every alignment in a topic shares the whole summary sentence as its
    summary span, so all members land in a single cluster.
    """
    rng = DeterministicRng(seed)
    corpus = []
    for k in range(count):
        summary_words = [VOCAB[rng.randbelow(len(VOCAB))] for _ in range(4 + rng.randbelow(9))]
        summary = " ".join(summary_words).capitalize() + "."
        doc_words = [VOCAB[rng.randbelow(len(VOCAB))] for _ in range(12 + rng.randbelow(20))]
        doc_text = " ".join(doc_words) + "."
        word_starts = []
        pos = 0
        for w in doc_words:
            word_starts.append(pos)
            pos += len(w) + 1
        alignments = []
        for _ in range(1 + rng.randbelow(4)):
            first = rng.randbelow(len(doc_words))
            length = 1 + rng.randbelow(min(10, len(doc_words) - first))
            start = word_starts[first]
            end = word_starts[first + length - 1] + len(doc_words[first + length - 1])
            alignments.append(
                {
                    "summary_fragments": [[0, len(summary) - 1]],
                    "doc_id": "d1",
                    "doc_fragments": [[start, end]],
                }
            )
        record = {
            "topic_id": f"syn{k:03d}",
            "documents": [{"doc_id": "d1", "text": doc_text}],
            "summary": {"text": summary},
            "alignments": alignments,
        }
        (aset,) = parse_topic_record(record)
        corpus.append(build_clusters(aset))
    return corpus


# ---------------------------------------------------------------- criteria


def test_criterion_1_metric_oracles():
    with Criterion(1, "metric oracle equivalence", budget=10.0):
        for size in (4, 5, 6):
            partitions = [
                partition_to_assignment(p) for p in set_partitions([str(i) for i in range(size)])
            ]
            for gold in partitions:
                for pred in partitions:
                    got = clustering_scores(pred, gold)
                    want = oracle_partition_scores(pred, gold)
                    for g, w in zip(got, want):
                        assert abs(g - w) <= 1e-12, (pred, gold, got, want)

        for n in (2, 3, 4, 5):
            perms = list(itertools.permutations(range(n)))
            for gold in perms:
                for pred in perms:
                    assert kendall_tau(pred, gold) == oracle_tau(pred, gold)
        identity = list(range(6))
        scrambled = [2, 5, 0, 4, 1, 3]
        for pred in itertools.permutations(range(6)):
            assert kendall_tau(pred, identity) == oracle_tau(pred, identity)
            assert kendall_tau(pred, scrambled) == oracle_tau(pred, scrambled)


def test_criterion_2_gold_on_gold(fixture_clustered):
    with Criterion(2, "gold-on-gold round trip", budget=5.0):
        datasets, _ = derive_all(fixture_clustered, seed=0)
        gold_records = {
            task: [instance_record(i, seed=0) for i in instances]
            for task, instances in datasets.items()
        }
        predictions = {
            "salience": [
                {"topic_id": r["topic_id"], "predicted_spans": r["gold_spans"]}
                for r in gold_records["salience"]
            ],
            "evidence": [
                {
                    "topic_id": r["topic_id"],
                    "cluster_id": r["cluster_id"],
                    "predicted_spans": r["gold_spans"],
                }
                for r in gold_records["evidence"]
            ],
            "clustering": [
                {"topic_id": r["topic_id"], "predicted_assignment": r["gold_assignment"]}
                for r in gold_records["clustering"]
            ],
            "planning": [
                {"topic_id": r["topic_id"], "predicted_plan": r["gold_plan"]}
                for r in gold_records["planning"]
            ],
            "sentence_fusion": [
                {
                    "topic_id": r["topic_id"],
                    "sentence_index": r["sentence_index"],
                    "predicted_sentence": r["gold_sentence"],
                }
                for r in gold_records["sentence_fusion"]
            ],
            "incontext_fusion": [
                {"topic_id": r["topic_id"], "predicted_passage": r["gold_passage"]}
                for r in gold_records["incontext_fusion"]
            ],
        }
        for task in TASK_NAMES:
            result = evaluate_task(task, gold_records[task], predictions[task])
            for report in result.reports:
                assert report.corpus == 1.0, (task, report.metric, report.mode, report.corpus)
                for instance_id, score in report.per_instance:
                    assert score == 1.0, (task, report.metric, instance_id, score)


def test_criterion_3_cluster_conformance(iou_topic_path):
    with Criterion(3, "cluster-builder conformance"):
        aset = load_topics(iou_topic_path)[0]
        table = pairwise_iou(aset)
        # hand-computed content-token IoU values for every same-sentence pair
        expected = {
            (0, 1): 1 / 3, (0, 2): 2 / 3, (0, 3): 0.0, (0, 4): 0.0, (0, 5): 0.0,
            (1, 2): 2 / 3, (1, 3): 0.0, (1, 4): 1 / 7, (1, 5): 0.0,
            (2, 3): 0.0, (2, 4): 1 / 9, (2, 5): 0.0,
            (3, 4): 1 / 2, (3, 5): 0.0, (4, 5): 0.0,
            (6, 7): 1.0, (6, 8): 0.0, (6, 9): 0.0,
            (7, 8): 0.0, (7, 9): 0.0, (8, 9): 1 / 3,
        }
        assert set(table) == set(expected)
        for pair, want in expected.items():
            assert table[pair] == pytest.approx(want), pair

        assert table[(3, 4)] == 0.5  # boundary pair, must link inclusively
        ct = build_clusters(aset, iou_threshold=0.5)
        components = {
            frozenset(aset.alignments.index(a) for a in c.members) for c in ct.clusters
        }
        assert components == {
            frozenset({0, 1, 2}),
            frozenset({3, 4}),
            frozenset({5}),
            frozenset({6, 7}),
            frozenset({8}),
            frozenset({9}),
        }


def test_criterion_4_released_corpus_statistics():
    name = "released-corpus statistic reproduction"
    path = os.environ.get(MANUAL_DATA_VAR)
    if not path:
        waived(4, name, f"{MANUAL_DATA_VAR} not set")
        pytest.skip("released manual test alignments not available")
    with Criterion(4, name):
        from alignkit.analytics import corpus_stats

        corpus = [build_clusters(aset) for aset in load_topics(path)]
        stats = corpus_stats(corpus)
        assert stats.topics == 100
        assert stats.alignments == 2256
        assert stats.clusters == 1332
        assert stats.clustered_sentences == 834
        assert abs(stats.avg_cluster_size - 1.7) <= 0.05
        assert abs(stats.avg_clusters_per_sentence - 1.6) <= 0.05
        assert abs(stats.avg_clusters_per_topic - 13.6) <= 0.05
        assert abs(stats.avg_documents_per_topic - 2.97) <= 0.05

        datasets, _ = derive_all(corpus, seed=0)
        counts = {task: len(instances) for task, instances in datasets.items()}
        assert counts["evidence"] == 1332
        assert counts["sentence_fusion"] == 834
        for task in ("salience", "clustering", "planning", "incontext_fusion"):
            assert counts[task] == 100


def test_criterion_5_abstractiveness_invariants():
    from alignkit.analytics import abstractiveness_table, cluster_gram_scores

    with Criterion(5, "abstractiveness invariants"):
        corpus = synthetic_cluster_corpus(200, seed=99)
        clusters = [(ct, c) for ct in corpus for c in ct.clusters]
        assert len(clusters) >= 200
        checked = 0
        for ct, cluster in clusters:
            for n in (1, 2, 3):
                scores = cluster_gram_scores(ct, cluster, n)
                if scores is None:
                    continue
                checked += 1
                assert scores.full_cluster >= scores.cluster_max - 1e-9
                for member in scores.member_scores:
                    assert scores.cluster_max >= member - 1e-9
        assert checked >= 400  # most clusters score at several orders

    path = os.environ.get(MANUAL_DATA_VAR)
    if not path:
        waived(5, "abstractiveness row ordering on released data", f"{MANUAL_DATA_VAR} not set")
        return
    corpus = [build_clusters(aset) for aset in load_topics(path)]
    rows = {r.measure: r for r in abstractiveness_table(corpus)}
    print("unigram overlap on released data:", {m: round(r.unigram, 2) for m, r in rows.items()})
    assert rows["FullCluster"].unigram > rows["ClusterMax"].unigram
    assert rows["ClusterMax"].unigram > rows["AlignmentPair"].unigram
    assert rows["AlignmentPair"].unigram > rows["InCluster"].unigram


def test_criterion_6_repair_conformance():
    with Criterion(6, "repair-procedure conformance", budget=10.0):
        rng = DeterministicRng(2024)
        for trial in range(1000):
            size = 1 + rng.randbelow(12)
            universe = list(range(size))
            raw = []
            for _ in range(rng.randbelow(5)):
                group = []
                for _ in range(rng.randbelow(6)):
                    roll = rng.randbelow(10)
                    if roll < 6:
                        group.append(rng.randbelow(size))  # maybe duplicate
                    elif roll < 8:
                        group.append(size + rng.randbelow(5))  # out of range
                    else:
                        group.append(-1 - rng.randbelow(3))  # negative junk
                raw.append(group)
            repaired = repair_plan(raw, universe, seed=7, instance_id=f"fuzz{trial}")
            flat = [u for group in repaired for u in group]
            assert sorted(flat) == universe, (raw, repaired)
            assert all(group for group in repaired)
            again = repair_plan(repaired, universe, seed=7, instance_id=f"fuzz{trial}")
            assert again == repaired, (raw, repaired, again)

        for trial in range(1000):
            n_items = 1 + rng.randbelow(10)
            items = [f"i{k}" for k in range(n_items)]
            raw = {}
            for item in items:
                roll = rng.randbelow(3)
                if roll == 0:
                    raw[item] = f"c{rng.randbelow(4)}"
                elif roll == 1:
                    raw[f"ghost{rng.randbelow(5)}"] = f"c{rng.randbelow(4)}"
            repaired = repair_cluster_assignment(raw, items, seed=7, instance_id=f"fuzz{trial}")
            assert set(repaired) == set(items)
            kept = {v for k, v in raw.items() if k in set(items)}
            allowed = kept if kept else {"c0"}
            assert set(repaired.values()) <= allowed, (raw, repaired)


def test_criterion_7_determinism(tmp_path):
    with Criterion(7, "derivation and baseline determinism"):
        topics = write_topics(tmp_path / "topics.jsonl", fixture_records())

        def derive(out, seed):
            code = main(
                ["derive", "--input", str(topics), "--out", str(out), "--seed", str(seed)]
            )
            assert code == 0
            return out

        first = derive(tmp_path / "runA", seed=42)
        second = derive(tmp_path / "runB", seed=42)
        for task in TASK_NAMES:
            name = f"{task}.data.jsonl"
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
        assert (first / "derivation_report.json").read_bytes() == (
            second / "derivation_report.json"
        ).read_bytes()

        preds_a = tmp_path / "predsA"
        preds_b = tmp_path / "predsB"
        for out in (preds_a, preds_b):
            code = main(
                ["baseline", "--input", str(first), "--out", str(out), "--seed", "42"]
            )
            assert code == 0
        for task in TASK_NAMES:
            name = f"{task}.data.predictions.jsonl"
            assert (preds_a / name).read_bytes() == (preds_b / name).read_bytes(), name

        # a different seed may change only the permutation-bearing fields
        other = derive(tmp_path / "runC", seed=43)
        for task in ("salience", "evidence", "sentence_fusion", "incontext_fusion"):
            name = f"{task}.data.jsonl"
            for rec_a, rec_c in zip(
                read_records(first / name), read_records(other / name)
            ):
                rec_a.pop("seed"), rec_c.pop("seed")
                assert rec_a == rec_c, task

        def partition_by_text(record):
            groups = {}
            by_id = {item["item_id"]: item["text"] for item in record["items"]}
            for item_id, label in record["gold_assignment"].items():
                groups.setdefault(label, []).append(by_id[item_id])
            return sorted(tuple(sorted(g)) for g in groups.values())

        changed = False
        for rec_a, rec_c in zip(
            read_records(first / "clustering.data.jsonl"),
            read_records(other / "clustering.data.jsonl"),
        ):
            if rec_a["items"] != rec_c["items"]:
                changed = True
            texts = lambda record: sorted(item["text"] for item in record["items"])
            assert texts(rec_a) == texts(rec_c)
            assert partition_by_text(rec_a) == partition_by_text(rec_c)
        for rec_a, rec_c in zip(
            read_records(first / "planning.data.jsonl"),
            read_records(other / "planning.data.jsonl"),
        ):
            if rec_a["units"] != rec_c["units"]:
                changed = True
            # representatives are seeded draws, so only the shape is invariant
            assert len(rec_a["units"]) == len(rec_c["units"])
            shape = lambda record: [len(group) for group in record["gold_plan"]]
            assert shape(rec_a) == shape(rec_c)
        assert changed, "changing the seed should reorder at least one permutation field"
