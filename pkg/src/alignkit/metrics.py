"""Evaluation metrics and per-task scoring drivers.

Every metric is implemented from first principles so it can be checked
against a brute-force oracle in the test suite:

* token_f1: span predictions projected to per-token binary labels, counted
  micro across the documents of one instance.
* clustering_scores: entropy-based homogeneity, completeness, V-measure.
  Zero-entropy denominators score 1.0 for the affected component.
* kendall_tau: rank correlation via inversion counting (mergesort), no tie
  correction since plans are total orders.
* rouge_f1: clean-room lexical overlap. Lowercased tokens, no stemming,
  clipped n-gram multisets for the 1- and 2-gram variants, longest common
  subsequence for the L variant. Scores are internally comparable but not
  comparable with external ROUGE toolkits.

Aggregation: "macro" averages per-instance scores; "micro" pools counts over
instances before scoring. Headline modes are macro everywhere; salience also
emits a fully pooled micro report.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Mapping, Sequence

from .corpus import Document, Topic
from .errors import UndefinedResultError, UsageError, ValidationError
from .tasks import (
    TASK_CLUSTERING,
    TASK_EVIDENCE,
    TASK_INCONTEXT_FUSION,
    TASK_PLANNING,
    TASK_SALIENCE,
    TASK_SENTENCE_FUSION,
    TASK_NAMES,
    ClusteringInstance,
    DocSpanRef,
    EvidenceInstance,
    InContextFusionInstance,
    PlanningInstance,
    SalienceInstance,
    SentenceFusionInstance,
    parse_instance,
)
from .textops import (
    SpanFragments,
    cached_tokenize,
    merge_fragments,
    ngrams,
    tokenize,
)

ROUGE_VARIANTS = ("R1", "R2", "RL")


@dataclass(frozen=True)
class TokenLabeling:
    """Binary salience labels over every token of every document."""

    labels: dict[str, tuple[bool, ...]]

    def positives(self, doc_id: str) -> int:
        return sum(self.labels[doc_id])


def _labeling_from_refs(
    spans: Sequence[DocSpanRef], documents: Sequence[Document], topic_id: str
) -> TokenLabeling:
    doc_map = {d.doc_id: d for d in documents}
    merged: dict[str, list[tuple[int, int]]] = {}
    for ref in spans:
        if ref.doc_id not in doc_map:
            raise UsageError(f"span references unknown doc_id {ref.doc_id!r}")
        merged.setdefault(ref.doc_id, []).extend(
            (int(s), int(e)) for s, e in ref.fragments
        )
    labels: dict[str, tuple[bool, ...]] = {}
    for doc in documents:
        tokens = cached_tokenize(doc.text, f"{topic_id}#{doc.doc_id}")
        flags = [False] * tokens.token_count
        if doc.doc_id in merged:
            span = SpanFragments(
                fragments=merge_fragments(merged[doc.doc_id]),
                owner=f"{topic_id}#{doc.doc_id}",
            )
            span.validate_within(len(doc.text))
            for i, tok in enumerate(tokens.tokens):
                if any(tok.start < e and s < tok.end for s, e in span.fragments):
                    flags[i] = True
        labels[doc.doc_id] = tuple(flags)
    return TokenLabeling(labels=labels)


def spans_to_labeling(
    spans: Sequence[tuple[str, SpanFragments]], topic: Topic
) -> TokenLabeling:
    """Project (doc_id, span) pairs onto per-token labels for a whole topic.

    Overlapping fragments are merged first, so the projection is a plain
    union. Fragments beyond a document's length raise a validation error.
    """
    refs = [DocSpanRef(doc_id=d, fragments=s.fragments) for d, s in spans]
    return _labeling_from_refs(refs, topic.documents, topic.topic_id)


def _f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0, 1.0, 1.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def _label_counts(pred: TokenLabeling, gold: TokenLabeling) -> tuple[int, int, int]:
    if set(pred.labels) != set(gold.labels):
        raise UsageError("labelings cover different documents")
    tp = fp = fn = 0
    for doc_id, gold_flags in gold.labels.items():
        pred_flags = pred.labels[doc_id]
        if len(pred_flags) != len(gold_flags):
            raise UsageError(
                f"labeling length mismatch for document {doc_id!r}: "
                f"{len(pred_flags)} vs {len(gold_flags)}"
            )
        for p, g in zip(pred_flags, gold_flags):
            if p and g:
                tp += 1
            elif p:
                fp += 1
            elif g:
                fn += 1
    return tp, fp, fn


def token_f1(pred: TokenLabeling, gold: TokenLabeling) -> tuple[float, float, float]:
    """Precision, recall, F1 over positive token labels, pooled across documents.

    Empty against empty scores 1.0 (vacuously perfect); an empty prediction
    against non-empty gold scores 0.0.
    """
    return _f1_from_counts(*_label_counts(pred, gold))


def _entropy(counts: Sequence[int], total: int) -> float:
    return -sum((c / total) * log(c / total) for c in counts if c)


def clustering_scores(
    pred: Mapping[str, str], gold: Mapping[str, str]
) -> tuple[float, float, float]:
    """Homogeneity, completeness, and V-measure of a predicted clustering.

    homogeneity = 1 - H(gold|pred)/H(gold), completeness the mirror image;
    a zero denominator yields 1.0 for that component. V is their harmonic
    mean. Both assignments must label exactly the same items.
    """
    if not gold:
        raise UsageError("clustering_scores requires a non-empty assignment")
    if set(pred) != set(gold):
        raise UsageError("predicted and gold assignments label different items")
    items = sorted(gold)
    n = len(items)
    gold_sizes: dict[str, int] = {}
    pred_sizes: dict[str, int] = {}
    joint: dict[tuple[str, str], int] = {}
    for item in items:
        g, p = gold[item], pred[item]
        gold_sizes[g] = gold_sizes.get(g, 0) + 1
        pred_sizes[p] = pred_sizes.get(p, 0) + 1
        joint[(g, p)] = joint.get((g, p), 0) + 1

    h_gold = _entropy(list(gold_sizes.values()), n)
    h_pred = _entropy(list(pred_sizes.values()), n)
    h_gold_given_pred = -sum(
        (c / n) * log(c / pred_sizes[p]) for (g, p), c in joint.items() if c
    )
    h_pred_given_gold = -sum(
        (c / n) * log(c / gold_sizes[g]) for (g, p), c in joint.items() if c
    )
    homogeneity = 1.0 if h_gold == 0.0 else 1.0 - h_gold_given_pred / h_gold
    completeness = 1.0 if h_pred == 0.0 else 1.0 - h_pred_given_gold / h_pred
    if homogeneity + completeness == 0.0:
        v_measure = 0.0
    else:
        v_measure = 2 * homogeneity * completeness / (homogeneity + completeness)
    return homogeneity, completeness, v_measure


def _count_inversions(ranks: list[int]) -> int:
    # mergesort count; the test oracle counts pairs directly instead
    if len(ranks) <= 1:
        return 0
    mid = len(ranks) // 2
    left, right = ranks[:mid], ranks[mid:]
    inversions = _count_inversions(left) + _count_inversions(right)
    merged = []
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            inversions += len(left) - i
            merged.append(right[j])
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    ranks[:] = merged
    return inversions


def kendall_tau(pred_order: Sequence[int], gold_order: Sequence[int]) -> float:
    """Rank correlation between two total orders of the same index set.

    tau = (concordant - discordant) / (n choose 2), computed by counting
    inversions of the prediction expressed in gold ranks.
    """
    n = len(gold_order)
    if len(pred_order) != n or set(pred_order) != set(gold_order) or len(set(gold_order)) != n:
        raise UsageError("orders must be permutations of the same index set")
    if n < 2:
        raise UndefinedResultError("rank correlation is undefined for fewer than 2 items")
    gold_rank = {item: r for r, item in enumerate(gold_order)}
    inversions = _count_inversions([gold_rank[item] for item in pred_order])
    total_pairs = n * (n - 1) // 2
    # single division keeps the result exactly equal to direct pair counting
    return (total_pairs - 2 * inversions) / total_pairs


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_f1(pred: str, gold: str, variant: str) -> tuple[float, float, float]:
    """Clean-room lexical overlap between two strings.

    Variants: "R1" and "R2" use clipped n-gram multiset overlap, "RL" uses
    the longest common subsequence. Both sides empty (at the gram level)
    scores 1.0; one side empty scores 0.0.
    """
    if variant not in ROUGE_VARIANTS:
        raise UsageError(f"unknown overlap variant {variant!r}")
    pred_tokens = [t.surface.lower() for t in tokenize(pred).tokens]
    gold_tokens = [t.surface.lower() for t in tokenize(gold).tokens]
    if variant == "RL":
        if not pred_tokens and not gold_tokens:
            return 1.0, 1.0, 1.0
        if not pred_tokens or not gold_tokens:
            return 0.0, 0.0, 0.0
        lcs = _lcs_length(pred_tokens, gold_tokens)
        return _f1_from_counts(lcs, len(pred_tokens) - lcs, len(gold_tokens) - lcs)
    n = 1 if variant == "R1" else 2
    pred_grams = ngrams(pred_tokens, n)
    gold_grams = ngrams(gold_tokens, n)
    if not pred_grams and not gold_grams:
        return 1.0, 1.0, 1.0
    if not pred_grams or not gold_grams:
        return 0.0, 0.0, 0.0
    overlap = sum(min(c, gold_grams[g]) for g, c in pred_grams.items())
    return _f1_from_counts(
        overlap, sum(pred_grams.values()) - overlap, sum(gold_grams.values()) - overlap
    )


def _plan_assignment(plan: Sequence[Sequence[int]], universe: set[int], name: str) -> dict[str, str]:
    seen: dict[str, str] = {}
    for group_index, group in enumerate(plan):
        for unit in group:
            key = str(unit)
            if key in seen:
                raise UsageError(f"{name} plan lists unit {unit} more than once")
            seen[key] = f"g{group_index}"
    if {int(k) for k in seen} != universe:
        raise UsageError(f"{name} plan does not cover the unit indices exactly once")
    return seen


def plan_grouping_scores(
    pred_plan: Sequence[Sequence[int]], gold_plan: Sequence[Sequence[int]]
) -> tuple[float, float, float]:
    """Grouping quality of a plan, scored as a clustering of unit indices."""
    universe = {unit for group in gold_plan for unit in group}
    gold = _plan_assignment(gold_plan, universe, "gold")
    pred = _plan_assignment(pred_plan, universe, "predicted")
    return clustering_scores(pred, gold)


@dataclass(frozen=True)
class MetricReport:
    task: str
    metric: str
    mode: str
    corpus: float
    per_instance: tuple[tuple[str, float], ...]

    def to_json(self) -> dict:
        return {
            "task": self.task,
            "metric": self.metric,
            "mode": self.mode,
            "corpus": self.corpus,
            "per_instance": [
                {"id": instance_id, "score": score}
                for instance_id, score in self.per_instance
            ],
        }


@dataclass(frozen=True)
class EvalResult:
    reports: tuple[MetricReport, ...]
    skipped: tuple[str, ...]


def _macro(task: str, metric: str, scores: Sequence[tuple[str, float]]) -> MetricReport:
    corpus = sum(s for _, s in scores) / len(scores) if scores else 0.0
    return MetricReport(
        task=task, metric=metric, mode="macro", corpus=corpus,
        per_instance=tuple(scores),
    )


def _prediction_index(records: Sequence[dict], id_fields: Sequence[str], task: str) -> dict:
    index: dict[tuple, dict] = {}
    for record in records:
        try:
            key = tuple(record[f] for f in id_fields)
        except KeyError as exc:
            raise UsageError(f"{task} prediction record missing field {exc.args[0]!r}") from exc
        if key in index:
            raise UsageError(f"duplicate {task} prediction for {key}")
        index[key] = record
    return index


def _take(index: dict, key: tuple, task: str) -> dict:
    if key not in index:
        raise UsageError(f"missing {task} prediction for {key}")
    return index.pop(key)


def _check_drained(index: dict, task: str) -> None:
    if index:
        leftovers = ", ".join(str(k) for k in list(index)[:3])
        raise UsageError(f"{task} predictions reference unknown instances: {leftovers}")


def _pred_span_refs(record: dict, task: str) -> list[DocSpanRef]:
    spans = record.get("predicted_spans")
    if not isinstance(spans, list):
        raise UsageError(f"{task} prediction must carry a predicted_spans list")
    refs = []
    for s in spans:
        if not isinstance(s, dict) or "doc_id" not in s or "fragments" not in s:
            raise UsageError(f"{task} predicted span {s!r} needs doc_id and fragments")
        refs.append(
            DocSpanRef(
                doc_id=s["doc_id"],
                fragments=tuple((int(a), int(b)) for a, b in s["fragments"]),
            )
        )
    return refs


def _evaluate_span_task(
    task: str,
    instances: Sequence,
    predictions: Sequence[dict],
    id_fields: Sequence[str],
    instance_key,
    instance_id,
    micro_report: bool,
) -> EvalResult:
    index = _prediction_index(predictions, id_fields, task)
    per_f1: list[tuple[str, float]] = []
    pooled_tp = pooled_fp = pooled_fn = 0
    for inst in instances:
        record = _take(index, instance_key(inst), task)
        gold = _labeling_from_refs(inst.gold_spans, inst.documents, inst.topic_id)
        pred = _labeling_from_refs(
            _pred_span_refs(record, task), inst.documents, inst.topic_id
        )
        tp, fp, fn = _label_counts(pred, gold)
        pooled_tp, pooled_fp, pooled_fn = pooled_tp + tp, pooled_fp + fp, pooled_fn + fn
        per_f1.append((instance_id(inst), _f1_from_counts(tp, fp, fn)[2]))
    _check_drained(index, task)
    reports = [_macro(task, "token_f1", per_f1)]
    if micro_report:
        reports.append(
            MetricReport(
                task=task, metric="token_f1", mode="micro",
                corpus=_f1_from_counts(pooled_tp, pooled_fp, pooled_fn)[2],
                per_instance=tuple(per_f1),
            )
        )
    return EvalResult(reports=tuple(reports), skipped=())


def evaluate_salience(instances: Sequence[SalienceInstance], predictions: Sequence[dict]) -> EvalResult:
    return _evaluate_span_task(
        TASK_SALIENCE, instances, predictions,
        id_fields=("topic_id",),
        instance_key=lambda i: (i.topic_id,),
        instance_id=lambda i: i.topic_id,
        micro_report=True,
    )


def evaluate_evidence(instances: Sequence[EvidenceInstance], predictions: Sequence[dict]) -> EvalResult:
    return _evaluate_span_task(
        TASK_EVIDENCE, instances, predictions,
        id_fields=("topic_id", "cluster_id"),
        instance_key=lambda i: (i.topic_id, i.cluster_id),
        instance_id=lambda i: i.cluster_id,
        micro_report=False,
    )


def evaluate_clustering(instances: Sequence[ClusteringInstance], predictions: Sequence[dict]) -> EvalResult:
    index = _prediction_index(predictions, ("topic_id",), TASK_CLUSTERING)
    triples: dict[str, list[tuple[str, float]]] = {
        "homogeneity": [], "completeness": [], "v_measure": []
    }
    skipped = []
    for inst in instances:
        record = _take(index, (inst.topic_id,), TASK_CLUSTERING)
        if not inst.items:
            skipped.append(inst.topic_id)
            continue
        assignment = record.get("predicted_assignment")
        if not isinstance(assignment, dict):
            raise UsageError("clustering prediction must carry a predicted_assignment object")
        pred = {str(k): str(v) for k, v in assignment.items()}
        h, c, v = clustering_scores(pred, inst.gold_assignment)
        triples["homogeneity"].append((inst.topic_id, h))
        triples["completeness"].append((inst.topic_id, c))
        triples["v_measure"].append((inst.topic_id, v))
    _check_drained(index, TASK_CLUSTERING)
    reports = tuple(_macro(TASK_CLUSTERING, m, s) for m, s in triples.items())
    return EvalResult(reports=reports, skipped=tuple(skipped))


def evaluate_planning(instances: Sequence[PlanningInstance], predictions: Sequence[dict]) -> EvalResult:
    index = _prediction_index(predictions, ("topic_id",), TASK_PLANNING)
    taus: list[tuple[str, float]] = []
    triples: dict[str, list[tuple[str, float]]] = {
        "homogeneity": [], "completeness": [], "v_measure": []
    }
    skipped = []
    for inst in instances:
        record = _take(index, (inst.topic_id,), TASK_PLANNING)
        raw = record.get("predicted_plan")
        if not isinstance(raw, list):
            raise UsageError("planning prediction must carry a predicted_plan list of lists")
        pred_plan = [[int(u) for u in group] for group in raw]
        if len(inst.units) < 2:
            skipped.append(inst.topic_id)
            continue
        gold_flat = [u for group in inst.gold_plan for u in group]
        pred_flat = [u for group in pred_plan for u in group]
        taus.append((inst.topic_id, kendall_tau(pred_flat, gold_flat)))
        h, c, v = plan_grouping_scores(pred_plan, inst.gold_plan)
        triples["homogeneity"].append((inst.topic_id, h))
        triples["completeness"].append((inst.topic_id, c))
        triples["v_measure"].append((inst.topic_id, v))
    _check_drained(index, TASK_PLANNING)
    reports = [_macro(TASK_PLANNING, "kendall_tau", taus)]
    reports.extend(_macro(TASK_PLANNING, m, s) for m, s in triples.items())
    return EvalResult(reports=tuple(reports), skipped=tuple(skipped))


def _evaluate_fusion(
    task: str,
    instances: Sequence,
    predictions: Sequence[dict],
    id_fields: Sequence[str],
    instance_key,
    instance_id,
    pred_field: str,
    gold_text,
) -> EvalResult:
    index = _prediction_index(predictions, id_fields, task)
    per_variant: dict[str, list[tuple[str, float]]] = {v: [] for v in ROUGE_VARIANTS}
    for inst in instances:
        record = _take(index, instance_key(inst), task)
        predicted = record.get(pred_field)
        if not isinstance(predicted, str):
            raise UsageError(f"{task} prediction must carry a {pred_field} string")
        for variant in ROUGE_VARIANTS:
            score = rouge_f1(predicted, gold_text(inst), variant)[2]
            per_variant[variant].append((instance_id(inst), score))
    _check_drained(index, task)
    metric_names = {"R1": "rouge1", "R2": "rouge2", "RL": "rougeL"}
    reports = tuple(
        _macro(task, metric_names[v], scores) for v, scores in per_variant.items()
    )
    return EvalResult(reports=reports, skipped=())


def evaluate_sentence_fusion(
    instances: Sequence[SentenceFusionInstance], predictions: Sequence[dict]
) -> EvalResult:
    return _evaluate_fusion(
        TASK_SENTENCE_FUSION, instances, predictions,
        id_fields=("topic_id", "sentence_index"),
        instance_key=lambda i: (i.topic_id, i.sentence_index),
        instance_id=lambda i: f"{i.topic_id}/s{i.sentence_index}",
        pred_field="predicted_sentence",
        gold_text=lambda i: i.gold_sentence,
    )


def evaluate_incontext_fusion(
    instances: Sequence[InContextFusionInstance], predictions: Sequence[dict]
) -> EvalResult:
    return _evaluate_fusion(
        TASK_INCONTEXT_FUSION, instances, predictions,
        id_fields=("topic_id",),
        instance_key=lambda i: (i.topic_id,),
        instance_id=lambda i: i.topic_id,
        pred_field="predicted_passage",
        gold_text=lambda i: i.gold_passage,
    )


_EVALUATORS = {
    TASK_SALIENCE: evaluate_salience,
    TASK_CLUSTERING: evaluate_clustering,
    TASK_EVIDENCE: evaluate_evidence,
    TASK_PLANNING: evaluate_planning,
    TASK_SENTENCE_FUSION: evaluate_sentence_fusion,
    TASK_INCONTEXT_FUSION: evaluate_incontext_fusion,
}


def evaluate_task(task: str, gold_records: Sequence[dict], predictions: Sequence[dict]) -> EvalResult:
    """Score predictions for one task against its gold dataset records."""
    if task not in TASK_NAMES:
        raise UsageError(f"unknown task {task!r}")
    instances = []
    for record in gold_records:
        if record.get("task") != task:
            raise ValidationError(
                f"gold record for task {record.get('task')!r} in a {task} dataset"
            )
        instances.append(parse_instance(record))
    return _EVALUATORS[task](instances, predictions)
