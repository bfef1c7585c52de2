"""Shared fixtures: a five-topic synthetic corpus and span-location helpers.

The corpus is built from substring locations so every offset stays correct if
a text changes, and it deliberately covers the edge cases the suite leans on:
a multi-member cluster, a transitive three-member cluster, an exactly-0.5 IoU
pair (inclusive boundary), an uncovered summary sentence, contractions, and
hyphenated compounds.
"""
import json

import pytest

from alignkit.clusters import build_clusters
from alignkit.corpus import load_topics


def loc(text, needle, occurrence=1):
    """Character interval [start, end) of the nth occurrence of needle."""
    start = -1
    for _ in range(occurrence):
        start = text.index(needle, start + 1)
    return [start, start + len(needle)]


def spans(text, *needles):
    return [loc(text, n) for n in needles]


def make_topic(topic_id, documents, summary, alignments, annotator=None):
    record = {
        "topic_id": topic_id,
        "documents": [{"doc_id": d, "text": t} for d, t in documents],
        "summary": {"text": summary},
        "alignments": [],
    }
    for summary_needle, doc_id, doc_needle in alignments:
        doc_text = dict(documents)[doc_id]
        entry = {
            "summary_fragments": [loc(summary, summary_needle)],
            "doc_id": doc_id,
            "doc_fragments": [loc(doc_text, doc_needle)],
        }
        if annotator is not None:
            entry["annotator_id"] = annotator
        record["alignments"].append(entry)
    return record


def storm_topic():
    d1 = (
        "The storm hit the northern coast early on Monday. "
        "Power lines failed across the region. "
        "Officials warned residents to stay indoors."
    )
    d2 = (
        "A powerful storm struck the northern coastline on Monday morning. "
        "Emergency crews restored power by evening."
    )
    summary = (
        "A major storm hit the northern coast on Monday. "
        "Power failed across the region."
    )
    return make_topic(
        "storm",
        [("d1", d1), ("d2", d2)],
        summary,
        [
            (
                "A major storm hit the northern coast on Monday",
                "d1",
                "The storm hit the northern coast early on Monday",
            ),
            (
                "storm hit the northern coast on Monday",
                "d2",
                "A powerful storm struck the northern coastline on Monday morning",
            ),
            ("Power failed across the region", "d1", "Power lines failed across the region"),
        ],
    )


def election_topic():
    # summary sentence 3 is deliberately uncovered
    d1 = (
        "The incumbent mayor won the city election by a narrow margin on Tuesday. "
        "Several districts reported long lines."
    )
    d2 = "Voter turnout reached a record high across all districts this year."
    summary = (
        "The incumbent won the city election by a narrow margin. "
        "Turnout reached a record high across all districts. "
        "Analysts expect a recount petition."
    )
    return make_topic(
        "election",
        [("d1", d1), ("d2", d2)],
        summary,
        [
            (
                "The incumbent won the city election by a narrow margin",
                "d1",
                "The incumbent mayor won the city election by a narrow margin on Tuesday",
            ),
            (
                "Turnout reached a record high across all districts",
                "d2",
                "Voter turnout reached a record high across all districts this year",
            ),
        ],
    )


def science_topic():
    d1 = (
        "The research team doesn't expect the first-stage clinical trial to finish "
        "before June. Funding gaps delayed early enrollment."
    )
    d2 = (
        "Engineers admitted the lab's new device can't process saline samples yet. "
        "A redesign is planned for the autumn."
    )
    summary = (
        "Researchers don't expect the first-stage trial to finish before June. "
        "The lab's new device can't process saline samples yet."
    )
    return make_topic(
        "science",
        [("d1", d1), ("d2", d2)],
        summary,
        [
            (
                "Researchers don't expect the first-stage trial to finish before June",
                "d1",
                "The research team doesn't expect the first-stage clinical trial to finish before June",
            ),
            (
                "The lab's new device can't process saline samples yet",
                "d2",
                "the lab's new device can't process saline samples yet",
            ),
        ],
    )


def sports_topic():
    # a1 links a2 and a3 transitively; a2 and a3 alone fall below 0.5
    d1 = (
        "The home team clinched the championship title after extra time on Saturday. "
        "Streets downtown filled with fans for hours."
    )
    d2 = (
        "After extra time, the home side clinched the championship title. "
        "Celebrations continued past midnight."
    )
    d3 = "The team clinched the title in a dramatic final."
    summary = (
        "The home team clinched the championship title after extra time. "
        "Fans filled the downtown streets for hours."
    )
    return make_topic(
        "sports",
        [("d1", d1), ("d2", d2), ("d3", d3)],
        summary,
        [
            (
                "The home team clinched the championship title after extra time",
                "d1",
                "The home team clinched the championship title after extra time on Saturday",
            ),
            (
                "home team clinched the championship title",
                "d2",
                "the home side clinched the championship title",
            ),
            (
                "the championship title after extra time",
                "d3",
                "The team clinched the title in a dramatic final",
            ),
            (
                "Fans filled the downtown streets for hours",
                "d1",
                "Streets downtown filled with fans for hours",
            ),
        ],
    )


def markets_topic():
    # 'shares fell' vs 'Tech shares fell sharply': content IoU exactly 2/4
    d1 = (
        "Technology shares fell sharply on Tuesday after the overnight rally faded. "
        "Investors moved into bonds."
    )
    d2 = (
        "The central bank held interest rates steady at its meeting. "
        "Markets had expected a cut."
    )
    summary = (
        "Tech shares fell sharply after the overnight rally faded. "
        "The central bank held interest rates steady."
    )
    return make_topic(
        "markets",
        [("d1", d1), ("d2", d2)],
        summary,
        [
            ("shares fell", "d1", "Technology shares fell sharply"),
            (
                "Tech shares fell sharply",
                "d1",
                "shares fell sharply on Tuesday after the overnight rally faded",
            ),
            (
                "The central bank held interest rates steady",
                "d2",
                "The central bank held interest rates steady at its meeting",
            ),
        ],
    )


def fixture_records():
    return [
        storm_topic(),
        election_topic(),
        science_topic(),
        sports_topic(),
        markets_topic(),
    ]


def iou_topic_record():
    """A 10-alignment topic whose pairwise IoU table is computed by hand.

    Sentence one tokens: Alpha bravo charlie delta echo foxtrot golf hotel
    india juliet (sentence-relative indices 0..9, all content words).
    Summary token index sets within that sentence:
        a0 {1,2,3,4}   a1 {3,4,5,6}   a2 {1..6}
        a3 {8,9}       a4 {6,7,8,9}   a5 {0}
    Sentence two tokens: Kilo lima mike november oscar (0..4):
        a6 {0,1}       a7 {0,1}       a8 {2,3}       a9 {3,4}
    Components at threshold 0.5: {a0,a1,a2} (transitive through a2),
    {a3,a4} (IoU exactly 0.5, boundary inclusive), {a5}, {a6,a7}, {a8}, {a9}.
    """
    doc = (
        "alpha bravo charlie delta echo foxtrot golf hotel india juliet "
        "kilo lima mike november oscar."
    )
    summary = (
        "Alpha bravo charlie delta echo foxtrot golf hotel india juliet. "
        "Kilo lima mike november oscar."
    )
    pairs = [
        ("bravo charlie delta echo", "bravo charlie delta echo"),
        ("delta echo foxtrot golf", "delta echo foxtrot golf"),
        ("bravo charlie delta echo foxtrot golf", "charlie delta echo"),
        ("india juliet", "india juliet"),
        ("golf hotel india juliet", "golf hotel india"),
        ("Alpha", "alpha"),
        ("Kilo lima", "kilo lima"),
        ("Kilo lima", "lima mike"),
        ("mike november", "mike november"),
        ("november oscar", "november oscar"),
    ]
    record = {
        "topic_id": "iou10",
        "documents": [{"doc_id": "d1", "text": doc}],
        "summary": {"text": summary},
        "alignments": [
            {
                "summary_fragments": [loc(summary, summary_needle)],
                "doc_id": "d1",
                "doc_fragments": [loc(doc, doc_needle)],
            }
            for summary_needle, doc_needle in pairs
        ],
    }
    return record


def write_topics(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


@pytest.fixture(scope="session")
def fixture_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "topics.jsonl"
    return write_topics(path, fixture_records())


@pytest.fixture(scope="session")
def fixture_sets(fixture_path):
    return load_topics(fixture_path)


@pytest.fixture(scope="session")
def fixture_clustered(fixture_sets):
    return [build_clusters(aset) for aset in fixture_sets]


@pytest.fixture()
def iou_topic_path(tmp_path):
    return write_topics(tmp_path / "iou10.jsonl", [iou_topic_record()])
