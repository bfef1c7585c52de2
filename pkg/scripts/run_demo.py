"""End-to-end walkthrough on a small bundled corpus.

Writes three aligned topics to a working directory, then drives the full
pipeline through the command-line interface: ingest, derive, baseline,
eval for every task, and analyze. The result files land under --workdir.
"""
import argparse
import json
import os
import sys

from alignkit.cli import main as alignkit_main
from alignkit.tasks import TASK_NAMES


def loc(text, needle):
    start = text.index(needle)
    return [start, start + len(needle)]


def demo_records():
    wildfire_d1 = (
        "A fast-moving wildfire closed the coastal highway north of the city on "
        "Thursday. Crews from three counties worked through the night to cut "
        "containment lines. Officials estimated the burn area at nine thousand acres."
    )
    wildfire_d2 = (
        "The coastal highway remained closed in both directions after a wildfire "
        "jumped the ridge on Thursday. Evacuation orders covered two small towns."
    )
    wildfire_summary = (
        "A fast-moving wildfire closed the coastal highway on Thursday. "
        "Evacuation orders covered two towns."
    )
    drought_d1 = (
        "The regional water authority approved mandatory rationing after the "
        "reservoir fell to a quarter of its capacity. Lawn watering is banned "
        "until further notice."
    )
    drought_d2 = (
        "Reservoir levels dropped to twenty-five percent this week, the lowest "
        "reading on record. Farmers asked the state for emergency relief."
    )
    drought_summary = (
        "Mandatory rationing was approved after the reservoir fell to a quarter "
        "of capacity. Farmers asked the state for emergency relief."
    )
    transit_d1 = (
        "The city council voted to extend the light-rail line to the airport by "
        "2031. Construction bids open in the spring."
    )
    transit_d2 = (
        "Transit planners said the airport extension of the light-rail line "
        "will add six stations. Funding combines federal grants and a local "
        "sales tax."
    )
    transit_summary = (
        "The council voted to extend the light-rail line to the airport. "
        "The extension will add six stations."
    )

    def topic(topic_id, documents, summary, alignments):
        return {
            "topic_id": topic_id,
            "documents": [{"doc_id": d, "text": t} for d, t in documents],
            "summary": {"text": summary},
            "alignments": [
                {
                    "summary_fragments": [loc(summary, s_needle)],
                    "doc_id": doc_id,
                    "doc_fragments": [loc(dict(documents)[doc_id], d_needle)],
                }
                for s_needle, doc_id, d_needle in alignments
            ],
        }

    return [
        topic(
            "wildfire",
            [("d1", wildfire_d1), ("d2", wildfire_d2)],
            wildfire_summary,
            [
                (
                    "A fast-moving wildfire closed the coastal highway on Thursday",
                    "d1",
                    "A fast-moving wildfire closed the coastal highway north of the city on Thursday",
                ),
                (
                    "wildfire closed the coastal highway on Thursday",
                    "d2",
                    "The coastal highway remained closed in both directions after a wildfire",
                ),
                (
                    "Evacuation orders covered two towns",
                    "d2",
                    "Evacuation orders covered two small towns",
                ),
            ],
        ),
        topic(
            "drought",
            [("d1", drought_d1), ("d2", drought_d2)],
            drought_summary,
            [
                (
                    "Mandatory rationing was approved after the reservoir fell to a quarter of capacity",
                    "d1",
                    "approved mandatory rationing after the reservoir fell to a quarter of its capacity",
                ),
                (
                    "Farmers asked the state for emergency relief",
                    "d2",
                    "Farmers asked the state for emergency relief",
                ),
            ],
        ),
        topic(
            "transit",
            [("d1", transit_d1), ("d2", transit_d2)],
            transit_summary,
            [
                (
                    "The council voted to extend the light-rail line to the airport",
                    "d1",
                    "The city council voted to extend the light-rail line to the airport by 2031",
                ),
                (
                    "extend the light-rail line to the airport",
                    "d2",
                    "the airport extension of the light-rail line",
                ),
                (
                    "The extension will add six stations",
                    "d2",
                    "will add six stations",
                ),
            ],
        ),
    ]


def run(argv):
    code = alignkit_main(argv)
    if code != 0:
        raise SystemExit(f"step failed with exit code {code}: {' '.join(argv)}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_out", help="where to put all artifacts")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    topics = os.path.join(args.workdir, "topics.jsonl")
    with open(topics, "w", encoding="utf-8") as fh:
        for record in demo_records():
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    print(f"wrote {topics}")

    derived = os.path.join(args.workdir, "derived")
    preds = os.path.join(args.workdir, "predictions")
    scores = os.path.join(args.workdir, "scores")
    seed = str(args.seed)

    run(["ingest", "--input", topics, "--out", args.workdir])
    run(["derive", "--input", topics, "--out", derived, "--seed", seed])
    run(["baseline", "--input", derived, "--out", preds, "--seed", seed])
    for task in TASK_NAMES:
        run([
            "eval",
            "--task", task,
            "--gold", os.path.join(derived, f"{task}.data.jsonl"),
            "--pred", os.path.join(preds, f"{task}.data.predictions.jsonl"),
            "--out", scores,
        ])
    run(["analyze", "--input", topics, "--out", os.path.join(args.workdir, "analysis")])
    print(f"\nall artifacts are under {args.workdir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
