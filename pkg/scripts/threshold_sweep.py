"""Sweep the cluster-linking IoU threshold over a topic file.

For each threshold the script rebuilds the proposition clusters and reports
how the corpus shape responds: cluster count, average cluster size, the
singleton share, and clusters per summary sentence. Useful for checking how
sensitive a corpus is to the 0.5 default before deriving datasets.
"""
import argparse
import json
import sys

from alignkit.analytics import corpus_stats
from alignkit.clusters import build_clusters
from alignkit.corpus import load_topics


def sweep(sets, thresholds):
    rows = []
    for threshold in thresholds:
        stats = corpus_stats([build_clusters(aset, iou_threshold=threshold) for aset in sets])
        singleton_share = (
            stats.singleton_clusters / stats.clusters if stats.clusters else 0.0
        )
        rows.append(
            {
                "iou_threshold": threshold,
                "clusters": stats.clusters,
                "avg_cluster_size": stats.avg_cluster_size,
                "singleton_share": singleton_share,
                "avg_clusters_per_sentence": stats.avg_clusters_per_sentence,
            }
        )
    return rows


def parse_thresholds(raw):
    values = [float(part) for part in raw.split(",") if part.strip()]
    for v in values:
        if not 0.0 < v <= 1.0:
            raise argparse.ArgumentTypeError(f"thresholds must be in (0, 1], got {v}")
    return values


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="topic alignment JSONL file")
    parser.add_argument(
        "--thresholds",
        type=parse_thresholds,
        default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        help="comma-separated list, each in (0, 1]",
    )
    parser.add_argument("--out", help="optional JSON file for the sweep rows")
    args = parser.parse_args()

    sets = load_topics(args.input)
    rows = sweep(sets, args.thresholds)

    header = ("iou", "clusters", "avg size", "singleton", "per sentence")
    print(f"{header[0]:>5} {header[1]:>9} {header[2]:>9} {header[3]:>10} {header[4]:>13}")
    for row in rows:
        print(
            f"{row['iou_threshold']:>5.2f} {row['clusters']:>9d} "
            f"{row['avg_cluster_size']:>9.3f} {row['singleton_share']:>10.3f} "
            f"{row['avg_clusters_per_sentence']:>13.3f}"
        )

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump({"input": args.input, "rows": rows}, fh, indent=2)
            fh.write("\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
