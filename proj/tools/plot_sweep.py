#!/usr/bin/env python3
"""Plot long-format CSV (x,method,metric,value) produced by the markovcp CLI.

Usage:
    python3 tools/plot_sweep.py sweep.csv --metric coverage_mean --out sweep.png
"""

import argparse
import csv
from collections import defaultdict


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path")
    parser.add_argument("--metric", default="coverage_mean")
    parser.add_argument("--out", default=None, help="Output image (default: show)")
    args = parser.parse_args()

    series = defaultdict(list)
    with open(args.csv_path, newline="") as handle:
        for row in csv.DictReader(handle):
            if row["metric"] == args.metric:
                series[row["method"]].append((float(row["x"]), float(row["value"])))

    if not series:
        raise SystemExit(f"no rows with metric '{args.metric}' in {args.csv_path}")

    import matplotlib

    if args.out:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for method, points in sorted(series.items()):
        points.sort()
        plt.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=method)
    plt.xlabel("x")
    plt.ylabel(args.metric)
    plt.legend()
    plt.grid(True, alpha=0.3)
    if args.out:
        plt.savefig(args.out, dpi=150, bbox_inches="tight")
        print(f"wrote {args.out}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
