#!/usr/bin/env python3
"""Plot an `ead sweep` CSV: large-model usage (x) against score or cost (y), one point per tau.

Rows without a score_percent are plotted against param_ratio_percent instead.
"""

import argparse
import csv
import math
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

HEADER = ["tau", "large_usage_percent", "param_ratio_percent", "score_percent", "runs"]


def load(path):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for i, row in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "tau": float(row["tau"]),  # float() accepts "inf"
                        "usage": float(row["large_usage_percent"]),
                        "ratio": float(row["param_ratio_percent"]),
                        "score": float(row["score_percent"]) if row["score_percent"] else None,
                        "runs": int(row["runs"]),
                    }
                )
            except ValueError as e:
                raise ValueError(f"{path}:{i}: {e}") from e
    if not rows:
        raise ValueError(f"{path}: no rows")
    return rows


def plot(rows, out, title):
    use_score = all(r["score"] is not None for r in rows)
    ys = [r["score"] if use_score else r["ratio"] for r in rows]
    finite = [r["tau"] for r in rows if math.isfinite(r["tau"])]
    top = max(finite) if finite else 1.0

    fig, ax = plt.subplots(figsize=(6, 6))
    for r, y in zip(rows, ys):
        shade = 1.0 if not math.isfinite(r["tau"]) else (r["tau"] / top if top > 0 else 0.0)
        ax.scatter(r["usage"], y, s=60, color=(0.7 * (1 - shade), 0.0, 0.8 * shade))
        ax.annotate(f"τ={r['tau']:g}", (r["usage"], y), textcoords="offset points", xytext=(5, 5), fontsize=8)
    ax.set_xlim(0, 100)
    ax.set_xlabel("Large Model Usage (%)")
    ax.set_ylabel("Score (%)" if use_score else "Parameter Ratio (%)")
    ax.set_title(title)
    ax.grid(True, color="0.9")
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", default="sweep.png")
    ap.add_argument("--title", default="Large model usage by entropy threshold")
    args = ap.parse_args(argv)
    try:
        rows = load(args.csv)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    plot(rows, args.out, args.title)
    print(f"wrote {args.out} ({len(rows)} points)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
