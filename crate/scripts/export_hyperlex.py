#!/usr/bin/env python3
"""Convert the HyperLex noun file to word1<TAB>word2<TAB>score.

The input is the whitespace-separated ``nouns.txt`` from the HyperLex
release, with a header row naming WORD1, WORD2 and AVG_SCORE.

Usage:
  python3 scripts/export_hyperlex.py --in hyperlex/nouns.txt --out data/hyperlex/nouns.tsv
"""

import argparse
import os


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--in", dest="src", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--score-column", default="AVG_SCORE")
    args = ap.parse_args()

    with open(args.src, encoding="utf-8") as fh:
        header = fh.readline().split()
        w1, w2, sc = header.index("WORD1"), header.index("WORD2"), header.index(args.score_column)
        rows = [line.split() for line in fh if line.strip()]

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as out:
        for r in rows:
            out.write(f"{r[w1].lower()}\t{r[w2].lower()}\t{float(r[sc])}\n")
    print(f"{len(rows)} pairs -> {args.out}")


if __name__ == "__main__":
    main()
