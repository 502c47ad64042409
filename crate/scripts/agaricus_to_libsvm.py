#!/usr/bin/env python3
"""Convert the UCI agaricus-lepiota table to LIBSVM text.

Rows are shuffled with a fixed seed before the first ROWS are kept, since the
source file is grouped by class. Each categorical attribute value observed in
the kept rows becomes one binary feature, numbered in (attribute, value) order
starting at 1. Edible rows get label +1 and poisonous rows -1.

usage: agaricus_to_libsvm.py INPUT OUTPUT [ROWS]
"""

import random
import sys


def main():
    src, dst = sys.argv[1], sys.argv[2]
    limit = int(sys.argv[3]) if len(sys.argv) > 3 else None
    with open(src) as f:
        rows = [line.strip().split(",") for line in f if line.strip()]
    random.Random(0).shuffle(rows)
    if limit is not None:
        rows = rows[:limit]
    values = sorted({(j, v) for r in rows for j, v in enumerate(r[1:])})
    index = {key: i + 1 for i, key in enumerate(values)}
    with open(dst, "w") as out:
        for r in rows:
            label = "+1" if r[0] == "e" else "-1"
            feats = sorted(index[(j, v)] for j, v in enumerate(r[1:]))
            out.write(label + "".join(f" {k}:1" for k in feats) + "\n")
    print(f"{len(rows)} rows, {len(values)} features", file=sys.stderr)


if __name__ == "__main__":
    main()
