#!/usr/bin/env python3
"""Recompute aggregates.csv from records.csv in one pass and compare."""

import csv
import math
import sys
from collections import defaultdict

COLUMNS = (("rho", "rho"), ("mse", "train_mse"), ("residual", "residual"))


def main(out_dir):
    # Welford running mean and squared deviations per p.
    acc = defaultdict(lambda: {"n": 0, **{k: [0.0, 0.0] for k, _ in COLUMNS}})
    with open(f"{out_dir}/records.csv", newline="") as f:
        for row in csv.DictReader(f):
            cell = acc[int(row["p"])]
            if math.isnan(float(row["rho"])):
                continue
            cell["n"] += 1
            for key, col in COLUMNS:
                v = float(row[col])
                mean, m2 = cell[key]
                delta = v - mean
                mean += delta / cell["n"]
                cell[key] = [mean, m2 + delta * (v - mean)]

    with open(f"{out_dir}/aggregates.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    if sorted(int(r["p"]) for r in rows) != sorted(acc):
        print("p values differ between records and aggregates")
        return 1

    failures = 0
    for row in rows:
        cell = acc[int(row["p"])]
        if int(row["n_seeds"]) != cell["n"]:
            print(f"p={row['p']}: n_seeds {row['n_seeds']} != {cell['n']}")
            failures += 1
        if cell["n"] == 0:
            continue
        for key, _ in COLUMNS:
            mean, m2 = cell[key]
            for name, want in ((f"{key}_mean", mean), (f"{key}_std", math.sqrt(m2 / cell["n"]))):
                got = float(row[name])
                if abs(got - want) > 1e-12 * max(1.0, abs(want)):
                    print(f"p={row['p']} {name}: {got!r} vs {want!r}")
                    failures += 1
    print(f"{len(rows)} aggregate rows checked, {failures} mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1]))
