"""Write a synthetic immune-cell cohort CSV for the other demos.

The generating model shifts T.CD4 and B cells up and macrophages down
in the ``AA`` group, so the race effect is there to be found. Small
proportions are rounded to zero to exercise zero replacement.

Usage: python3 make_synthetic_cohort.py [OUT.csv] [N]
"""

import csv
import sys

import numpy as np

PARTS = ["T.cells.CD8", "T.cells.CD4", "B.cells", "NK.cells", "Macrophage",
         "Dendritic.cells", "Mast.cells", "Neutrophils", "Eosinophils"]
MEAN = np.array([0.14, 0.16, 0.07, 0.05, 0.45, 0.02, 0.09, 0.01, 0.01])
RACE_SHIFT = np.array([0.0, 0.45, 0.45, 0.3, -0.25, 0.0, 0.3, 0.1, 0.35])


def make(n=254, seed=7):
    rng = np.random.default_rng(seed)
    race = np.where(rng.random(n) < 0.25, "AA", "EA")
    age = np.round(rng.normal(65, 12, n), 1)
    logits = np.log(MEAN) + rng.normal(0, 0.8, (n, len(PARTS)))
    logits += np.outer(race == "AA", RACE_SHIFT)
    comp = np.exp(logits)
    comp /= comp.sum(axis=1, keepdims=True)
    comp[comp < 0.003] = 0.0
    comp /= comp.sum(axis=1, keepdims=True)
    return comp, race, age


def main(path="synthetic_cohort.csv", n=254):
    comp, race, age = make(int(n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", *PARTS, "race", "age"])
        for i in range(len(race)):
            w.writerow([f"S{i:03d}", *(repr(float(v)) for v in comp[i]), race[i], age[i]])
    print(f"wrote {path}: {len(race)} samples, {int((comp == 0).sum())} zeros")


if __name__ == "__main__":
    main(*sys.argv[1:])
