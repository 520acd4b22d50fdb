#!/usr/bin/env python3
"""Export the scikit-learn bundled copies of the Iris and Wine UCI datasets
to data/ as plain CSV files with a trailing `class` label column."""

import csv
import os

from sklearn.datasets import load_iris, load_wine

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")


def export(bunch, path, label_names):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        header = [
            name.replace(" (cm)", "").replace(" ", "_") for name in bunch.feature_names
        ]
        writer.writerow(header + ["class"])
        for row, target in zip(bunch.data, bunch.target):
            cells = [repr(float(v)) for v in row]
            writer.writerow(cells + [label_names[target]])
    print(f"wrote {path}")


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    iris = load_iris()
    export(iris, os.path.join(OUT_DIR, "iris.csv"), list(iris.target_names))
    wine = load_wine()
    export(wine, os.path.join(OUT_DIR, "wine.csv"), list(wine.target_names))


if __name__ == "__main__":
    main()
