#!/usr/bin/env python3
"""Fetch the Seeds, Banknote Authentication, and Statlog Heart datasets from
the UCI archive into data/ as CSV files with a trailing `class` column.

Needs direct network access to archive.ics.uci.edu; run it once on a machine
with connectivity and copy data/*.csv alongside the repository. The
acceptance tests for these datasets skip (with a notice) when the files are
absent.
"""

import csv
import io
import os
import urllib.request
import zipfile

BASE = "https://archive.ics.uci.edu/static/public"
OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def fetch_zip_member(url, member):
    with urllib.request.urlopen(url) as resp:
        blob = resp.read()
    with zipfile.ZipFile(io.BytesIO(blob)) as zf:
        return zf.read(member).decode("utf-8")


def seeds():
    # 210 samples, 7 numeric features, 3 wheat varieties; whitespace-separated.
    text = fetch_zip_member(f"{BASE}/236/seeds.zip", "seeds_dataset.txt")
    names = ["kama", "rosa", "canadian"]
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 8:
            continue
        rows.append(parts[:7] + [names[int(float(parts[7])) - 1]])
    header = [
        "area", "perimeter", "compactness", "kernel_length", "kernel_width",
        "asymmetry", "groove_length", "class",
    ]
    write_csv(os.path.join(OUT_DIR, "seeds.csv"), header, rows)


def banknote():
    # 1372 samples, 4 wavelet features, 2 classes.
    text = fetch_zip_member(
        f"{BASE}/267/banknote+authentication.zip", "data_banknote_authentication.txt"
    )
    names = ["genuine", "forged"]
    rows = []
    for line in text.splitlines():
        parts = line.strip().split(",")
        if len(parts) != 5:
            continue
        rows.append(parts[:4] + [names[int(parts[4])]])
    header = ["variance", "skewness", "curtosis", "entropy", "class"]
    write_csv(os.path.join(OUT_DIR, "banknote.csv"), header, rows)


def heart():
    # Statlog (Heart): 270 samples, 13 features, 2 classes; space-separated.
    text = fetch_zip_member(f"{BASE}/145/statlog+heart.zip", "heart.dat")
    names = {"1": "absence", "2": "presence"}
    rows = []
    for line in text.splitlines():
        parts = line.split()
        if len(parts) != 14:
            continue
        rows.append(parts[:13] + [names[parts[13].rstrip(".0")[0]]])
    header = [
        "age", "sex", "chest_pain", "resting_bp", "cholesterol", "fasting_sugar",
        "resting_ecg", "max_heart_rate", "angina", "oldpeak", "slope",
        "major_vessels", "thal", "class",
    ]
    write_csv(os.path.join(OUT_DIR, "heart.csv"), header, rows)


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for fetch in (seeds, banknote, heart):
        try:
            fetch()
        except Exception as exc:  # noqa: BLE001 - report and continue
            print(f"{fetch.__name__}: FAILED ({exc})")


if __name__ == "__main__":
    main()
