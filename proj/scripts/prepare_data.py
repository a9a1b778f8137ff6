#!/usr/bin/env python3
"""Regenerate the committed CSVs under data/ from the raw upstream files.

Inputs (pass directories or files):
  --adult-train  UCI Adult train CSV with header (adult.data / adult.csv)
  --adult-test   UCI Adult test CSV with header (adult.test / adult.test.csv)
  --compas       ProPublica compas-scores-two-years.csv

Upstream sources:
  Adult:  UCI Machine Learning Repository, "Adult" (census income), 48842 rows.
  COMPAS: ProPublica compas-analysis, compas-scores-two-years.csv, 7214 rows.

The Adult files are copied through unmodified (missing values stay as '?';
the loader drops those rows at ingestion time). The COMPAS file gets the
standard two-year-recidivism filter (screening within 30 days, valid record,
non-ordinary charge, scored), which leaves 6172 rows, and is trimmed to the
analysis columns so no names or case identifiers are redistributed.
"""

import argparse
import csv
import json
import os

ADULT_COLUMNS = [
    ("age", "numeric", "feature", None),
    ("workclass", "categorical", "feature", None),
    ("fnlwgt", "numeric", "feature", None),
    ("education", "categorical", "feature", None),
    ("education-num", "numeric", "feature", None),
    ("marital-status", "categorical", "feature", None),
    ("occupation", "categorical", "feature", None),
    ("relationship", "categorical", "feature", None),
    ("race", "categorical", "sensitive", "White"),
    ("sex", "categorical", "feature", None),
    ("capital-gain", "numeric", "feature", None),
    ("capital-loss", "numeric", "feature", None),
    ("hours-per-week", "numeric", "feature", None),
    ("native-country", "categorical", "feature", None),
    ("income-per-year", "categorical", "label", ">50K"),
]

# demographic and criminal-history predictors only; the proprietary risk
# score (decile_score) is the tool's output, not an input attribute
COMPAS_COLUMNS = [
    ("sex", "categorical", "sensitive", "Male"),
    ("age", "numeric", "feature", None),
    ("age_cat", "categorical", "feature", None),
    ("juv_fel_count", "numeric", "feature", None),
    ("juv_misd_count", "numeric", "feature", None),
    ("juv_other_count", "numeric", "feature", None),
    ("priors_count", "numeric", "feature", None),
    ("c_charge_degree", "categorical", "feature", None),
    ("two_year_recid", "categorical", "label", "1"),
]


def write_schema(path, columns):
    schema = {
        "columns": [
            {"name": n, "kind": k, "role": r, **({"positive_value": p} if p else {})}
            for n, k, r, p in columns
        ]
    }
    with open(path, "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")


def copy_adult(src, dst):
    with open(src, newline="") as fin, open(dst, "w", newline="") as fout:
        reader = csv.reader(fin)
        writer = csv.writer(fout)
        for row in reader:
            # some mirrors leave a trailing '.' on test labels
            row = [c.strip().rstrip(".") if i == 14 else c.strip() for i, c in enumerate(row)]
            writer.writerow(row)


def filter_compas(src, dst):
    keep = [n for n, _, _, _ in COMPAS_COLUMNS]
    with open(src, newline="") as fin:
        rows = list(csv.DictReader(fin))
    out = []
    for r in rows:
        dbsa = r["days_b_screening_arrest"]
        if dbsa in ("", "NA"):
            continue
        if not (-30 <= float(dbsa) <= 30):
            continue
        if r["is_recid"] == "-1":
            continue
        if r["c_charge_degree"] == "O":
            continue
        if r["score_text"] == "N/A":
            continue
        out.append({k: r[k] for k in keep})
    with open(dst, "w", newline="") as fout:
        writer = csv.DictWriter(fout, fieldnames=keep)
        writer.writeheader()
        writer.writerows(out)
    return len(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--adult-train", required=True)
    ap.add_argument("--adult-test", required=True)
    ap.add_argument("--compas", required=True)
    ap.add_argument("--out", default="data")
    args = ap.parse_args()

    adult_dir = os.path.join(args.out, "adult")
    compas_dir = os.path.join(args.out, "compas")
    os.makedirs(adult_dir, exist_ok=True)
    os.makedirs(compas_dir, exist_ok=True)

    copy_adult(args.adult_train, os.path.join(adult_dir, "train.csv"))
    copy_adult(args.adult_test, os.path.join(adult_dir, "test.csv"))
    write_schema(os.path.join(adult_dir, "schema.json"), ADULT_COLUMNS)

    n = filter_compas(args.compas, os.path.join(compas_dir, "compas.csv"))
    write_schema(os.path.join(compas_dir, "schema.json"), COMPAS_COLUMNS)
    print(f"adult: copied train/test; compas: {n} rows after filter")


if __name__ == "__main__":
    main()
