#!/usr/bin/env python3
"""Build a COMPAS audit directory for `faith audit` and the acceptance run.

Trains a plain logistic regression on 70% of the ProPublica two-year
recidivism data, using the binned features of the audit grid, and writes the
held-out 30% with the model's predictions:

    OUT/config.json          audit config (race and sex move for free, the rest is fixed)
    OUT/audit_<k>.csv        held-out rows of split k
    OUT/predictions_<k>.csv  split k's model on every grid point, for cells with no rows

The raw CSV is compas-scores-two-years.csv. Pass it with --csv, or pass a
wheel that bundles it (`pip download --no-deps responsibly`) with --wheel.
"""

import argparse
import io
import json
import sys
import zipfile
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import train_test_split

CSV_NAME = "compas-scores-two-years.csv"
FEATURES = {
    "race": ["African-American", "Caucasian"],
    "sex": ["Female", "Male"],
    "age": ["<25", "25-45", ">45"],
    "priors": ["0", "1-3", ">3"],
    "charge": ["felony", "misdemeanor"],
}


def read_raw(args):
    if args.csv:
        return pd.read_csv(args.csv)
    with zipfile.ZipFile(args.wheel) as z:
        names = [n for n in z.namelist() if n.endswith(CSV_NAME)]
        if not names:
            sys.exit(f"{args.wheel}: no {CSV_NAME} inside")
        return pd.read_csv(io.BytesIO(z.read(names[0])))


def clean(df):
    # The usual ProPublica screening filters, two races.
    df = df[(df.days_b_screening_arrest <= 30) & (df.days_b_screening_arrest >= -30)]
    df = df[(df.is_recid != -1) & (df.c_charge_degree != "O") & (df.score_text != "N/A")]
    df = df[df.race.isin(FEATURES["race"])]
    return pd.DataFrame({
        "race": df.race,
        "sex": df.sex,
        "age": df.age_cat.map({"Less than 25": "<25", "25 - 45": "25-45", "Greater than 45": ">45"}),
        "priors": np.select([df.priors_count == 0, df.priors_count <= 3], ["0", "1-3"], ">3"),
        "charge": df.c_charge_degree.map({"F": "felony", "M": "misdemeanor"}),
        "label": df.two_year_recid.astype(int),
    }).reset_index(drop=True)


def design(df):
    # One-hot over the grid, first category dropped.
    cols = []
    for name, cats in FEATURES.items():
        cols += [(df[name] == c).astype(float).to_numpy() for c in cats[1:]]
    return np.column_stack(cols)


def grid():
    return pd.MultiIndex.from_product(FEATURES.values(), names=FEATURES.keys()).to_frame(index=False)


def config(args):
    return {
        "schema": {
            "features": [
                {"name": name, "categories": cats} for name, cats in FEATURES.items()
            ],
            "labels": ["0", "1"],
        },
        "similarity": {
            "zero_cost_features": ["race", "sex"],
            "forbidden_features": ["age", "priors", "charge"],
        },
        "epsilon": 1.0,
        "delta": 0.0365,
        "alpha": 0.05,
        "bootstrap": {"method": "mn", "B": args.B},
        "model": {"source": "predictions_file", "path": "predictions_0.csv"},
        "complete_space": True,
        # Favourable outcome is "no recidivism"; SPD is taken over race.
        "privileged": {"feature": "race", "values": ["Caucasian"]},
        "positive_label": "0",
        "seed": args.seed,
    }


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--csv", type=Path, help=f"path to {CSV_NAME}")
    src.add_argument("--wheel", type=Path, help=f"wheel or zip containing {CSV_NAME}")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--splits", type=int, default=10, help="number of random 70/30 splits")
    p.add_argument("--B", type=int, default=1000, help="bootstrap draws in the written config")
    p.add_argument("--seed", type=int, default=10, help="bootstrap seed in the written config")
    args = p.parse_args()

    df = clean(read_raw(args))
    x, y = design(df), df.label.to_numpy()
    points = grid()
    args.out.mkdir(parents=True, exist_ok=True)
    for k in range(args.splits):
        idx_train, idx_test = train_test_split(np.arange(len(df)), test_size=0.3, random_state=k, stratify=y)
        model = LogisticRegression(max_iter=1000).fit(x[idx_train], y[idx_train])
        test = df.iloc[idx_test].reset_index(drop=True)
        test["prediction"] = model.predict(x[idx_test])
        test.to_csv(args.out / f"audit_{k}.csv", index=False)
        points.assign(prediction=model.predict(design(points))).to_csv(
            args.out / f"predictions_{k}.csv", index=False)
        print(f"split {k}: train {len(idx_train)}, audit {len(idx_test)}, "
              f"accuracy {np.mean(test.prediction == y[idx_test]):.3f}")
    (args.out / "config.json").write_text(json.dumps(config(args), indent=2) + "\n")


if __name__ == "__main__":
    main()
