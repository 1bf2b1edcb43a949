#!/usr/bin/env python3
"""Generate the CSV data files under data/.

* breast_cancer.csv  -- the Breast Cancer Wisconsin (Diagnostic) dataset as
  bundled with scikit-learn (569 rows, 30 features, 212 positives;
  diagnosis 1 = malignant).
* cervical_cancer.csv -- a synthetic stand-in with the same shape and
  missingness structure as the UCI Cervical Cancer (Risk Factors) dataset:
  808 rows x 36 feature columns plus a binary `Schiller` target, two columns
  with >50% missing values, 140 rows with every feature missing, and
  scattered '?' tokens elsewhere. After the standard preprocessing (drop
  columns >50% missing, drop all-missing rows, KNN-impute) it yields
  668 rows x 34 features. Replace it with the real UCI file to run on the
  actual data.

Deterministic; safe to rerun.
"""

import numpy as np
import pandas as pd
from sklearn.datasets import load_breast_cancer

RNG = np.random.default_rng(20250809)
OUT_DIR = "data"


def make_breast():
    bundle = load_breast_cancer()
    cols = [c.replace(" ", "_") for c in bundle.feature_names]
    df = pd.DataFrame(bundle.data, columns=cols)
    df["diagnosis"] = (bundle.target == 0).astype(int)  # 1 = malignant
    assert len(df) == 569 and int(df["diagnosis"].sum()) == 212
    df.to_csv(f"{OUT_DIR}/breast_cancer.csv", index=False)
    print(f"breast_cancer.csv: {df.shape[0]} rows, {df.shape[1] - 1} features, "
          f"{int(df['diagnosis'].sum())} positives")


def make_cervical():
    n = 808
    n_all_missing = 140

    age = RNG.integers(15, 60, n).astype(float)
    partners = RNG.poisson(2.5, n).astype(float) + 1
    first_intercourse = np.clip(RNG.normal(17, 2.5, n), 12, 30).round(1)
    pregnancies = RNG.poisson(2.2, n).astype(float)
    smokes = (RNG.random(n) < 0.15).astype(float)
    smokes_years = np.where(smokes > 0, RNG.gamma(2.0, 4.0, n), 0.0).round(2)
    contraceptives = (RNG.random(n) < 0.6).astype(float)
    contraceptive_years = np.where(contraceptives > 0, RNG.gamma(2.0, 3.0, n), 0.0).round(2)
    iud = (RNG.random(n) < 0.1).astype(float)
    iud_years = np.where(iud > 0, RNG.gamma(1.5, 3.0, n), 0.0).round(2)
    std_any = (RNG.random(n) < 0.12).astype(float)
    std_count = np.where(std_any > 0, RNG.integers(1, 4, n), 0).astype(float)

    columns = {
        "age": age,
        "sexual_partners": partners,
        "first_intercourse_age": first_intercourse,
        "pregnancies": pregnancies,
        "smokes": smokes,
        "smokes_years": smokes_years,
        "smokes_packs_per_year": (smokes_years * RNG.uniform(0.2, 1.5, n)).round(2),
        "hormonal_contraceptives": contraceptives,
        "hormonal_contraceptive_years": contraceptive_years,
        "iud": iud,
        "iud_years": iud_years,
        "std_any": std_any,
        "std_count": std_count,
        "std_condylomatosis": (std_any * (RNG.random(n) < 0.5)).astype(float),
        "std_cervical_condylomatosis": (std_any * (RNG.random(n) < 0.1)).astype(float),
        "std_vaginal_condylomatosis": (std_any * (RNG.random(n) < 0.2)).astype(float),
        "std_syphilis": (std_any * (RNG.random(n) < 0.2)).astype(float),
        "std_pid": (std_any * (RNG.random(n) < 0.1)).astype(float),
        "std_genital_herpes": (std_any * (RNG.random(n) < 0.15)).astype(float),
        "std_molluscum": (std_any * (RNG.random(n) < 0.1)).astype(float),
        "std_aids": (std_any * (RNG.random(n) < 0.05)).astype(float),
        "std_hiv": (std_any * (RNG.random(n) < 0.15)).astype(float),
        "std_hepatitis_b": (std_any * (RNG.random(n) < 0.1)).astype(float),
        "std_hpv": (std_any * (RNG.random(n) < 0.3)).astype(float),
        "std_diagnoses": np.minimum(std_count, 2.0),
        # the two chronically under-recorded follow-up columns
        "std_time_since_first_diagnosis": RNG.integers(1, 22, n).astype(float),
        "std_time_since_last_diagnosis": RNG.integers(1, 22, n).astype(float),
        "dx_cancer": (RNG.random(n) < 0.02).astype(float),
        "dx_cin": (RNG.random(n) < 0.02).astype(float),
        "dx_hpv": (RNG.random(n) < 0.03).astype(float),
        "dx_any": None,  # filled below
        "cytology_score": None,  # filled below (signal-bearing)
        "inflammation_marker": None,
        "lesion_extent": None,
        "screening_interval_years": np.clip(RNG.normal(3, 1, n), 0.5, 10).round(1),
        "clinic_visits": RNG.poisson(4, n).astype(float),
    }
    dx_any = np.maximum.reduce([columns["dx_cancer"], columns["dx_cin"], columns["dx_hpv"]])
    columns["dx_any"] = dx_any

    # Latent risk drives the target and three correlated markers, so trained
    # trees have real signal to find.
    risk = (
        0.8 * dx_any
        + 0.35 * columns["std_hpv"]
        + 0.25 * smokes
        + 0.15 * (std_count > 1)
        + 0.02 * np.maximum(age - 35, 0)
        + RNG.normal(0, 0.35, n)
    )
    target = (risk > np.quantile(risk, 0.85)).astype(int)  # ~15% positives

    columns["cytology_score"] = np.clip(risk * 2.0 + RNG.normal(0, 0.6, n), -2, 6).round(3)
    columns["inflammation_marker"] = np.clip(1.5 * target + RNG.normal(1.0, 0.8, n), 0, None).round(3)
    columns["lesion_extent"] = np.where(
        target > 0,
        RNG.integers(1, 4, n),
        (RNG.random(n) < 0.1) * RNG.integers(1, 3, n),
    ).astype(float)

    df = pd.DataFrame(columns)
    assert df.shape[1] == 36

    # Missingness. Work on an object copy so '?' tokens survive.
    out = df.astype(object)

    # two columns with ~92% missing (mirrors the follow-up columns)
    for heavy in ["std_time_since_first_diagnosis", "std_time_since_last_diagnosis"]:
        mask = RNG.random(n) < 0.92
        out.loc[mask, heavy] = "?"

    # scattered missingness on a few columns (kept far below the 50% cut)
    for light, rate in [
        ("smokes_years", 0.08),
        ("hormonal_contraceptive_years", 0.10),
        ("iud_years", 0.06),
        ("std_count", 0.05),
        ("first_intercourse_age", 0.04),
        ("pregnancies", 0.03),
    ]:
        mask = RNG.random(n) < rate
        out.loc[mask, light] = "?"

    # 140 rows with every feature missing (target still recorded); these are
    # the rows the preprocessing drops.
    all_missing_rows = RNG.choice(n, size=n_all_missing, replace=False)
    out.iloc[all_missing_rows, :] = "?"

    out["Schiller"] = target
    out.to_csv(f"{OUT_DIR}/cervical_cancer.csv", index=False)

    kept = np.setdiff1d(np.arange(n), all_missing_rows)
    print(f"cervical_cancer.csv: {n} rows, 36 features + Schiller, "
          f"{int(target.sum())} positives ({int(target[kept].sum())} on kept rows); "
          f"expect 668 x 34 after preprocessing")


if __name__ == "__main__":
    make_breast()
    make_cervical()
