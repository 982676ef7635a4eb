"""Deterministic synthesis of the canonical cohort table.

The generator writes a CSV with the same shape and aggregate statistics as
the public dropout-and-academic-success export this pipeline targets:
4,423 rows, 36 data columns, class histogram (2208, 1421, 794), roughly
3.4% missing numeric cells and 7.8% missing categorical cells.

A configurable slice of Dropout-labelled rows is drawn from the Graduate
feature distributions ("discordant" students whose tabular signals look
healthy); their row indexes are recorded in the sidecar manifest so tests
can target them. Everything is a pure function of the seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import CATEGORICAL_FIELDS, NUMERIC_FIELDS

CLASS_COUNTS = {"Graduate": 2208, "Dropout": 1421, "Enrolled": 794}

DISPLAY_HEADERS = {
    "marital_status": "Marital status",
    "application_mode": "Application mode",
    "application_order": "Application order",
    "course": "Course",
    "daytime_evening_attendance": "Daytime/evening attendance",
    "previous_qualification": "Previous qualification",
    "nationality": "Nationality",
    "mothers_qualification": "Mother's qualification",
    "fathers_qualification": "Father's qualification",
    "mothers_occupation": "Mother's occupation",
    "fathers_occupation": "Father's occupation",
    "displaced": "Displaced",
    "educational_special_needs": "Educational special needs",
    "debtor": "Debtor",
    "tuition_fees_up_to_date": "Tuition fees up to date",
    "gender": "Gender",
    "scholarship_holder": "Scholarship holder",
    "international": "International",
    "age_band": "Age band",
    "curricular_units_1st_sem_credited": "Curricular units 1st sem (credited)",
    "curricular_units_1st_sem_enrolled": "Curricular units 1st sem (enrolled)",
    "curricular_units_1st_sem_evaluations": "Curricular units 1st sem (evaluations)",
    "curricular_units_1st_sem_approved": "Curricular units 1st sem (approved)",
    "curricular_units_1st_sem_without_evaluations": "Curricular units 1st sem (without evaluations)",
    "curricular_units_2nd_sem_credited": "Curricular units 2nd sem (credited)",
    "curricular_units_2nd_sem_enrolled": "Curricular units 2nd sem (enrolled)",
    "curricular_units_2nd_sem_evaluations": "Curricular units 2nd sem (evaluations)",
    "curricular_units_2nd_sem_approved": "Curricular units 2nd sem (approved)",
    "curricular_units_2nd_sem_without_evaluations": "Curricular units 2nd sem (without evaluations)",
    "previous_qualification_grade": "Previous qualification (grade)",
    "admission_grade": "Admission grade",
    "curricular_units_1st_sem_grade": "Curricular units 1st sem (grade)",
    "curricular_units_2nd_sem_grade": "Curricular units 2nd sem (grade)",
    "age_at_enrollment": "Age at enrollment",
    "gdp": "GDP",
    "term": "Term",
    "target": "Target",
}

GDP_VALUES = (-4.06, -1.7, -0.92, 0.32, 0.79, 1.74, 1.79, 2.02, 3.51)

# Per-column level sets and class-conditional weights. Columns without an
# entry in CLASS_WEIGHTS use the shared base weights for every class.
BASE_LEVELS = {
    "marital_status": ([1, 2, 3], [0.81, 0.14, 0.05]),
    "application_mode": ([1, 2, 3, 4], [0.46, 0.26, 0.17, 0.11]),
    "application_order": ([1, 2, 3], [0.6, 0.27, 0.13]),
    "course": ([1, 2, 3, 4, 5, 6, 7], [0.21, 0.18, 0.16, 0.14, 0.12, 0.1, 0.09]),
    "daytime_evening_attendance": ([0, 1], [0.11, 0.89]),
    "previous_qualification": ([1, 2, 3, 4], [0.74, 0.13, 0.08, 0.05]),
    "nationality": ([1, 2, 3], [0.92, 0.05, 0.03]),
    "mothers_qualification": ([1, 2, 3, 4, 5], [0.32, 0.28, 0.2, 0.12, 0.08]),
    "fathers_qualification": ([1, 2, 3, 4, 5], [0.35, 0.27, 0.2, 0.11, 0.07]),
    "mothers_occupation": ([1, 2, 3, 4, 5], [0.32, 0.24, 0.2, 0.14, 0.1]),
    "fathers_occupation": ([1, 2, 3, 4, 5], [0.3, 0.26, 0.19, 0.15, 0.1]),
    "displaced": ([0, 1], [0.45, 0.55]),
    "educational_special_needs": ([0, 1], [0.99, 0.01]),
    "gender": ([0, 1], [0.65, 0.35]),
    "international": ([0, 1], [0.975, 0.025]),
    "curricular_units_1st_sem_credited": ([0, 1, 2], [0.86, 0.09, 0.05]),
    "curricular_units_1st_sem_enrolled": ([4, 5, 6, 7], [0.15, 0.3, 0.4, 0.15]),
    "curricular_units_2nd_sem_credited": ([0, 1, 2], [0.88, 0.08, 0.04]),
    "curricular_units_2nd_sem_enrolled": ([4, 5, 6, 7], [0.14, 0.31, 0.41, 0.14]),
}

APPROVED_LEVELS = [0, 1, 2, 3, 4, 5, 6, 7, 8]
EVAL_LEVELS = [5, 6, 7, 8, 9, 10]
WITHOUT_EVAL_LEVELS = [0, 1, 2]
AGE_BAND_LEVELS = [1, 2, 3, 4, 5]

CLASS_WEIGHTS = {
    "debtor": {
        "Graduate": ([0, 1], [0.93, 0.07]),
        "Enrolled": ([0, 1], [0.84, 0.16]),
        "Dropout": ([0, 1], [0.74, 0.26]),
    },
    "tuition_fees_up_to_date": {
        "Graduate": ([0, 1], [0.07, 0.93]),
        "Enrolled": ([0, 1], [0.16, 0.84]),
        "Dropout": ([0, 1], [0.30, 0.70]),
    },
    "scholarship_holder": {
        "Graduate": ([0, 1], [0.67, 0.33]),
        "Enrolled": ([0, 1], [0.82, 0.18]),
        "Dropout": ([0, 1], [0.86, 0.14]),
    },
    "age_band": {
        "Graduate": (AGE_BAND_LEVELS, [0.42, 0.3, 0.16, 0.08, 0.04]),
        "Enrolled": (AGE_BAND_LEVELS, [0.34, 0.28, 0.2, 0.12, 0.06]),
        "Dropout": (AGE_BAND_LEVELS, [0.24, 0.26, 0.24, 0.16, 0.1]),
    },
    "curricular_units_1st_sem_approved": {
        "Graduate": (APPROVED_LEVELS, [0.01, 0.01, 0.02, 0.04, 0.08, 0.18, 0.3, 0.24, 0.12]),
        "Enrolled": (APPROVED_LEVELS, [0.04, 0.06, 0.1, 0.16, 0.22, 0.2, 0.12, 0.07, 0.03]),
        "Dropout": (APPROVED_LEVELS, [0.18, 0.16, 0.15, 0.14, 0.12, 0.10, 0.08, 0.04, 0.03]),
    },
    "curricular_units_2nd_sem_approved": {
        "Graduate": (APPROVED_LEVELS, [0.01, 0.01, 0.02, 0.05, 0.09, 0.19, 0.29, 0.23, 0.11]),
        "Enrolled": (APPROVED_LEVELS, [0.05, 0.07, 0.11, 0.17, 0.21, 0.19, 0.11, 0.06, 0.03]),
        "Dropout": (APPROVED_LEVELS, [0.20, 0.17, 0.15, 0.13, 0.12, 0.10, 0.07, 0.03, 0.03]),
    },
    "curricular_units_1st_sem_evaluations": {
        "Graduate": (EVAL_LEVELS, [0.08, 0.16, 0.3, 0.26, 0.14, 0.06]),
        "Enrolled": (EVAL_LEVELS, [0.12, 0.2, 0.28, 0.22, 0.12, 0.06]),
        "Dropout": (EVAL_LEVELS, [0.3, 0.26, 0.2, 0.13, 0.07, 0.04]),
    },
    "curricular_units_2nd_sem_evaluations": {
        "Graduate": (EVAL_LEVELS, [0.09, 0.17, 0.29, 0.25, 0.14, 0.06]),
        "Enrolled": (EVAL_LEVELS, [0.13, 0.21, 0.27, 0.21, 0.12, 0.06]),
        "Dropout": (EVAL_LEVELS, [0.34, 0.25, 0.19, 0.12, 0.06, 0.04]),
    },
    "curricular_units_1st_sem_without_evaluations": {
        "Graduate": (WITHOUT_EVAL_LEVELS, [0.93, 0.05, 0.02]),
        "Enrolled": (WITHOUT_EVAL_LEVELS, [0.88, 0.08, 0.04]),
        "Dropout": (WITHOUT_EVAL_LEVELS, [0.74, 0.16, 0.10]),
    },
    "curricular_units_2nd_sem_without_evaluations": {
        "Graduate": (WITHOUT_EVAL_LEVELS, [0.92, 0.06, 0.02]),
        "Enrolled": (WITHOUT_EVAL_LEVELS, [0.87, 0.09, 0.04]),
        "Dropout": (WITHOUT_EVAL_LEVELS, [0.70, 0.18, 0.12]),
    },
}

# numeric columns: class -> (mean, sd, low, high)
NUMERIC_PARAMS = {
    "previous_qualification_grade": {
        "Graduate": (133.0, 12.5, 95.0, 190.0),
        "Enrolled": (131.0, 12.5, 95.0, 190.0),
        "Dropout": (128.5, 13.0, 95.0, 190.0),
    },
    "admission_grade": {
        "Graduate": (128.0, 13.0, 95.0, 190.0),
        "Enrolled": (126.0, 13.0, 95.0, 190.0),
        "Dropout": (122.5, 14.0, 95.0, 190.0),
    },
    "curricular_units_1st_sem_grade": {
        "Graduate": (12.6, 2.4, 0.0, 18.5),
        "Enrolled": (11.9, 2.6, 0.0, 18.5),
        "Dropout": (10.0, 3.4, 0.0, 18.5),
    },
    "curricular_units_2nd_sem_grade": {
        "Graduate": (12.5, 2.5, 0.0, 18.5),
        "Enrolled": (11.7, 2.8, 0.0, 18.5),
        "Dropout": (9.8, 3.8, 0.0, 18.5),
    },
    "age_at_enrollment": {
        "Graduate": (21.8, 4.6, 17.0, 60.0),
        "Enrolled": (23.2, 6.0, 17.0, 60.0),
        "Dropout": (25.6, 7.6, 17.0, 60.0),
    },
}

MISSING_NUMERIC_RATE = 0.034
MISSING_CATEGORICAL_RATE = 0.078


@dataclass
class GeneratorConfig:
    seed: int = 20250617
    discordant_dropout_fraction: float = 0.27
    missing_numeric_rate: float = MISSING_NUMERIC_RATE
    missing_categorical_rate: float = MISSING_CATEGORICAL_RATE
    class_counts: dict | None = None  # override for small test cohorts


def _truncated_normal(rng: np.random.Generator, mean, sd, low, high, size):
    out = rng.normal(mean, sd, size=size)
    for _ in range(8):
        bad = (out < low) | (out > high)
        if not bad.any():
            break
        out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
    return np.clip(out, low, high)


def _draw_categorical(rng, column, label, size):
    if column in CLASS_WEIGHTS:
        levels, weights = CLASS_WEIGHTS[column][label]
    else:
        levels, weights = BASE_LEVELS[column]
    weights = np.asarray(weights, dtype=float)
    return rng.choice(np.asarray(levels), size=size, p=weights / weights.sum())


def generate_rows(cfg: GeneratorConfig) -> tuple[list, list]:
    """Build the full table in memory. Returns (rows, discordant_indexes)
    where rows are dicts keyed by canonical column name and indexes refer
    to the final shuffled row order."""
    rng = np.random.default_rng(np.random.PCG64(cfg.seed))
    counts = cfg.class_counts or CLASS_COUNTS

    blocks = []
    discordant_flags = []
    for label in ("Graduate", "Dropout", "Enrolled"):
        n = counts[label]
        n_discordant = int(round(n * cfg.discordant_dropout_fraction)) if label == "Dropout" else 0
        # discordant rows borrow the Graduate feature distributions
        feature_labels = ["Graduate"] * n_discordant + [label] * (n - n_discordant)

        columns: dict = {}
        for col in CATEGORICAL_FIELDS:
            vals = np.empty(n, dtype=int)
            if n_discordant:
                vals[:n_discordant] = _draw_categorical(rng, col, "Graduate", n_discordant)
            vals[n_discordant:] = _draw_categorical(rng, col, label, n - n_discordant)
            columns[col] = vals
        for col in NUMERIC_FIELDS:
            vals = np.empty(n, dtype=float)
            if n_discordant:
                mean, sd, lo, hi = NUMERIC_PARAMS[col]["Graduate"]
                vals[:n_discordant] = _truncated_normal(rng, mean, sd, lo, hi, n_discordant)
            mean, sd, lo, hi = NUMERIC_PARAMS[col][label]
            vals[n_discordant:] = _truncated_normal(rng, mean, sd, lo, hi, n - n_discordant)
            columns[col] = np.round(vals, 2)
        columns["gdp"] = rng.choice(np.asarray(GDP_VALUES), size=n)
        columns["term"] = rng.choice(np.asarray([1, 2, 3]), size=n, p=[0.46, 0.34, 0.2])
        columns["target"] = np.array([label] * n, dtype=object)

        for i in range(n):
            row = {col: columns[col][i] for col in columns}
            blocks.append(row)
            discordant_flags.append(label == "Dropout" and i < n_discordant)

    order = rng.permutation(len(blocks))
    rows = [blocks[i] for i in order]
    flags = [discordant_flags[i] for i in order]

    # knock out cells at the published missingness rates
    numeric_cols = list(NUMERIC_FIELDS) + ["gdp"]
    for row in rows:
        for col in numeric_cols:
            if rng.random() < cfg.missing_numeric_rate:
                row[col] = None
        for col in CATEGORICAL_FIELDS:
            if rng.random() < cfg.missing_categorical_rate:
                row[col] = None

    discordant_indexes = [i for i, f in enumerate(flags) if f]
    return rows, discordant_indexes


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.floating, float)):
        return format(float(value), "g")
    return str(value)


def write_cohort_csv(path: str | Path, cfg: GeneratorConfig | None = None) -> dict:
    """Generate and write the canonical cohort CSV plus a sidecar manifest.

    Returns the manifest (seed, counts, discordant row indexes)."""
    cfg = cfg or GeneratorConfig()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, discordant = generate_rows(cfg)

    ordered = list(CATEGORICAL_FIELDS) + list(NUMERIC_FIELDS) + ["gdp", "term", "target"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([DISPLAY_HEADERS[c] for c in ordered])
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in ordered])

    manifest = {
        "seed": cfg.seed,
        "rows": len(rows),
        "columns": len(ordered) - 1,
        "class_counts": cfg.class_counts or CLASS_COUNTS,
        "discordant_row_indexes": discordant,
    }
    manifest_path = path.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return manifest
