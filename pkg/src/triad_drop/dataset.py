"""Cohort ingestion: load, validate, clean, deduplicate and impute.

The canonical cohort table has 36 data columns plus a 3-level target:
29 integer-coded categorical columns, 5 real-valued academic metrics,
a national GDP indicator, and the academic term (used only in the
deduplication key). Headers are matched by name after snake_case
normalization, so column order is irrelevant.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import AllMissingColumn, EmptyFile, MissingColumn, TypeMismatch

LABELS = {"Graduate": 0, "Dropout": 1, "Enrolled": 2}
LABEL_NAMES = ("Graduate", "Dropout", "Enrolled")

# Missing categorical cells are imputed to this explicit "unknown" level so
# that missingness stays visible to the encoder.
UNKNOWN_LEVEL = -1

CATEGORICAL_FIELDS = (
    "marital_status",
    "application_mode",
    "application_order",
    "course",
    "daytime_evening_attendance",
    "previous_qualification",
    "nationality",
    "mothers_qualification",
    "fathers_qualification",
    "mothers_occupation",
    "fathers_occupation",
    "displaced",
    "educational_special_needs",
    "debtor",
    "tuition_fees_up_to_date",
    "gender",
    "scholarship_holder",
    "international",
    "age_band",
    "curricular_units_1st_sem_credited",
    "curricular_units_1st_sem_enrolled",
    "curricular_units_1st_sem_evaluations",
    "curricular_units_1st_sem_approved",
    "curricular_units_1st_sem_without_evaluations",
    "curricular_units_2nd_sem_credited",
    "curricular_units_2nd_sem_enrolled",
    "curricular_units_2nd_sem_evaluations",
    "curricular_units_2nd_sem_approved",
    "curricular_units_2nd_sem_without_evaluations",
)

NUMERIC_FIELDS = (
    "previous_qualification_grade",
    "admission_grade",
    "curricular_units_1st_sem_grade",
    "curricular_units_2nd_sem_grade",
    "age_at_enrollment",
)

GDP_FIELD = "gdp"
TERM_FIELD = "term"
TARGET_FIELD = "target"

assert len(CATEGORICAL_FIELDS) == 29
assert len(NUMERIC_FIELDS) == 5


@dataclass(frozen=True)
class CohortSchema:
    """Declared column kinds for a raw cohort file."""

    categorical: tuple[str, ...] = CATEGORICAL_FIELDS
    numeric: tuple[str, ...] = NUMERIC_FIELDS
    gdp: str = GDP_FIELD
    term: str = TERM_FIELD
    target: str = TARGET_FIELD
    id_field: str | None = None  # hashed from the source row index when absent

    @property
    def data_columns(self) -> tuple[str, ...]:
        cols = self.categorical + self.numeric + (self.gdp, self.term)
        if self.id_field:
            cols = (self.id_field,) + cols
        return cols

    @property
    def all_columns(self) -> tuple[str, ...]:
        return self.data_columns + (self.target,)


CANONICAL_SCHEMA = CohortSchema()


class Comment(NamedTuple):
    text: str
    age_days: int


@dataclass
class StudentRecord:
    """One learner row after cleaning.

    ``categorical_codes`` has exactly 29 slots and ``numeric_features``
    exactly 5; ``None`` marks a missing cell until imputation runs.
    """

    student_id: str
    term: int
    categorical_codes: list
    numeric_features: list
    gdp: float | None
    label: int
    comments: list = field(default_factory=list)
    days_since_last_grade: int = 0
    synthetic: bool = False

    def latest_comment_age(self, silent_default: int) -> int:
        if not self.comments:
            return silent_default
        return min(c.age_days for c in self.comments)

    def validate(self) -> None:
        if len(self.categorical_codes) != 29:
            raise ValueError(f"expected 29 categorical slots, got {len(self.categorical_codes)}")
        if len(self.numeric_features) != 5:
            raise ValueError(f"expected 5 numeric slots, got {len(self.numeric_features)}")
        if self.label not in (0, 1, 2):
            raise ValueError(f"label must be 0, 1 or 2, got {self.label}")


@dataclass
class RawRecord:
    source_index: int
    values: dict


@dataclass
class RawCohort:
    schema: CohortSchema
    rows: list


@dataclass
class CleanCohort:
    rows: list
    missing_numeric_rate: float = 0.0
    missing_categorical_rate: float = 0.0
    duplicates_removed: int = 0
    # populated by the augmentation stage: (student_id, comment_idx) ->
    # (sentiment, theme) as generated; not persisted per record
    generation_trace: dict | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def class_histogram(self) -> tuple[int, int, int]:
        counts = [0, 0, 0]
        for r in self.rows:
            counts[r.label] += 1
        return tuple(counts)


_NORMALIZE_RE = re.compile(r"[^0-9a-z]+")


def normalize_field_name(name: str) -> str:
    """Lower-case and collapse any non-alphanumeric run to one underscore."""
    return _NORMALIZE_RE.sub("_", name.strip().lower().replace("'", "")).strip("_")


def stable_row_id(source_index: int) -> str:
    """Stable 64-bit id for rows in files that carry no explicit id."""
    digest = hashlib.blake2b(str(source_index).encode("ascii"), digest_size=8)
    return digest.hexdigest()


_TAG_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


def clean_comment_text(text: str) -> str:
    """Lower-case, strip HTML tags and URLs, collapse whitespace."""
    text = text.lower()
    text = _TAG_RE.sub("", text)
    text = _URL_RE.sub("", text)
    return _WS_RE.sub(" ", text).strip()


def load_cohort(path: str | Path, schema: CohortSchema = CANONICAL_SCHEMA) -> RawCohort:
    """Read and validate a cohort CSV against the declared schema.

    Header names are normalized before matching, so files may use any
    capitalization or separator style and any column order. Malformed
    cells raise TypeMismatch with the offending line and column.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise EmptyFile(str(path))

    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFile(str(path))

    normalized = [normalize_field_name(h) for h in header]
    col_index = {}
    for idx, name in enumerate(normalized):
        col_index.setdefault(name, idx)
    for needed in schema.all_columns:
        if needed not in col_index:
            raise MissingColumn(needed)

    int_fields = set(schema.categorical) | {schema.term}
    float_fields = set(schema.numeric) | {schema.gdp}

    rows = []
    for line_no, raw in enumerate(reader, start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        values: dict = {}
        for name in schema.all_columns:
            cell = raw[col_index[name]].strip() if col_index[name] < len(raw) else ""
            if name == schema.target:
                if cell not in LABELS:
                    raise TypeMismatch(line_no, name, f"unknown label {cell!r}")
                values[name] = LABELS[cell]
            elif not cell:
                if name == schema.term:
                    raise TypeMismatch(line_no, name, "term may not be empty")
                values[name] = None
            elif name in int_fields:
                try:
                    values[name] = int(cell)
                except ValueError:
                    raise TypeMismatch(line_no, name, f"expected integer, got {cell!r}")
            elif name in float_fields:
                try:
                    values[name] = float(cell)
                except ValueError:
                    raise TypeMismatch(line_no, name, f"expected real, got {cell!r}")
            else:
                values[name] = cell
        rows.append(RawRecord(source_index=len(rows), values=values))

    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return RawCohort(schema=schema, rows=rows)


def clean_and_dedupe(raw: RawCohort) -> CleanCohort:
    """Normalize records, drop duplicate (id, term) pairs, clean comment text.

    Cleaning is total: it never raises on loaded input.
    """
    schema = raw.schema
    seen = set()
    records = []
    duplicates = 0
    missing_num = 0
    missing_cat = 0

    for row in raw.rows:
        values = row.values
        if schema.id_field:
            student_id = str(values[schema.id_field])
        else:
            student_id = stable_row_id(row.source_index)
        term = int(values[schema.term])
        key = (student_id, term)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)

        cats = [values[c] for c in schema.categorical]
        nums = [values[c] for c in schema.numeric]
        missing_cat += sum(1 for v in cats if v is None)
        missing_num += sum(1 for v in nums if v is None) + (values[schema.gdp] is None)

        comments = [
            Comment(clean_comment_text(c.text), c.age_days)
            for c in values.get("comments", [])
        ]
        records.append(
            StudentRecord(
                student_id=student_id,
                term=term,
                categorical_codes=cats,
                numeric_features=nums,
                gdp=values[schema.gdp],
                label=values[schema.target],
                comments=comments,
            )
        )

    n = max(len(records), 1)
    return CleanCohort(
        rows=records,
        missing_numeric_rate=missing_num / (n * (len(schema.numeric) + 1)),
        missing_categorical_rate=missing_cat / (n * len(schema.categorical)),
        duplicates_removed=duplicates,
    )


def _median(values: list) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def impute(clean: CleanCohort) -> CleanCohort:
    """Fill numeric gaps with the column median and categorical gaps with
    the explicit unknown level. Raises AllMissingColumn when a numeric
    column has no observed value at all."""
    rows = clean.rows
    if not rows:
        return clean

    n_num = len(rows[0].numeric_features)
    medians = []
    for j in range(n_num):
        observed = [r.numeric_features[j] for r in rows if r.numeric_features[j] is not None]
        if not observed:
            raise AllMissingColumn(NUMERIC_FIELDS[j] if j < len(NUMERIC_FIELDS) else f"numeric[{j}]")
        medians.append(_median(observed))

    gdp_observed = [r.gdp for r in rows if r.gdp is not None]
    if not gdp_observed:
        raise AllMissingColumn(GDP_FIELD)
    gdp_median = _median(gdp_observed)

    imputed = []
    for r in rows:
        nums = [
            medians[j] if v is None else v
            for j, v in enumerate(r.numeric_features)
        ]
        cats = [UNKNOWN_LEVEL if v is None else v for v in r.categorical_codes]
        imputed.append(
            StudentRecord(
                student_id=r.student_id,
                term=r.term,
                categorical_codes=cats,
                numeric_features=nums,
                gdp=gdp_median if r.gdp is None else r.gdp,
                label=r.label,
                comments=list(r.comments),
                days_since_last_grade=r.days_since_last_grade,
                synthetic=r.synthetic,
            )
        )
    return CleanCohort(
        rows=imputed,
        missing_numeric_rate=0.0,
        missing_categorical_rate=0.0,
        duplicates_removed=clean.duplicates_removed,
        generation_trace=clean.generation_trace,
    )


# ---------------------------------------------------------------------------
# line-JSON cohort persistence

COHORT_FORMAT_VERSION = 1


def _record_to_json(r: StudentRecord) -> dict:
    return {
        "v": COHORT_FORMAT_VERSION,
        "id": r.student_id,
        "term": r.term,
        "cat": r.categorical_codes,
        "num": r.numeric_features,
        "gdp": r.gdp,
        "label": r.label,
        "comments": [[c.text, c.age_days] for c in r.comments],
        "days_since_last_grade": r.days_since_last_grade,
        "synthetic": r.synthetic,
    }


def _record_from_json(obj: dict) -> StudentRecord:
    return StudentRecord(
        student_id=obj["id"],
        term=obj["term"],
        categorical_codes=obj["cat"],
        numeric_features=obj["num"],
        gdp=obj["gdp"],
        label=obj["label"],
        comments=[Comment(t, a) for t, a in obj.get("comments", [])],
        days_since_last_grade=obj.get("days_since_last_grade", 0),
        synthetic=obj.get("synthetic", False),
    )


def cohort_version(cohort: CleanCohort) -> str:
    """Content digest used as the cohort version in run metadata."""
    h = hashlib.blake2b(digest_size=6)
    for r in cohort.rows:
        h.update(json.dumps(_record_to_json(r), sort_keys=True).encode("utf-8"))
    return h.hexdigest()


def write_cohort(cohort: CleanCohort, path: str | Path) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    version = cohort_version(cohort)
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "v": COHORT_FORMAT_VERSION,
            "kind": "cohort",
            "count": len(cohort.rows),
            "version": version,
            "duplicates_removed": cohort.duplicates_removed,
        }
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r in cohort.rows:
            fh.write(json.dumps(_record_to_json(r), sort_keys=True) + "\n")
    return version


def read_cohort(path: str | Path) -> CleanCohort:
    path = Path(path)
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise EmptyFile(str(path))
        obj = json.loads(first)
        if obj.get("kind") != "cohort":
            rows.append(_record_from_json(obj))
        for line in fh:
            if line.strip():
                rows.append(_record_from_json(json.loads(line)))
    return CleanCohort(rows=rows)
