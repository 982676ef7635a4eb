"""Feature engineering: stratified split, tabular encoding, PCA, text vectors.

Everything here is fitted strictly on training-fold rows. The tabular
branch one-hot encodes the 29 categorical columns (every level map carries
the explicit unknown level) and z-scores the 5 numeric metrics plus the two
temporal recency features. The text branch is 50 PCA scores over comment
embeddings plus the sentiment and stress one-hot blocks, 57 slots total.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import CATEGORICAL_FIELDS, NUMERIC_FIELDS, CleanCohort, StudentRecord, UNKNOWN_LEVEL
from .errors import ClassTooSmall, RankDeficient, UnfittedEncoder
from .lexicon import SENTIMENTS, STRESS_TAGS

logger = logging.getLogger(__name__)

PCA_COMPONENTS = 50
TEXT_VECTOR_WIDTH = PCA_COMPONENTS + len(SENTIMENTS) + len(STRESS_TAGS)  # 57

# comment_age fallback for students with no comments: one full census
# horizon, i.e. maximally stale
SILENT_COMMENT_AGE = 120


@dataclass
class SplitPlan:
    train_ids: tuple
    test_ids: tuple
    histogram: dict

    def train_rows(self, cohort: CleanCohort) -> list:
        members = set(self.train_ids)
        return [r for r in cohort.rows if (r.student_id, r.term) in members]

    def test_rows(self, cohort: CleanCohort) -> list:
        members = set(self.test_ids)
        return [r for r in cohort.rows if (r.student_id, r.term) in members]


def stratified_split(cohort: CleanCohort, test_frac: float = 0.2, seed: int = 0) -> SplitPlan:
    """Per-class deterministic holdout.

    Each class's member keys are sorted, shuffled with a generator keyed by
    (seed, class), and the first round(n * test_frac) become test rows, so
    the assignment depends only on ids and labels, never on row order.
    """
    by_class: dict = {}
    for r in cohort.rows:
        by_class.setdefault(r.label, []).append((r.student_id, r.term))

    for label, keys in by_class.items():
        if len(keys) < 2:
            raise ClassTooSmall(f"class {label} has {len(keys)} row(s)")

    train, test = [], []
    histogram = {}
    for label in sorted(by_class):
        keys = sorted(by_class[label])
        rng = np.random.default_rng(np.random.PCG64(np.random.SeedSequence((seed, label))))
        order = rng.permutation(len(keys))
        n_test = int(np.floor(len(keys) * test_frac + 0.5))
        test_keys = [keys[i] for i in order[:n_test]]
        train_keys = [keys[i] for i in order[n_test:]]
        test.extend(test_keys)
        train.extend(train_keys)
        histogram[label] = {"train": len(train_keys), "test": len(test_keys)}

    return SplitPlan(train_ids=tuple(sorted(train)), test_ids=tuple(sorted(test)), histogram=histogram)


class TabularEncoder:
    """One-hot + z-score encoder fitted on the training fold only."""

    def __init__(self, silent_comment_age: int = SILENT_COMMENT_AGE):
        self.level_maps: list | None = None
        self.z_mean: np.ndarray | None = None
        self.z_sd: np.ndarray | None = None
        self.silent_comment_age = silent_comment_age

    @property
    def fitted(self) -> bool:
        return self.level_maps is not None

    @property
    def width(self) -> int:
        if not self.fitted:
            raise UnfittedEncoder("width requested before fit")
        return sum(len(m) for m in self.level_maps) + 7

    def _temporal(self, record: StudentRecord) -> list:
        return [
            float(record.days_since_last_grade),
            float(record.latest_comment_age(self.silent_comment_age)),
        ]

    def fit(self, train_rows: list) -> "TabularEncoder":
        if not train_rows:
            raise ValueError("cannot fit an encoder on zero rows")
        self.level_maps = []
        for j in range(len(CATEGORICAL_FIELDS)):
            levels = sorted({r.categorical_codes[j] for r in train_rows} | {UNKNOWN_LEVEL})
            self.level_maps.append({lvl: i for i, lvl in enumerate(levels)})

        numeric = np.array(
            [[float(v) for v in r.numeric_features] + self._temporal(r) for r in train_rows]
        )
        self.z_mean = numeric.mean(axis=0)
        sd = numeric.std(axis=0)
        sd[sd == 0] = 1.0
        self.z_sd = sd
        return self

    def encode(self, record: StudentRecord) -> np.ndarray:
        if not self.fitted:
            raise UnfittedEncoder("encode called before fit")
        offset = 0
        out = np.zeros(self.width)
        for j, level_map in enumerate(self.level_maps):
            value = record.categorical_codes[j]
            slot = level_map.get(value, level_map[UNKNOWN_LEVEL])
            out[offset + slot] = 1.0
            offset += len(level_map)
        raw = np.array([float(v) for v in record.numeric_features] + self._temporal(record))
        out[offset : offset + 7] = (raw - self.z_mean) / self.z_sd
        return out

    def encode_many(self, records: list) -> np.ndarray:
        return np.stack([self.encode(r) for r in records]) if records else np.zeros((0, self.width))

    def to_arrays(self) -> tuple[dict, dict]:
        meta = {
            "levels": [sorted(m, key=m.get) for m in self.level_maps],
            "silent_comment_age": self.silent_comment_age,
        }
        return meta, {"z_mean": self.z_mean, "z_sd": self.z_sd}

    @classmethod
    def from_arrays(cls, meta: dict, arrays: dict) -> "TabularEncoder":
        enc = cls(silent_comment_age=meta["silent_comment_age"])
        enc.level_maps = [{int(lvl): i for i, lvl in enumerate(levels)} for levels in meta["levels"]]
        enc.z_mean = arrays["z_mean"]
        enc.z_sd = arrays["z_sd"]
        return enc


def fit_tabular_encoder(train_rows: list) -> TabularEncoder:
    return TabularEncoder().fit(train_rows)


def encode_tabular(encoder: TabularEncoder, record: StudentRecord) -> np.ndarray:
    return encoder.encode(record)


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x d, orthonormal rows
    explained_variance: np.ndarray  # fractions, length k

    @property
    def k(self) -> int:
        return self.components.shape[0]


def fit_pca(embeddings: np.ndarray, k: int = PCA_COMPONENTS) -> PcaModel:
    """Top-k principal directions via thin SVD of the centered matrix.

    Sign convention: each component's largest-magnitude entry is positive,
    so the decomposition is deterministic. When the data has fewer than k
    nonzero singular values, k shrinks with a warning instead of failing.
    """
    X = np.asarray(embeddings, dtype=float)
    n, d = X.shape
    if n <= k:
        raise ValueError(f"need more than k={k} rows to fit, got {n}")
    mean = X.mean(axis=0)
    centered = X - mean
    _, s, vt = np.linalg.svd(centered, full_matrices=False)

    tol = s.max() * max(n, d) * np.finfo(float).eps if s.size else 0.0
    rank = int((s > tol).sum())
    if rank < k:
        logger.warning("rank-deficient embeddings: shrinking k from %d to %d", k, rank)
        k = rank
        if k == 0:
            raise RankDeficient("no nonzero singular values")

    components = vt[:k].copy()
    for i in range(k):
        pivot = np.argmax(np.abs(components[i]))
        if components[i, pivot] < 0:
            components[i] = -components[i]

    total = float((s**2).sum())
    explained = (s[:k] ** 2) / total if total > 0 else np.zeros(k)
    return PcaModel(mean=mean, components=components, explained_variance=explained)


def project(pca: PcaModel, vectors: np.ndarray) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    single = v.ndim == 1
    scores = (np.atleast_2d(v) - pca.mean) @ pca.components.T
    return scores[0] if single else scores


@dataclass
class TextVector:
    pca_scores: np.ndarray
    sentiment: str
    stress: str

    def to_array(self) -> np.ndarray:
        out = np.zeros(TEXT_VECTOR_WIDTH)
        out[: PCA_COMPONENTS] = self.pca_scores
        out[PCA_COMPONENTS + SENTIMENTS.index(self.sentiment)] = 1.0
        out[PCA_COMPONENTS + len(SENTIMENTS) + STRESS_TAGS.index(self.stress)] = 1.0
        return out


SILENT_TEXT_VECTOR = TextVector(np.zeros(PCA_COMPONENTS), "neutral", "none")


def build_text_vector(pca_scores: np.ndarray | None, sentiment: str | None,
                      stress: str | None) -> TextVector:
    """Assemble the 57-slot text vector; silent students get the canonical
    zero-score, neutral, none default."""
    if pca_scores is None:
        return SILENT_TEXT_VECTOR
    scores = np.asarray(pca_scores, dtype=float)
    if scores.shape != (PCA_COMPONENTS,):
        padded = np.zeros(PCA_COMPONENTS)
        padded[: min(scores.size, PCA_COMPONENTS)] = scores[:PCA_COMPONENTS]
        scores = padded
    return TextVector(scores, sentiment or "neutral", stress or "none")
