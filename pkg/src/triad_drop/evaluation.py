"""Metric suite, uncertainty quantification and significance testing.

Conventions, fixed here and mirrored by the brute-force oracles in the
test suite:

- macro-F1 always divides by the 3 declared classes; a class with neither
  predicted nor actual positives contributes F1 = 0.
- OvR ROC-AUC uses midranks for ties and averages over classes that have
  both positives and negatives; others are skipped with a warning.
- PR-AUC is average precision (stepwise sum of precision times recall
  increments over descending score thresholds) for the Dropout class; it
  is 0 with a warning when no positives exist.
- ECE bins the max predicted probability into B equal-width bins, the last
  bin closed; empty bins contribute zero.
- McNemar is the plain (b-c)^2/(b+c) statistic without continuity
  correction; its p-value is the chi-square(1) upper tail, evaluated in
  closed form as erfc(sqrt(x/2)).
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels, InvalidReps, LengthMismatch, NoDiscordantPairs

logger = logging.getLogger(__name__)

N_CLASSES = 3


def _validate(y, probs):
    y = np.asarray(y, dtype=int)
    probs = np.atleast_2d(np.asarray(probs, dtype=float))
    if len(y) != len(probs):
        raise LengthMismatch(f"{len(y)} labels vs {len(probs)} prediction rows")
    return y, probs


def confusion_matrix(y: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    out = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    for t, p in zip(y, y_pred):
        out[t, p] += 1
    return out


def classification_metrics(y, probs) -> tuple[float, float, np.ndarray]:
    """(accuracy, macro_f1, confusion)."""
    y, probs = _validate(y, probs)
    y_pred = probs.argmax(axis=1)
    confusion = confusion_matrix(y, y_pred)
    accuracy = float((y == y_pred).mean()) if len(y) else 0.0

    f1_sum = 0.0
    for c in range(N_CLASSES):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision = tp / (tp + fp) if (tp + fp) else 0.0
        recall = tp / (tp + fn) if (tp + fn) else 0.0
        f1_sum += 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return accuracy, f1_sum / N_CLASSES, confusion


def _binary_auc_midrank(scores: np.ndarray, positives: np.ndarray) -> float:
    order = np.argsort(scores, kind="stable")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # midrank, 1-based
        i = j + 1
    n_pos = int(positives.sum())
    n_neg = len(scores) - n_pos
    rank_sum = ranks[positives].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_auc_ovr(y, probs) -> float:
    """Macro average of one-vs-rest AUCs over classes with both outcomes."""
    y, probs = _validate(y, probs)
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("need at least two classes for ROC-AUC")
    aucs = []
    for c in range(N_CLASSES):
        positives = y == c
        n_pos = int(positives.sum())
        if n_pos == 0 or n_pos == len(y):
            logger.warning("class %d absent on one side, skipped in OvR average", c)
            continue
        aucs.append(_binary_auc_midrank(probs[:, c], positives))
    return float(np.mean(aucs))


def pr_auc_class1(y, probs) -> float:
    """Average precision for the Dropout class (label 1)."""
    y, probs = _validate(y, probs)
    positives = (y == 1).astype(int)
    n_pos = int(positives.sum())
    if n_pos == 0:
        logger.warning("no Dropout-labelled rows; average precision reported as 0")
        return 0.0
    scores = probs[:, 1]
    ap = 0.0
    prev_recall = 0.0
    for threshold in np.unique(scores)[::-1]:
        selected = scores >= threshold
        tp = int(positives[selected].sum())
        precision = tp / int(selected.sum())
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return float(ap)


@dataclass
class CalibrationBins:
    edges: np.ndarray
    counts: np.ndarray
    mean_confidence: np.ndarray
    mean_accuracy: np.ndarray

    def to_json(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
            "mean_confidence": self.mean_confidence.tolist(),
            "mean_accuracy": self.mean_accuracy.tolist(),
        }


def ece(y, probs, n_bins: int = 10) -> tuple[float, CalibrationBins]:
    """Expected calibration error over equal-width max-probability bins."""
    y, probs = _validate(y, probs)
    confidence = probs.max(axis=1)
    correct = (probs.argmax(axis=1) == y).astype(float)

    idx = np.minimum((confidence * n_bins).astype(int), n_bins - 1)
    counts = np.zeros(n_bins)
    conf_sum = np.zeros(n_bins)
    acc_sum = np.zeros(n_bins)
    np.add.at(counts, idx, 1.0)
    np.add.at(conf_sum, idx, confidence)
    np.add.at(acc_sum, idx, correct)

    filled = counts > 0
    mean_conf = np.where(filled, conf_sum / np.maximum(counts, 1), 0.0)
    mean_acc = np.where(filled, acc_sum / np.maximum(counts, 1), 0.0)
    n = max(len(y), 1)
    value = float((counts[filled] / n * np.abs(mean_conf[filled] - mean_acc[filled])).sum())
    bins = CalibrationBins(
        edges=np.linspace(0.0, 1.0, n_bins + 1),
        counts=counts.astype(int),
        mean_confidence=mean_conf,
        mean_accuracy=mean_acc,
    )
    return value, bins


def bootstrap_ci(metric_fn, y, probs, resamples: int = 5000, alpha: float = 0.05,
                 seed: int = 0) -> tuple[float, float]:
    """Seeded percentile bootstrap over row resamples with replacement.

    Resamples on which the metric is undefined (degenerate labels) are
    dropped with a warning rather than redrawn, keeping determinism."""
    y, probs = _validate(y, probs)
    n = len(y)
    if n < 2:
        raise ValueError("bootstrap needs at least 2 rows")
    rng = np.random.default_rng(np.random.PCG64(seed))
    values = []
    dropped = 0
    for _ in range(resamples):
        idx = rng.integers(0, n, size=n)
        try:
            value = metric_fn(y[idx], probs[idx])
        except DegenerateLabels:
            dropped += 1
            continue
        if np.isfinite(value):
            values.append(value)
        else:
            dropped += 1
    if dropped:
        logger.warning("dropped %d/%d degenerate bootstrap resamples", dropped, resamples)
    if not values:
        return (math.nan, math.nan)
    lo, hi = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
    return float(lo), float(hi)


def mcnemar(b: int, c: int) -> tuple[float, float]:
    """Discordant-pair test: chi2 = (b-c)^2/(b+c), p = chi-square(1) tail."""
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    if b + c == 0:
        raise NoDiscordantPairs("b + c must be positive")
    chi2 = (b - c) ** 2 / (b + c)
    p = math.erfc(math.sqrt(chi2 / 2.0))
    return float(chi2), float(p)


def measure_latency(score_one, learners: list, warmup: int = 50,
                    reps: int = 1000) -> tuple[float, float]:
    """Mean and p95 wall-clock milliseconds to score one learner.

    ``score_one`` is called with one learner per rep (cycled); timing uses
    the monotonic high-resolution clock."""
    if reps <= 0:
        raise InvalidReps(f"reps must be positive, got {reps}")
    if not learners:
        raise ValueError("need at least one learner to score")
    for i in range(warmup):
        score_one(learners[i % len(learners)])
    samples = np.empty(reps)
    for i in range(reps):
        learner = learners[i % len(learners)]
        start = time.perf_counter()
        score_one(learner)
        samples[i] = time.perf_counter() - start
    return float(samples.mean() * 1e3), float(np.percentile(samples, 95) * 1e3)


@dataclass
class EvalReport:
    model: str
    accuracy: float
    macro_f1: float
    roc_auc_ovr: float
    pr_auc_dropout: float
    ece: float
    latency_ms_mean: float | None = None
    latency_ms_p95: float | None = None
    per_class_precision: list = field(default_factory=list)
    per_class_recall: list = field(default_factory=list)
    confusion: list = field(default_factory=list)
    macro_f1_ci: tuple | None = None
    roc_auc_ci: tuple | None = None
    calibration: dict | None = None
    seeds: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "roc_auc_ovr": self.roc_auc_ovr,
            "pr_auc_dropout": self.pr_auc_dropout,
            "ece": self.ece,
            "latency_ms": {"mean": self.latency_ms_mean, "p95": self.latency_ms_p95},
            "per_class_precision": self.per_class_precision,
            "per_class_recall": self.per_class_recall,
            "confusion": self.confusion,
            "macro_f1_ci": list(self.macro_f1_ci) if self.macro_f1_ci else None,
            "roc_auc_ci": list(self.roc_auc_ci) if self.roc_auc_ci else None,
            "calibration": self.calibration,
            "seeds": self.seeds,
        }


def build_report(model_name: str, y, probs, resamples: int = 5000, seed: int = 0,
                 with_ci: bool = True) -> EvalReport:
    y, probs = _validate(y, probs)
    accuracy, macro_f1, confusion = classification_metrics(y, probs)
    try:
        auc = roc_auc_ovr(y, probs)
    except DegenerateLabels:
        auc = float("nan")
    ap = pr_auc_class1(y, probs)
    ece_value, bins = ece(y, probs)

    precision, recall = [], []
    for c in range(N_CLASSES):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        precision.append(float(tp / (tp + fp)) if (tp + fp) else 0.0)
        recall.append(float(tp / (tp + fn)) if (tp + fn) else 0.0)

    report = EvalReport(
        model=model_name,
        accuracy=accuracy,
        macro_f1=macro_f1,
        roc_auc_ovr=auc,
        pr_auc_dropout=ap,
        ece=ece_value,
        per_class_precision=precision,
        per_class_recall=recall,
        confusion=confusion.tolist(),
        calibration=bins.to_json(),
        seeds={"bootstrap": seed},
    )
    if with_ci:
        report.macro_f1_ci = bootstrap_ci(
            lambda yy, pp: classification_metrics(yy, pp)[1], y, probs,
            resamples=resamples, seed=seed,
        )
        report.roc_auc_ci = bootstrap_ci(roc_auc_ovr, y, probs, resamples=resamples, seed=seed)
    return report


def render_table(reports: list) -> str:
    """Aligned plain-text benchmark table."""
    headers = ["model", "accuracy", "macro_f1", "roc_auc", "pr_auc", "ece", "latency_ms"]
    rows = [headers]
    for r in reports:
        rows.append([
            r.model,
            f"{r.accuracy:.3f}",
            f"{r.macro_f1:.3f}",
            f"{r.roc_auc_ovr:.3f}",
            f"{r.pr_auc_dropout:.3f}",
            f"{r.ece:.3f}",
            f"{r.latency_ms_mean:.2f}" if r.latency_ms_mean is not None else "-",
        ])
    widths = [max(len(row[i]) for row in rows) for i in range(len(headers))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_csv(reports: list) -> str:
    lines = ["model,accuracy,macro_f1,roc_auc_ovr,pr_auc_dropout,ece,latency_ms_mean"]
    for r in reports:
        latency = "" if r.latency_ms_mean is None else f"{r.latency_ms_mean:.4f}"
        lines.append(
            f"{r.model},{r.accuracy:.6f},{r.macro_f1:.6f},{r.roc_auc_ovr:.6f},"
            f"{r.pr_auc_dropout:.6f},{r.ece:.6f},{latency}"
        )
    return "\n".join(lines)


def dump_reports(reports: list, path) -> None:
    payload = [r.to_json() for r in reports]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
