"""Benchmark and ablation orchestration over trained pipelines.

Each arm trains on the same resampled training fold and is evaluated on
the untouched test fold; ablation deltas get a paired bootstrap interval
(the same row resamples drive both arms of each difference).
"""

from __future__ import annotations

import numpy as np

from .dataset import CleanCohort
from .evaluation import EvalReport, build_report, classification_metrics
from .features import SplitPlan
from .fusion import ABLATION_VARIANTS
from .pipeline import TrainedPipeline, build_text_cache, make_single_scorer, train_pipeline
from .reference import REFERENCE_ABLATION_DELTAS, REFERENCE_RESULTS, SOURCE
from . import evaluation


def run_benchmark(cohort: CleanCohort, split: SplitPlan, model_kinds: list, seed: int,
                  provider, kb, text_cache: dict | None = None,
                  resamples: int = 5000, epochs: int = 40,
                  latency_reps: int = 0) -> tuple[list, dict]:
    """Train and evaluate each requested model; returns (reports, trained)."""
    if text_cache is None:
        text_cache = build_text_cache(cohort.rows, provider, kb)
    test_rows = split.test_rows(cohort)
    y_test = np.array([r.label for r in test_rows])

    reports = []
    trained_models = {}
    for kind in model_kinds:
        trained = train_pipeline(cohort, split, kind, seed=seed, provider=provider,
                                 kb=kb, epochs=epochs, text_cache=text_cache)
        probs = trained.predict_records(test_rows, text_cache)
        report = build_report(kind, y_test, probs, resamples=resamples, seed=seed)
        if latency_reps > 0:
            scorer = make_single_scorer(trained, provider, kb)
            report.latency_ms_mean, report.latency_ms_p95 = evaluation.measure_latency(
                scorer, test_rows[: min(len(test_rows), 200)], warmup=20, reps=latency_reps
            )
        reports.append(report)
        trained_models[kind] = trained
    return reports, trained_models


def paired_bootstrap_delta(y, probs_a, probs_b, resamples: int = 2000,
                           seed: int = 0) -> tuple[float, float]:
    """Percentile interval for macro-F1(a) - macro-F1(b) over shared resamples."""
    y = np.asarray(y)
    rng = np.random.default_rng(np.random.PCG64(seed))
    deltas = np.empty(resamples)
    n = len(y)
    for i in range(resamples):
        idx = rng.integers(0, n, size=n)
        _, f1_a, _ = classification_metrics(y[idx], probs_a[idx])
        _, f1_b, _ = classification_metrics(y[idx], probs_b[idx])
        deltas[i] = f1_a - f1_b
    lo, hi = np.quantile(deltas, [0.025, 0.975])
    return float(lo), float(hi)


def run_ablation(cohort: CleanCohort, split: SplitPlan, seed: int, provider, kb,
                 text_cache: dict | None = None, variants: tuple = ABLATION_VARIANTS,
                 resamples: int = 2000, epochs: int = 40) -> dict:
    """Macro-F1 per variant plus the paired delta against the full model."""
    if text_cache is None:
        text_cache = build_text_cache(cohort.rows, provider, kb)
    test_rows = split.test_rows(cohort)
    y_test = np.array([r.label for r in test_rows])

    probs_by_variant = {}
    f1_by_variant = {}
    for variant in variants:
        kind = "triad" if variant == "full" else f"variant:{variant}"
        trained = train_pipeline(cohort, split, kind, seed=seed, provider=provider,
                                 kb=kb, epochs=epochs, text_cache=text_cache)
        probs = trained.predict_records(test_rows, text_cache)
        probs_by_variant[variant] = probs
        _, f1, _ = classification_metrics(y_test, probs)
        f1_by_variant[variant] = f1

    full_f1 = f1_by_variant.get("full")
    rows = {}
    for variant in variants:
        entry = {"macro_f1": f1_by_variant[variant]}
        if variant != "full" and full_f1 is not None:
            entry["delta_vs_full"] = f1_by_variant[variant] - full_f1
            entry["delta_ci"] = paired_bootstrap_delta(
                y_test, probs_by_variant[variant], probs_by_variant["full"],
                resamples=resamples, seed=seed,
            )
        if variant in REFERENCE_ABLATION_DELTAS:
            entry["reference_delta_pp"] = {"value": REFERENCE_ABLATION_DELTAS[variant],
                                           "source": SOURCE}
        rows[variant] = entry

    return {
        "seed": seed,
        "variants": rows,
        "reference": {"source": SOURCE, "results": REFERENCE_RESULTS},
    }


def render_ablation_table(result: dict) -> str:
    lines = ["variant        macro_f1  delta_vs_full", "-------        --------  -------------"]
    for variant, entry in result["variants"].items():
        delta = entry.get("delta_vs_full")
        delta_s = f"{delta:+.3f}" if delta is not None else "  -"
        lines.append(f"{variant:<14s} {entry['macro_f1']:.3f}     {delta_s}")
    return "\n".join(lines)
