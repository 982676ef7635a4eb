"""Command-line entry point.

Verbs: ingest, augment, split, train, evaluate, ablate, explain, serve,
bench-latency. Every verb exits nonzero on error with a one-line
machine-parsable reason on stderr (exit 2 for missing artifacts, 3 for
invalid configuration, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .augment import AugmentConfig, corpus_stats, generate_comments, synthesize_timestamps
from .cohortgen import GeneratorConfig, write_cohort_csv
from .config import Settings, load_settings
from .dataset import (
    CANONICAL_SCHEMA,
    clean_and_dedupe,
    impute,
    load_cohort,
    read_cohort,
    write_cohort,
)
from .errors import CohortMissing, ModelMissing, TriadError
from .evaluation import build_report, dump_reports, measure_latency, render_csv, render_table
from .explain import shapley_attribution, stratified_background
from .features import stratified_split
from .harness import render_ablation_table, run_ablation
from .pipeline import (
    build_text_cache,
    default_provider,
    ensure_knowledge_base,
    load_pipeline,
    make_single_scorer,
    save_pipeline,
    score_records,
    train_pipeline,
)
from .reference import REFERENCE_MCNEMAR, REFERENCE_RESULTS, SOURCE
from .scoring import load_artifacts

MODEL_CHOICES = ("logistic", "mlp", "triad")


def _split_path(settings: Settings) -> Path:
    return settings.data_path() / "split.json"


def _load_split(settings: Settings):
    from .features import SplitPlan

    path = _split_path(settings)
    if not path.exists():
        raise CohortMissing(f"no split plan at {path}; run `triad split` first")
    obj = json.loads(path.read_text(encoding="utf-8"))
    return SplitPlan(
        train_ids=tuple((sid, term) for sid, term in obj["train_ids"]),
        test_ids=tuple((sid, term) for sid, term in obj["test_ids"]),
        histogram={int(k): v for k, v in obj["histogram"].items()},
    )


def _load_augmented(settings: Settings):
    path = settings.data_path() / "augmented.jsonl"
    if not path.exists():
        raise CohortMissing(f"no augmented cohort at {path}; run `triad augment` first")
    return read_cohort(path)


def cmd_ingest(args, settings: Settings) -> int:
    data_dir = settings.data_path()
    csv_path = Path(args.csv) if args.csv else data_dir / "cohort.csv"
    if not csv_path.exists():
        if not args.synthesize:
            raise CohortMissing(f"{csv_path} (pass --synthesize to generate the canonical table)")
        manifest = write_cohort_csv(csv_path, GeneratorConfig(seed=settings.seed))
        print(f"synthesized canonical cohort: {manifest['rows']} rows -> {csv_path}")

    raw = load_cohort(csv_path, CANONICAL_SCHEMA)
    clean = impute(clean_and_dedupe(raw))
    version = write_cohort(clean, data_dir / "cohort.jsonl")
    histogram = clean.class_histogram()
    print(f"ingested {len(clean)} rows, histogram {histogram}, version {version}")
    return 0


def cmd_augment(args, settings: Settings) -> int:
    data_dir = settings.data_path()
    path = data_dir / "cohort.jsonl"
    if not path.exists():
        raise CohortMissing(f"{path}; run `triad ingest` first")
    cohort = read_cohort(path)
    cfg = AugmentConfig(seed=settings.seed,
                        comments_per_student=settings.comments_per_student,
                        term_length_days=settings.term_length_days)
    cohort = synthesize_timestamps(generate_comments(cohort, cfg), cfg)
    stats = corpus_stats(cohort)
    version = write_cohort(cohort, data_dir / "augmented.jsonl")
    (data_dir / "corpus_stats.json").write_text(
        json.dumps(stats.to_json(), indent=2, sort_keys=True), encoding="utf-8"
    )
    print(f"augmented cohort version {version}: {stats.n_comments} comments, "
          f"mean words {stats.mean_words:.1f}")
    return 0


def cmd_split(args, settings: Settings) -> int:
    cohort = _load_augmented(settings)
    plan = stratified_split(cohort, test_frac=settings.test_fraction, seed=settings.seed)
    payload = {
        "seed": settings.seed,
        "test_fraction": settings.test_fraction,
        "histogram": plan.histogram,
        "train_ids": [list(k) for k in plan.train_ids],
        "test_ids": [list(k) for k in plan.test_ids],
    }
    _split_path(settings).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
    print(f"split: {plan.histogram}")
    return 0


def cmd_train(args, settings: Settings) -> int:
    cohort = _load_augmented(settings)
    plan = _load_split(settings)
    provider = default_provider(settings.seed)
    kb = ensure_knowledge_base(settings.data_path(), provider)
    started = time.time()
    trained = train_pipeline(cohort, plan, args.model, seed=settings.seed,
                             provider=provider, kb=kb, epochs=settings.epochs,
                             batch_size=settings.batch_size)
    name = args.model.replace(":", "_") if args.model.startswith("variant:") else args.model
    bundle_path = settings.data_path() / "models" / f"{name}.bundle"
    version = save_pipeline(trained, bundle_path)
    print(f"trained {args.model} in {time.time() - started:.1f}s -> {bundle_path} "
          f"(version {version})")
    return 0


def cmd_evaluate(args, settings: Settings) -> int:
    data_dir = settings.data_path()
    cohort, trained = load_artifacts(data_dir, args.model)
    plan = _load_split(settings)
    provider = default_provider(settings.seed)
    kb = ensure_knowledge_base(data_dir, provider)
    text_cache = build_text_cache(cohort.rows, provider, kb)

    test_rows = plan.test_rows(cohort)
    y = np.array([r.label for r in test_rows])
    probs = trained.predict_records(test_rows, text_cache)
    report = build_report(args.model, y, probs, resamples=settings.bootstrap_resamples,
                          seed=settings.seed)
    scorer = make_single_scorer(trained, provider, kb)
    report.latency_ms_mean, report.latency_ms_p95 = measure_latency(
        scorer, test_rows[: min(len(test_rows), 200)], warmup=20, reps=args.latency_reps
    )

    reports_dir = data_dir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    dump_reports([report], reports_dir / "evaluation.json")
    (reports_dir / "benchmark.txt").write_text(render_table([report]) + "\n", encoding="utf-8")
    (reports_dir / "benchmark.csv").write_text(render_csv([report]) + "\n", encoding="utf-8")

    metrics_dir = data_dir / "metrics"
    metrics_dir.mkdir(parents=True, exist_ok=True)
    payload = report.to_json()
    payload["reference"] = {"source": SOURCE, "results": REFERENCE_RESULTS,
                            "mcnemar": REFERENCE_MCNEMAR}
    (metrics_dir / "latest.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
    )
    print(render_table([report]))
    return 0


def cmd_ablate(args, settings: Settings) -> int:
    cohort = _load_augmented(settings)
    plan = _load_split(settings)
    provider = default_provider(settings.seed)
    kb = ensure_knowledge_base(settings.data_path(), provider)
    result = run_ablation(cohort, plan, seed=settings.seed, provider=provider, kb=kb,
                          resamples=args.resamples, epochs=settings.epochs)
    reports_dir = settings.data_path() / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    (reports_dir / "ablation.json").write_text(
        json.dumps(result, indent=2, sort_keys=True), encoding="utf-8"
    )
    print(render_ablation_table(result))
    return 0


def cmd_explain(args, settings: Settings) -> int:
    data_dir = settings.data_path()
    cohort, trained = load_artifacts(data_dir, args.model)
    record = next((r for r in cohort.rows if r.student_id == args.student_id), None)
    if record is None:
        raise CohortMissing(f"student {args.student_id} not in cohort")

    provider = default_provider(settings.seed)
    kb = ensure_knowledge_base(data_dir, provider)
    text_cache = build_text_cache(cohort.rows, provider, kb)

    from .dataset import CATEGORICAL_FIELDS, NUMERIC_FIELDS
    from .scoring import cohort_medians, top_tabular_factor
    from .explain import compose_rationale, map_intervention, week_index
    from .features import SILENT_COMMENT_AGE
    from .pipeline import best_comment_for_tag, text_vector_for

    scored = score_records(trained, [record], text_cache)[0]
    entry = text_cache[record.student_id]
    stress = entry.stress_grounded if trained.spec.ground_affect else entry.stress_plain
    sentiment = entry.sentiment_grounded if trained.spec.ground_affect else entry.sentiment_plain

    # grouped Shapley over the tabular columns against a stratified background
    sample_rows = cohort.rows[: min(len(cohort.rows), 400)]
    X_bg = trained.encoder.encode_many(sample_rows)
    y_bg = np.array([r.label for r in sample_rows])
    background = stratified_background(X_bg, y_bg, per_class=30, seed=settings.seed)
    x_txt = text_vector_for(record, entry, trained.pca, trained.spec)

    groups, names, offset = [], [], 0
    for j, level_map in enumerate(trained.encoder.level_maps):
        groups.append(np.arange(offset, offset + len(level_map)))
        names.append(CATEGORICAL_FIELDS[j])
        offset += len(level_map)
    for j, name in enumerate(list(NUMERIC_FIELDS) + ["days_since_last_grade", "comment_age"]):
        groups.append(np.array([offset + j]))
        names.append(name)

    def risk_fn(X):
        reps = np.repeat(x_txt[None, :], len(X), axis=0)
        return trained.predict(X, reps)[:, 1]

    attribution = shapley_attribution(risk_fn, trained.encoder.encode(record), background,
                                      samples=args.samples, seed=settings.seed,
                                      groups=groups, group_names=names)

    comment, retrieval = best_comment_for_tag(record, stress, provider, kb)
    cited = retrieval.top() if retrieval else None
    week = week_index(comment.age_days if comment else record.latest_comment_age(SILENT_COMMENT_AGE),
                      settings.term_length_days)
    factor, factor_value = top_tabular_factor(trained, record, text_cache,
                                              cohort_medians(cohort.rows))
    rationale = compose_rationale(comment.text if comment else None, cited, sentiment, stress,
                                  risk=scored.risk, week=week, top_factor=factor,
                                  top_factor_value=factor_value)
    plan = map_intervention(stress)
    print(json.dumps({
        "student_id": record.student_id,
        "risk": scored.risk,
        "gate": scored.gate,
        "rationale": rationale.to_json(),
        "intervention": plan.to_json(),
        "attribution": {
            "top": attribution.ranked()[:10],
            "additivity_gap": attribution.additivity_gap,
            "samples": attribution.samples,
        },
    }, indent=2, sort_keys=True))
    return 0


def cmd_serve(args, settings: Settings) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(settings)
    uvicorn.run(app, host=settings.host, port=settings.port, log_level="info")
    return 0


def cmd_bench_latency(args, settings: Settings) -> int:
    data_dir = settings.data_path()
    cohort, trained = load_artifacts(data_dir, args.model)
    provider = default_provider(settings.seed)
    kb = ensure_knowledge_base(data_dir, provider)

    learners = cohort.rows[: min(len(cohort.rows), 500)]
    scorer = make_single_scorer(trained, provider, kb)
    mean_ms, p95_ms = measure_latency(scorer, learners, warmup=args.warmup, reps=args.reps)
    result = {"per_learner_ms": {"mean": mean_ms, "p95": p95_ms},
              "reference_ms": {"value": REFERENCE_RESULTS["triad"]["latency_ms"],
                               "source": SOURCE}}

    if args.cohort_size:
        rows = [cohort.rows[i % len(cohort.rows)] for i in range(args.cohort_size)]
        started = time.time()
        fresh_cache = build_text_cache(rows, provider, kb)
        score_records(trained, rows, fresh_cache)
        result["batch"] = {"learners": args.cohort_size,
                           "seconds": time.time() - started}
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triad",
                                     description="dropout early-warning pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--data-dir", type=str, default=None)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="load and validate the cohort CSV")
    p.add_argument("--csv", type=str, default=None)
    p.add_argument("--synthesize", action="store_true",
                   help="generate the canonical table when the CSV is absent")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("augment", help="attach synthetic comments and timestamps")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("split", help="stratified train/test split")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("model", help="logistic | mlp | triad | variant:<name>")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a trained model on the test fold")
    p.add_argument("--model", default="triad")
    p.add_argument("--latency-reps", type=int, default=200)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the ablation suite")
    p.add_argument("--resamples", type=int, default=2000)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("explain", help="explain one student's score")
    p.add_argument("student_id")
    p.add_argument("--model", default="triad")
    p.add_argument("--samples", type=int, default=1000)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench-latency", help="measure per-learner scoring latency")
    p.add_argument("--model", default="triad")
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--cohort-size", type=int, default=0)
    p.set_defaults(func=cmd_bench_latency)

    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = load_settings(args.config, overrides={
            "seed": args.seed, "data_dir": args.data_dir,
        })
        settings.data_path().mkdir(parents=True, exist_ok=True)
        return args.func(args, settings)
    except TriadError as exc:
        print(exc.one_liner(), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # uniform machine-parsable failure line
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
