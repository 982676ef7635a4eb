"""Shared fixtures.

Two tiers: a small synthesized cohort for fast unit/service tests, and the
full-size canonical cohort (built once per session) for the acceptance
criteria and fusion property checks. Trained pipelines are cached per
model kind so ablation arms are only trained once across the whole run.
"""

from __future__ import annotations

import numpy as np
import pytest

from triad_drop import augment, cohortgen, dataset, features, pipeline

ACCEPT_SEED = 20250617

SMALL_COUNTS = {"Graduate": 140, "Dropout": 90, "Enrolled": 60}


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    """Reduced cohort with comments and timestamps, plus its split."""
    path = tmp_path_factory.mktemp("small") / "cohort.csv"
    cohortgen.write_cohort_csv(path, cohortgen.GeneratorConfig(seed=7, class_counts=SMALL_COUNTS))
    cohort = dataset.impute(dataset.clean_and_dedupe(dataset.load_cohort(path)))
    cfg = augment.AugmentConfig(seed=7)
    cohort = augment.synthesize_timestamps(augment.generate_comments(cohort, cfg), cfg)
    split = features.stratified_split(cohort, 0.2, seed=7)
    return cohort, split


@pytest.fixture(scope="session")
def small_textstack(small_cohort, tmp_path_factory):
    provider = pipeline.default_provider(0)
    kb = pipeline.ensure_knowledge_base(tmp_path_factory.mktemp("kb_small"), provider)
    cohort, _split = small_cohort
    cache = pipeline.build_text_cache(cohort.rows, provider, kb)
    return provider, kb, cache


@pytest.fixture(scope="session")
def small_logistic(small_cohort, small_textstack):
    cohort, split = small_cohort
    provider, kb, cache = small_textstack
    trained = pipeline.train_pipeline(cohort, split, "logistic", seed=7,
                                      provider=provider, kb=kb, text_cache=cache)
    return trained


@pytest.fixture(scope="session")
def service_data_dir(tmp_path_factory, small_cohort, small_logistic):
    """Data dir holding everything the HTTP service and CLI expect."""
    data_dir = tmp_path_factory.mktemp("svc_data")
    cohort, split = small_cohort
    dataset.write_cohort(cohort, data_dir / "augmented.jsonl")
    import json

    (data_dir / "split.json").write_text(json.dumps({
        "seed": 7, "test_fraction": 0.2, "histogram": split.histogram,
        "train_ids": [list(k) for k in split.train_ids],
        "test_ids": [list(k) for k in split.test_ids],
    }), encoding="utf-8")
    pipeline.save_pipeline(small_logistic, data_dir / "models" / "logistic.bundle")
    provider = pipeline.default_provider(7)
    pipeline.ensure_knowledge_base(data_dir, provider)
    return data_dir


# ---------------------------------------------------------------------------
# full-size artifacts for acceptance


@pytest.fixture(scope="session")
def full_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("full") / "cohort.csv"
    manifest = cohortgen.write_cohort_csv(path, cohortgen.GeneratorConfig(seed=ACCEPT_SEED))
    return path, manifest


@pytest.fixture(scope="session")
def full_cohort(full_csv):
    path, _ = full_csv
    cohort = dataset.impute(dataset.clean_and_dedupe(dataset.load_cohort(path)))
    cfg = augment.AugmentConfig(seed=ACCEPT_SEED)
    cohort = augment.synthesize_timestamps(augment.generate_comments(cohort, cfg), cfg)
    return cohort


@pytest.fixture(scope="session")
def full_split(full_cohort):
    return features.stratified_split(full_cohort, 0.2, seed=ACCEPT_SEED)


@pytest.fixture(scope="session")
def full_textstack(full_cohort, tmp_path_factory):
    provider = pipeline.default_provider(0)
    kb = pipeline.ensure_knowledge_base(tmp_path_factory.mktemp("kb_full"), provider)
    cache = pipeline.build_text_cache(full_cohort.rows, provider, kb)
    return provider, kb, cache


@pytest.fixture(scope="session")
def trained_cache():
    return {}


@pytest.fixture(scope="session")
def train_full(full_cohort, full_split, full_textstack, trained_cache):
    """Lazy, memoized trainer for the full-size cohort."""
    provider, kb, cache = full_textstack

    def get(kind: str):
        if kind not in trained_cache:
            trained_cache[kind] = pipeline.train_pipeline(
                full_cohort, full_split, kind, seed=ACCEPT_SEED,
                provider=provider, kb=kb, text_cache=cache,
            )
        return trained_cache[kind]

    return get


@pytest.fixture(scope="session")
def full_test_labels(full_cohort, full_split):
    rows = full_split.test_rows(full_cohort)
    return rows, np.array([r.label for r in rows])
