import numpy as np
import pytest
from hypothesis import given, strategies as st

from triad_drop.dataset import CATEGORICAL_FIELDS, UNKNOWN_LEVEL, CleanCohort, StudentRecord
from triad_drop.errors import ClassTooSmall, UnfittedEncoder
from triad_drop.features import (
    PCA_COMPONENTS,
    TEXT_VECTOR_WIDTH,
    TabularEncoder,
    TextVector,
    build_text_vector,
    fit_pca,
    fit_tabular_encoder,
    project,
    stratified_split,
)
from triad_drop.lexicon import SENTIMENTS, STRESS_TAGS


def record(i, label, cats=None, nums=None, term=1):
    return StudentRecord(
        student_id=f"s{i:04d}",
        term=term,
        categorical_codes=cats if cats is not None else [i % 3] * 29,
        numeric_features=nums if nums is not None else [float(i)] * 5,
        gdp=0.5,
        label=label,
        days_since_last_grade=i % 10,
    )


class TestSplit:
    def test_paper_counts(self, full_cohort):
        plan = stratified_split(full_cohort, 0.2, seed=1)
        assert plan.histogram[0] == {"train": 1766, "test": 442}
        assert plan.histogram[1] == {"train": 1137, "test": 284}
        assert plan.histogram[2] == {"train": 635, "test": 159}

    def test_disjoint_and_complete(self, small_cohort):
        cohort, plan = small_cohort
        train, test = set(plan.train_ids), set(plan.test_ids)
        assert not train & test
        assert len(train | test) == len(cohort)

    def test_ten_rows_one_class(self):
        rows = [record(i, 1) for i in range(10)] + [record(100 + i, 0) for i in range(40)]
        plan = stratified_split(CleanCohort(rows=rows), 0.2, seed=0)
        assert plan.histogram[1]["test"] == 2

    def test_row_order_irrelevant(self):
        rows = [record(i, i % 3) for i in range(90)]
        a = stratified_split(CleanCohort(rows=rows), 0.2, seed=5)
        b = stratified_split(CleanCohort(rows=list(reversed(rows))), 0.2, seed=5)
        assert set(a.test_ids) == set(b.test_ids)
        assert set(a.train_ids) == set(b.train_ids)

    def test_seed_changes_membership(self):
        rows = [record(i, i % 3) for i in range(90)]
        a = stratified_split(CleanCohort(rows=rows), 0.2, seed=1)
        b = stratified_split(CleanCohort(rows=rows), 0.2, seed=2)
        assert set(a.test_ids) != set(b.test_ids)

    def test_class_too_small(self):
        rows = [record(0, 0)] + [record(i, 1) for i in range(1, 10)]
        with pytest.raises(ClassTooSmall):
            stratified_split(CleanCohort(rows=rows), 0.2, seed=0)


class TestTabularEncoder:
    def test_unfitted_errors(self):
        enc = TabularEncoder()
        with pytest.raises(UnfittedEncoder):
            enc.encode(record(0, 0))
        with pytest.raises(UnfittedEncoder):
            enc.width

    def test_width_matches_level_enumeration_oracle(self, full_cohort, full_split):
        train_rows = full_split.train_rows(full_cohort)
        enc = fit_tabular_encoder(train_rows)
        oracle = 0
        for j in range(29):
            levels = {r.categorical_codes[j] for r in train_rows} | {UNKNOWN_LEVEL}
            oracle += len(levels)
        assert enc.width == oracle + 7
        assert 120 <= enc.width <= 160  # the declared ballpark

    def test_all_median_row_zero_z_scores(self):
        rows = [record(i, 0, nums=[float(v)] * 5) for i, v in enumerate([1, 2, 3, 4, 5])]
        for r in rows:
            r.days_since_last_grade = 4
        enc = fit_tabular_encoder(rows)
        middle = record(99, 0, nums=[3.0] * 5)
        middle.days_since_last_grade = 4
        # comment_age: all rows silent, so the silent default is the mean
        vec = enc.encode(middle)
        assert np.allclose(vec[-7:], 0.0, atol=1e-12)

    def test_unseen_level_maps_to_unknown(self):
        rows = [record(i, 0, cats=[1] * 29) for i in range(4)]
        enc = fit_tabular_encoder(rows)
        probe = record(9, 0, cats=[77] * 29)
        vec = enc.encode(probe)
        level_map = enc.level_maps[0]
        assert vec[level_map[UNKNOWN_LEVEL]] == 1.0

    def test_one_hot_block_sums(self, small_cohort):
        cohort, plan = small_cohort
        enc = fit_tabular_encoder(plan.train_rows(cohort))
        vec = enc.encode(cohort.rows[0])
        offset = 0
        for level_map in enc.level_maps:
            block = vec[offset : offset + len(level_map)]
            assert block.sum() == 1.0
            offset += len(level_map)

    def test_train_fold_z_statistics(self, small_cohort):
        cohort, plan = small_cohort
        train = plan.train_rows(cohort)
        enc = fit_tabular_encoder(train)
        encoded = enc.encode_many(train)
        z = encoded[:, -7:]
        assert np.max(np.abs(z.mean(axis=0))) < 1e-9
        assert np.max(np.abs(z.std(axis=0) - 1.0)) < 1e-6

    def test_total_on_imputed_rows(self, full_cohort):
        enc = fit_tabular_encoder(full_cohort.rows[:500])
        for r in full_cohort.rows[500:600]:
            vec = enc.encode(r)
            assert np.all(np.isfinite(vec))

    def test_no_leakage_refit_differs(self, full_cohort, full_split):
        train_only = fit_tabular_encoder(full_split.train_rows(full_cohort))
        train_plus_test = fit_tabular_encoder(full_cohort.rows)
        assert not np.allclose(train_only.z_mean, train_plus_test.z_mean)

    def test_serialization_roundtrip(self, small_cohort):
        cohort, plan = small_cohort
        enc = fit_tabular_encoder(plan.train_rows(cohort))
        meta, arrays = enc.to_arrays()
        back = TabularEncoder.from_arrays(meta, arrays)
        probe = cohort.rows[3]
        assert np.allclose(enc.encode(probe), back.encode(probe))


class TestPca:
    def test_planar_data_exact_reconstruction(self):
        rng = np.random.default_rng(0)
        basis = rng.normal(size=(2, 384))
        coords = rng.normal(size=(50, 2))
        X = coords @ basis + 3.0
        pca = fit_pca(X, k=2)
        scores = project(pca, X)
        recon = scores @ pca.components + pca.mean
        assert np.max(np.abs(recon - X)) < 1e-8

    def test_orthonormal_components(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(200, 384))
        pca = fit_pca(X, k=50)
        gram = pca.components @ pca.components.T
        assert np.max(np.abs(gram - np.eye(50))) < 1e-6

    def test_mean_projects_to_zero(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(80, 384))
        pca = fit_pca(X, k=10)
        assert np.max(np.abs(project(pca, pca.mean))) < 1e-9

    def test_sign_convention_deterministic(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 40))
        a = fit_pca(X, k=5)
        b = fit_pca(X.copy(), k=5)
        assert np.allclose(a.components, b.components)
        for row in a.components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_rank_deficient_shrinks(self):
        rng = np.random.default_rng(4)
        basis = rng.normal(size=(3, 20))
        X = rng.normal(size=(30, 3)) @ basis
        pca = fit_pca(X, k=10)
        assert pca.k == 3

    def test_explained_variance_fractions(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(100, 30))
        pca = fit_pca(X, k=30 - 1)
        assert np.all(np.diff(pca.explained_variance) <= 1e-12)
        assert pca.explained_variance.sum() <= 1.0 + 1e-9

    def test_needs_more_rows_than_k(self):
        with pytest.raises(ValueError):
            fit_pca(np.zeros((5, 10)), k=5)


class TestTextVector:
    def test_silent_default(self):
        vec = build_text_vector(None, None, None).to_array()
        assert vec.shape == (TEXT_VECTOR_WIDTH,)
        assert np.all(vec[:PCA_COMPONENTS] == 0.0)
        assert vec[PCA_COMPONENTS + SENTIMENTS.index("neutral")] == 1.0
        assert vec[PCA_COMPONENTS + 3 + STRESS_TAGS.index("none")] == 1.0

    @pytest.mark.parametrize("sentiment", SENTIMENTS)
    @pytest.mark.parametrize("stress", STRESS_TAGS)
    def test_exactly_one_bit_per_block(self, sentiment, stress):
        vec = TextVector(np.ones(PCA_COMPONENTS), sentiment, stress).to_array()
        assert vec[PCA_COMPONENTS : PCA_COMPONENTS + 3].sum() == 1.0
        assert vec[PCA_COMPONENTS + 3 :].sum() == 1.0

    @given(st.integers(0, 2), st.integers(0, 3))
    def test_bits_land_in_right_slot(self, si, ti):
        vec = TextVector(np.zeros(PCA_COMPONENTS), SENTIMENTS[si], STRESS_TAGS[ti]).to_array()
        assert vec[PCA_COMPONENTS + si] == 1.0
        assert vec[PCA_COMPONENTS + 3 + ti] == 1.0
