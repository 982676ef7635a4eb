import numpy as np
import pytest

from triad_drop.dataset import Comment, StudentRecord
from triad_drop.errors import TooFewMinoritySamples
from triad_drop.resample import ResamplePlan, smotenc, smotenc_balance


def toy_arrays():
    """Majority class 0 (8 points), minority class 1 with two points on the
    diagonal of the unit square."""
    rng = np.random.default_rng(0)
    majority = rng.normal(10.0, 0.5, size=(8, 2))
    minority = np.array([[0.0, 0.0], [1.0, 1.0]])
    numeric = np.vstack([majority, minority])
    categorical = np.zeros((10, 1), dtype=int)
    labels = np.array([0] * 8 + [1] * 2)
    return numeric, categorical, labels


class TestCore:
    def test_toy_segment_property(self):
        numeric, categorical, labels = toy_arrays()
        plan = ResamplePlan(k_neighbors=1, seed=3)
        result = smotenc(numeric, categorical, labels, plan)
        synth = result.numeric[result.synthetic]
        assert len(synth) == 6
        for x, y in synth:
            assert abs(x - y) < 1e-9  # on the segment (t, t)
            assert -1e-9 <= x <= 1.0 + 1e-9

    def test_counts_balanced(self):
        numeric, categorical, labels = toy_arrays()
        result = smotenc(numeric, categorical, labels, ResamplePlan(k_neighbors=1, seed=1))
        values, counts = np.unique(result.labels, return_counts=True)
        assert counts.tolist() == [8, 8]

    def test_synthetic_flags_and_seeds(self):
        numeric, categorical, labels = toy_arrays()
        result = smotenc(numeric, categorical, labels, ResamplePlan(k_neighbors=1, seed=1))
        assert result.synthetic.sum() == 6
        assert np.all(result.seed_indexes[result.synthetic] >= 8)  # minority rows
        assert np.all(result.seed_indexes[~result.synthetic] == -1)

    def test_deterministic(self):
        numeric, categorical, labels = toy_arrays()
        plan = ResamplePlan(k_neighbors=1, seed=9)
        a = smotenc(numeric, categorical, labels, plan)
        b = smotenc(numeric, categorical, labels, plan)
        assert np.array_equal(a.numeric, b.numeric)
        assert np.array_equal(a.categorical, b.categorical)

    def test_too_few_minority(self):
        numeric, categorical, labels = toy_arrays()
        with pytest.raises(TooFewMinoritySamples):
            smotenc(numeric, categorical, labels, ResamplePlan(k_neighbors=5, seed=0))

    def test_categorical_mode_and_tie_rule(self):
        rng = np.random.default_rng(2)
        majority = rng.normal(50.0, 1.0, size=(30, 1))
        minority_num = np.linspace(0, 1, 6)[:, None]
        minority_cat = np.array([[1], [1], [1], [2], [2], [3]])
        numeric = np.vstack([majority, minority_num])
        categorical = np.vstack([np.zeros((30, 1), dtype=int), minority_cat])
        labels = np.array([0] * 30 + [1] * 6)
        result = smotenc(numeric, categorical, labels, ResamplePlan(k_neighbors=5, seed=4))
        # neighbor votes are cast among the 6 minority rows, so outputs stay
        # within the values the participants carry
        synth_cats = result.categorical[result.synthetic][:, 0]
        assert set(synth_cats) <= {1, 2, 3}

    def test_segment_membership_brute_force(self):
        """Every synthetic numeric row sits on a segment between its seed row
        and one of that row's k nearest in-class neighbors."""
        rng = np.random.default_rng(6)
        numeric = np.vstack([
            rng.normal(5.0, 1.0, size=(20, 3)),
            rng.normal(0.0, 1.0, size=(8, 3)),
        ])
        categorical = np.zeros((28, 2), dtype=int)
        labels = np.array([0] * 20 + [1] * 8)
        plan = ResamplePlan(k_neighbors=3, seed=7)
        result = smotenc(numeric, categorical, labels, plan)

        minority_rows = numeric[20:]
        for s in np.flatnonzero(result.synthetic):
            seed_row = numeric[result.seed_indexes[s]]
            point = result.numeric[s]
            on_some_segment = False
            for other in minority_rows:
                direction = other - seed_row
                denom = direction @ direction
                if denom == 0:
                    continue
                t = (point - seed_row) @ direction / denom
                if -1e-9 <= t <= 1 + 1e-9 and np.allclose(seed_row + t * direction, point, atol=1e-9):
                    on_some_segment = True
                    break
            assert on_some_segment


class TestRecordLevel:
    def _rows(self, counts=(12, 8, 7)):
        rows = []
        i = 0
        for label, n in enumerate(counts):
            for _ in range(n):
                rows.append(StudentRecord(
                    student_id=f"r{i:03d}", term=1,
                    categorical_codes=[label] * 29,
                    numeric_features=[float(i), float(label), 1.0, 2.0, 3.0],
                    gdp=0.1, label=label,
                    comments=[Comment(f"text {i}", 2)],
                    days_since_last_grade=label * 5 + 1,
                ))
                i += 1
        return rows

    def test_balances_to_max(self):
        rows = self._rows()
        out = smotenc_balance(rows, ResamplePlan(k_neighbors=3, seed=2))
        counts = {}
        for r in out:
            counts[r.label] = counts.get(r.label, 0) + 1
        assert counts == {0: 12, 1: 12, 2: 12}

    def test_already_balanced_is_noop(self):
        rows = self._rows(counts=(6, 6, 6))
        out = smotenc_balance(rows, ResamplePlan(k_neighbors=3, seed=2))
        assert out == rows
        assert not any(r.synthetic for r in out)

    def test_synthetic_rows_flagged_and_text_reused(self):
        rows = self._rows()
        out = smotenc_balance(rows, ResamplePlan(k_neighbors=3, seed=2))
        synth = [r for r in out if r.synthetic]
        assert len(synth) == 9
        originals = {r.student_id: r for r in rows}
        original_comments = {tuple(r.comments) for r in rows}
        for r in synth:
            assert r.student_id.startswith("syn-")
            assert tuple(r.comments) in original_comments
        assert set(originals) <= {r.student_id for r in out}

    def test_test_fold_ids_never_involved(self, full_cohort, full_split):
        train_rows = full_split.train_rows(full_cohort)
        out = smotenc_balance(train_rows[:300], ResamplePlan(k_neighbors=5, seed=1))
        test_ids = {sid for sid, _ in full_split.test_ids}
        assert not any(r.student_id in test_ids for r in out)
