"""SMOTENC-style oversampling of the mixed categorical/numeric training fold.

Synthetic rows interpolate numeric features along the segment between a
seed row and one of its k nearest in-class neighbors; categorical slots
take the neighbor mode, falling back to the seed row's value on ties.
Neighbor distances are Euclidean over z-scored numerics plus a constant
penalty per categorical mismatch (the median of the z-scored numeric
standard deviations, the usual mixed-type heuristic).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dataset import CleanCohort, StudentRecord
from .errors import TooFewMinoritySamples


@dataclass
class ResamplePlan:
    k_neighbors: int = 5
    target: int | None = None  # per-class count; defaults to the max class count
    seed: int = 0

    def validate(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")


@dataclass
class SmotencResult:
    numeric: np.ndarray
    categorical: np.ndarray
    labels: np.ndarray
    synthetic: np.ndarray  # bool mask
    seed_indexes: np.ndarray  # source row index per synthetic row, -1 for originals


def _class_rng(seed: int, label: int) -> np.random.Generator:
    digest = hashlib.blake2b(f"smotenc:{seed}:{label}".encode(), digest_size=8).digest()
    return np.random.default_rng(np.random.PCG64(int.from_bytes(digest, "little")))


def smotenc(numeric: np.ndarray, categorical: np.ndarray, labels: np.ndarray,
            plan: ResamplePlan) -> SmotencResult:
    """Core array-level balancer; every class is raised to the target count."""
    plan.validate()
    numeric = np.asarray(numeric, dtype=float)
    categorical = np.asarray(categorical)
    labels = np.asarray(labels)
    n, _ = numeric.shape

    mean = numeric.mean(axis=0) if n else 0.0
    sd = numeric.std(axis=0) if n else 1.0
    sd = np.where(sd == 0, 1.0, sd)
    z = (numeric - mean) / sd
    penalty = float(np.median(z.std(axis=0))) if z.size else 1.0

    counts = {int(c): int((labels == c).sum()) for c in np.unique(labels)}
    target = plan.target if plan.target is not None else max(counts.values())
    if target < max(counts.values()):
        raise ValueError("target below the current max class count")

    out_num = [numeric]
    out_cat = [categorical]
    out_lab = [labels]
    out_syn = [np.zeros(n, dtype=bool)]
    out_seed = [np.full(n, -1, dtype=int)]

    for label in sorted(counts):
        need = target - counts[label]
        if need == 0:
            continue
        members = np.flatnonzero(labels == label)
        if len(members) <= plan.k_neighbors:
            raise TooFewMinoritySamples(
                f"class {label} has {len(members)} rows, need more than k={plan.k_neighbors}"
            )

        zc = z[members]
        cc = categorical[members]
        # pairwise distance within the class: squared z-gap plus penalty^2
        # per categorical mismatch
        d2 = ((zc[:, None, :] - zc[None, :, :]) ** 2).sum(axis=2)
        if cc.size:
            mismatches = (cc[:, None, :] != cc[None, :, :]).sum(axis=2)
            d2 = d2 + (penalty**2) * mismatches
        np.fill_diagonal(d2, np.inf)
        neighbor_idx = np.argsort(d2, axis=1, kind="stable")[:, : plan.k_neighbors]

        rng = _class_rng(plan.seed, label)
        seed_choices = rng.integers(0, len(members), size=need)
        pick = rng.integers(0, plan.k_neighbors, size=need)
        t = rng.random(need)

        syn_num = np.empty((need, numeric.shape[1]))
        syn_cat = np.empty((need, categorical.shape[1]), dtype=categorical.dtype)
        for s in range(need):
            i = seed_choices[s]
            neighbors = neighbor_idx[i]
            j = neighbors[pick[s]]
            a = numeric[members[i]]
            b = numeric[members[j]]
            syn_num[s] = a + t[s] * (b - a)
            for col in range(categorical.shape[1]):
                values, freq = np.unique(cc[neighbors, col], return_counts=True)
                top = freq.max()
                modes = values[freq == top]
                syn_cat[s, col] = modes[0] if len(modes) == 1 else cc[i, col]

        out_num.append(syn_num)
        out_cat.append(syn_cat)
        out_lab.append(np.full(need, label, dtype=labels.dtype))
        out_syn.append(np.ones(need, dtype=bool))
        out_seed.append(members[seed_choices])

    return SmotencResult(
        numeric=np.concatenate(out_num),
        categorical=np.concatenate(out_cat),
        labels=np.concatenate(out_lab),
        synthetic=np.concatenate(out_syn),
        seed_indexes=np.concatenate(out_seed),
    )


def smotenc_balance(train_rows: list, plan: ResamplePlan) -> list:
    """Record-level balancing for the training fold.

    Numeric interpolation covers the five academic metrics, gdp and the
    grade-gap day count. Comments (and with them the comment-age feature)
    are reused from the seed row, since interpolating one-hot text blocks
    is not meaningful.
    """
    if not train_rows:
        return []
    numeric = np.array(
        [list(map(float, r.numeric_features)) + [float(r.gdp), float(r.days_since_last_grade)]
         for r in train_rows]
    )
    categorical = np.array([r.categorical_codes for r in train_rows])
    labels = np.array([r.label for r in train_rows])

    counts = {c: int((labels == c).sum()) for c in np.unique(labels)}
    target = plan.target if plan.target is not None else max(counts.values())
    if all(v == target for v in counts.values()):
        return list(train_rows)

    result = smotenc(numeric, categorical, labels, plan)
    rows = list(train_rows)
    n_original = len(train_rows)
    for s in range(n_original, len(result.labels)):
        seed_row = train_rows[int(result.seed_indexes[s])]
        nums = result.numeric[s]
        rows.append(
            StudentRecord(
                student_id=f"syn-{plan.seed}-{int(result.labels[s])}-{s - n_original}",
                term=seed_row.term,
                categorical_codes=[int(v) for v in result.categorical[s]],
                numeric_features=[float(v) for v in nums[:-2]],
                gdp=float(nums[-2]),
                label=int(result.labels[s]),
                comments=list(seed_row.comments),
                days_since_last_grade=int(round(float(nums[-1]))),
                synthetic=True,
            )
        )
    return rows
