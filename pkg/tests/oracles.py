"""Brute-force metric oracles, deliberately naive and loop-based.

These recompute every metric from first principles (pair counting for AUC,
threshold scans for average precision, explicit bin loops for ECE) so the
production implementations are checked against an independent path.
"""

from __future__ import annotations

import numpy as np


def oracle_accuracy(y, probs) -> float:
    correct = 0
    for i in range(len(y)):
        if int(np.argmax(probs[i])) == y[i]:
            correct += 1
    return correct / len(y) if len(y) else 0.0


def oracle_confusion(y, probs):
    out = [[0] * 3 for _ in range(3)]
    for i in range(len(y)):
        out[y[i]][int(np.argmax(probs[i]))] += 1
    return out


def oracle_macro_f1(y, probs) -> float:
    confusion = oracle_confusion(y, probs)
    total = 0.0
    for c in range(3):
        tp = confusion[c][c]
        fp = sum(confusion[r][c] for r in range(3)) - tp
        fn = sum(confusion[c]) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        total += (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
    return total / 3.0


def oracle_auc_binary(scores, positives) -> float:
    """Exhaustive concordant/discordant pair counting with 0.5 for ties."""
    pos = [s for s, p in zip(scores, positives) if p]
    neg = [s for s, p in zip(scores, positives) if not p]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def oracle_roc_auc_ovr(y, probs) -> float:
    aucs = []
    n = len(y)
    for c in range(3):
        positives = [yy == c for yy in y]
        n_pos = sum(positives)
        if n_pos == 0 or n_pos == n:
            continue
        aucs.append(oracle_auc_binary([row[c] for row in probs], positives))
    return sum(aucs) / len(aucs)


def oracle_average_precision(y, probs) -> float:
    scores = [row[1] for row in probs]
    positives = [yy == 1 for yy in y]
    n_pos = sum(positives)
    if n_pos == 0:
        return 0.0
    thresholds = sorted(set(scores), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        tp = fp = 0
        for s, p in zip(scores, positives):
            if s >= t:
                if p:
                    tp += 1
                else:
                    fp += 1
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def oracle_ece(y, probs, n_bins=10) -> float:
    n = len(y)
    bins = [[] for _ in range(n_bins)]
    for i in range(n):
        conf = max(probs[i])
        correct = 1.0 if int(np.argmax(probs[i])) == y[i] else 0.0
        idx = min(int(conf * n_bins), n_bins - 1)
        bins[idx].append((conf, correct))
    total = 0.0
    for members in bins:
        if not members:
            continue
        mean_conf = sum(c for c, _ in members) / len(members)
        mean_acc = sum(a for _, a in members) / len(members)
        total += len(members) / n * abs(mean_conf - mean_acc)
    return total
