"""Externally reported benchmark results, kept as context constants.

These numbers come from the original study of this system on its private
comment corpus and fine-tuned encoders. They are NOT reproduced by this
artifact and are only attached to reports for side-by-side context;
baselines we do not implement (random forest, gradient boosting, the
text-only BERT) appear here exclusively.
"""

REFERENCE_RESULTS = {
    "logistic_regression": {"accuracy": 0.76, "macro_f1": 0.63, "roc_auc_ovr": 0.81,
                            "pr_auc_dropout": 0.54, "ece": 0.090, "latency_ms": 0.3},
    "random_forest": {"accuracy": 0.79, "macro_f1": 0.70, "roc_auc_ovr": 0.85,
                      "pr_auc_dropout": 0.61, "ece": 0.082, "latency_ms": 1.7},
    "xgboost": {"accuracy": 0.82, "macro_f1": 0.74, "roc_auc_ovr": 0.88,
                "pr_auc_dropout": 0.67, "ece": 0.071, "latency_ms": 2.1},
    "tabular_mlp": {"accuracy": 0.84, "macro_f1": 0.77, "ece": 0.062, "latency_ms": 0.4},
    "comment_bert": {"accuracy": 0.71, "macro_f1": 0.59, "ece": 0.113, "latency_ms": 14.8},
    "triad": {"accuracy": 0.89, "macro_f1": 0.85, "roc_auc_ovr": 0.92,
              "pr_auc_dropout": 0.79, "ece": 0.042, "latency_ms": 14.2},
}

# macro-F1 deltas vs the full model, in percentage points
REFERENCE_ABLATION_DELTAS = {
    "no_rag": -4,
    "no_stress": -3,
    "no_gate": -5,
    "tabular_only": -11,
    "text_only": -26,
}

# The reported discordant counts (78, 23) give chi2 = 55^2/101 = 29.95 under
# the standard statistic; the originally reported 26.1 is not reproducible
# from those counts and is recorded as a documented discrepancy.
REFERENCE_MCNEMAR = {
    "b": 78,
    "c": 23,
    "reported_chi2": 26.1,
    "recomputed_chi2": 29.950495049504951,
}

SOURCE = "external"
