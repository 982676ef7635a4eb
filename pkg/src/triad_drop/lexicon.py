"""Affect lexicons and the synonym expansion table.

The stress lexicon doubles as the marker vocabulary for the synthetic
comment generator, which is what makes tagger validation against generator
ground truth possible. Weights are scoring strengths, not frequencies.
"""

from __future__ import annotations

STRESS_TAGS = ("isolation", "workload", "confusion", "none")
SENTIMENTS = ("negative", "neutral", "positive")

STRESS_LEXICON = {
    "isolation": {
        "isolated": 1.6,
        "alone": 1.4,
        "lonely": 1.5,
        "disconnected": 1.3,
        "unsupported": 1.2,
        "excluded": 1.2,
        "invisible": 1.0,
        "nobody": 0.9,
    },
    "workload": {
        "workload": 1.6,
        "overwhelmed": 1.5,
        "swamped": 1.4,
        "deadlines": 1.2,
        "deadline": 1.0,
        "overloaded": 1.4,
        "juggling": 1.1,
        "behind": 0.9,
        "drowning": 1.3,
    },
    "confusion": {
        "confused": 1.6,
        "confusing": 1.4,
        "lost": 1.2,
        "unclear": 1.3,
        "stuck": 1.1,
        "puzzled": 1.2,
        "baffled": 1.2,
    },
}

# Baseline score the "none" tag receives for any non-empty prompt; a themed
# comment must out-score this to be tagged.
NONE_BASELINE = 0.8

NEGATIVE_LEXICON = {
    "frustrated": 1.4,
    "frustrating": 1.3,
    "worried": 1.2,
    "anxious": 1.3,
    "stressed": 1.3,
    "stress": 1.0,
    "struggling": 1.3,
    "discouraged": 1.3,
    "unhappy": 1.2,
    "exhausted": 1.1,
    "disappointing": 1.2,
    "disheartening": 1.2,
    "hopeless": 1.3,
    "miserable": 1.2,
    "dreading": 1.1,
    "setback": 0.9,
    "difficult": 0.7,
}

POSITIVE_LEXICON = {
    "enjoying": 1.3,
    "great": 1.1,
    "confident": 1.2,
    "motivated": 1.2,
    "helpful": 1.0,
    "pleased": 1.1,
    "excited": 1.2,
    "rewarding": 1.2,
    "encouraging": 1.1,
    "satisfying": 1.1,
    "thrilled": 1.2,
    "proud": 1.1,
}

NEUTRAL_LEXICON = {
    "okay": 0.6,
    "fine": 0.6,
    "average": 0.5,
    "usual": 0.4,
    "routine": 0.5,
}

NEUTRAL_BASELINE = 0.6

# Token -> concept tokens appended during embedding, so that phrases built
# from different surface words about the same stressor land near each other.
SYNONYM_EXPANSION = {
    "deadline": ("workload",),
    "deadlines": ("workload",),
    "pressure": ("stress", "workload"),
    "anxiety": ("stress",),
    "anxious": ("stress",),
    "stressed": ("stress",),
    "overwhelmed": ("workload", "stress"),
    "swamped": ("workload",),
    "overloaded": ("workload",),
    "drowning": ("workload",),
    "juggling": ("workload",),
    "alone": ("isolation",),
    "lonely": ("isolation",),
    "isolated": ("isolation",),
    "disconnected": ("isolation",),
    "excluded": ("isolation",),
    "unsupported": ("isolation",),
    "confused": ("confusion",),
    "confusing": ("confusion",),
    "unclear": ("confusion",),
    "puzzled": ("confusion",),
    "baffled": ("confusion",),
    "stuck": ("confusion",),
    "failed": ("grade", "quiz"),
    "failing": ("grade",),
    "resubmission": ("portal", "assignment"),
    "mentor": ("support",),
    "mentorship": ("support",),
    "counsellor": ("support",),
    "tutor": ("support",),
}
