"""Sentiment and stress-tag classification over grounded prompts.

A weighted lexicon scorer stands in for a fine-tuned encoder behind the
same interface. Retrieved passage text contributes at weight 0.3 against
the comment's 1.0, which is the grounding mechanism: a domain phrase with
no sentiment-bearing surface words can be tipped by the affect carried in
its best-matching passages.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..lexicon import (
    NEGATIVE_LEXICON,
    NEUTRAL_BASELINE,
    NEUTRAL_LEXICON,
    NONE_BASELINE,
    POSITIVE_LEXICON,
    SENTIMENTS,
    STRESS_LEXICON,
    STRESS_TAGS,
)
from .embedding import tokenize
from .prompts import Prompt

PASSAGE_WEIGHT = 0.3

# deterministic argmax tie-breaks: prefer the calmer reading
_SENTIMENT_PREFERENCE = ("neutral", "negative", "positive")
_STRESS_PREFERENCE = ("none", "isolation", "workload", "confusion")


@dataclass
class AffectLabels:
    sentiment_probs: tuple
    stress_probs: tuple

    @property
    def sentiment(self) -> str:
        return _argmax_label(SENTIMENTS, self.sentiment_probs, _SENTIMENT_PREFERENCE)

    @property
    def stress(self) -> str:
        return _argmax_label(STRESS_TAGS, self.stress_probs, _STRESS_PREFERENCE)


def _argmax_label(labels: tuple, probs: tuple, preference: tuple) -> str:
    best = max(probs)
    tied = [l for l, p in zip(labels, probs) if p == best]
    for candidate in preference:
        if candidate in tied:
            return candidate
    return tied[0]


def _softmax(scores: np.ndarray) -> tuple:
    z = scores - scores.max()
    e = np.exp(z)
    return tuple(float(v) for v in e / e.sum())


def _weighted_tokens(prompt: Prompt):
    for token in tokenize(prompt.comment_text):
        yield token, 1.0
    for passage_text in prompt.passage_texts:
        for token in tokenize(passage_text):
            yield token, PASSAGE_WEIGHT


def classify_sentiment(prompt: Prompt) -> tuple:
    """3-way softmax over (negative, neutral, positive) lexicon scores."""
    if prompt.token_count == 0:
        return (1 / 3, 1 / 3, 1 / 3)
    scores = np.array([0.0, NEUTRAL_BASELINE, 0.0])
    for token, weight in _weighted_tokens(prompt):
        if token in NEGATIVE_LEXICON:
            scores[0] += weight * NEGATIVE_LEXICON[token]
        if token in NEUTRAL_LEXICON:
            scores[1] += weight * NEUTRAL_LEXICON[token]
        if token in POSITIVE_LEXICON:
            scores[2] += weight * POSITIVE_LEXICON[token]
    return _softmax(scores)


def classify_stress(prompt: Prompt) -> tuple:
    """4-way softmax over (isolation, workload, confusion, none) scores."""
    if prompt.token_count == 0:
        return (0.25, 0.25, 0.25, 0.25)
    scores = np.array([0.0, 0.0, 0.0, NONE_BASELINE])
    for token, weight in _weighted_tokens(prompt):
        for t, lex in enumerate((STRESS_LEXICON["isolation"], STRESS_LEXICON["workload"], STRESS_LEXICON["confusion"])):
            if token in lex:
                scores[t] += weight * lex[token]
    return _softmax(scores)


def classify(prompt: Prompt) -> AffectLabels:
    return AffectLabels(
        sentiment_probs=classify_sentiment(prompt),
        stress_probs=classify_stress(prompt),
    )
