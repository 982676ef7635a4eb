"""Synthetic comment corpus and timestamp fields.

The public table carries no free text and no timestamps, so both are
synthesized here from seeded, label-conditioned template banks. Every
output is a pure function of (cohort, seed): per-student generators are
keyed by the stable student id, which makes generation order-independent
and embarrassingly parallel.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import CleanCohort, Comment, StudentRecord
from .lexicon import SENTIMENTS, STRESS_TAGS

THEMES = STRESS_TAGS  # isolation, workload, confusion, none


@dataclass
class AugmentConfig:
    seed: int = 20250617
    comments_per_student: int = 5
    sentiment_mix: tuple = (0.38, 0.42, 0.20)
    word_count_mean: float = 42.0
    word_count_sd: float = 18.0
    word_count_min: int = 5
    word_count_max: int = 120
    census_date: str = "2024-06-30"
    term_length_days: int = 98
    # probability that a Dropout-labelled student's comment draws a stress
    # theme; the remaining mass goes to "none"
    coupling: float = 0.65

    def validate(self) -> None:
        if abs(sum(self.sentiment_mix) - 1.0) > 1e-9:
            raise ValueError("sentiment_mix must sum to 1")
        if self.comments_per_student < 0:
            raise ValueError("comments_per_student must be >= 0")
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError("coupling must lie in [0, 1]")


@dataclass
class CorpusStats:
    n_comments: int
    mean_words: float
    sd_words: float
    sentiment_mix: tuple | None
    mattr: float

    def to_json(self) -> dict:
        return {
            "n_comments": self.n_comments,
            "mean_words": self.mean_words,
            "sd_words": self.sd_words,
            "sentiment_mix": list(self.sentiment_mix) if self.sentiment_mix else None,
            "mattr": self.mattr,
        }


# conditional stress-theme shares for Dropout students, scaled by coupling
DROPOUT_THEME_SHARES = (0.3846, 0.3846, 0.2308)

# label -> (isolation, workload, confusion, none) theme probabilities;
# Dropout is built at runtime from the coupling knob
THEME_DIST = {
    0: (0.03, 0.06, 0.03, 0.88),  # Graduate
    2: (0.10, 0.15, 0.10, 0.65),  # Enrolled
}

# label -> sentiment distribution given a stress theme / given theme "none".
# The Graduate "none" row balances the overall corpus mix to the target
# (38, 42, 20)% at the published class proportions.
SENT_GIVEN_STRESS = {
    0: (0.75, 0.20, 0.05),
    1: (0.85, 0.13, 0.02),
    2: (0.80, 0.17, 0.03),
}
SENT_GIVEN_NONE = {
    0: (0.1090, 0.5686, 0.3224),
    1: (0.30, 0.50, 0.20),
    2: (0.22, 0.55, 0.23),
}

# opening sentence templates; each stress-themed opening places a marker
# word from the stress lexicon inside the first few tokens
OPENINGS = {
    "isolation": (
        "i feel isolated in module {module} and nobody replies to my posts.",
        "feeling alone in this course since week {week}.",
        "i am lonely working through {topic} with no study partners.",
        "honestly i feel disconnected from the cohort in module {module}.",
        "i feel unsupported and invisible in the {topic} forum.",
        "i feel excluded from the group work around {topic}.",
    ),
    "workload": (
        "the workload in module {module} is crushing me this week.",
        "i am overwhelmed by the deadlines piling up in {topic}.",
        "totally swamped trying to finish {topic} before week {week}.",
        "i feel overloaded juggling {topic} with my job.",
        "i am drowning in module {module} assignments.",
        "falling behind on deadlines for {topic} again.",
    ),
    "confusion": (
        "i am confused by the {topic} material in module {module}.",
        "still lost in module {module} quizzes.",
        "the instructions for {topic} are unclear to me.",
        "i am stuck on {topic} and the examples do not help.",
        "honestly puzzled by the marking scheme for {topic}.",
        "the {topic} notes are confusing from start to finish.",
    ),
    "none": (
        "checking in about {topic} for module {module}.",
        "watched the week {week} lecture on {topic} yesterday.",
        "submitted my {topic} work for module {module}.",
        "a quick note on the {topic} reading list.",
        "the week {week} session covered {topic}.",
        "working through {topic} at my own pace.",
    ),
}

SENTIMENT_SENTENCES = {
    "negative": (
        "i feel frustrated about how {topic} is going.",
        "it is getting stressful and i am worried about my progress.",
        "this has been a discouraging stretch of the course.",
        "i am struggling to stay on track with {topic}.",
        "the last quiz result was disappointing.",
        "i feel anxious whenever a new task opens.",
    ),
    "neutral": (
        "the pace seems about average for this term.",
        "i will check the {topic} rubric again tomorrow.",
        "office hours are at the usual time this week.",
        "my notes from week {week} cover most of {topic}.",
        "the portal shows my submission as received.",
        "no major change from the routine so far.",
    ),
    "positive": (
        "i am really enjoying the {topic} sessions.",
        "the feedback this week was encouraging and helpful.",
        "feeling confident after the week {week} review.",
        "the group call about {topic} was great.",
        "i am motivated to push through the next unit.",
        "finishing {topic} early felt rewarding.",
    ),
}

FILLERS = (
    "the video for {topic} ran about twenty minutes.",
    "i posted a question in the module {module} thread.",
    "my schedule only leaves evenings for study.",
    "the reading on {topic} references last week's slides.",
    "i plan to review {topic} before the next quiz.",
    "week {week} has two graded activities listed.",
    "the tutor shared extra examples on {topic}.",
    "i keep my drafts in the shared folder.",
    "the forum thread on {topic} has a few replies.",
    "next milestone is the module {module} checkpoint.",
    "i reread the syllabus section on {topic} today.",
    "the practice set for {topic} took most of sunday.",
    "my study group meets online on thursdays.",
    "i bookmarked the guide on {topic} for later.",
    "the calendar shows the week {week} deadline clearly.",
    "notes from the {topic} webinar are on the portal.",
)

TOPICS = (
    "statistics", "linear algebra", "the discussion forum", "peer review",
    "the group project", "lab reports", "essay drafts", "the reading list",
    "time management", "the practice quizzes", "data analysis", "the case study",
    "citation style", "the final project", "research methods", "study planning",
    "the video lectures", "programming exercises", "the mock exam", "academic writing",
)

# label -> gamma(shape, scale) for days since the last recorded grade
GRADE_GAP_PARAMS = {0: (2.0, 6.0), 1: (2.4, 10.0), 2: (2.2, 8.0)}


def _student_rng(seed: int, purpose: str, student_id: str) -> np.random.Generator:
    digest = hashlib.blake2b(
        f"{seed}:{purpose}:{student_id}".encode("utf-8"), digest_size=8
    ).digest()
    return np.random.default_rng(np.random.PCG64(int.from_bytes(digest, "little")))


def _theme_distribution(label: int, coupling: float) -> tuple:
    if label == 1:
        stress = tuple(coupling * s for s in DROPOUT_THEME_SHARES)
        return stress + (1.0 - coupling,)
    return THEME_DIST[label]


def _draw_word_target(rng: np.random.Generator, cfg: AugmentConfig) -> int:
    for _ in range(16):
        value = rng.normal(cfg.word_count_mean, cfg.word_count_sd)
        if cfg.word_count_min <= value <= cfg.word_count_max:
            return int(round(value))
    return int(min(max(cfg.word_count_mean, cfg.word_count_min), cfg.word_count_max))


def _fill(template: str, rng: np.random.Generator) -> str:
    return template.format(
        module=int(rng.integers(1, 9)),
        week=int(rng.integers(1, 15)),
        topic=TOPICS[int(rng.integers(0, len(TOPICS)))],
    )


def _compose_comment(rng, cfg, theme: str, sentiment: str) -> str:
    target = _draw_word_target(rng, cfg)
    openings = OPENINGS[theme]
    sentences = [_fill(openings[int(rng.integers(0, len(openings)))], rng)]
    flavor = SENTIMENT_SENTENCES[sentiment]
    sentences.append(_fill(flavor[int(rng.integers(0, len(flavor)))], rng))
    words = " ".join(sentences).split()
    while len(words) < target:
        filler = _fill(FILLERS[int(rng.integers(0, len(FILLERS)))], rng)
        words.extend(filler.split())
    return " ".join(words[:target]) if len(words) > target else " ".join(words)


def generate_comments(cohort: CleanCohort, cfg: AugmentConfig) -> CleanCohort:
    """Attach cfg.comments_per_student seeded comments to every student.

    The (sentiment, theme) drawn for each comment is recorded in the
    returned cohort's generation_trace keyed by (student_id, index)."""
    cfg.validate()
    trace: dict = {}
    rows = []
    for record in cohort.rows:
        rng = _student_rng(cfg.seed, "text", record.student_id)
        theme_probs = np.asarray(_theme_distribution(record.label, cfg.coupling))
        comments = []
        for j in range(cfg.comments_per_student):
            theme = THEMES[int(rng.choice(4, p=theme_probs / theme_probs.sum()))]
            sent_table = SENT_GIVEN_NONE if theme == "none" else SENT_GIVEN_STRESS
            probs = np.asarray(sent_table[record.label])
            sentiment = SENTIMENTS[int(rng.choice(3, p=probs / probs.sum()))]
            text = _compose_comment(rng, cfg, theme, sentiment)
            comments.append(Comment(text, 0))
            trace[(record.student_id, j)] = (sentiment, theme)
        rows.append(
            StudentRecord(
                student_id=record.student_id,
                term=record.term,
                categorical_codes=list(record.categorical_codes),
                numeric_features=list(record.numeric_features),
                gdp=record.gdp,
                label=record.label,
                comments=comments,
                days_since_last_grade=record.days_since_last_grade,
                synthetic=record.synthetic,
            )
        )
    return CleanCohort(
        rows=rows,
        missing_numeric_rate=cohort.missing_numeric_rate,
        missing_categorical_rate=cohort.missing_categorical_rate,
        duplicates_removed=cohort.duplicates_removed,
        generation_trace=trace,
    )


def synthesize_timestamps(cohort: CleanCohort, cfg: AugmentConfig) -> CleanCohort:
    """Draw days_since_last_grade and per-comment ages, label-conditioned.

    Dropout-labelled students receive stochastically larger grade gaps.
    Comment ages are sorted oldest first, so the last comment is the most
    recent one."""
    cfg.validate()
    rows = []
    for record in cohort.rows:
        rng = _student_rng(cfg.seed, "time", record.student_id)
        shape, scale = GRADE_GAP_PARAMS[record.label]
        gap = int(math.floor(rng.gamma(shape, scale)))
        comments = record.comments
        if comments:
            ages = sorted(
                (int(a) for a in rng.integers(0, cfg.term_length_days, size=len(comments))),
                reverse=True,
            )
            comments = [Comment(c.text, age) for c, age in zip(comments, ages)]
        rows.append(
            StudentRecord(
                student_id=record.student_id,
                term=record.term,
                categorical_codes=list(record.categorical_codes),
                numeric_features=list(record.numeric_features),
                gdp=record.gdp,
                label=record.label,
                comments=comments,
                days_since_last_grade=max(gap, 0),
                synthetic=record.synthetic,
            )
        )
    return CleanCohort(
        rows=rows,
        missing_numeric_rate=cohort.missing_numeric_rate,
        missing_categorical_rate=cohort.missing_categorical_rate,
        duplicates_removed=cohort.duplicates_removed,
        generation_trace=cohort.generation_trace,
    )


def _mattr(tokens: list, window: int = 50) -> float:
    if not tokens:
        return 0.0
    if len(tokens) <= window:
        return len(set(tokens)) / len(tokens)
    ratios = []
    for start in range(len(tokens) - window + 1):
        chunk = tokens[start : start + window]
        ratios.append(len(set(chunk)) / window)
    return float(np.mean(ratios))


def corpus_stats(cohort: CleanCohort) -> CorpusStats:
    """Exact corpus counts plus windowed lexical diversity.

    The sentiment mix comes from the generation trace when present; for
    hand-built corpora it is None."""
    counts = []
    mattrs = []
    for record in cohort.rows:
        for comment in record.comments:
            tokens = comment.text.split()
            counts.append(len(tokens))
            mattrs.append(_mattr(tokens))

    n = len(counts)
    mix = None
    if cohort.generation_trace is not None and n:
        totals = [0, 0, 0]
        for sentiment, _theme in cohort.generation_trace.values():
            totals[SENTIMENTS.index(sentiment)] += 1
        denom = max(sum(totals), 1)
        mix = tuple(t / denom for t in totals)

    return CorpusStats(
        n_comments=n,
        mean_words=float(np.mean(counts)) if n else 0.0,
        sd_words=float(np.std(counts)) if n else 0.0,
        sentiment_mix=mix,
        mattr=float(np.mean(mattrs)) if n else 0.0,
    )
