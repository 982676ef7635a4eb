"""Instance explanations: sampled Shapley attribution, rationale text and
the intervention/escalation rule engine.

Shapley values use the permutation estimator: for each sampled permutation
a background row is progressively overwritten with the instance's values
and the model is evaluated after every step, so one permutation yields one
marginal contribution per feature group. Summing marginals telescopes to
f(x) - f(background), which keeps the additivity gap at Monte-Carlo noise.

Escalation logic runs against an injected clock (fractional days), never
the wall clock, so deadline behavior is deterministic and testable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBackground, IllegalTransition, UnknownTag

# ---------------------------------------------------------------------------
# Shapley attribution


@dataclass
class Attribution:
    values: np.ndarray  # one estimate per feature group
    group_names: list
    additivity_gap: float
    samples: int
    base_value: float  # mean prediction over the drawn backgrounds

    def ranked(self) -> list:
        order = np.argsort(-np.abs(self.values))
        return [(self.group_names[i], float(self.values[i])) for i in order]


def shapley_attribution(predict_fn, x: np.ndarray, background: np.ndarray,
                        samples: int = 1000, seed: int = 0,
                        groups: list | None = None,
                        group_names: list | None = None) -> Attribution:
    """Monte-Carlo permutation Shapley over feature groups.

    ``predict_fn`` maps an (n, d) matrix to n scalars. ``groups`` is a list
    of slot-index arrays; singleton groups (the default) give per-feature
    attributions, while column-aligned groups collapse one-hot blocks into
    a single attribution each.
    """
    x = np.asarray(x, dtype=float)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if background.size == 0:
        raise EmptyBackground("background set must be non-empty")
    if groups is None:
        groups = [np.array([j]) for j in range(x.shape[0])]
    n_groups = len(groups)
    names = group_names or [f"f{j}" for j in range(n_groups)]

    rng = np.random.default_rng(np.random.PCG64(seed))
    phi = np.zeros(n_groups)
    base_sum = 0.0

    for _ in range(samples):
        order = rng.permutation(n_groups)
        bg = background[rng.integers(0, len(background))]
        # walk the permutation, evaluating after each group flip in one batch
        steps = np.tile(bg, (n_groups + 1, 1))
        current = bg.copy()
        for pos, gi in enumerate(order):
            current[groups[gi]] = x[groups[gi]]
            steps[pos + 1] = current
        outputs = np.asarray(predict_fn(steps), dtype=float)
        base_sum += outputs[0]
        marginals = np.diff(outputs)
        for pos, gi in enumerate(order):
            phi[gi] += marginals[pos]

    phi /= samples
    base_value = base_sum / samples
    fx = float(np.asarray(predict_fn(x[None, :]))[0])
    gap = abs(phi.sum() - (fx - base_value))
    return Attribution(values=phi, group_names=names, additivity_gap=float(gap),
                       samples=samples, base_value=float(base_value))


def stratified_background(X: np.ndarray, y: np.ndarray, per_class: int,
                          seed: int = 0) -> np.ndarray:
    """Background rows drawn per class, for class-balanced baselines."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    picks = []
    for c in np.unique(y):
        members = np.flatnonzero(y == c)
        take = min(per_class, len(members))
        picks.append(rng.choice(members, size=take, replace=False))
    idx = np.concatenate(picks)
    return X[np.sort(idx)]


# ---------------------------------------------------------------------------
# intervention rule engine

INTERVENTION_RULES = {
    "isolation": {
        "default_action": "Peer-mentor email within 48 h (mentorship cohort invite)",
        "escalation_action": "Counsellor call",
        "delivery_window_h": 48,
        "escalation_deadline_days": 7,
    },
    "workload": {
        "default_action": "Time-management webinar link",
        "escalation_action": "One-to-one coaching slot",
        "delivery_window_h": 48,
        "escalation_deadline_days": 7,
    },
    "confusion": {
        "default_action": "FAQ link + forum tag",
        "escalation_action": "Synchronous Q&A session",
        "delivery_window_h": 48,
        "escalation_deadline_days": 7,
    },
    "none": {
        "default_action": "Generic encouragement",
        "escalation_action": None,
        "delivery_window_h": None,
        "escalation_deadline_days": None,
    },
}

PLAN_STATES = ("proposed", "delivered", "responded", "escalated", "closed")

# legal (state, event) -> next state; escalate_check is handled separately
_TRANSITIONS = {
    ("proposed", "deliver"): "delivered",
    ("delivered", "respond"): "responded",
    ("responded", "close"): "closed",
    ("escalated", "close"): "closed",
}


@dataclass
class InterventionPlan:
    stress_tag: str
    default_action: str
    escalation_action: str | None
    escalation_deadline_days: float | None
    state: str = "proposed"
    delivered_at: float | None = None  # injected-clock days
    history: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "stress_tag": self.stress_tag,
            "default_action": self.default_action,
            "escalation_action": self.escalation_action,
            "escalation_deadline_days": self.escalation_deadline_days,
            "state": self.state,
            "delivered_at": self.delivered_at,
            "history": list(self.history),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "InterventionPlan":
        return cls(
            stress_tag=obj["stress_tag"],
            default_action=obj["default_action"],
            escalation_action=obj.get("escalation_action"),
            escalation_deadline_days=obj.get("escalation_deadline_days"),
            state=obj.get("state", "proposed"),
            delivered_at=obj.get("delivered_at"),
            history=list(obj.get("history", [])),
        )


def map_intervention(stress_tag: str) -> InterventionPlan:
    if stress_tag not in INTERVENTION_RULES:
        raise UnknownTag(stress_tag)
    rule = INTERVENTION_RULES[stress_tag]
    return InterventionPlan(
        stress_tag=stress_tag,
        default_action=rule["default_action"],
        escalation_action=rule["escalation_action"],
        escalation_deadline_days=rule["escalation_deadline_days"],
    )


def advance(plan: InterventionPlan, event: str, clock_days: float) -> InterventionPlan:
    """Apply one event against the injected clock and return the plan.

    ``escalate_check`` is a probe: it escalates only a delivered plan whose
    deadline has passed and whose tag escalates at all; in any other state
    it is a no-op (an escalation after a response stays cancelled).
    """
    if event == "escalate_check":
        if (
            plan.state == "delivered"
            and plan.escalation_action is not None
            and plan.delivered_at is not None
            and clock_days - plan.delivered_at >= plan.escalation_deadline_days
        ):
            plan.state = "escalated"
            plan.history.append({"event": "escalated", "at_days": clock_days,
                                 "action": plan.escalation_action})
        return plan

    key = (plan.state, event)
    if key not in _TRANSITIONS:
        raise IllegalTransition(f"event {event!r} in state {plan.state!r}")
    plan.state = _TRANSITIONS[key]
    plan.history.append({"event": event, "at_days": clock_days})
    if event == "deliver":
        plan.delivered_at = clock_days
    return plan


# ---------------------------------------------------------------------------
# rationale composition


@dataclass
class Rationale:
    comment_snippet: str | None
    cited_passage: dict | None  # id, title, source
    sentiment: str
    stress_tag: str
    risk: float
    week: int
    top_factor: str | None
    top_factor_value: str | None
    suggested_step: str
    text: str = ""

    def to_json(self) -> dict:
        return {
            "comment_snippet": self.comment_snippet,
            "cited_passage": self.cited_passage,
            "sentiment": self.sentiment,
            "stress_tag": self.stress_tag,
            "risk": self.risk,
            "week": self.week,
            "top_factor": self.top_factor,
            "top_factor_value": self.top_factor_value,
            "suggested_step": self.suggested_step,
            "text": self.text,
        }


_SOURCE_LABEL = {
    "faq": "FAQ",
    "study-guide": "study guide",
    "forum-exemplar": "forum thread",
    "policy": "policy note",
}


def _snippet(comment: str, max_words: int = 18) -> str:
    words = comment.split()
    return " ".join(words[:max_words]) + ("..." if len(words) > max_words else "")


def week_index(comment_age_days: int, term_length_days: int = 98) -> int:
    """Week of term in which the comment was written, counted from 1."""
    day = max(term_length_days - comment_age_days, 0)
    return max(int(np.ceil(day / 7.0)), 1)


def compose_rationale(comment: str | None, cited_passage, sentiment: str,
                      stress_tag: str, risk: float, week: int,
                      top_factor: str | None = None,
                      top_factor_value: str | None = None,
                      suggested_step: str | None = None) -> Rationale:
    """Deterministic rationale template.

    ``cited_passage`` is the highest-weighted retrieval hit (a
    KnowledgePassage or equivalent with id/title/source); silent students
    pass None for both comment and passage and get the tabular-only
    variant.
    """
    plan_step = suggested_step or map_intervention(stress_tag).default_action
    passage_ref = None
    if cited_passage is not None:
        passage_ref = {"id": cited_passage.id, "title": cited_passage.title,
                       "source": cited_passage.source}

    factor_clause = ""
    if top_factor:
        shown = f"{top_factor} ({top_factor_value})" if top_factor_value else top_factor
        factor_clause = f" Contributing tabular factor: {shown}."

    if comment:
        cited_clause = ""
        if passage_ref:
            label = _SOURCE_LABEL.get(passage_ref["source"], passage_ref["source"])
            cited_clause = f' Similar issues appear in the {label} "{passage_ref["title"]}".'
        text = (
            f'At week {week} the learner wrote: "{_snippet(comment)}".'
            f"{cited_clause}"
            f" Signals: {stress_tag} tag, {sentiment} sentiment.{factor_clause}"
            f" Dropout risk: {risk:.2f}."
            f" Suggested next step: {plan_step}."
        )
    else:
        text = (
            f"No recent comments on record at week {week}."
            f" Tabular indicators alone set the dropout risk to {risk:.2f}.{factor_clause}"
            f" Suggested next step: {plan_step}."
        )

    return Rationale(
        comment_snippet=_snippet(comment) if comment else None,
        cited_passage=passage_ref,
        sentiment=sentiment,
        stress_tag=stress_tag,
        risk=float(risk),
        week=int(week),
        top_factor=top_factor,
        top_factor_value=top_factor_value,
        suggested_step=plan_step,
        text=text,
    )
