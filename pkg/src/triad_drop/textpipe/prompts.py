"""Context-augmented prompt assembly under a hard token cap.

Tokens are whitespace-delimited words so the cap is independent of any
particular encoder's subword scheme. The comment is never cut before the
passages are: remaining budget is granted to passages in retrieval order,
so the trailing passages are the first to shrink or drop.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .retrieval import RetrievalResult

logger = logging.getLogger(__name__)

PROMPT_TOKEN_CAP = 512


def count_tokens(text: str) -> int:
    return len(text.split())


@dataclass
class Prompt:
    comment_text: str
    passage_texts: list
    token_count: int

    @property
    def text(self) -> str:
        return " ".join([self.comment_text] + [p for p in self.passage_texts if p])


def _truncate(text: str, limit: int) -> str:
    return " ".join(text.split()[:limit])


def build_prompt(comment: str, retrieval: RetrievalResult | None, cap: int = PROMPT_TOKEN_CAP) -> Prompt:
    comment = " ".join(comment.split())
    comment_tokens = count_tokens(comment)
    if comment_tokens > cap:
        logger.warning(
            "comment alone exceeds the %d-token cap (%d tokens); truncating",
            cap, comment_tokens,
        )
        comment = _truncate(comment, cap)
        comment_tokens = cap

    budget = cap - comment_tokens
    passage_texts = []
    if retrieval is not None:
        for passage, _sim in retrieval.passages:
            take = min(count_tokens(passage.text), budget)
            passage_texts.append(_truncate(passage.text, take) if take else "")
            budget -= take

    total = comment_tokens + sum(count_tokens(p) for p in passage_texts)
    return Prompt(comment_text=comment, passage_texts=passage_texts, token_count=total)
