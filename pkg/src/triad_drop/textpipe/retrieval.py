"""Exact cosine k-NN over the passage index.

The corpus is a few hundred passages, so retrieval is a single matrix
product; no approximate structure is needed and results are provably
identical to a brute-force scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyIndex
from .embedding import EMBEDDING_DIM


@dataclass(frozen=True)
class KnowledgePassage:
    id: str
    source: str  # faq | study-guide | forum-exemplar | policy
    title: str
    text: str
    embedding: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"passage {self.id} has empty text")
        if self.source not in ("faq", "study-guide", "forum-exemplar", "policy"):
            raise ValueError(f"passage {self.id} has unknown source {self.source!r}")


@dataclass
class RetrievalResult:
    passages: list  # ordered (KnowledgePassage, similarity) pairs
    k: int

    def top(self) -> KnowledgePassage | None:
        return self.passages[0][0] if self.passages else None

    def texts(self) -> list:
        return [p.text for p, _ in self.passages]


class VectorIndex:
    def __init__(self, passages: list, matrix: np.ndarray):
        self.passages = passages
        self.matrix = matrix  # n x 384, unit-norm rows

    def __len__(self) -> int:
        return len(self.passages)


def build_index(passages: list) -> VectorIndex:
    """Stack passage embeddings into a row-normalized matrix, ordered by id."""
    ordered = sorted(passages, key=lambda p: p.id)
    matrix = np.zeros((len(ordered), EMBEDDING_DIM))
    for i, passage in enumerate(ordered):
        emb = np.asarray(passage.embedding, dtype=float)
        if emb.shape != (EMBEDDING_DIM,):
            raise ValueError(f"passage {passage.id}: embedding must be {EMBEDDING_DIM}-d")
        norm = np.linalg.norm(emb)
        matrix[i] = emb / norm if norm > 0 else emb
    return VectorIndex(ordered, matrix)


def retrieve_top_k(index: VectorIndex, query: np.ndarray, k: int = 3) -> RetrievalResult:
    """Exact top-k by cosine similarity; ties broken by ascending passage id."""
    if len(index) == 0:
        raise EmptyIndex("retrieve called on an empty index")
    query = np.asarray(query, dtype=float)
    qnorm = np.linalg.norm(query)
    sims = index.matrix @ (query / qnorm) if qnorm > 0 else np.zeros(len(index))

    # passages are id-sorted in the index, so a stable sort on -similarity
    # yields ascending-id tie-breaks
    order = np.argsort(-sims, kind="stable")[: max(k, 0)]
    pairs = [(index.passages[i], float(sims[i])) for i in order]
    return RetrievalResult(passages=pairs, k=k)
