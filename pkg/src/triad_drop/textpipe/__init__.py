"""Retrieval-augmented text processing.

Embeds comments, retrieves supporting passages from the knowledge base,
builds token-capped prompts, and classifies sentiment and stress tags.
"""

from .affect import AffectLabels, classify_sentiment, classify_stress
from .embedding import EMBEDDING_DIM, EmbeddingProvider, HashedNgramEmbedder, FileExchangeProvider
from .knowledge import KnowledgeBase, default_passages, load_knowledge_base, write_knowledge_base
from .prompts import PROMPT_TOKEN_CAP, Prompt, build_prompt, count_tokens
from .retrieval import KnowledgePassage, RetrievalResult, VectorIndex, build_index, retrieve_top_k

__all__ = [
    "AffectLabels",
    "classify_sentiment",
    "classify_stress",
    "EMBEDDING_DIM",
    "EmbeddingProvider",
    "HashedNgramEmbedder",
    "FileExchangeProvider",
    "KnowledgeBase",
    "default_passages",
    "load_knowledge_base",
    "write_knowledge_base",
    "PROMPT_TOKEN_CAP",
    "Prompt",
    "build_prompt",
    "count_tokens",
    "KnowledgePassage",
    "RetrievalResult",
    "VectorIndex",
    "build_index",
    "retrieve_top_k",
]
