"""Text embedding providers.

The built-in reference provider hashes character n-grams of each token
(plus synonym-expanded concept tokens) into a fixed 384-dimensional space
and L2-normalizes the sum. It is fully deterministic for a given seed and
needs no external model; the same interface can be backed by an external
encoder through the file-exchange provider.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import ProviderUnavailable
from ..lexicon import SYNONYM_EXPANSION

EMBEDDING_DIM = 384

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@runtime_checkable
class EmbeddingProvider(Protocol):
    name: str
    dimension: int
    deterministic: bool

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: list) -> np.ndarray: ...


def tokenize(text: str) -> list:
    return _TOKEN_RE.findall(text.lower())


class HashedNgramEmbedder:
    """Seeded hashed character-n-gram projection, unit-norm output.

    Token vectors are cached, which makes corpus-scale embedding cheap:
    template-generated comments reuse a small vocabulary.
    """

    name = "hashed-ngram"
    dimension = EMBEDDING_DIM
    deterministic = True

    CONCEPT_WEIGHT = 0.75

    def __init__(self, seed: int = 0, ngram_range: tuple = (3, 5)):
        self.seed = seed
        self.ngram_range = ngram_range
        self._token_cache: dict = {}

    def _hash_gram(self, gram: str) -> tuple:
        digest = hashlib.blake2b(
            gram.encode("utf-8"), digest_size=8, salt=str(self.seed).encode()[:16]
        ).digest()
        raw = int.from_bytes(digest, "little")
        return raw % EMBEDDING_DIM, 1.0 if (raw >> 62) & 1 else -1.0

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        vec = np.zeros(EMBEDDING_DIM)
        lo, hi = self.ngram_range
        padded = f"<{token}>"
        grams = [padded] if len(padded) <= lo else [
            padded[i : i + n]
            for n in range(lo, hi + 1)
            for i in range(max(len(padded) - n + 1, 1))
        ]
        for gram in grams:
            idx, sign = self._hash_gram(gram)
            vec[idx] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        self._token_cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("cannot embed empty text; callers handle the silent case")
        vec = np.zeros(EMBEDDING_DIM)
        for token in tokens:
            vec += self._token_vector(token)
            for concept in SYNONYM_EXPANSION.get(token, ()):
                vec += self.CONCEPT_WEIGHT * self._token_vector(concept)
        norm = np.linalg.norm(vec)
        if norm == 0:
            # hash collisions cancelling out exactly is not expected, but
            # the unit-norm contract must hold
            vec[0] = 1.0
            return vec
        return vec / norm

    def embed_batch(self, texts: list) -> np.ndarray:
        out = np.zeros((len(texts), EMBEDDING_DIM))
        for i, text in enumerate(texts):
            out[i] = self.embed(text)
        return out


class FileExchangeProvider:
    """External provider speaking JSON lines over a file pair.

    Requests are written as {"id", "text"} lines to <dir>/request.jsonl;
    the external process answers with {"id", "vector"} lines in
    <dir>/response.jsonl. Raises ProviderUnavailable on timeout.
    """

    name = "file-exchange"
    dimension = EMBEDDING_DIM
    deterministic = False

    def __init__(self, exchange_dir: str | Path, timeout_s: float = 10.0, poll_s: float = 0.05):
        self.exchange_dir = Path(exchange_dir)
        self.timeout_s = timeout_s
        self.poll_s = poll_s

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list) -> np.ndarray:
        self.exchange_dir.mkdir(parents=True, exist_ok=True)
        request = self.exchange_dir / "request.jsonl"
        response = self.exchange_dir / "response.jsonl"
        if response.exists():
            response.unlink()
        with open(request, "w", encoding="utf-8") as fh:
            for i, text in enumerate(texts):
                fh.write(json.dumps({"id": i, "text": text}) + "\n")

        deadline = time.monotonic() + self.timeout_s
        while not response.exists():
            if time.monotonic() > deadline:
                raise ProviderUnavailable(f"no response in {self.exchange_dir}")
            time.sleep(self.poll_s)

        vectors = {}
        with open(response, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    vectors[obj["id"]] = np.asarray(obj["vector"], dtype=float)
        out = np.zeros((len(texts), EMBEDDING_DIM))
        for i in range(len(texts)):
            if i not in vectors:
                raise ProviderUnavailable(f"missing vector for request id {i}")
            vec = vectors[i]
            if vec.shape != (EMBEDDING_DIM,):
                raise ProviderUnavailable(f"provider returned dimension {vec.shape}")
            norm = np.linalg.norm(vec)
            out[i] = vec / norm if norm > 0 else vec
        return out
