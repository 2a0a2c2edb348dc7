"""Map free text to the closest vocabulary characters by embedding similarity.

The retrieval recipe: embed the input text as one string, embed every
vocabulary character, rank by cosine similarity, keep the top k, and turn the
winners into a condition vector (equal weights by default).

Providers are pluggable. The default ``HashEmbeddingProvider`` is hermetic and
deterministic (identical strings map to identical vectors) so the whole
pipeline runs with no model downloads; a contextual-model provider can be
registered under its own id.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .corpus import Vocabulary
from .gan import ConditionVector, build_condition


class EmbeddingError(Exception):
    pass


@dataclass(frozen=True)
class TextEmbedding:
    vector: np.ndarray
    provider_id: str

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float64)
        object.__setattr__(self, "vector", v)
        if not np.isfinite(v).all():
            raise ValueError("embedding contains non-finite entries")


class EmbeddingProvider(Protocol):
    id: str
    dimension: int

    def embed(self, text: str) -> TextEmbedding: ...


class HashEmbeddingProvider:
    """Deterministic fallback embedder: string -> seeded pseudo-random unit vector."""

    def __init__(self, dimension: int = 64):
        self.id = f"hash-{dimension}"
        self.dimension = dimension

    def embed(self, text: str) -> TextEmbedding:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:4], "big")
        rng = np.random.RandomState(seed)
        v = rng.standard_normal(self.dimension)
        v /= np.linalg.norm(v)
        return TextEmbedding(vector=v, provider_id=self.id)


@dataclass(frozen=True)
class CharacterScore:
    character: str
    class_index: int
    similarity: float


def similarity(a: TextEmbedding, b: TextEmbedding) -> float:
    """Cosine similarity, clipped to [-1, 1]."""
    if a.provider_id != b.provider_id:
        raise EmbeddingError(f"provider mismatch: {a.provider_id} vs {b.provider_id}")
    va, vb = a.vector, b.vector
    if va.shape != vb.shape:
        raise EmbeddingError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise EmbeddingError("cosine similarity undefined for zero-norm vector")
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


def embed_vocabulary(provider: EmbeddingProvider, vocabulary: Vocabulary,
                     cache_dir: str | Path | None = None) -> np.ndarray:
    """Per-character embedding matrix in class_index order, disk-cached.

    Cache key is (provider id, vocabulary fingerprint); a warm cache means no
    provider calls at all.
    """
    cache_base = None
    if cache_dir is not None:
        cache_dir = Path(cache_dir)
        cache_dir.mkdir(parents=True, exist_ok=True)
        key = f"{provider.id}-{vocabulary.fingerprint()}"
        cache_base = cache_dir / key
        header_path = cache_base.with_suffix(".json")
        matrix_path = cache_base.with_suffix(".npy")
        if header_path.exists() and matrix_path.exists():
            header = json.loads(header_path.read_text())
            if (header["provider_id"] == provider.id
                    and header["vocabulary_fingerprint"] == vocabulary.fingerprint()):
                return np.load(matrix_path)

    rows = []
    for ch, _, _ in vocabulary.entries:
        try:
            rows.append(provider.embed(ch).vector)
        except Exception as exc:
            raise EmbeddingError(f"embedding failed for character {ch!r}: {exc}") from exc
    matrix = np.stack(rows)

    if cache_base is not None:
        np.save(cache_base.with_suffix(".npy"), matrix)
        cache_base.with_suffix(".json").write_text(json.dumps({
            "provider_id": provider.id,
            "dimension": int(matrix.shape[1]),
            "vocabulary_fingerprint": vocabulary.fingerprint(),
        }))
    return matrix


def top_k_characters(text: str, provider: EmbeddingProvider, vocabulary: Vocabulary,
                     k: int, cache_dir: str | Path | None = None) -> list[CharacterScore]:
    """The k vocabulary characters most similar to the text embedding.

    Descending similarity, ties broken by ascending codepoint.
    """
    if not text:
        raise ValueError("text must be nonempty")
    if not 1 <= k <= vocabulary.size:
        raise ValueError(f"k must be in [1, {vocabulary.size}]")

    query = provider.embed(text)
    matrix = embed_vocabulary(provider, vocabulary, cache_dir=cache_dir)
    scored = [
        CharacterScore(
            character=ch,
            class_index=idx,
            similarity=similarity(query, TextEmbedding(matrix[idx], provider.id)),
        )
        for ch, idx, _ in vocabulary.entries
    ]
    scored.sort(key=lambda s: (-s.similarity, s.character))
    return scored[:k]


def text_to_condition(text: str, provider: EmbeddingProvider, vocabulary: Vocabulary,
                      k: int, weights: list[float] | None = None,
                      cache_dir: str | Path | None = None) -> ConditionVector:
    """Condition vector over the top-k matches; equal weights unless given per rank."""
    top = top_k_characters(text, provider, vocabulary, k, cache_dir=cache_dir)
    if weights is None:
        weights = [1.0] * len(top)
    if len(weights) != len(top):
        raise ValueError(f"weights must have length {len(top)}")
    return build_condition(
        [(s.class_index, w) for s, w in zip(top, weights)], vocabulary.size)
