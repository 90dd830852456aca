"""Document embedding and pairwise similarity linking.

Each document body is embedded by a pluggable provider; every unordered pair
whose cosine similarity exceeds the threshold gets one symmetric ``relevant``
edge between the two DOC entities, carrying the similarity as confidence.

The bundled provider hashes character n-gram counts into a fixed number of
buckets, which makes the whole path deterministic and offline.  A remote
encoder can be swapped in through the same interface; nothing in the test
suite depends on one.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .corpus_ingest import PolicyDocument
from .errors import DimMismatch, ProviderError, ZeroVector
from .graph_store import GraphStore, Provenance, Stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingVector:
    doc_id: str
    values: tuple[float, ...]
    dim: int
    provider_id: str

    def __post_init__(self):
        if len(self.values) != self.dim:
            raise ValueError(f"vector for {self.doc_id} has {len(self.values)} values, dim {self.dim}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError(f"vector for {self.doc_id} contains non-finite values")


@dataclass(frozen=True)
class SimilarityConfig:
    threshold: float = 0.85
    provider_id: str = ""
    max_chars: int = 24_000

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_chars <= 0:
            raise ValueError(f"max_chars must be positive, got {self.max_chars}")


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed(self, text: str) -> tuple[float, ...]: ...


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """dot(u, v) / (|u||v|); rejects mismatched dims and zero vectors."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise DimMismatch(a.shape[0] if a.ndim else 0, b.shape[0] if b.ndim else 0)
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for an all-zero vector")
    return float(np.dot(a, b)) / (math.sqrt(na) * math.sqrt(nb))


def similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.provider_id != b.provider_id:
        raise ValueError(
            f"cannot compare vectors from different providers: {a.provider_id!r} vs {b.provider_id!r}"
        )
    return cosine(a.values, b.values)


class HashNgramProvider:
    """Character n-gram counts hashed into a fixed bucket vector.

    A crude but fully deterministic stand-in for a neural encoder: shared
    character content raises cosine similarity, disjoint vocabulary drives it
    toward zero.  Empty or sub-n-length text embeds to the zero vector, which
    downstream cosine rejects loudly.
    """

    def __init__(self, dim: int = 256, n: int = 2):
        if dim < 16:
            raise ValueError(f"dim must be >= 16, got {dim}")
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self.dim = dim
        self.n = n
        self.provider_id = f"hash-{n}gram-{dim}d-v1"

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, text: str) -> tuple[float, ...]:
        counts = [0.0] * self.dim
        for i in range(len(text) - self.n + 1):
            counts[self._bucket(text[i : i + self.n])] += 1.0
        return tuple(counts)


class HttpEmbeddingProvider:
    """Thin client for a remote encoder speaking ``{"text"} -> {"values"}``."""

    def __init__(self, endpoint: str, dim: int, provider_id: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.dim = dim
        self.provider_id = provider_id
        self.timeout = timeout

    def embed(self, text: str) -> tuple[float, ...]:
        import requests

        resp = requests.post(self.endpoint, json={"text": text}, timeout=self.timeout)
        resp.raise_for_status()
        values = tuple(float(v) for v in resp.json()["values"])
        if len(values) != self.dim:
            raise ValueError(f"endpoint returned {len(values)} values, expected {self.dim}")
        return values


def embed_corpus(
    corpus: Sequence[PolicyDocument],
    provider: EmbeddingProvider,
    config: SimilarityConfig,
    cache_path: str | Path | None = None,
) -> dict[str, EmbeddingVector]:
    """Embed every document body, via the cache file when one is given.

    The cache is keyed by doc_id and versioned by (provider_id, max_chars); a
    mismatch on either discards it wholesale.
    """
    cached: dict[str, tuple[float, ...]] = {}
    if cache_path is not None:
        cached = _read_cache(Path(cache_path), provider.provider_id, config.max_chars)
    vectors: dict[str, EmbeddingVector] = {}
    dirty = False
    for doc in sorted(corpus, key=lambda d: d.doc_id):
        if doc.doc_id in cached:
            values = cached[doc.doc_id]
        else:
            text = doc.body
            if len(text) > config.max_chars:
                logger.info(
                    "truncating %s from %d to %d chars before embedding",
                    doc.doc_id, len(text), config.max_chars,
                )
                text = text[: config.max_chars]
            try:
                values = tuple(provider.embed(text))
            except Exception as exc:
                raise ProviderError(doc.doc_id, str(exc)) from exc
            cached[doc.doc_id] = values
            dirty = True
        vectors[doc.doc_id] = EmbeddingVector(
            doc_id=doc.doc_id,
            values=values,
            dim=provider.dim,
            provider_id=provider.provider_id,
        )
    if cache_path is not None and dirty:
        _write_cache(Path(cache_path), provider.provider_id, config.max_chars, cached)
    return vectors


def _read_cache(path: Path, provider_id: str, max_chars: int) -> dict[str, tuple[float, ...]]:
    if not path.exists():
        return {}
    try:
        doc = json.loads(path.read_text("utf-8"))
    except (OSError, json.JSONDecodeError):
        logger.warning("embedding cache %s unreadable, recomputing", path)
        return {}
    if doc.get("provider_id") != provider_id or doc.get("max_chars") != max_chars:
        logger.info("embedding cache %s is for a different configuration, recomputing", path)
        return {}
    return {k: tuple(v) for k, v in doc.get("vectors", {}).items()}


def _write_cache(path: Path, provider_id: str, max_chars: int, vectors: dict) -> None:
    payload = {
        "max_chars": max_chars,
        "provider_id": provider_id,
        "vectors": {k: list(v) for k, v in sorted(vectors.items())},
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=None), "utf-8"
    )


def build_relevance_edges(
    corpus: Sequence[PolicyDocument],
    provider: EmbeddingProvider,
    config: SimilarityConfig,
    store: GraphStore,
    cache_path: str | Path | None = None,
) -> list[str]:
    """Link every document pair scoring strictly above the threshold.

    Exactly C(N, 2) similarity evaluations; one canonical symmetric edge per
    linked pair, confidence = similarity.  Output is independent of corpus
    iteration order.
    """
    docs = sorted(corpus, key=lambda d: d.doc_id)
    vectors = embed_corpus(docs, provider, config, cache_path)
    eids = {
        doc.doc_id: store.upsert_entity(
            "DOC", doc.title, Provenance(doc.doc_id, 0, stage=Stage.similarity)
        )
        for doc in docs
    }
    triple_ids: list[str] = []
    for i, a in enumerate(docs):
        for b in docs[i + 1 :]:
            sim = similarity(vectors[a.doc_id], vectors[b.doc_id])
            if sim <= config.threshold:
                continue
            if eids[a.doc_id] == eids[b.doc_id]:
                # same title, same entity: a self-edge says nothing
                continue
            prov = Provenance(
                a.doc_id, 0, stage=Stage.similarity, confidence=min(1.0, sim)
            )
            tid, _ = store.insert_triple(eids[a.doc_id], "relevant", eids[b.doc_id], prov)
            triple_ids.append(tid)
    return triple_ids
