"""Exact cosine k-nearest-neighbor mining of substitutes and complements.

Substitute queries run against the multi-iteration (shared-context) space
and complement queries against the single-iteration (direct co-purchase)
space. A seeded random recommender provides the evaluation baseline.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .embedding import (
    COMPLEMENT_ITERATIONS,
    SUBSTITUTE_ITERATIONS,
    EmbeddingMatrix,
    _nearest_by_prefix,
)
from .errors import (
    ConfigurationMismatchWarning,
    InvalidParameterError,
    UnknownProductError,
)


@dataclass
class NeighborList:
    """Ranked neighbors for one query.

    Attributes:
        query: the query product code.
        neighbors: (code, similarity) pairs in non-increasing similarity
            order; the query never appears; no duplicates.
        relation_kind: "substitute", "complement", or "random".
    """

    query: str
    neighbors: list
    relation_kind: str = "substitute"

    def codes(self) -> list:
        return [code for code, _ in self.neighbors]

    def __len__(self) -> int:
        return len(self.neighbors)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise InvalidParameterError(
            f"dimension mismatch: {u.shape} vs {v.shape}"
        )
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise InvalidParameterError("cosine similarity of a zero vector is undefined")
    return float(min(1.0, max(-1.0, float(np.dot(u, v)) / (nu * nv))))


def top_k_neighbors(
    embeddings: EmbeddingMatrix,
    query: str,
    k: int,
    candidates: Iterable[str] | None = None,
    relation_kind: str = "substitute",
) -> NeighborList:
    """Exact top-k cosine neighbors of ``query`` among all other products.

    Ties are broken by ascending row index, so results are deterministic.

    Args:
        embeddings: the space to search.
        query: query product code.
        k: how many neighbors to return (fewer if the space is small).
        candidates: optional restriction of the candidate codes (unknown
            codes are ignored; the query is always excluded).
        relation_kind: label recorded on the result.

    Raises:
        UnknownProductError: if the query is not embedded.
        InvalidParameterError: if k < 1.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    index = embeddings.index_map()
    qidx = index.get(query)
    if qidx is None:
        raise UnknownProductError(query, _nearest_by_prefix(query, embeddings.codes))
    if candidates is None:
        cand = np.arange(len(embeddings.codes))
        cand = cand[cand != qidx]
    else:
        keep = sorted({index[c] for c in candidates if c in index} - {qidx})
        cand = np.asarray(keep, dtype=np.int64)
    if cand.size == 0:
        return NeighborList(query, [], relation_kind)
    vectors = embeddings.vectors
    norms = np.linalg.norm(vectors, axis=1)
    qvec = vectors[qidx]
    qnorm = norms[qidx]
    if qnorm == 0.0 or (norms[cand] == 0.0).any():
        raise InvalidParameterError("cosine similarity of a zero vector is undefined")
    sims = (vectors[cand] @ qvec) / (norms[cand] * qnorm)
    np.clip(sims, -1.0, 1.0, out=sims)
    # Sort by similarity descending, then row index ascending.
    order = np.lexsort((cand, -sims))[: min(k, cand.size)]
    return NeighborList(
        query,
        [(embeddings.codes[int(cand[i])], float(sims[i])) for i in order],
        relation_kind,
    )


def recommend_substitutes(
    substitute_space: EmbeddingMatrix,
    query: str,
    k: int = 2,
    candidates: Iterable[str] | None = None,
    expected_iterations: int = SUBSTITUTE_ITERATIONS,
) -> NeighborList:
    """Top-k substitute candidates from the shared-context space.

    Warns (without failing) if the space's recorded iteration count is
    below ``expected_iterations``.
    """
    done = substitute_space.iterations
    if done is not None and done < expected_iterations:
        warnings.warn(
            f"substitute queries expect an embedding trained with at least "
            f"{expected_iterations} iterations; this space records {done}",
            ConfigurationMismatchWarning,
            stacklevel=2,
        )
    return top_k_neighbors(substitute_space, query, k, candidates, "substitute")


def recommend_complements(
    complement_space: EmbeddingMatrix,
    query: str,
    k: int = 2,
    candidates: Iterable[str] | None = None,
    expected_iterations: int = COMPLEMENT_ITERATIONS,
) -> NeighborList:
    """Top-k complement candidates from the direct co-purchase space.

    Warns (without failing) if the space's recorded iteration count does
    not equal ``expected_iterations``.
    """
    done = complement_space.iterations
    if done is not None and done != expected_iterations:
        warnings.warn(
            f"complement queries expect an embedding trained with exactly "
            f"{expected_iterations} iteration(s); this space records {done}",
            ConfigurationMismatchWarning,
            stacklevel=2,
        )
    return top_k_neighbors(complement_space, query, k, candidates, "complement")


def random_recommender(
    vocabulary: Sequence[str], query: str, k: int, seed: int
) -> NeighborList:
    """Baseline: k distinct products sampled uniformly, excluding the query.

    Deterministic per (seed, query); similarities are reported as 0.
    """
    others = [c for c in vocabulary if c != query]
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if k > len(others):
        raise InvalidParameterError(
            f"k={k} exceeds the {len(others)} available products"
        )
    digest = hashlib.blake2b(
        f"{seed}\x1erandom\x1e{query}".encode("utf-8"), digest_size=16
    ).digest()
    gen = np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))
    picks = gen.choice(len(others), size=k, replace=False)
    return NeighborList(query, [(others[int(i)], 0.0) for i in picks], "random")


def write_neighbors(lists: Iterable[NeighborList], stream: TextIO) -> None:
    """Write tab-separated lines ``<query> <rank> <neighbor> <similarity>``,
    rank starting at 1."""
    for nl in lists:
        for rank, (code, sim) in enumerate(nl.neighbors, start=1):
            stream.write(f"{nl.query}\t{rank}\t{code}\t{format(sim, '.9g')}\n")
