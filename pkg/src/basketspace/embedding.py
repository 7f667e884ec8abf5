"""Chunked random-walk power-iteration embedding over a co-occurrence graph.

The training loop:

1. Partition the edge set into Q chunks by a stable hash of the code pair.
2. Per chunk, build the row-stochastic transition matrix
   m(a, b) = e_ab / deg_q(a), where deg_q is the weighted degree counted
   within the chunk only.
3. Initialize one row per node from U(-1, 1), keyed by (seed, product
   code) so the result is independent of node order, chunking, and
   thread count; rows are L2-normalized at initialization.
4. Iterate I times: multiply by the transition matrix, then L2-normalize
   each row.
5. Merge chunks per node with weights w(q, v) = deg_q(v) / deg(v) and
   L2-normalize the merged rows.

Embeddings trained with a single iteration capture direct co-purchase
structure (complements); more iterations (six by default) capture shared
purchase context (substitutes).
"""

from __future__ import annotations

import hashlib
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import (
    EmptyGraphError,
    InternalConsistencyError,
    InvalidParameterError,
    MalformedInputError,
)
from .ingest import CooccurrenceGraph, Vocabulary

# A multiply result with norm at or below this is treated as a cancelled row.
ZERO_ROW_NORM = 1e-30

DEFAULT_DIMENSION = 1024
SUBSTITUTE_ITERATIONS = 6
COMPLEMENT_ITERATIONS = 1

# Guard for the dense reference path, which materializes an n x n matrix.
DENSE_REFERENCE_MAX_NODES = 10_000


@dataclass
class EmbeddingMatrix:
    """Embedding rows for a node set, one L2-normalized vector per node.

    Attributes:
        codes: external product codes, one per row, in row order.
        vectors: (n, d) float64 array.
        iterations: iteration count the rows were trained with, or None
            when unknown (e.g. read back from a file).
        seed: seed the rows were trained with, or None when unknown.
        zero_rows_replaced: how many multiply results cancelled to zero and
            were replaced by their previous value during training.
    """

    codes: list
    vectors: np.ndarray
    iterations: int | None = None
    seed: int | None = None
    zero_rows_replaced: int = 0
    _index: dict = field(default=None, repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.codes)

    def index_map(self) -> dict:
        if self._index is None:
            self._index = {code: i for i, code in enumerate(self.codes)}
        return self._index

    def vector(self, code: str) -> np.ndarray:
        from .errors import UnknownProductError

        idx = self.index_map().get(code)
        if idx is None:
            raise UnknownProductError(code, _nearest_by_prefix(code, self.codes))
        return self.vectors[idx]


def _nearest_by_prefix(code: str, known: Sequence[str], limit: int = 5) -> list:
    def shared(a: str, b: str) -> int:
        n = 0
        for x, y in zip(a, b):
            if x != y:
                break
            n += 1
        return n

    return sorted(known, key=lambda c: (-shared(code, c), c))[:limit]


@dataclass
class ChunkAssignment:
    """Deterministic mapping of every graph edge to one of Q chunks."""

    chunk_count: int
    edge_to_chunk: dict


@dataclass
class TransitionMatrix:
    """Row-stochastic transition matrix for one chunk.

    Attributes:
        chunk_index: which chunk this matrix belongs to.
        nodes: global vocabulary indices of the chunk's nodes, ascending.
        matrix: (n_q, n_q) CSR matrix with m(a, b) = e_ab / deg_q(a).
    """

    chunk_index: int
    nodes: np.ndarray
    matrix: sp.csr_matrix


@dataclass
class ChunkWeights:
    """Per-(node, chunk) merge weights w(q, v) = deg_q(v) / deg(v).

    ``weights`` is a (|vocabulary|, Q) array; rows of isolated products are
    all zero, all other rows sum to 1.
    """

    weights: np.ndarray


def partition_chunks(graph: CooccurrenceGraph, chunk_count: int) -> ChunkAssignment:
    """Assign every edge to a chunk by a stable hash of its code pair.

    The hash key uses external codes (not indices), so the assignment does
    not depend on vocabulary insertion order.
    """
    if chunk_count < 1:
        raise InvalidParameterError(f"chunk count must be >= 1, got {chunk_count}")
    vocab = graph.vocabulary
    edge_to_chunk = {}
    for a, b in graph.edge_weights:
        ca, cb = sorted((vocab.code(a), vocab.code(b)))
        key = ca.encode("utf-8") + b"\x1e" + cb.encode("utf-8")
        edge_to_chunk[(a, b)] = zlib.crc32(key) % chunk_count
    return ChunkAssignment(chunk_count, edge_to_chunk)


def build_transition(
    graph: CooccurrenceGraph, assignment: ChunkAssignment, chunk_index: int
) -> TransitionMatrix:
    """Build chunk ``chunk_index``'s transition matrix.

    Rows are normalized by the chunk-local weighted degree, so every row
    over the chunk's node set sums to 1.
    """
    if not 0 <= chunk_index < assignment.chunk_count:
        raise InvalidParameterError(
            f"chunk index {chunk_index} outside [0, {assignment.chunk_count})"
        )
    edges = [
        (a, b, graph.edge_weights[(a, b)])
        for (a, b), q in assignment.edge_to_chunk.items()
        if q == chunk_index
    ]
    if not edges:
        raise InvalidParameterError(f"chunk {chunk_index} has no edges")
    nodes = np.unique([v for a, b, _ in edges for v in (a, b)])
    local = {int(v): i for i, v in enumerate(nodes)}
    n = len(nodes)
    deg = np.zeros(n, dtype=np.int64)
    for a, b, w in edges:
        deg[local[a]] += w
        deg[local[b]] += w
    rows = np.empty(2 * len(edges), dtype=np.int64)
    cols = np.empty(2 * len(edges), dtype=np.int64)
    vals = np.empty(2 * len(edges), dtype=np.float64)
    for i, (a, b, w) in enumerate(edges):
        ia, ib = local[a], local[b]
        rows[2 * i], cols[2 * i], vals[2 * i] = ia, ib, w / deg[ia]
        rows[2 * i + 1], cols[2 * i + 1], vals[2 * i + 1] = ib, ia, w / deg[ib]
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    matrix.sum_duplicates()
    matrix.sort_indices()
    return TransitionMatrix(chunk_index, nodes, matrix)


def _init_row(seed: int, code: str, d: int) -> np.ndarray:
    """One raw U(-1, 1) row, keyed by (seed, code) only."""
    digest = hashlib.blake2b(
        f"{seed}\x1e{code}".encode("utf-8"), digest_size=16
    ).digest()
    gen = np.random.Generator(np.random.Philox(key=int.from_bytes(digest, "little")))
    row = gen.uniform(-1.0, 1.0, d)
    # uniform() can return its low endpoint; the open interval excludes it.
    bad = np.abs(row) >= 1.0
    while bad.any():
        row[bad] = gen.uniform(-1.0, 1.0, int(bad.sum()))
        bad = np.abs(row) >= 1.0
    while np.linalg.norm(row) <= ZERO_ROW_NORM:
        row = gen.uniform(-1.0, 1.0, d)
    return row


def init_embedding(codes: Sequence[str], d: int, seed: int) -> EmbeddingMatrix:
    """Iteration-0 embedding: per-node seeded U(-1, 1) rows, L2-normalized.

    Entry (v, j) depends only on (seed, code of v, j), never on node order,
    chunk membership, or thread count.
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    vectors = np.empty((len(codes), d), dtype=np.float64)
    for i, code in enumerate(codes):
        vectors[i] = _init_row(seed, code, d)
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    return EmbeddingMatrix(list(codes), vectors, iterations=0, seed=seed)


def normalize_rows(a: np.ndarray) -> np.ndarray:
    """Return ``a`` with every row scaled to unit L2 norm."""
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    if (norms <= ZERO_ROW_NORM).any():
        raise InvalidParameterError("cannot normalize a zero row")
    return a / norms


def _matmul_rows(matrix: sp.csr_matrix, vectors: np.ndarray, threads: int) -> np.ndarray:
    """matrix @ vectors, optionally split across row blocks.

    Each row is accumulated over its stored neighbors in a fixed order, so
    the result is identical for every thread count.
    """
    n = matrix.shape[0]
    if threads <= 1 or n < 2 * threads:
        return matrix @ vectors
    out = np.empty((n, vectors.shape[1]), dtype=np.float64)
    bounds = np.linspace(0, n, threads + 1).astype(int)

    def work(i: int) -> None:
        a, b = bounds[i], bounds[i + 1]
        out[a:b] = matrix[a:b] @ vectors

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out


def _iterate_rows(
    vectors: np.ndarray, matrix: sp.csr_matrix, threads: int
) -> tuple[np.ndarray, int]:
    raw = _matmul_rows(matrix, vectors, threads)
    norms = np.linalg.norm(raw, axis=1)
    zero = norms <= ZERO_ROW_NORM
    replaced = int(zero.sum())
    if replaced:
        # Exact cancellation: keep the previous (already unit-norm) row.
        raw[zero] = vectors[zero]
        norms[zero] = 1.0
    return raw / norms[:, None], replaced


def iterate(
    T_prev: EmbeddingMatrix, M: TransitionMatrix, threads: int = 1
) -> EmbeddingMatrix:
    """One power-iteration step: multiply by M, then L2-normalize rows."""
    if T_prev.vectors.shape[0] != M.matrix.shape[0]:
        raise InternalConsistencyError(
            f"embedding has {T_prev.vectors.shape[0]} rows, "
            f"transition matrix expects {M.matrix.shape[0]}"
        )
    vectors, replaced = _iterate_rows(T_prev.vectors, M.matrix, threads)
    done = None if T_prev.iterations is None else T_prev.iterations + 1
    return EmbeddingMatrix(
        T_prev.codes,
        vectors,
        iterations=done,
        seed=T_prev.seed,
        zero_rows_replaced=T_prev.zero_rows_replaced + replaced,
    )


def compute_chunk_weights(
    graph: CooccurrenceGraph, assignment: ChunkAssignment
) -> ChunkWeights:
    """Merge weights per node: chunk-local degree over total degree."""
    W = np.zeros((len(graph.vocabulary), assignment.chunk_count), dtype=np.float64)
    for (a, b), q in assignment.edge_to_chunk.items():
        w = graph.edge_weights[(a, b)]
        W[a, q] += w
        W[b, q] += w
    covered = graph.degrees > 0
    W[covered] /= graph.degrees[covered, None].astype(np.float64)
    return ChunkWeights(W)


def merge_chunks(
    chunk_embeddings: dict,
    weights: ChunkWeights,
    vocabulary: Vocabulary,
) -> EmbeddingMatrix:
    """Merge per-chunk embeddings into one matrix over the union node set.

    Args:
        chunk_embeddings: chunk index -> that chunk's final EmbeddingMatrix.
        weights: merge weights over (vocabulary index, chunk index).
        vocabulary: resolves codes to vocabulary indices.

    Each node's row is the weighted sum of its rows across the chunks that
    contain it, L2-normalized. Output rows follow vocabulary order.
    """
    if not chunk_embeddings:
        raise InternalConsistencyError("no chunk embeddings to merge")
    member: dict[int, list] = {}
    d = None
    iterations = None
    seed = None
    replaced = 0
    for q, emb in chunk_embeddings.items():
        d = emb.dimension if d is None else d
        if emb.dimension != d:
            raise InternalConsistencyError("chunk embeddings disagree on dimension")
        iterations = emb.iterations if iterations is None else iterations
        seed = emb.seed if seed is None else seed
        replaced += emb.zero_rows_replaced
        for row, code in enumerate(emb.codes):
            member.setdefault(vocabulary.index_of(code), []).append((q, emb, row))
    out_nodes = sorted(member)
    vectors = np.zeros((len(out_nodes), d), dtype=np.float64)
    for pos, v in enumerate(out_nodes):
        total = 0.0
        for q, emb, row in member[v]:
            w = weights.weights[v, q]
            vectors[pos] += w * emb.vectors[row]
            total += w
        if total <= 0.0:
            raise InternalConsistencyError(
                f"node {vocabulary.code(v)!r} has zero total chunk weight"
            )
    norms = np.linalg.norm(vectors, axis=1)
    if (norms <= ZERO_ROW_NORM).any():
        raise InternalConsistencyError("merged row cancelled to zero")
    vectors /= norms[:, None]
    codes = [vocabulary.code(v) for v in out_nodes]
    return EmbeddingMatrix(
        codes, vectors, iterations=iterations, seed=seed, zero_rows_replaced=replaced
    )


def train(
    graph: CooccurrenceGraph,
    d: int = DEFAULT_DIMENSION,
    iterations: int = SUBSTITUTE_ITERATIONS,
    chunks: int = 1,
    seed: int = 0,
    threads: int = 1,
) -> EmbeddingMatrix:
    """Train an embedding: partition, per-chunk iteration, weighted merge.

    Deterministic for fixed (graph, d, iterations, chunks, seed) at every
    thread count. Isolated products are absent from the output.

    Raises:
        InvalidParameterError: on non-positive d, iterations, or chunks.
        EmptyGraphError: if the graph has no edges.
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if iterations < 1:
        raise InvalidParameterError(f"iteration count must be >= 1, got {iterations}")
    if graph.edge_count == 0:
        raise EmptyGraphError("the co-occurrence graph has no edges")
    assignment = partition_chunks(graph, chunks)
    vocab = graph.vocabulary
    present = {q for q in assignment.edge_to_chunk.values()}
    chunk_embeddings = {}
    for q in sorted(present):
        M = build_transition(graph, assignment, q)
        codes_q = [vocab.code(int(v)) for v in M.nodes]
        T = init_embedding(codes_q, d, seed)
        for _ in range(iterations):
            T = iterate(T, M, threads=threads)
        chunk_embeddings[q] = T
    weights = compute_chunk_weights(graph, assignment)
    merged = merge_chunks(chunk_embeddings, weights, vocab)
    if not np.isfinite(merged.vectors).all():
        raise InternalConsistencyError("embedding contains NaN or Inf entries")
    merged.iterations = iterations
    merged.seed = seed
    return merged


def dense_reference_train(
    graph: CooccurrenceGraph, d: int, iterations: int, seed: int
) -> EmbeddingMatrix:
    """Brute-force single-chunk reference used as a testing oracle.

    Same contract as ``train(chunks=1)``, computed with an explicit dense
    transition matrix and plain array loops; shares only the seeded row
    initialization with the production path.
    """
    if d < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {d}")
    if iterations < 1:
        raise InvalidParameterError(f"iteration count must be >= 1, got {iterations}")
    if graph.edge_count == 0:
        raise EmptyGraphError("the co-occurrence graph has no edges")
    vocab = graph.vocabulary
    nodes = [int(v) for v in np.flatnonzero(graph.degrees > 0)]
    if len(nodes) > DENSE_REFERENCE_MAX_NODES:
        raise InvalidParameterError(
            f"dense reference limited to {DENSE_REFERENCE_MAX_NODES} nodes, "
            f"got {len(nodes)}"
        )
    local = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    M = np.zeros((n, n), dtype=np.float64)
    for (a, b), w in graph.edge_weights.items():
        M[local[a], local[b]] = w
        M[local[b], local[a]] = w
    M /= M.sum(axis=1, keepdims=True)
    codes = [vocab.code(v) for v in nodes]
    T = init_embedding(codes, d, seed).vectors
    for _ in range(iterations):
        raw = M @ T
        norms = np.linalg.norm(raw, axis=1)
        zero = norms <= ZERO_ROW_NORM
        if zero.any():
            raw[zero] = T[zero]
            norms[zero] = 1.0
        T = raw / norms[:, None]
    # Mirror the merge-stage normalization of the production path.
    T = T / np.linalg.norm(T, axis=1, keepdims=True)
    return EmbeddingMatrix(codes, T, iterations=iterations, seed=seed)


def write_embedding(emb: EmbeddingMatrix, stream: TextIO) -> None:
    """Write the text format: ``<row_count> <d>`` header, then per node
    ``<code> <v1> ... <vd>`` at 9 significant digits.

    Values are rounded for writing; cosine ties closer than about 1e-8 may
    resolve differently after a round-trip.
    """
    n, d = emb.vectors.shape
    stream.write(f"{n} {d}\n")
    for code, row in zip(emb.codes, emb.vectors):
        stream.write(code + " " + " ".join(format(x, ".9g") for x in row) + "\n")


def read_embedding(stream: TextIO) -> EmbeddingMatrix:
    """Read the text format written by :func:`write_embedding`.

    The result carries no iteration or seed metadata.
    """
    header = stream.readline()
    parts = header.split()
    if len(parts) != 2:
        raise MalformedInputError(
            f"embedding header must be '<row_count> <d>', got {header.rstrip()!r}"
        )
    try:
        n, d = int(parts[0]), int(parts[1])
    except ValueError:
        raise MalformedInputError(
            f"embedding header must be two integers, got {header.rstrip()!r}"
        ) from None
    if n < 0 or d < 1:
        raise MalformedInputError(f"invalid embedding shape {n} x {d}")
    codes = []
    vectors = np.empty((n, d), dtype=np.float64)
    seen = set()
    for i in range(n):
        line = stream.readline()
        if not line:
            raise MalformedInputError(f"expected {n} embedding rows, found {i}")
        tokens = line.split()
        if len(tokens) != d + 1:
            raise MalformedInputError(
                f"line {i + 2}: expected a code and {d} values, got {len(tokens)} tokens"
            )
        code = tokens[0]
        if code in seen:
            raise MalformedInputError(f"line {i + 2}: duplicate code {code!r}")
        seen.add(code)
        codes.append(code)
        try:
            vectors[i] = np.asarray(tokens[1:], dtype=np.float64)
        except ValueError:
            raise MalformedInputError(f"line {i + 2}: non-numeric value") from None
    return EmbeddingMatrix(codes, vectors, iterations=None, seed=None)
