"""Product embeddings from transaction baskets, with substitute and
complement mining and a synthetic-market evaluation harness.

Typical flow: parse baskets, expand them into a co-occurrence graph,
train two embedding spaces (six iterations for substitutes, one for
complements), then query cosine nearest neighbors.
"""

from .embedding import (
    COMPLEMENT_ITERATIONS,
    DEFAULT_DIMENSION,
    SUBSTITUTE_ITERATIONS,
    ChunkAssignment,
    ChunkWeights,
    EmbeddingMatrix,
    TransitionMatrix,
    build_transition,
    compute_chunk_weights,
    dense_reference_train,
    init_embedding,
    iterate,
    merge_chunks,
    normalize_rows,
    partition_chunks,
    read_embedding,
    train,
    write_embedding,
)
from .errors import (
    BasketspaceError,
    ConfigurationMismatchWarning,
    DataInconsistencyError,
    EmptyGraphError,
    InternalConsistencyError,
    InvalidParameterError,
    MalformedInputError,
    UnknownProductError,
)
from .evaluation import (
    BenchmarkConfig,
    EvalReport,
    SyntheticMarket,
    benchmark_baskets,
    first_recommendation_hit_rate,
    generate_synthetic_market,
    hits_at_k,
    pair_order_agreement,
    random_hit_expectation,
    read_truth,
    run_benchmark,
    weighted_accuracy,
)
from .ingest import (
    CooccurrenceGraph,
    Vocabulary,
    expand_hyperedges,
    isolated_products,
    parse_baskets,
)
from .neighbors import (
    NeighborList,
    cosine_similarity,
    random_recommender,
    recommend_complements,
    recommend_substitutes,
    top_k_neighbors,
    write_neighbors,
)

__version__ = "0.1.0"

__all__ = [
    "BasketspaceError",
    "BenchmarkConfig",
    "ChunkAssignment",
    "ChunkWeights",
    "ConfigurationMismatchWarning",
    "CooccurrenceGraph",
    "COMPLEMENT_ITERATIONS",
    "DataInconsistencyError",
    "DEFAULT_DIMENSION",
    "EmbeddingMatrix",
    "EmptyGraphError",
    "EvalReport",
    "InternalConsistencyError",
    "InvalidParameterError",
    "MalformedInputError",
    "NeighborList",
    "SUBSTITUTE_ITERATIONS",
    "SyntheticMarket",
    "TransitionMatrix",
    "UnknownProductError",
    "Vocabulary",
    "benchmark_baskets",
    "build_transition",
    "compute_chunk_weights",
    "cosine_similarity",
    "dense_reference_train",
    "expand_hyperedges",
    "first_recommendation_hit_rate",
    "generate_synthetic_market",
    "hits_at_k",
    "init_embedding",
    "isolated_products",
    "iterate",
    "merge_chunks",
    "normalize_rows",
    "pair_order_agreement",
    "parse_baskets",
    "partition_chunks",
    "random_hit_expectation",
    "random_recommender",
    "read_embedding",
    "read_truth",
    "recommend_complements",
    "recommend_substitutes",
    "run_benchmark",
    "top_k_neighbors",
    "train",
    "weighted_accuracy",
    "write_embedding",
    "write_neighbors",
]
