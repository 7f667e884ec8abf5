"""Basket ingestion: vocabulary interning and co-occurrence graph construction.

A basket file is plain UTF-8 text with one transaction per line: product
codes separated by whitespace. Blank lines and lines starting with ``#``
are skipped. Product order inside a line carries no meaning.

Baskets are hyperedges over products; they are expanded into a weighted
pairwise co-occurrence graph by clique expansion: within each basket,
after de-duplicating repeated codes, every unordered pair of distinct
products gains one unit of edge weight. Quantities are not used and
self-loops never occur.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .errors import MalformedInputError, UnknownProductError

# Baskets beyond this many distinct products are rejected: clique expansion
# grows quadratically and a line that size is almost certainly not a basket.
DEFAULT_MAX_BASKET_PRODUCTS = 5000


class Vocabulary:
    """Bijection between external product codes and dense internal indices.

    Indices are assigned in first-appearance order, starting at 0.
    """

    def __init__(self, codes: Iterable[str] = ()):
        self._codes: list[str] = []
        self._index: dict[str, int] = {}
        for code in codes:
            self.intern(code)

    def intern(self, code: str) -> int:
        """Return the index of ``code``, assigning a new one if unseen."""
        if not code:
            raise MalformedInputError("empty product code")
        idx = self._index.get(code)
        if idx is None:
            idx = len(self._codes)
            self._codes.append(code)
            self._index[code] = idx
        return idx

    def index_of(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise UnknownProductError(code, self.nearest_codes(code)) from None

    def code(self, index: int) -> str:
        return self._codes[index]

    @property
    def codes(self) -> list[str]:
        return list(self._codes)

    def __contains__(self, code: str) -> bool:
        return code in self._index

    def __len__(self) -> int:
        return len(self._codes)

    def __iter__(self):
        return iter(self._codes)

    def nearest_codes(self, code: str, limit: int = 5) -> list[str]:
        """Known codes ranked by longest shared prefix with ``code``."""

        def shared_prefix(a: str, b: str) -> int:
            n = 0
            for x, y in zip(a, b):
                if x != y:
                    break
                n += 1
            return n

        ranked = sorted(self._codes, key=lambda c: (-shared_prefix(code, c), c))
        return ranked[:limit]

    def write(self, stream: TextIO) -> None:
        """Dump as one line per product: ``<internal_index> <external_code>``."""
        for idx, code in enumerate(self._codes):
            stream.write(f"{idx} {code}\n")

    @classmethod
    def read(cls, stream: TextIO) -> "Vocabulary":
        vocab = cls()
        for lineno, line in enumerate(stream, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise MalformedInputError(
                    f"line {lineno}: expected '<index> <code>', got {line.rstrip()!r}"
                )
            idx, code = parts
            if int(idx) != len(vocab):
                raise MalformedInputError(
                    f"line {lineno}: non-contiguous index {idx}"
                )
            vocab.intern(code)
        return vocab


# A basket is stored canonically as a sorted tuple of internal indices,
# duplicates preserved; two baskets are equal iff they hold the same multiset.
Basket = tuple


def parse_baskets(
    stream: TextIO,
    max_basket_products: int = DEFAULT_MAX_BASKET_PRODUCTS,
) -> tuple[list[Basket], Vocabulary]:
    """Parse a basket stream into baskets and a vocabulary.

    Args:
        stream: text stream of basket lines.
        max_basket_products: reject lines with more distinct products than
            this bound.

    Returns:
        (baskets, vocabulary): baskets in file order, each a sorted tuple of
        internal indices; vocabulary in first-appearance order.

    Raises:
        MalformedInputError: on lines exceeding the product bound.
        OSError: if the stream cannot be read.
    """
    vocab = Vocabulary()
    baskets: list[Basket] = []
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(set(tokens)) > max_basket_products:
            raise MalformedInputError(
                f"line {lineno}: basket has {len(set(tokens))} distinct products, "
                f"exceeding the limit of {max_basket_products}"
            )
        baskets.append(tuple(sorted(vocab.intern(tok) for tok in tokens)))
    return baskets, vocab


@dataclass
class CooccurrenceGraph:
    """Weighted undirected co-occurrence graph over a product vocabulary.

    Attributes:
        vocabulary: the product vocabulary; indices address ``degrees``.
        edge_weights: map from index pair (a, b) with a < b to a positive
            co-occurrence count.
        degrees: weighted degree per product, deg(v) = sum of incident edge
            weights; zero for isolated products.
    """

    vocabulary: Vocabulary
    edge_weights: dict = field(default_factory=dict)
    degrees: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def weight(self, a: int, b: int) -> int:
        """Edge weight between two products, orientation-independent."""
        if a == b:
            return 0
        key = (a, b) if a < b else (b, a)
        return self.edge_weights.get(key, 0)

    @property
    def edge_count(self) -> int:
        return len(self.edge_weights)

    @property
    def total_weight(self) -> int:
        return sum(self.edge_weights.values())


def expand_hyperedges(baskets: Iterable[Basket], vocabulary: Vocabulary) -> CooccurrenceGraph:
    """Clique-expand baskets into a weighted co-occurrence graph.

    Each basket contributes +1 weight to every unordered pair of distinct
    products it contains (after de-duplication). Singleton baskets
    contribute nothing.
    """
    weights: dict[tuple[int, int], int] = defaultdict(int)
    for basket in baskets:
        distinct = sorted(set(basket))
        for a, b in itertools.combinations(distinct, 2):
            weights[(a, b)] += 1
    degrees = np.zeros(len(vocabulary), dtype=np.int64)
    for (a, b), w in weights.items():
        degrees[a] += w
        degrees[b] += w
    return CooccurrenceGraph(vocabulary, dict(weights), degrees)


def isolated_products(graph: CooccurrenceGraph) -> list[int]:
    """Indices of degree-0 products, in vocabulary order.

    These have no co-occurrence evidence and are excluded from embedding.
    """
    return [int(i) for i in np.flatnonzero(graph.degrees == 0)]
