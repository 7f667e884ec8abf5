"""Shared fixtures: the demo corpus with hand-enumerated expectations,
plus random-graph helpers used by oracle and invariant tests."""

import io

import numpy as np
import pytest

from basketspace import CooccurrenceGraph, Vocabulary, expand_hyperedges, parse_baskets

# Three-basket demo corpus used throughout the tests.
DEMO_TEXT = "p1 p3 p4\np2 p4\np5 p6 p3\n"

# Expected expansion, enumerated by hand: each basket contributes one unit
# per unordered pair of its distinct products.
DEMO_EDGES = {
    ("p1", "p3"): 1,
    ("p1", "p4"): 1,
    ("p3", "p4"): 1,
    ("p2", "p4"): 1,
    ("p5", "p6"): 1,
    ("p3", "p5"): 1,
    ("p3", "p6"): 1,
}
DEMO_DEGREES = {"p1": 2, "p2": 1, "p3": 4, "p4": 3, "p5": 2, "p6": 2}


def graph_from_text(text: str) -> CooccurrenceGraph:
    baskets, vocab = parse_baskets(io.StringIO(text))
    return expand_hyperedges(baskets, vocab)


def graph_from_edges(edges: dict) -> CooccurrenceGraph:
    """Build a graph from {(code_a, code_b): weight} directly."""
    vocab = Vocabulary()
    indexed = {}
    for (ca, cb), w in edges.items():
        a, b = vocab.intern(ca), vocab.intern(cb)
        key = (a, b) if a < b else (b, a)
        indexed[key] = indexed.get(key, 0) + w
    degrees = np.zeros(len(vocab), dtype=np.int64)
    for (a, b), w in indexed.items():
        degrees[a] += w
        degrees[b] += w
    return CooccurrenceGraph(vocab, indexed, degrees)


def random_graph(rng: np.random.Generator, max_nodes: int = 50, max_edges: int = 200) -> CooccurrenceGraph:
    """A random connected-ish weighted graph with every node on an edge."""
    n = int(rng.integers(2, max_nodes + 1))
    codes = [f"n{i}" for i in range(n)]
    edges = {}
    # A spanning chain keeps every node non-isolated.
    for i in range(n - 1):
        edges[(codes[i], codes[i + 1])] = int(rng.integers(1, 6))
    extra = int(rng.integers(0, max_edges - (n - 1) + 1))
    for _ in range(extra):
        a, b = rng.integers(0, n, 2)
        if a == b:
            continue
        key = (codes[min(a, b)], codes[max(a, b)])
        edges[key] = edges.get(key, 0) + int(rng.integers(1, 6))
    return graph_from_edges(edges)


@pytest.fixture
def demo_graph() -> CooccurrenceGraph:
    return graph_from_text(DEMO_TEXT)
