"""Basket parsing, vocabulary interning, and clique expansion."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from basketspace import (
    MalformedInputError,
    UnknownProductError,
    Vocabulary,
    expand_hyperedges,
    isolated_products,
    parse_baskets,
)
from conftest import DEMO_DEGREES, DEMO_EDGES, DEMO_TEXT, graph_from_text


def parse(text: str, **kwargs):
    return parse_baskets(io.StringIO(text), **kwargs)


class TestParsing:
    def test_demo_corpus(self):
        baskets, vocab = parse(DEMO_TEXT)
        assert len(baskets) == 3
        assert len(vocab) == 6
        # First-appearance order.
        assert list(vocab.codes) == ["p1", "p3", "p4", "p2", "p5", "p6"]

    def test_token_order_within_basket_is_irrelevant(self):
        b1, _ = parse("a b c\n")
        b2, _ = parse("c a b\n")
        assert b1 == b2

    def test_comments_and_blank_lines_skipped(self):
        baskets, vocab = parse("# header\n\na b\n   \n# tail\nc d\n")
        assert len(baskets) == 2
        assert len(vocab) == 4

    def test_duplicates_within_basket_preserved_by_parser(self):
        baskets, vocab = parse("a a b\n")
        assert len(baskets[0]) == 3
        assert len(vocab) == 2

    def test_singleton_basket_accepted(self):
        baskets, vocab = parse("solo\n")
        assert len(baskets) == 1
        assert len(vocab) == 1

    def test_oversize_basket_names_line(self):
        with pytest.raises(MalformedInputError) as exc:
            parse("a b\nc d e f\n", max_basket_products=3)
        assert "line 2" in str(exc.value)

    def test_oversize_counts_distinct_products(self):
        # Repeats of one product do not count against the cap.
        baskets, _ = parse("a a a a b c\n", max_basket_products=3)
        assert len(baskets) == 1

    def test_unicode_codes(self):
        baskets, vocab = parse("café thé\n")
        assert "café" in vocab


class TestVocabulary:
    def test_intern_is_idempotent(self):
        v = Vocabulary()
        assert v.intern("x") == v.intern("x") == 0
        assert v.intern("y") == 1

    def test_index_of_unknown_raises_with_suggestions(self):
        v = Vocabulary()
        for code in ("banana", "bandana", "cherry"):
            v.intern(code)
        with pytest.raises(UnknownProductError) as exc:
            v.index_of("bana")
        message = str(exc.value)
        assert "bana" in message
        assert "banana" in message
        assert exc.value.exit_code == 3

    def test_dump_roundtrip(self, tmp_path):
        v = Vocabulary()
        for code in ("p1", "café", "p2"):
            v.intern(code)
        path = tmp_path / "vocab.txt"
        with open(path, "w", encoding="utf-8") as fh:
            v.write(fh)
        with open(path, encoding="utf-8") as fh:
            back = Vocabulary.read(fh)
        assert list(back.codes) == list(v.codes)

    def test_dump_format(self):
        v = Vocabulary()
        v.intern("a")
        v.intern("b")
        out = io.StringIO()
        v.write(out)
        assert out.getvalue() == "0 a\n1 b\n"

    def test_read_rejects_gap_in_indices(self):
        with pytest.raises(MalformedInputError):
            Vocabulary.read(io.StringIO("0 a\n2 b\n"))


class TestExpansion:
    def test_demo_corpus_edges_and_degrees(self, demo_graph):
        g = demo_graph
        assert g.edge_count == len(DEMO_EDGES)
        for (ca, cb), w in DEMO_EDGES.items():
            a, b = g.vocabulary.index_of(ca), g.vocabulary.index_of(cb)
            assert g.weight(a, b) == w
            assert g.weight(b, a) == w
        for code, deg in DEMO_DEGREES.items():
            assert g.degrees[g.vocabulary.index_of(code)] == deg

    def test_duplicates_within_basket_collapse(self):
        g = graph_from_text("a a b\n")
        a, b = g.vocabulary.index_of("a"), g.vocabulary.index_of("b")
        assert g.weight(a, b) == 1
        assert g.total_weight == 1

    def test_no_self_loops(self):
        g = graph_from_text("a a\n")
        assert g.edge_count == 0

    def test_repeated_baskets_accumulate(self):
        g = graph_from_text("a b\na b\na b\n")
        a, b = g.vocabulary.index_of("a"), g.vocabulary.index_of("b")
        assert g.weight(a, b) == 3

    def test_basket_of_k_products_adds_k_choose_2(self):
        for k in range(2, 8):
            text = " ".join(f"q{i}" for i in range(k)) + "\n"
            g = graph_from_text(text)
            assert g.total_weight == k * (k - 1) // 2

    def test_line_permutation_invariance(self):
        lines = ["a b c", "b d", "e a d", "c c f"]
        rng = np.random.default_rng(7)
        reference = graph_from_text("\n".join(lines) + "\n")
        for _ in range(5):
            shuffled = [lines[i] for i in rng.permutation(len(lines))]
            shuffled = [" ".join(np.array(line.split())[rng.permutation(len(line.split()))]) for line in shuffled]
            g = graph_from_text("\n".join(shuffled) + "\n")
            for (a, b), w in reference.edge_weights.items():
                ca, cb = reference.vocabulary.codes[a], reference.vocabulary.codes[b]
                assert g.weight(g.vocabulary.index_of(ca), g.vocabulary.index_of(cb)) == w
            assert g.total_weight == reference.total_weight

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.lists(st.integers(0, 12), min_size=1, max_size=6),
            min_size=1,
            max_size=10,
        )
    )
    def test_handshake_identity(self, raw_baskets):
        text = "\n".join(" ".join(f"h{i}" for i in basket) for basket in raw_baskets) + "\n"
        g = graph_from_text(text)
        assert int(g.degrees.sum()) == 2 * g.total_weight

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.lists(st.integers(0, 12), min_size=1, max_size=6),
            min_size=1,
            max_size=10,
        )
    )
    def test_total_weight_matches_pair_count(self, raw_baskets):
        text = "\n".join(" ".join(f"h{i}" for i in basket) for basket in raw_baskets) + "\n"
        g = graph_from_text(text)
        expected = sum(
            len(set(basket)) * (len(set(basket)) - 1) // 2 for basket in raw_baskets
        )
        assert g.total_weight == expected

    def test_edge_keys_are_ordered_pairs(self, demo_graph):
        for a, b in demo_graph.edge_weights:
            assert a < b


class TestIsolation:
    def test_demo_corpus_has_none(self, demo_graph):
        assert isolated_products(demo_graph) == []

    def test_singletons_are_isolated(self):
        g = graph_from_text("a b\nlonely\n")
        codes = [g.vocabulary.codes[i] for i in isolated_products(g)]
        assert codes == ["lonely"]

    def test_self_only_basket_is_isolated(self):
        g = graph_from_text("x x x\na b\n")
        codes = [g.vocabulary.codes[i] for i in isolated_products(g)]
        assert codes == ["x"]
