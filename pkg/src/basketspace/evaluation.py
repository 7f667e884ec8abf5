"""Synthetic-market benchmark: planted ground truth plus survey-style metrics.

The generator plants a market of themes (e.g. pasta night), each split
into disjoint substitute groups (e.g. spaghetti brands). Every shopping
trip samples one theme, then includes each of its groups independently
with probability p, contributing exactly one member per included group.
Members of one group therefore never share a basket (substitutes), while
members of different groups in one theme co-occur frequently
(complements).

Each trip also carries a latent style index: with probability
``affinity`` an included group contributes its style-matched member
rather than a uniformly random one. Style affinity correlates the
specific members bought together, which is what makes direct co-purchase
structure informative; at affinity 0 member choice is uniform and only
group-level structure remains.

Metrics mirror a survey-style evaluation: Hits@k, answer-count-weighted
accuracy over categories, exact-vs-reversed pair order agreement, and
first-recommendation hit rates, with planted truth standing in for
expert answers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

from .embedding import train
from .errors import DataInconsistencyError, InvalidParameterError, MalformedInputError
from .ingest import Vocabulary, expand_hyperedges
from .neighbors import (
    NeighborList,
    random_recommender,
    recommend_complements,
    recommend_substitutes,
)

DEFAULT_THEMES = 20
DEFAULT_GROUPS_PER_THEME = 4
DEFAULT_GROUP_SIZE = 8
DEFAULT_BASKETS = 50_000
DEFAULT_PICK_PROB = 0.5
DEFAULT_AFFINITY = 0.53


@dataclass
class SyntheticMarket:
    """A generated basket corpus with planted substitute/complement truth.

    Attributes:
        themes: number of themes.
        groups_per_theme: substitute groups per theme.
        group_size: products per group.
        basket_count: number of generated baskets.
        pick_prob: per-group inclusion probability p.
        affinity: probability that an included group contributes the
            trip's style-matched member instead of a uniform one.
        seed: generator seed.
        product_codes: all products, theme-major order.
        baskets: generated baskets as lists of product codes.
        theme_draws: theme draw counts, including draws rejected for
            producing an empty basket (kept for unbiased rate estimates).
    """

    themes: int
    groups_per_theme: int
    group_size: int
    basket_count: int
    pick_prob: float
    affinity: float
    seed: int
    product_codes: list
    baskets: list
    theme_draws: np.ndarray
    _membership: dict = field(default=None, repr=False, compare=False)

    def membership(self) -> dict:
        """code -> (theme index, group index)."""
        if self._membership is None:
            self._membership = {}
            for code in self.product_codes:
                t, g, _ = _parse_code(code)
                self._membership[code] = (t, g)
        return self._membership

    def theme_of(self, code: str) -> int:
        return self.membership()[code][0]

    def group_of(self, code: str) -> tuple:
        return self.membership()[code]

    def substitute_truth(self, code: str) -> set:
        """Same-group products other than ``code``."""
        t, g = self.membership()[code]
        return {
            c for c, tg in self.membership().items() if tg == (t, g) and c != code
        }

    def complement_truth(self, code: str) -> set:
        """Same-theme products from other groups."""
        t, g = self.membership()[code]
        return {
            c
            for c, (tc, gc) in self.membership().items()
            if tc == t and gc != g
        }

    def write_baskets(self, stream: TextIO) -> None:
        for basket in self.baskets:
            stream.write(" ".join(basket) + "\n")

    def write_truth(self, stream: TextIO) -> None:
        """One line per product: ``<code> <theme_index> <group_index>``."""
        for code in self.product_codes:
            t, g = self.membership()[code]
            stream.write(f"{code} {t} {g}\n")


def _product_code(theme: int, group: int, member: int) -> str:
    return f"t{theme}g{group}m{member}"


def _parse_code(code: str) -> tuple:
    try:
        t_part, rest = code[1:].split("g", 1)
        g_part, m_part = rest.split("m", 1)
        return int(t_part), int(g_part), int(m_part)
    except (ValueError, IndexError):
        raise MalformedInputError(f"not a synthetic product code: {code!r}") from None


def generate_synthetic_market(
    themes: int = DEFAULT_THEMES,
    groups_per_theme: int = DEFAULT_GROUPS_PER_THEME,
    group_size: int = DEFAULT_GROUP_SIZE,
    baskets: int = DEFAULT_BASKETS,
    pick_prob: float = DEFAULT_PICK_PROB,
    affinity: float = DEFAULT_AFFINITY,
    seed: int = 0,
) -> SyntheticMarket:
    """Generate a planted market.

    Empty draws (no group included) are rejected and redrawn so exactly
    ``baskets`` baskets are produced; ``theme_draws`` still counts the
    rejected draws so per-draw rates stay unbiased.

    Raises:
        InvalidParameterError: on parameters outside their documented range.
    """
    if themes < 1:
        raise InvalidParameterError(f"themes must be >= 1, got {themes}")
    if groups_per_theme < 2:
        raise InvalidParameterError(
            f"groups per theme must be >= 2, got {groups_per_theme}"
        )
    if group_size < 2:
        raise InvalidParameterError(f"group size must be >= 2, got {group_size}")
    if baskets < 1:
        raise InvalidParameterError(f"basket count must be >= 1, got {baskets}")
    if not 0.0 < pick_prob <= 1.0:
        raise InvalidParameterError(f"pick probability must be in (0, 1], got {pick_prob}")
    if not 0.0 <= affinity <= 1.0:
        raise InvalidParameterError(f"affinity must be in [0, 1], got {affinity}")

    codes = [
        [
            [_product_code(t, g, m) for m in range(group_size)]
            for g in range(groups_per_theme)
        ]
        for t in range(themes)
    ]
    product_codes = [c for theme in codes for group in theme for c in group]

    rng = np.random.default_rng(seed)
    G = groups_per_theme
    p_nonempty = 1.0 - (1.0 - pick_prob) ** G
    out: list = []
    theme_draws = np.zeros(themes, dtype=np.int64)
    remaining = baskets
    while remaining > 0:
        batch = int(remaining / p_nonempty * 1.2) + 16
        th = rng.integers(0, themes, batch)
        style = rng.integers(0, group_size, batch)
        included = rng.random((batch, G)) < pick_prob
        styled = rng.random((batch, G)) < affinity
        members = rng.integers(0, group_size, (batch, G))
        members = np.where(styled, style[:, None], members)
        nonempty = included.any(axis=1)
        cum = np.cumsum(nonempty)
        cut = int(np.searchsorted(cum, remaining)) + 1 if cum[-1] >= remaining else batch
        theme_draws += np.bincount(th[:cut], minlength=themes)
        for i in np.flatnonzero(nonempty[:cut]):
            t = int(th[i])
            out.append(
                [codes[t][g][int(members[i, g])] for g in range(G) if included[i, g]]
            )
        remaining = baskets - len(out)
    return SyntheticMarket(
        themes,
        groups_per_theme,
        group_size,
        baskets,
        pick_prob,
        affinity,
        seed,
        product_codes,
        out,
        theme_draws,
    )


def read_truth(stream: TextIO) -> dict:
    """Read a ground-truth file: lines ``<code> <theme> <group>``.

    Returns code -> (theme index, group index). Blank and ``#`` lines are
    skipped.
    """
    membership: dict = {}
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise MalformedInputError(
                f"line {lineno}: expected '<code> <theme> <group>', got {stripped!r}"
            )
        code, t, g = parts
        try:
            membership[code] = (int(t), int(g))
        except ValueError:
            raise MalformedInputError(
                f"line {lineno}: theme and group must be integers"
            ) from None
    return membership


def hits_at_k(recommendations: NeighborList, truth: set, k: int) -> int:
    """1 if any of the top-k recommended products is in ``truth``, else 0."""
    if not truth:
        raise InvalidParameterError("truth set must not be empty")
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    return int(any(code in truth for code in recommendations.codes()[:k]))


def random_hit_expectation(n_products: int, truth_size: int, k: int) -> float:
    """Expected Hits@k of a uniform recommender: 1 - C(N-1-t, k) / C(N-1, k)."""
    pool = n_products - 1
    if k > pool:
        raise InvalidParameterError(f"k={k} exceeds the {pool} available products")
    misses = pool - truth_size
    if misses < k:
        return 1.0
    return 1.0 - math.comb(misses, k) / math.comb(pool, k)


def weighted_accuracy(per_category: Sequence) -> float:
    """Answer-count-weighted mean accuracy: sum(acc_i * m_i) / sum(m_i)."""
    if not per_category:
        raise InvalidParameterError("need at least one category")
    total = 0.0
    answers = 0
    for acc, m in per_category:
        if m <= 0:
            raise InvalidParameterError(f"answer counts must be positive, got {m}")
        if not 0.0 <= acc <= 1.0:
            raise InvalidParameterError(f"accuracy must be in [0, 1], got {acc}")
        total += acc * m
        answers += m
    return total / answers


def pair_order_agreement(algorithm_pair: Sequence, expert_pair: Sequence) -> str:
    """Compare two ordered pairs: ``correct``, ``reversed``, or ``mismatch``."""
    a = tuple(algorithm_pair)
    e = tuple(expert_pair)
    if len(a) != 2 or len(e) != 2:
        raise InvalidParameterError("pairs must contain exactly two products")
    if a[0] == a[1] or e[0] == e[1]:
        raise InvalidParameterError("pairs must contain two distinct products")
    if a == e:
        return "correct"
    if a == (e[1], e[0]):
        return "reversed"
    return "mismatch"


def first_recommendation_hit_rate(
    queries_with_truth: Sequence, recommender: Callable
) -> float:
    """Fraction of queries whose rank-1 recommendation is in the truth set.

    Args:
        queries_with_truth: (query code, truth set) pairs.
        recommender: callable mapping a query code to a NeighborList.
    """
    if not queries_with_truth:
        raise InvalidParameterError("need at least one query")
    hits = 0
    for query, truth in queries_with_truth:
        recs = recommender(query)
        if recs.neighbors and recs.neighbors[0][0] in truth:
            hits += 1
    return hits / len(queries_with_truth)


@dataclass
class BenchmarkConfig:
    """Knobs for :func:`run_benchmark`. Defaults run in seconds."""

    dimension: int = 128
    substitute_iterations: int = 6
    complement_iterations: int = 1
    chunks: int = 1
    seed: int = 0
    k: int = 2
    threads: int = 1
    query_sample: int | None = None

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "substitute_iterations": self.substitute_iterations,
            "complement_iterations": self.complement_iterations,
            "chunks": self.chunks,
            "seed": self.seed,
            "k": self.k,
            "threads": self.threads,
            "query_sample": self.query_sample,
        }


@dataclass
class EvalReport:
    """Benchmark results; see README for the JSON key reference."""

    config: dict
    market: dict
    n_embedded: int
    n_queries: int
    substitutes: dict
    complements: dict
    random_baseline: dict
    order_agreement: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "market": self.market,
            "n_embedded": self.n_embedded,
            "n_queries": self.n_queries,
            "substitutes": self.substitutes,
            "complements": self.complements,
            "random_baseline": self.random_baseline,
            "order_agreement": self.order_agreement,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def validate(self) -> None:
        """Check report invariants; raises InternalConsistencyError on violation."""
        from .errors import InternalConsistencyError

        for section in (self.substitutes, self.complements):
            rates = [section["hits_at_k"], section["first_hit_rate"],
                     section["weighted_accuracy"]]
            rates += [c["accuracy"] for c in section["per_category"]]
            if any(not 0.0 <= r <= 1.0 for r in rates):
                raise InternalConsistencyError("rate outside [0, 1]")
            if section["answers_total"] != sum(
                c["answers"] for c in section["per_category"]
            ):
                raise InternalConsistencyError("answer counts do not add up")
        for kind in ("substitute", "complement"):
            oa = self.order_agreement[kind]
            if oa["correct"] + oa["reversed"] > oa["evaluated"]:
                raise InternalConsistencyError("order agreement counts exceed pairs")

    def text_table(self) -> str:
        """Aligned text rendering of the headline numbers."""
        lines = []
        w = 34

        def row(label: str, sub, comp) -> None:
            lines.append(f"{label:<{w}} {sub:>12} {comp:>12}")

        def fmt(x: float) -> str:
            return f"{x:.4f}"

        row("metric", "substitutes", "complements")
        lines.append("-" * (w + 26))
        row(
            f"hits@{self.config['k']}",
            fmt(self.substitutes["hits_at_k"]),
            fmt(self.complements["hits_at_k"]),
        )
        row(
            "first-recommendation hit rate",
            fmt(self.substitutes["first_hit_rate"]),
            fmt(self.complements["first_hit_rate"]),
        )
        row(
            "weighted accuracy",
            fmt(self.substitutes["weighted_accuracy"]),
            fmt(self.complements["weighted_accuracy"]),
        )
        row(
            f"random hits@{self.config['k']}",
            fmt(self.random_baseline["substitute_hits_at_k"]),
            fmt(self.random_baseline["complement_hits_at_k"]),
        )
        row(
            "random expectation",
            fmt(self.random_baseline["substitute_expectation"]),
            fmt(self.random_baseline["complement_expectation"]),
        )
        sub_oa = self.order_agreement["substitute"]
        comp_oa = self.order_agreement["complement"]
        row("pairs in exact order", sub_oa["correct"], comp_oa["correct"])
        row("pairs in reversed order", sub_oa["reversed"], comp_oa["reversed"])
        row("pairs evaluated", sub_oa["evaluated"], comp_oa["evaluated"])
        lines.append("")
        row("per-category accuracy", "substitutes", "complements")
        lines.append("-" * (w + 26))
        comp_by_cat = {c["category"]: c for c in self.complements["per_category"]}
        for cat in self.substitutes["per_category"]:
            comp = comp_by_cat[cat["category"]]
            row(
                f"{cat['category']} (n={cat['answers']})",
                fmt(cat["accuracy"]),
                fmt(comp["accuracy"]),
            )
        return "\n".join(lines) + "\n"


def run_benchmark(market: SyntheticMarket, config: BenchmarkConfig) -> EvalReport:
    """Train both spaces on the market and score them against planted truth.

    Deterministic for a fixed market and config, byte-for-byte.
    """
    if not market.baskets:
        raise InvalidParameterError("market has no baskets")
    market_info = {
        "themes": market.themes,
        "groups_per_theme": market.groups_per_theme,
        "group_size": market.group_size,
        "baskets": market.basket_count,
        "pick_prob": market.pick_prob,
        "affinity": market.affinity,
        "seed": market.seed,
    }
    return benchmark_baskets(
        market.baskets, market.membership(), config, market_info=market_info
    )


def benchmark_baskets(
    baskets: Iterable,
    membership: dict,
    config: BenchmarkConfig,
    market_info: dict | None = None,
) -> EvalReport:
    """Benchmark arbitrary baskets against a code -> (theme, group) truth map.

    Raises:
        DataInconsistencyError: if a basket references a code missing from
            ``membership``.
    """
    vocab = Vocabulary()
    indexed = []
    for basket in baskets:
        indexed.append(tuple(sorted(vocab.intern(code) for code in basket)))
    missing = sorted(c for c in vocab if c not in membership)
    if missing:
        shown = ", ".join(missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise DataInconsistencyError(
            f"basket products missing from the truth file: {shown}{more}"
        )
    graph = expand_hyperedges(indexed, vocab)
    sub_space = train(
        graph,
        d=config.dimension,
        iterations=config.substitute_iterations,
        chunks=config.chunks,
        seed=config.seed,
        threads=config.threads,
    )
    comp_space = train(
        graph,
        d=config.dimension,
        iterations=config.complement_iterations,
        chunks=config.chunks,
        seed=config.seed,
        threads=config.threads,
    )
    embedded = sub_space.codes
    n = len(embedded)

    by_group: dict = {}
    by_theme: dict = {}
    for code, (t, g) in membership.items():
        by_group.setdefault((t, g), set()).add(code)
        by_theme.setdefault(t, set()).add(code)

    queries = list(embedded)
    if config.query_sample is not None and config.query_sample < len(queries):
        picker = np.random.default_rng(config.seed)
        idx = picker.choice(len(queries), size=config.query_sample, replace=False)
        queries = [queries[int(i)] for i in idx]

    k = config.k
    counts = {
        "sub_hits": 0,
        "comp_hits": 0,
        "sub_hits_comp_space": 0,
        "rand_sub_hits": 0,
        "rand_comp_hits": 0,
        "sub_first": 0,
        "comp_first": 0,
        "rand_sub_first": 0,
        "rand_comp_first": 0,
    }
    exp_sub = 0.0
    var_sub = 0.0
    exp_comp = 0.0
    var_comp = 0.0
    cat_sub: dict = {}
    cat_comp: dict = {}
    order = {
        "substitute": {"correct": 0, "reversed": 0, "mismatch": 0, "evaluated": 0},
        "complement": {"correct": 0, "reversed": 0, "mismatch": 0, "evaluated": 0},
    }

    def first_hit(recs: NeighborList, truth: set) -> int:
        return int(bool(recs.neighbors) and recs.neighbors[0][0] in truth)

    def order_count(kind: str, recs: NeighborList, truth: set) -> None:
        if len(recs.neighbors) < 2 or len(truth) < 2:
            return
        expert = tuple(sorted(truth)[:2])
        verdict = pair_order_agreement(tuple(recs.codes()[:2]), expert)
        order[kind][verdict] += 1
        order[kind]["evaluated"] += 1

    embedded_set = set(embedded)
    for q in queries:
        t, g = membership[q]
        sub_truth = by_group[(t, g)] - {q}
        comp_truth = by_theme[t] - by_group[(t, g)]
        sub_recs = recommend_substitutes(sub_space, q, k)
        comp_recs = recommend_complements(comp_space, q, k)
        rand_recs = random_recommender(embedded, q, k, config.seed)

        s = hits_at_k(sub_recs, sub_truth, k)
        c = hits_at_k(comp_recs, comp_truth, k)
        counts["sub_hits"] += s
        counts["comp_hits"] += c
        # The complement space probed against substitute truth: the ranking
        # is the same top-k list, only the truth set differs.
        counts["sub_hits_comp_space"] += hits_at_k(comp_recs, sub_truth, k)
        counts["rand_sub_hits"] += hits_at_k(rand_recs, sub_truth, k)
        counts["rand_comp_hits"] += hits_at_k(rand_recs, comp_truth, k)
        counts["sub_first"] += first_hit(sub_recs, sub_truth)
        counts["comp_first"] += first_hit(comp_recs, comp_truth)
        counts["rand_sub_first"] += first_hit(rand_recs, sub_truth)
        counts["rand_comp_first"] += first_hit(rand_recs, comp_truth)
        e = random_hit_expectation(n, len(sub_truth & embedded_set), k)
        exp_sub += e
        var_sub += e * (1.0 - e)
        e = random_hit_expectation(n, len(comp_truth & embedded_set), k)
        exp_comp += e
        var_comp += e * (1.0 - e)
        order_count("substitute", sub_recs, sub_truth)
        order_count("complement", comp_recs, comp_truth)
        sub_acc = cat_sub.setdefault(t, [0, 0])
        sub_acc[0] += s
        sub_acc[1] += 1
        comp_acc = cat_comp.setdefault(t, [0, 0])
        comp_acc[0] += c
        comp_acc[1] += 1

    nq = len(queries)

    def per_category(cat: dict) -> list:
        return [
            {"category": f"theme-{t}", "accuracy": hits / m, "answers": m}
            for t, (hits, m) in sorted(cat.items())
        ]

    sub_categories = per_category(cat_sub)
    comp_categories = per_category(cat_comp)
    report = EvalReport(
        config=config.to_dict(),
        market=market_info or {"products_in_truth": len(membership)},
        n_embedded=n,
        n_queries=nq,
        substitutes={
            "hits_at_k": counts["sub_hits"] / nq,
            "first_hit_rate": counts["sub_first"] / nq,
            "weighted_accuracy": weighted_accuracy(
                [(c["accuracy"], c["answers"]) for c in sub_categories]
            ),
            "answers_total": nq,
            "per_category": sub_categories,
            "hits_at_k_in_complement_space": counts["sub_hits_comp_space"] / nq,
        },
        complements={
            "hits_at_k": counts["comp_hits"] / nq,
            "first_hit_rate": counts["comp_first"] / nq,
            "weighted_accuracy": weighted_accuracy(
                [(c["accuracy"], c["answers"]) for c in comp_categories]
            ),
            "answers_total": nq,
            "per_category": comp_categories,
        },
        random_baseline={
            "substitute_hits_at_k": counts["rand_sub_hits"] / nq,
            "substitute_expectation": exp_sub / nq,
            "substitute_sigma": math.sqrt(var_sub) / nq,
            "substitute_first_hit_rate": counts["rand_sub_first"] / nq,
            "complement_hits_at_k": counts["rand_comp_hits"] / nq,
            "complement_expectation": exp_comp / nq,
            "complement_sigma": math.sqrt(var_comp) / nq,
            "complement_first_hit_rate": counts["rand_comp_first"] / nq,
        },
        order_agreement=order,
    )
    report.validate()
    return report
