"""Rank histograms, closed-path classification, edge-twice counts and bound evaluators."""

import math

import pytest

from ramlab.config import GuardConfig
from ramlab.core_graphs import CoreGraph, path_edge_counts, word_graph
from ramlab.errors import GuardExceededError, InvalidInputError
from ramlab.free_words import Word, enumerate_words, parse_word
from ramlab.growth_stats import (
    RankHistogram,
    base_core_graph,
    bound_evaluator,
    class_key,
    classify_cycles,
    classify_words,
    closed_paths,
    general_bound_evaluator,
    growth_rate_limits,
    lemma_sweep,
    optimize_bound,
    optimize_general_bound,
    ratio_trend,
    trace_twice_count,
)
from ramlab.primitivity import primitivity_rank
from ramlab.random_covers import BaseGraph
from ramlab.spectral import trace_power, tree_closed_walks


# =============================================================================
# HISTOGRAMS
# =============================================================================

def test_reduced_length_two():
    hist = classify_words(2, 2, "reduced")
    assert hist.counts == {0: 0, 1: 4, 2: 0, math.inf: 8}
    assert hist.total == 12


def test_raw_words_reducing_to_identity():
    assert classify_words(2, 2, "raw").counts[0] == 4
    assert classify_words(2, 4, "raw").counts[0] == tree_closed_walks(4, 4) == 28


def test_histogram_rows_and_dict():
    hist = classify_words(2, 2, "reduced", with_crit=True)
    assert hist.to_rows() == [
        ["2", "0", "0", "0"],
        ["2", "1", "4", "4"],
        ["2", "2", "0", "0"],
        ["2", "inf", "8", "0"],
    ]
    data = hist.to_dict()
    assert data["counts"] == {"0": 0, "1": 4, "2": 0, "inf": 8}
    assert "morphism_failures" not in data


def test_crit_sums_cover_every_non_primitive_word():
    hist = classify_words(2, 4, "reduced", with_crit=True)
    for m in (1, 2):
        if hist.counts[m]:
            assert hist.crit_sums[m] >= hist.counts[m]
    assert hist.crit_sums[math.inf] == 0
    assert hist.total == 4 * 3 ** 3


def test_empty_histogram_has_every_bucket():
    hist = RankHistogram.empty(3, 2, "reduced", 2, with_crit=False)
    assert hist.buckets() == [0, 1, 2, math.inf]
    assert hist.to_rows()[0][3] == ""


def test_classify_rejects_unknown_mode():
    with pytest.raises(InvalidInputError):
        classify_words(2, 2, "cyclic")


def test_classify_respects_enumeration_guard():
    with pytest.raises(GuardExceededError):
        classify_words(2, 6, "raw", guards=GuardConfig(enumeration_limit=100))


def test_class_key_preserves_rank():
    for w in enumerate_words(2, 4, "reduced"):
        key = class_key(w)
        assert primitivity_rank(Word(key, 2)).pi == primitivity_rank(w).pi


def test_class_key_merges_conjugates_and_inverses():
    assert class_key(parse_word("aabb")) == class_key(parse_word("bbaa"))
    assert class_key(parse_word("aabb")) == class_key(parse_word("BBAA"))
    assert class_key(parse_word("abA")) == class_key(parse_word("b", 2))
    assert class_key(parse_word("1", 2)) == ()


# =============================================================================
# CLOSED PATHS
# =============================================================================

def test_cycles_in_bouquet_are_raw_words():
    base = BaseGraph.bouquet(2)
    for t in (2, 3, 4):
        assert classify_cycles(base, t).counts == classify_words(2, t, "raw").counts


def test_cycles_on_a_single_loop():
    hist = classify_cycles(BaseGraph.bouquet(1), 4)
    assert hist.counts[0] == math.comb(4, 2)
    assert hist.total == 16


def test_cycles_on_theta():
    base = BaseGraph.theta()
    hist = classify_cycles(base, 4, with_crit=True)
    assert hist.total == trace_power(base, 4) == 162
    assert set(hist.counts) <= {0, 1, 2, math.inf}
    assert hist.morphism_failures == 0
    assert hist.to_dict()["morphism_failures"] == 0


def test_closed_paths_are_closed():
    base = BaseGraph.barbell()
    paths = list(closed_paths(base, 3))
    assert len(paths) == trace_power(base, 3)
    assert all(base.is_closed_path(codes, start) for start, codes in paths)


def test_closed_paths_guard():
    with pytest.raises(GuardExceededError):
        list(closed_paths(BaseGraph.bouquet(2), 8, GuardConfig(enumeration_limit=1000)))


def test_base_core_graph_trims_hanging_edges():
    base = BaseGraph(3, ((0, 0), (0, 1), (1, 2)))
    g = base_core_graph(base, 0)
    assert g == CoreGraph.bouquet(3, [1])
    assert base_core_graph(BaseGraph.bouquet(2), 0) == CoreGraph.bouquet(2)


# =============================================================================
# EACH EDGE TWICE
# =============================================================================

def test_trace_twice_on_a_loop(loop_graph):
    assert trace_twice_count(loop_graph, 1) == 0
    assert trace_twice_count(loop_graph, 2) == 2
    assert trace_twice_count(loop_graph, 3) == 2


def test_trace_twice_on_square(square_graph):
    assert trace_twice_count(square_graph, 2) == 0
    assert trace_twice_count(square_graph, 4) == 2


def test_trace_twice_on_bouquet_matches_brute_force():
    top = CoreGraph.bouquet(2)
    brute = sum(
        all(c >= 2 for c in path_edge_counts(w, top)) for w in enumerate_words(2, 4, "reduced")
    )
    assert trace_twice_count(top, 4) == brute == 56


@pytest.mark.slow
def test_trace_twice_on_two_gen_graph_matches_brute_force(two_gen_graph):
    t = 10
    brute = 0
    for w in enumerate_words(2, t, "reduced", GuardConfig(enumeration_limit=4 * 3 ** 9)):
        end = two_gen_graph.read(w.codes)
        if end is None or end[0] != two_gen_graph.basepoint:
            continue
        brute += all(c >= 2 for c in path_edge_counts(w, two_gen_graph))
    assert trace_twice_count(two_gen_graph, t) == brute


def test_lemma_sweep_passes():
    report = lemma_sweep(2, 4)
    assert report.passed
    assert report.words == 4 + 12 + 36 + 108
    assert 0 < report.classes < report.words


def test_critical_paths_trace_edges_twice():
    for text in ("aabb", "abAB", "abab"):
        w = parse_word(text, 2)
        for gN in primitivity_rank(w).crit:
            assert all(c >= 2 for c in path_edge_counts(w, gN))
    assert trace_twice_count(word_graph(parse_word("aabb")), 8) >= 2


# =============================================================================
# GROWTH RATES
# =============================================================================

def test_growth_rate_limits():
    rates = growth_rate_limits(2)
    assert rates[0] == 0
    assert rates[1] == pytest.approx(math.sqrt(3))
    assert rates[2] == pytest.approx(3)
    assert math.inf not in rates
    rates = growth_rate_limits(3)
    assert rates[1] == pytest.approx(math.sqrt(5))
    assert rates[3] == pytest.approx(5)


def test_raw_growth_rates_apply_cogrowth():
    raw = growth_rate_limits(2, "raw")
    assert raw[0] == pytest.approx(2 * math.sqrt(3))
    assert raw[2] == pytest.approx(4)


def test_growth_rate_validation():
    with pytest.raises(InvalidInputError):
        growth_rate_limits(0)
    with pytest.raises(InvalidInputError):
        growth_rate_limits(2, "cycles")


def test_primitive_counts_grow():
    counts = [classify_words(3, t).counts[math.inf] for t in range(1, 5)]
    assert counts[:2] == [6, 24]
    assert all(a < b for a, b in zip(counts, counts[1:]))


def test_ratio_trend_rows():
    rows = ratio_trend(2, 5)
    assert len(rows) == 3 * 3
    top = [r for r in rows if r.m == 2 and r.ratio is not None]
    assert all(r.expected == pytest.approx(9) for r in top)
    zero = [r for r in rows if r.m == 0]
    assert all(r.ratio is None and r.relative_gap is None for r in zero)


@pytest.mark.slow
def test_ratio_trend_approaches_squared_rates():
    # lengths up to 9; the upper half compares t = 6, 7 against t + 2
    rows = ratio_trend(2, 9)
    upper = [r for r in rows if r.m in (1, 2) and r.t >= 6]
    assert len(upper) == 4
    for row in upper:
        assert abs(row.relative_gap) <= 0.25, (row.m, row.t, row.ratio)


# =============================================================================
# BOUNDS
# =============================================================================

@pytest.mark.parametrize(
    "d, c_star, bound",
    [
        (4, 1.075, 3.723),
        (6, 1.103, 4.933),
        (8, 1.109, 5.868),
        (10, 1.108, 6.646),
        (12, 1.104, 7.323),
        (14, 1.099, 7.928),
        (16, 1.095, 8.482),
        (18, 1.091, 8.994),
        (20, 1.087, 9.473),
    ],
)
def test_optimized_bounds(d, c_star, bound):
    c, value = optimize_bound(d)
    assert c == pytest.approx(c_star, abs=0.002)
    assert value == pytest.approx(bound, abs=0.002)


def test_d4_terms():
    spec = bound_evaluator(4, 1.0746)
    assert len(spec.terms) == 3
    assert spec.terms[1] == pytest.approx(2 * math.sqrt(3))
    assert spec.constant == pytest.approx(spec.bound - 2 * math.sqrt(3))


def test_large_degree_terms_stay_below_the_bound():
    spec = bound_evaluator(26, math.exp(0.08))
    assert len(spec.terms) == 14
    assert all(x < 10.835 for x in spec.terms)


def test_odd_degree_uses_next_even_degree():
    _, bound = optimize_bound(5)
    assert bound == pytest.approx(4.933, abs=0.002)
    spec = bound_evaluator(5, 1.1029)
    assert spec.evaluated_d == 6
    assert spec.constant == pytest.approx(0.933, abs=0.002)


def test_degree_three_is_capped_by_the_trivial_bound():
    _, bound = optimize_bound(3)
    assert bound == 3


def test_base_rank_extends_the_terms():
    plain = bound_evaluator(4, 1.2)
    extended = bound_evaluator(4, 1.2, base_rank=4)
    assert extended.terms[:3] == plain.terms
    assert extended.terms[3:] == pytest.approx((4 / 1.2 ** 2, 4 / 1.2 ** 3))
    assert extended.to_dict()["rank"] == 4


def test_bound_validation():
    with pytest.raises(InvalidInputError):
        bound_evaluator(2, 1.5)
    with pytest.raises(InvalidInputError):
        bound_evaluator(4, 1.0)
    with pytest.raises(InvalidInputError):
        general_bound_evaluator(0, 2.0, 1.5)
    with pytest.raises(InvalidInputError):
        general_bound_evaluator(2, 0.0, 1.5)


def test_general_bound_at_root_three():
    rho = 2.5
    spec = general_bound_evaluator(2, rho, math.sqrt(3))
    assert spec.bound == pytest.approx(math.sqrt(3) * rho)
    c, bound = optimize_general_bound(2, rho)
    assert c == pytest.approx(math.sqrt(3), abs=1e-6)
    assert bound == pytest.approx(math.sqrt(3) * rho, abs=1e-6)


def test_general_bound_rank_one_tends_to_rho():
    c, bound = optimize_general_bound(1, 2.0)
    assert c == pytest.approx(1, abs=1e-6)
    assert bound == pytest.approx(2.0, abs=1e-6)


def test_general_bound_is_weaker_than_regular_bound():
    for d in (4, 6, 8):
        _, regular = optimize_bound(d)
        _, general = optimize_general_bound(d // 2, 2 * math.sqrt(d - 1))
        assert general >= regular - 1e-9
