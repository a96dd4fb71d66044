"""Acceptance-scale checks over seeded samples and exhaustive small cases (all slow)."""

import math
from fractions import Fraction

import numpy as np
import pytest

from ramlab.core_graphs import CoreGraph, word_graph
from ramlab.expansion_metrics import cheeger_and_conductance, inequality_suite
from ramlab.free_words import enumerate_words, parse_word, random_word
from ramlab.growth_stats import classify_words, lemma_sweep
from ramlab.moebius import asymptotic_check, phi_exact, verify_r_support
from ramlab.primitivity import primitivity_rank
from ramlab.random_covers import (
    BaseGraph,
    MultiGraph,
    make_rng,
    sample_cover,
    sample_matching_model,
    sample_permutation_model,
    trial_seed,
)
from ramlab.spectral import (
    adjacency_spectrum,
    base_spectrum,
    closed_path_count,
    new_spectrum,
    rho_universal_cover,
    trace_power,
)

pytestmark = pytest.mark.slow

MASTER_SEED = 20240611
RAMANUJAN_4 = 2 * math.sqrt(3)


def test_permutation_model_is_near_ramanujan():
    for i in range(20):
        cover = sample_permutation_model(1000, 4, make_rng(trial_seed(MASTER_SEED, i)))
        lam = new_spectrum(cover).lambda_A_new
        assert RAMANUJAN_4 - 0.5 < lam < RAMANUJAN_4 + 1


def test_bipartite_covers_are_near_ramanujan():
    base = BaseGraph.dipole(4)
    for i in range(10):
        cover = sample_cover(base, 500, make_rng(trial_seed(MASTER_SEED + 1, i)))
        assert new_spectrum(cover).lambda_A_new < RAMANUJAN_4 + 1


def test_exact_fixed_point_laws():
    loop, square = CoreGraph.bouquet(1), word_graph(parse_word("aa", 1))
    for n in range(2, 6):
        assert phi_exact(loop, loop, n) == 1
        assert phi_exact(square, loop, n) == 2
        assert phi_exact(CoreGraph.trivial(1), loop, n) == n


def test_asymptotic_bound_for_short_words():
    for t in (1, 2):
        for w in enumerate_words(2, t, "reduced"):
            assert asymptotic_check(w, [5]).passed, str(w)
    for t in (3, 4):
        for w in enumerate_words(2, t, "reduced"):
            report = asymptotic_check(w, [17, 26], trials=2000, seed=t)
            assert report.passed, str(w)


@pytest.mark.parametrize("text", ["aa", "aabb", "abAB"])
def test_r_support_on_algebraic_extensions(text):
    report = verify_r_support(parse_word(text), [3, 4])
    assert report.passed
    assert report.algebraic[0]
    for n in (3, 4):
        assert all(isinstance(v, Fraction) for v in report.table.C[n].values())


def test_primitivity_rank_oracle():
    for p in range(2, 6):
        assert primitivity_rank(parse_word("a" * p, 1)).pi == 1
    assert primitivity_rank(parse_word("aabb")).pi == 2
    assert primitivity_rank(parse_word("abAB")).pi == 2
    assert primitivity_rank(parse_word("aabbcc")).pi == 3
    assert primitivity_rank(parse_word("1", 2)).pi == 0


def test_conjugates_of_a_generator_are_primitive():
    rng = np.random.default_rng(MASTER_SEED)
    x1 = parse_word("a", 2)
    for _ in range(50):
        g = random_word(2, int(rng.integers(0, 4)), rng)
        w = g * x1 * g.inverse()
        assert math.isinf(primitivity_rank(w).pi), str(w)


def test_raw_histograms_sum_to_all_words():
    for t in range(1, 9):
        assert classify_words(2, t, "raw").total == 4 ** t


def test_edge_twice_sweep_to_length_eight():
    report = lemma_sweep(2, 8)
    assert report.passed, report.violations


def test_trace_identity_on_random_multigraphs():
    rng = make_rng(MASTER_SEED)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        d = int(rng.choice([2, 4])) if n % 2 else int(rng.integers(1, 5))
        g = sample_matching_model(n, d, rng)
        for t in range(1, 7):
            assert trace_power(g, t) == closed_path_count(g, t)


def test_new_spectrum_completes_the_base_on_random_covers():
    rng = make_rng(MASTER_SEED + 2)
    bases = [BaseGraph.figure_eight(), BaseGraph.barbell(), BaseGraph.theta(), BaseGraph.dipole(4)]
    for i in range(50):
        base = bases[i % len(bases)]
        cover = sample_cover(base, int(rng.integers(2, 31)), rng)
        report = new_spectrum(cover)
        combined = np.sort(np.concatenate([report.new_eigenvalues, base_spectrum(cover)]))
        assert np.allclose(combined, np.sort(adjacency_spectrum(cover)), atol=1e-7)
        d = int(base.degrees()[0])
        assert report.lambda_A_new == pytest.approx(d * report.lambda_M_new, abs=1e-9)


def test_rho_of_the_figure_eight():
    estimate, exact = rho_universal_cover(BaseGraph.bouquet(2), depth=100)
    assert abs(estimate - RAMANUJAN_4) < 5e-3
    assert exact == pytest.approx(RAMANUJAN_4)


def test_exact_cheeger_values():
    k4 = MultiGraph(np.ones((4, 4), dtype=np.int64) - np.eye(4, dtype=np.int64))
    c6 = MultiGraph.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
    assert cheeger_and_conductance(k4)[0] == 2
    assert cheeger_and_conductance(c6)[0] == Fraction(2, 3)


def test_inequality_suite_on_random_graphs():
    rng = make_rng(MASTER_SEED + 3)
    checked = 0
    while checked < 50:
        n = int(rng.integers(4, 11))
        d = int(rng.choice([2, 4, 6]))
        g = sample_permutation_model(n, d, rng).to_multigraph()
        if not g.is_connected():
            continue
        report = inequality_suite(g)
        assert report.passed, report.to_dict()
        assert report.mixing.violations == 0
        checked += 1
