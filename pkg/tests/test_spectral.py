"""Spectra, new eigenvalues of covers, tree spectral radius and walk counts."""

import math

import numpy as np
import pytest

from ramlab.config import GuardConfig
from ramlab.errors import GuardExceededError, InvalidInputError
from ramlab.random_covers import BaseGraph, CoverGraph, MultiGraph, make_rng, sample_cover
from ramlab.spectral import (
    adjacency_spectrum,
    base_spectrum,
    closed_path_count,
    cogrowth_g,
    fiber_zero_basis,
    helmert_basis,
    lambda_nontrivial,
    laplacian_spectrum,
    markov_spectrum,
    mu_nontrivial,
    new_spectrum,
    rho_universal_cover,
    spectral_power_sum,
    symmetric_spectrum,
    trace_power,
    tree_closed_walks,
)


@pytest.fixture
def cycle4() -> MultiGraph:
    return MultiGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


# =============================================================================
# SPECTRA
# =============================================================================

def test_regular_spectrum_is_descending_and_starts_at_d(rng):
    cover = sample_cover(BaseGraph.bouquet(2), 10, rng)
    eigs = adjacency_spectrum(cover)
    assert eigs[0] == pytest.approx(4)
    assert np.all(np.diff(eigs) <= 1e-9)


def test_cycle_spectrum(cycle4):
    assert adjacency_spectrum(cycle4) == pytest.approx([2, 0, 0, -2], abs=1e-9)
    assert lambda_nontrivial(cycle4) == pytest.approx(2)
    assert mu_nontrivial(cycle4) == pytest.approx(1)
    assert laplacian_spectrum(cycle4) == pytest.approx([4, 2, 2, 0], abs=1e-9)


def _complete(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=np.int64) - np.eye(n, dtype=np.int64)


def test_complete_graph_spectrum():
    k4 = _complete(4)
    assert symmetric_spectrum(k4) == pytest.approx([3, -1, -1, -1], abs=1e-9)
    assert lambda_nontrivial(MultiGraph(k4)) == pytest.approx(1)


def test_disconnected_graph_has_trivial_lambda():
    two_k4 = np.zeros((8, 8), dtype=np.int64)
    two_k4[:4, :4] = _complete(4)
    two_k4[4:, 4:] = _complete(4)
    assert lambda_nontrivial(MultiGraph(two_k4)) == pytest.approx(3)


@pytest.mark.parametrize("n", [3, 5, 6, 7, 10])
def test_cycle_spectra_are_cosines(n):
    cycle = MultiGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    expected = sorted((2 * math.cos(2 * math.pi * j / n) for j in range(n)), reverse=True)
    assert adjacency_spectrum(cycle) == pytest.approx(expected, abs=1e-9)


def test_markov_spectrum_lies_in_unit_interval(rng):
    cover = sample_cover(BaseGraph.barbell(), 8, rng)
    eigs = markov_spectrum(cover)
    assert eigs[0] == pytest.approx(1)
    assert eigs[-1] >= -1 - 1e-9


def test_single_vertex_has_no_nontrivial_eigenvalue():
    assert lambda_nontrivial(MultiGraph(np.zeros((1, 1), dtype=np.int64))) is None


def test_lambda_nontrivial_requires_regularity():
    path = MultiGraph.from_edges(3, [(0, 1), (1, 2)])
    with pytest.raises(InvalidInputError):
        lambda_nontrivial(path)


def test_markov_needs_positive_degrees():
    with pytest.raises(InvalidInputError):
        markov_spectrum(MultiGraph(np.zeros((2, 2), dtype=np.int64)))


def test_symmetric_spectrum_validation():
    with pytest.raises(InvalidInputError):
        symmetric_spectrum(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        symmetric_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(GuardExceededError) as exc:
        symmetric_spectrum(np.eye(5), GuardConfig(dense_dimension_limit=4))
    assert exc.value.guard == "dense_dimension_limit"


# =============================================================================
# NEW EIGENVALUES
# =============================================================================

def test_helmert_basis_is_orthonormal_and_sums_to_zero():
    H = helmert_basis(5)
    assert H.T @ H == pytest.approx(np.eye(4))
    assert H.sum(axis=0) == pytest.approx(np.zeros(4))
    B = fiber_zero_basis(2, 3)
    assert B.shape == (6, 4)


@pytest.mark.parametrize("base", [BaseGraph.bouquet(2), BaseGraph.barbell(), BaseGraph.theta()])
def test_new_spectrum_completes_base_spectrum(base, rng):
    cover = sample_cover(base, 6, rng)
    report = new_spectrum(cover)
    combined = np.sort(np.concatenate([report.new_eigenvalues, base_spectrum(cover)]))
    assert combined == pytest.approx(np.sort(report.eigenvalues), abs=1e-8)
    assert report.lambda_A_new == pytest.approx(np.abs(report.new_eigenvalues).max())


def test_markov_new_eigenvalues_scale_for_regular_covers(rng):
    cover = sample_cover(BaseGraph.bouquet(2), 8, rng)
    adjacency = new_spectrum(cover, "adjacency")
    markov = new_spectrum(cover, "markov")
    assert markov.lambda_M_new == pytest.approx(adjacency.lambda_A_new / 4)
    assert markov.new_eigenvalues == pytest.approx(adjacency.new_eigenvalues / 4)


def test_one_sheet_cover_has_no_new_eigenvalues():
    cover = CoverGraph(BaseGraph.barbell(), 1, (np.arange(1),) * 3)
    report = new_spectrum(cover)
    assert report.new_eigenvalues is None
    assert report.lambda_A_new is None
    assert report.to_dict()["new_eigenvalues"] is None


def test_irregular_cover_has_no_lambda_nontrivial(rng):
    base = BaseGraph(2, ((0, 0), (0, 1)))
    report = new_spectrum(sample_cover(base, 4, rng))
    assert report.lambda_nontrivial is None
    assert report.lambda_A_new is not None


def test_new_spectrum_rejects_unknown_operator(rng):
    with pytest.raises(InvalidInputError):
        new_spectrum(sample_cover(BaseGraph.bouquet(1), 3, rng), "laplacian")


def test_new_spectrum_checks_guard_before_building_adjacency(rng, mocker):
    adjacency = mocker.spy(CoverGraph, "adjacency")
    cover = sample_cover(BaseGraph.theta(), 30, rng)
    with pytest.raises(GuardExceededError) as exc:
        new_spectrum(cover, guards=GuardConfig(dense_dimension_limit=59))
    assert exc.value.requested == 60
    assert adjacency.call_count == 0


# =============================================================================
# UNIVERSAL COVER
# =============================================================================

@pytest.mark.parametrize("base", [BaseGraph.bouquet(1), BaseGraph.dipole(2)])
def test_rho_of_a_cycle_base_is_two(base):
    estimate, exact = rho_universal_cover(base)
    assert exact == 2
    assert estimate == pytest.approx(2, abs=1e-3)


def test_rho_of_regular_base_matches_closed_form():
    estimate, exact = rho_universal_cover(BaseGraph.bouquet(2))
    assert exact == pytest.approx(2 * math.sqrt(3))
    assert estimate <= exact + 1e-9
    assert estimate == pytest.approx(exact, abs=0.01)


def test_rho_estimate_grows_with_depth():
    base = BaseGraph.barbell()
    shallow, _ = rho_universal_cover(base, depth=5)
    deep, exact = rho_universal_cover(base, depth=60)
    assert shallow <= deep + 1e-9
    assert deep == pytest.approx(exact, abs=0.02)


def test_rho_markov_operator():
    estimate, exact = rho_universal_cover(BaseGraph.theta(), operator="markov")
    assert exact == pytest.approx(2 * math.sqrt(2) / 3)
    assert estimate == pytest.approx(exact, abs=0.01)


def test_rho_of_irregular_base_has_no_closed_form():
    base = BaseGraph(2, ((0, 0), (0, 1)))
    estimate, exact = rho_universal_cover(base, depth=40)
    assert exact is None
    assert 2 < estimate < 3


def test_rho_validation():
    with pytest.raises(InvalidInputError):
        rho_universal_cover(BaseGraph.bouquet(2), depth=0)
    with pytest.raises(InvalidInputError):
        rho_universal_cover(BaseGraph.bouquet(2), operator="laplacian")


# =============================================================================
# WALK COUNTS
# =============================================================================

@pytest.mark.parametrize("d, t, expected", [(4, 0, 1), (4, 2, 4), (4, 3, 0), (4, 4, 28), (3, 4, 15)])
def test_tree_closed_walks(d, t, expected):
    assert tree_closed_walks(d, t) == expected


def test_cogrowth():
    assert cogrowth_g(1, 4) == pytest.approx(2 * math.sqrt(3))
    assert cogrowth_g(3, 4) == pytest.approx(4)
    with pytest.raises(InvalidInputError):
        cogrowth_g(0.5, 4)
    with pytest.raises(InvalidInputError):
        cogrowth_g(1, 1)


def test_trace_power_matches_enumeration():
    g = sample_cover(BaseGraph.bouquet(2), 5, make_rng(17)).to_multigraph()
    for t in range(1, 5):
        assert trace_power(g, t) == closed_path_count(g, t)
        assert spectral_power_sum(adjacency_spectrum(g), t) == pytest.approx(trace_power(g, t))


def test_trace_power_counts_loops_both_ways():
    loop = MultiGraph(np.array([[2]]))
    assert trace_power(loop, 3) == 8
    assert closed_path_count(loop, 3) == 8


def test_closed_path_guard():
    g = MultiGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    with pytest.raises(GuardExceededError):
        closed_path_count(g, 10, GuardConfig(enumeration_limit=100))
