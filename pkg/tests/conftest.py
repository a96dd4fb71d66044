"""Shared fixtures: example core graphs, seeded generators and small guards."""

import numpy as np
import pytest

from ramlab.config import GuardConfig
from ramlab.core_graphs import CoreGraph, from_words, word_graph
from ramlab.free_words import parse_word


@pytest.fixture
def two_gen_words():
    """Generators x1 x2 x1^-3 and x1^2 x2 x1^-2 of the 4-vertex example subgroup."""
    return [parse_word("abAAA", 2), parse_word("aabAA", 2)]


@pytest.fixture
def two_gen_graph(two_gen_words) -> CoreGraph:
    return from_words(2, two_gen_words)


@pytest.fixture
def square_graph() -> CoreGraph:
    """Core graph of <x1^2> (two vertices, two 1-edges)."""
    return word_graph(parse_word("aa", 1))


@pytest.fixture
def loop_graph() -> CoreGraph:
    return CoreGraph.bouquet(1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def small_guards() -> GuardConfig:
    return GuardConfig(
        enumeration_limit=1000,
        quotient_vertex_limit=6,
        exact_tuple_limit=24 ** 2,
        exact_n_limit=4,
        subset_vertex_limit=10,
        mixing_vertex_limit=6,
        dense_dimension_limit=200,
    )
