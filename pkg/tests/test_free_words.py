"""Words, reduction, enumeration and left-to-right evaluation."""

import numpy as np
import pytest

from ramlab.config import GuardConfig
from ramlab.errors import GuardExceededError, InvalidInputError
from ramlab.free_words import (
    Letter,
    Permutation,
    ReducedWord,
    Word,
    compose,
    count_words,
    enumerate_words,
    evaluate_word,
    fixed_points,
    identity_word,
    letter_order,
    parse_word,
    random_word,
    reduce,
    to_text,
)


def _random_perms(rng, k, n):
    return [Permutation.from_array(rng.permutation(n)) for _ in range(k)]


def test_reduce_full_cancellation():
    assert reduce(parse_word("aA", reduced=False)).is_identity


def test_reduce_inner_cancellation():
    assert to_text(reduce(parse_word("abBa", reduced=False))) == "aa"


def test_reduce_is_idempotent_and_keeps_parity(rng):
    for _ in range(1000):
        w = random_word(3, int(rng.integers(0, 12)), rng, reduced=False)
        r = reduce(w)
        assert reduce(r) == r
        assert r.is_reduced
        assert (len(w) - len(r)) % 2 == 0


def test_letter_codes_and_text():
    assert Letter(2, -1).code == -2
    assert Letter.from_code(-2).inverse() == Letter(2, 1)
    assert str(Letter(1, -1)) == "A"
    with pytest.raises(InvalidInputError):
        Letter(0)


def test_parse_word_infers_alphabet():
    w = parse_word("aabb")
    assert w.k == 2
    assert w.codes == (1, 1, 2, 2)
    assert parse_word("1").is_identity
    assert parse_word("", k=3).k == 3


def test_identity_text_parses_to_the_identity_word():
    assert parse_word("1", 3) == identity_word(3)
    assert isinstance(parse_word("1", reduced=False), ReducedWord)
    assert to_text(identity_word(2)) == ""
    with pytest.raises(InvalidInputError):
        identity_word(0)


def test_parse_word_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        parse_word("ab?")
    with pytest.raises(InvalidInputError):
        parse_word("abc", k=2)


def test_reduced_word_rejects_cancelling_pairs():
    with pytest.raises(InvalidInputError):
        ReducedWord((1, -1), 1)


def test_word_and_reduced_word_compare_equal():
    assert Word((1, 2), 2) == ReducedWord((1, 2), 2)
    assert hash(Word((1, 2), 2)) == hash(ReducedWord((1, 2), 2))


def test_inverse_and_cyclic_reduction():
    w = parse_word("abA")
    assert to_text(w.inverse()) == "aBA"
    assert to_text(w.cyclic_reduction()) == "b"
    assert not w.is_cyclically_reduced
    assert parse_word("ab").is_cyclically_reduced


def test_reduced_product():
    assert to_text(parse_word("ab") * parse_word("Ba")) == "aa"


def test_evaluate_single_letter(rng):
    sigma = _random_perms(rng, 1, 6)
    assert evaluate_word(parse_word("a"), sigma) == sigma[0]


def test_evaluate_cancellation_gives_identity(rng):
    sigma = _random_perms(rng, 1, 6)
    w = parse_word("aA", reduced=False)
    assert evaluate_word(w, sigma) == Permutation.identity(6)


def test_evaluate_identity_factor():
    cycle = Permutation.from_cycles(3, [(1, 2, 3)])
    result = evaluate_word(parse_word("ab"), [cycle, Permutation.identity(3)])
    assert result == cycle


def test_evaluation_is_left_to_right():
    s1 = Permutation.from_cycles(3, [(1, 2)])
    s2 = Permutation.from_cycles(3, [(2, 3)])
    # apply s1 first: 1 -> 2 -> 3, 2 -> 1, 3 -> 2
    assert evaluate_word(parse_word("ab"), [s1, s2]).cycles() == [(1, 3, 2)]
    assert compose([s1, s2]) == evaluate_word(parse_word("ab"), [s1, s2])


def test_evaluation_invariant_under_reduction(rng):
    for _ in range(200):
        w = random_word(2, 8, rng, reduced=False)
        sigma = _random_perms(rng, 2, 5)
        assert evaluate_word(w, sigma) == evaluate_word(reduce(w), sigma)


def test_evaluate_rejects_mismatches():
    with pytest.raises(InvalidInputError):
        evaluate_word(parse_word("ab"), [Permutation.identity(3)])
    with pytest.raises(InvalidInputError):
        evaluate_word(parse_word("ab"), [Permutation.identity(3), Permutation.identity(4)])


@pytest.mark.parametrize(
    "perm, expected",
    [
        (Permutation.identity(5), 5),
        (Permutation.from_cycles(3, [(1, 2, 3)]), 0),
        (Permutation.from_cycles(4, [(1, 2)]), 2),
    ],
)
def test_fixed_points(perm, expected):
    assert fixed_points(perm) == expected


def test_permutation_inverse_and_cycles():
    p = Permutation.from_cycles(4, [(1, 3, 4)])
    assert p.then(p.inverse()) == Permutation.identity(4)
    assert p.cycles() == [(1, 3, 4), (2,)]
    with pytest.raises(InvalidInputError):
        Permutation((0, 0, 1))


def test_single_letter_fixed_point_mean_is_one(rng):
    samples = [fixed_points(Permutation.from_array(rng.permutation(10))) for _ in range(4000)]
    assert abs(np.mean(samples) - 1) < 0.1


@pytest.mark.parametrize(
    "k, t, mode, expected",
    [(2, 1, "raw", 4), (2, 2, "reduced", 12), (2, 3, "raw", 64), (3, 0, "reduced", 1)],
)
def test_enumeration_counts(k, t, mode, expected):
    words = list(enumerate_words(k, t, mode))
    assert len(words) == expected == count_words(k, t, mode)
    assert len(set(words)) == expected


def test_reduced_enumeration_is_reduced_and_ordered():
    words = list(enumerate_words(2, 3, "reduced"))
    assert all(w.is_reduced for w in words)
    assert words[0].codes == (1, 1, 1)
    assert letter_order(2) == [1, -1, 2, -2]


def test_enumeration_guard():
    with pytest.raises(GuardExceededError) as exc:
        list(enumerate_words(2, 6, guards=GuardConfig(enumeration_limit=1000)))
    assert exc.value.guard == "enumeration_limit"


def test_random_reduced_word_is_reduced(rng):
    for _ in range(100):
        assert random_word(2, 10, rng).is_reduced
