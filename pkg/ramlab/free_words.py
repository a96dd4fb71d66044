"""
ramlab - Free words

Letters, words over the basis x1..xk of the free group F_k, free reduction,
enumeration, and evaluation of words on tuples of permutations.

Conventions:
    - A letter is stored as a signed integer code: +j for x_j, -j for x_j^{-1}.
    - Text form uses `a`..`z` for generators and `A`..`Z` for their inverses;
      the identity is written as the empty string or `1`.
    - Permutations are 0-based arrays of images. Words are evaluated LEFT TO RIGHT:
      the permutation of x1*x2 first applies sigma_1, then sigma_2.
    - Enumeration order is lexicographic over the letter order x1, x1^-1, x2, x2^-1, ...
"""

import logging
import itertools
import string
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ramlab.config import GuardConfig, resolve_guards
from ramlab.errors import InvalidInputError

logger = logging.getLogger(__name__)

MAX_ALPHABET = 26


def letter_order(k: int) -> List[int]:
    """Letter codes in enumeration order: [1, -1, 2, -2, ..., k, -k]."""
    return [code for j in range(1, k + 1) for code in (j, -j)]


# =============================================================================
# LETTERS AND WORDS
# =============================================================================

@dataclass(frozen=True)
class Letter:
    """A basis letter x_index^sign."""
    index: int
    sign: int = 1

    def __post_init__(self):
        if self.index < 1:
            raise InvalidInputError(f"letter index must be >= 1, got {self.index}")
        if self.sign not in (1, -1):
            raise InvalidInputError(f"letter sign must be +1 or -1, got {self.sign}")

    @property
    def code(self) -> int:
        return self.index * self.sign

    @classmethod
    def from_code(cls, code: int) -> "Letter":
        if code == 0:
            raise InvalidInputError("0 is not a letter code")
        return cls(abs(code), 1 if code > 0 else -1)

    def inverse(self) -> "Letter":
        return Letter(self.index, -self.sign)

    def __str__(self) -> str:
        if self.index > MAX_ALPHABET:
            return f"x{self.index}" if self.sign > 0 else f"X{self.index}"
        ch = string.ascii_lowercase[self.index - 1]
        return ch if self.sign > 0 else ch.upper()


@dataclass(frozen=True, eq=False)
class Word:
    """
    A (possibly unreduced) word in the letters of F_k.

    Attributes:
        codes: Signed letter codes, see module docstring
        k: Alphabet size
    """
    codes: Tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"alphabet size must be >= 1, got {self.k}")
        for code in self.codes:
            if code == 0 or abs(code) > self.k:
                raise InvalidInputError(f"letter code {code} outside alphabet of size {self.k}")

    @classmethod
    def from_letters(cls, letters: Sequence[Letter], k: int) -> "Word":
        return cls(tuple(letter.code for letter in letters), k)

    @property
    def letters(self) -> List[Letter]:
        return [Letter.from_code(c) for c in self.codes]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.codes == other.codes and self.k == other.k

    def __hash__(self) -> int:
        return hash((self.codes, self.k))

    def __len__(self) -> int:
        return len(self.codes)

    def __str__(self) -> str:
        return to_text(self)

    @property
    def is_identity(self) -> bool:
        return not self.codes

    @property
    def is_reduced(self) -> bool:
        return all(a != -b for a, b in zip(self.codes, self.codes[1:]))

    @property
    def is_cyclically_reduced(self) -> bool:
        return self.is_reduced and (len(self.codes) < 2 or self.codes[0] != -self.codes[-1])

    def letters_used(self) -> List[int]:
        """Sorted generator indices that occur in the word."""
        return sorted({abs(c) for c in self.codes})

    def inverse(self) -> "Word":
        return type(self)(tuple(-c for c in reversed(self.codes)), self.k)

    def concat(self, other: "Word") -> "Word":
        """Concatenation without reduction."""
        return Word(self.codes + other.codes, max(self.k, other.k))

    def with_alphabet(self, k: int) -> "Word":
        """The same letters read in F_k."""
        return type(self)(self.codes, k)

    def cyclic_reduction(self) -> "ReducedWord":
        """The cyclically reduced core of the reduced form (a conjugate)."""
        codes = reduce(self).codes
        lo, hi = 0, len(codes)
        while hi - lo >= 2 and codes[lo] == -codes[hi - 1]:
            lo += 1
            hi -= 1
        return ReducedWord(codes[lo:hi], self.k)


class ReducedWord(Word):
    """A freely reduced word; the empty word is the identity."""

    def __post_init__(self):
        super().__post_init__()
        if not self.is_reduced:
            raise InvalidInputError(f"word {to_text(self)} is not reduced")

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        return reduce(self.concat(other))


RawWord = Word


def identity_word(k: int) -> ReducedWord:
    return ReducedWord((), k)


def reduce(raw: Word) -> ReducedWord:
    """Free reduction: delete x x^-1 and x^-1 x subwords until none remain."""
    stack: List[int] = []
    for code in raw.codes:
        if stack and stack[-1] == -code:
            stack.pop()
        else:
            stack.append(code)
    return ReducedWord(tuple(stack), raw.k)


# =============================================================================
# TEXT FORMAT
# =============================================================================

def parse_word(text: str, k: Optional[int] = None, reduced: bool = True) -> Word:
    """
    Parse `aabB`-style text.

    The alphabet size is inferred as the largest letter used (at least 1)
    unless `k` is given. With reduced=True the result is freely reduced.
    """
    text = text.strip()
    if text in ("", "1"):
        return identity_word(k if k is not None else 1)
    parsed = []
    for ch in text:
        if ch in string.ascii_lowercase:
            parsed.append(string.ascii_lowercase.index(ch) + 1)
        elif ch in string.ascii_uppercase:
            parsed.append(-(string.ascii_uppercase.index(ch) + 1))
        else:
            raise InvalidInputError(f"invalid letter {ch!r} in word {text!r}")
    codes = tuple(parsed)
    needed = max((abs(c) for c in codes), default=1)
    if k is None:
        k = needed
    elif needed > k:
        raise InvalidInputError(f"word {text!r} uses letter {needed} but k={k}")
    word = Word(codes, k)
    return reduce(word) if reduced else word


def to_text(word: Word) -> str:
    return "".join(str(Letter.from_code(c)) for c in word.codes)


# =============================================================================
# ENUMERATION AND SAMPLING
# =============================================================================

def enumerate_words(
    k: int, t: int, mode: str = "raw", guards: Optional[GuardConfig] = None
) -> Iterator[Word]:
    """
    Yield every word of length t over F_k.

    mode="raw" yields (2k)^t words, mode="reduced" yields 2k(2k-1)^(t-1)
    reduced words (1 word for t=0). Order is lexicographic over letter_order(k).
    """
    if k < 1 or t < 0:
        raise InvalidInputError(f"need k >= 1 and t >= 0, got k={k}, t={t}")
    if mode not in ("raw", "reduced"):
        raise InvalidInputError(f"mode must be 'raw' or 'reduced', got {mode!r}")
    resolve_guards(guards).check("enumeration_limit", (2 * k) ** t, f"words k={k} t={t}")

    order = letter_order(k)
    if mode == "raw":
        for codes in itertools.product(order, repeat=t):
            yield Word(codes, k)
        return

    def extend(prefix: List[int]) -> Iterator[ReducedWord]:
        if len(prefix) == t:
            yield ReducedWord(tuple(prefix), k)
            return
        for code in order:
            if prefix and prefix[-1] == -code:
                continue
            prefix.append(code)
            yield from extend(prefix)
            prefix.pop()

    yield from extend([])


def count_words(k: int, t: int, mode: str = "raw") -> int:
    if mode == "raw":
        return (2 * k) ** t
    return 1 if t == 0 else 2 * k * (2 * k - 1) ** (t - 1)


def random_word(k: int, t: int, rng: np.random.Generator, reduced: bool = True) -> Word:
    """Uniform random word of length t (uniform among reduced words if reduced=True)."""
    order = letter_order(k)
    codes: List[int] = []
    for _ in range(t):
        while True:
            code = order[int(rng.integers(2 * k))]
            if not (reduced and codes and codes[-1] == -code):
                break
        codes.append(code)
    return ReducedWord(tuple(codes), k) if reduced else Word(tuple(codes), k)


# =============================================================================
# PERMUTATIONS
# =============================================================================

@dataclass(frozen=True)
class Permutation:
    """
    A bijection of {0..n-1} given by its images.

    Cycle text (`from_cycles`, `cycles`) is 1-based.
    """
    images: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise InvalidInputError(f"images {self.images} are not a permutation")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_array(cls, array: Sequence[int]) -> "Permutation":
        return cls(tuple(int(x) for x in array))

    @classmethod
    def from_cycles(cls, n: int, cycles: Sequence[Sequence[int]]) -> "Permutation":
        """Build from 1-based cycles, e.g. from_cycles(3, [(1, 2, 3)])."""
        images = list(range(n))
        for cycle in cycles:
            for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
                images[a - 1] = b - 1
        return cls(tuple(images))

    @property
    def n(self) -> int:
        return len(self.images)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.images, dtype=np.int64)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def inverse(self) -> "Permutation":
        return Permutation.from_array(np.argsort(self.array))

    def then(self, other: "Permutation") -> "Permutation":
        """Left-to-right product: apply self, then other."""
        return Permutation.from_array(other.array[self.array])

    def cycles(self) -> List[Tuple[int, ...]]:
        """1-based cycles including fixed points, each starting at its least element."""
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cycle = []
            i = start
            while not seen[i]:
                seen[i] = True
                cycle.append(i + 1)
                i = self.images[i]
            out.append(tuple(cycle))
        return out


def compose(perms: Sequence[Permutation]) -> Permutation:
    """Left-to-right product of a sequence of permutations of equal degree."""
    if not perms:
        raise InvalidInputError("cannot compose an empty sequence")
    result = perms[0]
    for p in perms[1:]:
        if p.n != result.n:
            raise InvalidInputError("permutations of different degree")
        result = result.then(p)
    return result


def evaluate_codes(codes: Sequence[int], sigmas: Sequence[np.ndarray]) -> np.ndarray:
    """
    Array-level evaluation of a word on 0-based image arrays.

    `sigmas` may carry leading batch axes: shape (..., n). Inverse letters
    use the argsort inverse along the last axis.
    """
    n = sigmas[0].shape[-1]
    batch = sigmas[0].shape[:-1]
    inverses: dict = {}
    cur = np.broadcast_to(np.arange(n), batch + (n,)).copy()
    for code in codes:
        j = abs(code) - 1
        if code > 0:
            perm = sigmas[j]
        else:
            if j not in inverses:
                inverses[j] = np.argsort(sigmas[j], axis=-1)
            perm = inverses[j]
        cur = np.take_along_axis(perm, cur, axis=-1)
    return cur


def evaluate_word(w: Word, sigmas: Sequence[Permutation]) -> Permutation:
    """w(sigma_1, ..., sigma_k) under left-to-right composition."""
    if len(sigmas) != w.k:
        raise InvalidInputError(f"word over k={w.k} needs {w.k} permutations, got {len(sigmas)}")
    degrees = {p.n for p in sigmas}
    if len(degrees) != 1:
        raise InvalidInputError(f"permutations have mismatched degrees {sorted(degrees)}")
    arrays = [p.array for p in sigmas]
    return Permutation.from_array(evaluate_codes(w.codes, arrays))


def fixed_points(p: Permutation) -> int:
    """Number of i with p(i) = i."""
    return int(np.count_nonzero(p.array == np.arange(p.n)))
