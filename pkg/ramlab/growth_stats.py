"""
ramlab - Growth statistics

Finite-length counts of words and closed paths by primitivity rank, the
"each edge twice" counts nu_t(J), and the evaluators of the final bound on
new eigenvalues (regular case and general base graph).
"""

import logging
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from ramlab.config import GuardConfig, resolve_guards
from ramlab.core_graphs import CoreGraph, LabeledGraph, core, morphism
from ramlab.errors import InvalidInputError
from ramlab.free_words import Word, enumerate_words, letter_order, reduce
from ramlab.primitivity import Rank, primitivity_rank, traces_edges_twice
from ramlab.random_covers import BaseGraph
from ramlab.spectral import cogrowth_unchecked, trace_power

logger = logging.getLogger(__name__)

MODES = ("raw", "reduced")
SEARCH_STEPS = 200


def _rank_text(m: Rank) -> str:
    return "inf" if math.isinf(m) else str(int(m))


def _bucket_order(max_rank: int) -> List[Rank]:
    return list(range(max_rank + 1)) + [math.inf]


# =============================================================================
# HISTOGRAMS
# =============================================================================

@dataclass
class RankHistogram:
    """
    Counts of words (or closed paths) of one length by primitivity rank.

    Attributes:
        t: Word length
        k: Alphabet size of the words
        mode: "raw", "reduced" or "cycles"
        counts: pi -> number of words; every bucket 0..max_rank and inf is present
        crit_sums: pi -> sum of |Crit(w)|, when requested
        morphism_failures: Critical subgroups that failed to map into the base graph
    """
    t: int
    k: int
    mode: str
    counts: Dict[Rank, int]
    crit_sums: Optional[Dict[Rank, int]] = None
    morphism_failures: int = 0

    @classmethod
    def empty(cls, t: int, k: int, mode: str, max_rank: int, with_crit: bool) -> "RankHistogram":
        buckets = _bucket_order(max_rank)
        return cls(
            t=t,
            k=k,
            mode=mode,
            counts={m: 0 for m in buckets},
            crit_sums={m: 0 for m in buckets} if with_crit else None,
        )

    def add(self, pi: Rank, crit_count: int, times: int = 1) -> None:
        self.counts[pi] = self.counts.get(pi, 0) + times
        if self.crit_sums is not None:
            self.crit_sums[pi] = self.crit_sums.get(pi, 0) + crit_count * times

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def buckets(self) -> List[Rank]:
        return sorted(self.counts, key=lambda m: (math.isinf(m), m))

    def to_rows(self) -> List[List[str]]:
        """CSV rows (t, m, count, crit_sum); crit_sum is empty when not collected."""
        rows = []
        for m in self.buckets():
            crit = "" if self.crit_sums is None else str(self.crit_sums.get(m, 0))
            rows.append([str(self.t), _rank_text(m), str(self.counts[m]), crit])
        return rows

    def to_dict(self) -> dict:
        data = {
            "t": self.t,
            "k": self.k,
            "mode": self.mode,
            "total": self.total,
            "counts": {_rank_text(m): self.counts[m] for m in self.buckets()},
        }
        if self.crit_sums is not None:
            data["crit_sums"] = {_rank_text(m): self.crit_sums.get(m, 0) for m in self.buckets()}
        if self.mode == "cycles":
            data["morphism_failures"] = self.morphism_failures
        return data


# =============================================================================
# CONJUGACY / AUTOMORPHISM CLASSES
# =============================================================================

def _relabel(codes: Sequence[int]) -> Tuple[int, ...]:
    """Rename letters by first appearance, each first appearance positive."""
    mapping: Dict[int, int] = {}
    out = []
    for code in codes:
        letter = abs(code)
        if letter not in mapping:
            mapping[letter] = (len(mapping) + 1) * (1 if code > 0 else -1)
        image = mapping[letter]
        out.append(image if code > 0 else -image)
    return tuple(out)


def class_key(w: Word) -> Tuple[int, ...]:
    """
    A representative of w up to conjugation, inversion and signed letter
    permutations, all of which preserve pi(w) and |Crit(w)|. The key is itself
    a cyclically reduced word over the same alphabet.
    """
    codes = reduce(w).cyclic_reduction().codes
    if not codes:
        return ()
    inverse = tuple(-c for c in reversed(codes))
    candidates = []
    for seq in (codes, inverse):
        for i in range(len(seq)):
            candidates.append(_relabel(seq[i:] + seq[:i]))
    return min(candidates)


@lru_cache(maxsize=65536)
def _class_rank(key: Tuple[int, ...], k: int, limit: int) -> Tuple[Rank, int]:
    report = primitivity_rank(Word(key, k), GuardConfig(quotient_vertex_limit=limit))
    return report.pi, len(report.crit)


def classify_words(
    k: int,
    t: int,
    mode: str = "reduced",
    with_crit: bool = False,
    guards: Optional[GuardConfig] = None,
) -> RankHistogram:
    """Histogram of pi over all words of length t (raw words are classified by their reduction)."""
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    guards = resolve_guards(guards)
    hist = RankHistogram.empty(t, k, mode, k, with_crit)
    started = time.perf_counter()
    seen: Dict[Tuple[int, ...], Tuple[Rank, int]] = {}
    for w in enumerate_words(k, t, mode, guards):
        r = reduce(w)
        result = seen.get(r.codes)
        if result is None:
            result = _class_rank(class_key(r), k, guards.quotient_vertex_limit)
            seen[r.codes] = result
        hist.add(result[0], result[1])
    logger.info(
        f"Classified {hist.total} {mode} words k={k} t={t} "
        f"({len(seen)} reductions) in {time.perf_counter() - started:.2f}s"
    )
    return hist


# =============================================================================
# CLOSED PATHS IN A BASE GRAPH
# =============================================================================

def _darts(base: BaseGraph) -> List[List[Tuple[int, int]]]:
    """Per vertex: (signed edge code, terminus); a loop gives two darts."""
    darts: List[List[Tuple[int, int]]] = [[] for _ in range(base.num_vertices)]
    for e, (u, v) in enumerate(base.edges):
        darts[u].append((e + 1, v))
        darts[v].append((-(e + 1), u))
    return darts


def closed_paths(
    base: BaseGraph, t: int, guards: Optional[GuardConfig] = None
) -> Iterator[Tuple[int, Tuple[int, ...]]]:
    """Yield (origin, signed edge codes) for every closed path of length t."""
    total = trace_power(base, t)
    resolve_guards(guards).check("enumeration_limit", total, f"closed paths of length {t}")
    darts = _darts(base)

    def extend(start: int, v: int, path: List[int]) -> Iterator[Tuple[int, Tuple[int, ...]]]:
        if len(path) == t:
            if v == start:
                yield start, tuple(path)
            return
        for code, u in darts[v]:
            path.append(code)
            yield from extend(start, u, path)
            path.pop()

    for v in range(base.num_vertices):
        yield from extend(v, v, [])


def base_core_graph(base: BaseGraph, v: int) -> CoreGraph:
    """The base graph as a core graph pointed at v (hanging trees trimmed)."""
    edges = tuple((a, b, e + 1) for e, (a, b) in enumerate(base.edges))
    return core(LabeledGraph(base.num_vertices, edges, v, base.k))


def classify_cycles(
    base: BaseGraph, t: int, with_crit: bool = False, guards: Optional[GuardConfig] = None
) -> RankHistogram:
    """
    Histogram of pi over the words of all closed paths of length t in the base
    graph (edge e carries letter e + 1). For each distinct word the critical
    subgroups are checked to map into the base graph pointed at the origin.
    """
    guards = resolve_guards(guards)
    k = base.k
    hist = RankHistogram.empty(t, k, "cycles", base.rank, with_crit)
    pointed = [base_core_graph(base, v) for v in range(base.num_vertices)]
    checked: Dict[Tuple[int, Tuple[int, ...]], Tuple[Rank, int]] = {}
    for start, codes in closed_paths(base, t, guards):
        r = reduce(Word(codes, k))
        result = checked.get((start, r.codes))
        if result is None:
            report = primitivity_rank(r, guards)
            for gN in report.crit:
                if morphism(gN, pointed[start]) is None:
                    hist.morphism_failures += 1
                    logger.warning(f"Critical subgroup of {r} does not map into the base at {start}")
            result = (report.pi, len(report.crit))
            checked[(start, r.codes)] = result
        hist.add(result[0], result[1])
    logger.info(f"Classified {hist.total} closed paths of length {t} ({len(checked)} distinct words)")
    return hist


# =============================================================================
# EACH EDGE TWICE
# =============================================================================

def trace_twice_count(gN: CoreGraph, t: int, guards: Optional[GuardConfig] = None) -> int:
    """
    nu_t(N): reduced words of length t in N whose basepoint path in gN crosses
    every edge at least twice.
    """
    if t < 2 * gN.num_edges:
        return 0
    darts = max(gN.degrees(), default=0)
    requested = darts * max(darts - 1, 1) ** max(t - 1, 0)
    resolve_guards(guards).check("enumeration_limit", requested, f"non-backtracking paths of length {t}")
    order = letter_order(gN.k)
    counts = [0] * gN.num_edges

    def walk(v: int, last: int, remaining: int) -> int:
        deficit = sum(2 - c for c in counts if c < 2)
        if deficit > remaining:
            return 0
        if remaining == 0:
            return int(v == gN.basepoint)
        total = 0
        for code in order:
            if code == -last:
                continue
            step = gN.step(v, code)
            if step is None:
                continue
            u, e = step
            counts[e] += 1
            total += walk(u, code, remaining - 1)
            counts[e] -= 1
        return total

    return walk(gN.basepoint, 0, t)


@dataclass(frozen=True)
class LemmaSweepReport:
    """
    Attributes:
        max_t: Longest word length swept
        words: Reduced words covered by the sweep
        classes: Distinct classes evaluated
        violations: Class representatives whose path misses an edge of a critical graph
    """
    max_t: int
    words: int
    classes: int
    violations: Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def lemma_sweep(k: int, max_t: int, guards: Optional[GuardConfig] = None) -> LemmaSweepReport:
    """
    For every reduced word of length 1..max_t with finite pi >= 1 and every
    critical subgroup N, the path of w in the core graph of N crosses each
    edge at least twice. One representative per class is evaluated; the
    property is invariant under conjugation, inversion and letter renaming.
    """
    guards = resolve_guards(guards)
    words = 0
    done: Dict[Tuple[int, ...], bool] = {}
    violations: List[str] = []
    for t in range(1, max_t + 1):
        for w in enumerate_words(k, t, "reduced", guards):
            words += 1
            key = class_key(w)
            if key in done:
                continue
            rep = Word(key, k)
            report = primitivity_rank(rep, guards)
            ok = True
            if 1 <= report.pi < math.inf:
                ok = all(traces_edges_twice(rep, gN) for gN in report.crit)
            done[key] = ok
            if not ok:
                violations.append(str(rep))
                logger.warning(f"{rep} misses an edge of a critical subgroup")
    logger.info(f"Edge-twice sweep k={k} t<={max_t}: {words} words, {len(done)} classes")
    return LemmaSweepReport(max_t, words, len(done), tuple(violations))


# =============================================================================
# GROWTH RATES
# =============================================================================

def growth_rate_limits(k: int, mode: str = "reduced") -> Dict[Rank, float]:
    """
    Exponential growth rates (t -> infinity) of the number of words of
    primitivity rank m, for m = 0..k. Raw rates are the cogrowth transform of
    the reduced ones. The primitive bucket has no entry: only its finite-t
    counts are reported.
    """
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {mode!r}")
    root = math.sqrt(2 * k - 1)
    reduced: Dict[Rank, float] = {0: 0.0}
    for m in range(1, k + 1):
        reduced[m] = max(root, 2 * m - 1)
    if mode == "reduced":
        return reduced
    return {m: cogrowth_unchecked(rate, 2 * k) for m, rate in reduced.items()}


@dataclass(frozen=True)
class TrendRow:
    """
    Attributes:
        m: Primitivity rank bucket
        t: Shorter of the two lengths compared
        ratio: counts[m](t + 2) / counts[m](t), None when counts[m](t) = 0
        expected: Square of the limiting growth rate
    """
    m: Rank
    t: int
    ratio: Optional[float]
    expected: float

    @property
    def relative_gap(self) -> Optional[float]:
        if self.ratio is None or self.expected == 0:
            return None
        return self.ratio / self.expected - 1


def ratio_trend(
    k: int, max_t: int, mode: str = "reduced", guards: Optional[GuardConfig] = None
) -> List[TrendRow]:
    """Two-step count ratios per finite rank bucket, next to the squared limiting rate."""
    hists = {t: classify_words(k, t, mode, guards=guards) for t in range(1, max_t + 1)}
    rates = growth_rate_limits(k, mode)
    rows = []
    for m in range(k + 1):
        for t in range(1, max_t - 1):
            before = hists[t].counts.get(m, 0)
            after = hists[t + 2].counts.get(m, 0)
            rows.append(TrendRow(m, t, after / before if before else None, rates[m] ** 2))
    return rows


# =============================================================================
# BOUND EVALUATORS
# =============================================================================

@dataclass(frozen=True)
class BoundSpec:
    """
    Terms of the bound on new eigenvalues at c = n^(1/t).

    Attributes:
        c: n^(1/t)
        terms: Summands in order m = 0, 1, 2, ...
        rho: Spectral radius of the universal cover the bound is measured against
        d: Degree requested (regular case)
        evaluated_d: Even degree actually evaluated (d + 1 for odd d)
        rank: Base graph rank (general case, or the regular-base extension)
    """
    c: float
    terms: Tuple[float, ...]
    rho: float
    d: Optional[int] = None
    evaluated_d: Optional[int] = None
    rank: Optional[int] = None

    @property
    def max_term(self) -> float:
        return max(self.terms)

    @property
    def bound(self) -> float:
        if self.d is not None:
            return min(self.max_term, float(self.d))
        return self.max_term

    @property
    def constant(self) -> float:
        """Additive slack over rho: bound = rho + constant."""
        return self.bound - self.rho

    def to_dict(self) -> dict:
        data = {
            "c": round(self.c, 12),
            "bound": round(self.bound, 12),
            "max_term": round(self.max_term, 12),
            "constant": round(self.constant, 12),
            "rho": round(self.rho, 12),
            "terms": [round(x, 12) for x in self.terms],
        }
        if self.d is not None:
            data["d"] = self.d
            data["evaluated_d"] = self.evaluated_d
        if self.rank is not None:
            data["rank"] = self.rank
        return data


def bound_evaluator(d: int, c: float, base_rank: Optional[int] = None) -> BoundSpec:
    """
    max{c g(-1), g(1), g(3)/c, ..., g(2m-1)/c^(m-1), ..., d/c^(d/2-1)} for
    d-regular graphs from d/2 permutations, g the cogrowth function. Odd d is
    evaluated at d + 1 and capped by the trivial bound d. With base_rank the
    terms continue up to m = base_rank with numerator d.
    """
    if d < 3:
        raise InvalidInputError(f"d must be >= 3, got {d}")
    if c <= 1:
        raise InvalidInputError(f"c must be > 1, got {c}")
    even = d if d % 2 == 0 else d + 1
    half = even // 2
    terms = [c * cogrowth_unchecked(-1, even), cogrowth_unchecked(1, even)]
    terms += [cogrowth_unchecked(2 * m - 1, even) / c ** (m - 1) for m in range(2, half + 1)]
    if base_rank is not None:
        terms += [even / c ** (m - 1) for m in range(half + 1, base_rank + 1)]
    return BoundSpec(
        c=c,
        terms=tuple(terms),
        rho=2 * math.sqrt(d - 1),
        d=d,
        evaluated_d=even,
        rank=base_rank,
    )


def general_bound_evaluator(rank: int, rho: float, c: float) -> BoundSpec:
    """max{c rho, rho, 3 rho / c, 5 rho / c^2, ..., (2 rank - 1) rho / c^(rank - 1)}."""
    if rank < 1:
        raise InvalidInputError(f"rank must be >= 1, got {rank}")
    if rho <= 0:
        raise InvalidInputError(f"rho must be > 0, got {rho}")
    if c <= 1:
        raise InvalidInputError(f"c must be > 1, got {c}")
    terms = [c * rho, rho] + [(2 * m - 1) * rho / c ** (m - 1) for m in range(2, rank + 1)]
    return BoundSpec(c=c, terms=tuple(terms), rho=rho, rank=rank)


def _ternary_search(objective, lo: float, hi: float) -> float:
    # max of an increasing term and decreasing terms is unimodal in c
    for _ in range(SEARCH_STEPS):
        a = lo + (hi - lo) / 3
        b = hi - (hi - lo) / 3
        if objective(a) <= objective(b):
            hi = b
        else:
            lo = a
    return (lo + hi) / 2


def optimize_bound(d: int, base_rank: Optional[int] = None) -> Tuple[float, float]:
    """(c*, bound) minimizing the largest term of bound_evaluator over c."""
    c = _ternary_search(lambda x: bound_evaluator(d, x, base_rank).max_term, 1 + 1e-12, 4.0)
    spec = bound_evaluator(d, c, base_rank)
    logger.debug(f"d={d}: c*={c:.6f}, bound={spec.bound:.6f}")
    return c, spec.bound


def optimize_general_bound(rank: int, rho: float) -> Tuple[float, float]:
    """(c*, bound) for the general base-graph bound; c* -> 1 when rank = 1."""
    c = _ternary_search(lambda x: general_bound_evaluator(rank, rho, x).max_term, 1 + 1e-12, 4.0)
    return c, general_bound_evaluator(rank, rho, c).bound
