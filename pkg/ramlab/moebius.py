"""
ramlab - Moebius inversion on quotient intervals

For core graphs M, N with N a quotient of M, Phi_{M,N}(n) is the expected
number of common fixed points of the generators of M when every basis element
of N is sent to an independent uniform permutation in S_n. Equivalently it is
the expected number of lifts of the morphism M -> N into a random n-sheeted
cover of N. The functions L, R and C are obtained from Phi by triangular
elimination over the interval of quotients:

    Phi_{H,J} = sum_{M in [H,J]} L_{M,J} = sum_{N in [H,J]} R_{H,N}
    L_{M,J}   = sum_{N in [M,J]} C_{M,N},  R_{H,N} = sum_{M in [H,N]} C_{M,N}

All values are exact Fractions.
"""

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ramlab.config import GuardConfig, resolve_guards
from ramlab.core_graphs import (
    CoreGraph,
    GraphMorphism,
    covers,
    enumerate_quotients,
    morphism,
    word_graph,
)
from ramlab.errors import InconsistentTableError, InvalidInputError, NotAQuotientError
from ramlab.free_words import Word, evaluate_codes, letter_order, reduce
from ramlab.primitivity import is_algebraic_extension, primitivity_rank

logger = logging.getLogger(__name__)

Pair = Tuple[int, int]


# =============================================================================
# EXACT PHI
# =============================================================================

def spanning_tree(g: CoreGraph, method: str = "bfs") -> List[Tuple[int, int, int]]:
    """
    Spanning tree of g from the basepoint as (parent, child, edge index) steps.

    Steps are listed in discovery order; letters are scanned x1, x1^-1, x2, ...
    """
    if method not in ("bfs", "dfs"):
        raise InvalidInputError(f"spanning tree method must be 'bfs' or 'dfs', got {method!r}")
    codes = letter_order(g.k)
    seen = {g.basepoint}
    steps: List[Tuple[int, int, int]] = []

    def children(v: int):
        for code in codes:
            nxt = g.step(v, code)
            if nxt is not None and nxt[0] not in seen:
                seen.add(nxt[0])
                steps.append((v, nxt[0], nxt[1]))
                yield nxt[0]

    if method == "bfs":
        queue = deque([g.basepoint])
        while queue:
            queue.extend(children(queue.popleft()))
    else:
        stack = [iter(children(g.basepoint))]
        while stack:
            child = next(stack[-1], None)
            if child is None:
                stack.pop()
            else:
                stack.append(iter(children(child)))
    return steps


def _count_lifts(m: GraphMorphism, edge_perms: Dict[int, np.ndarray], batch: int, n: int) -> np.ndarray:
    """
    Number of lifts of m at every basepoint sheet, summed, per batch row.

    `edge_perms` maps target edge index -> (batch, n) image arrays; missing
    target edges carry the identity.
    """
    src = m.source
    inverses: Dict[int, np.ndarray] = {}

    def apply(edge: int, labels: np.ndarray, forward: bool) -> np.ndarray:
        perm = edge_perms.get(m.edge_map[edge])
        if perm is None:
            return labels
        if not forward:
            key = m.edge_map[edge]
            if key not in inverses:
                inverses[key] = np.argsort(perm, axis=-1)
            perm = inverses[key]
        return np.take_along_axis(perm, labels, axis=-1)

    labels: Dict[int, np.ndarray] = {src.basepoint: np.broadcast_to(np.arange(n), (batch, n))}
    tree_edges = set()
    for parent, child, edge in spanning_tree(src):
        tree_edges.add(edge)
        forward = src.edges[edge][0] == parent
        labels[child] = apply(edge, labels[parent], forward)
    ok = np.ones((batch, n), dtype=bool)
    for i, (o, t, _) in enumerate(src.edges):
        if i in tree_edges:
            continue
        ok &= apply(i, labels[o], True) == labels[t]
    return ok.sum(axis=-1)


def lifts_count(gM: CoreGraph, gN: CoreGraph, sigmas: Sequence[Sequence[int]]) -> int:
    """
    Lifts of the morphism gM -> gN into the cover of gN given by one 0-based
    permutation per edge of gN (in gN's edge order).
    """
    m = morphism(gM, gN)
    if m is None:
        raise NotAQuotientError("no morphism between the graphs")
    if len(sigmas) != gN.num_edges:
        raise InvalidInputError(f"need {gN.num_edges} permutations, got {len(sigmas)}")
    if gN.num_edges == 0:
        return 1
    n = len(sigmas[0])
    perms = {i: np.asarray(s, dtype=np.int64)[None, :] for i, s in enumerate(sigmas)}
    return int(_count_lifts(m, perms, 1, n)[0])


def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)


@lru_cache(maxsize=8192)
def _phi_exact(gM: CoreGraph, gN: CoreGraph, n: int, tree: str) -> Fraction:
    m = morphism(gM, gN)
    if gM.num_edges == 0:
        return Fraction(n)
    tree_edges = {edge for _, _, edge in spanning_tree(gN, tree)}
    free_edges = [i for i in range(gN.num_edges) if i not in tree_edges]
    r = len(free_edges)
    if r == 0:
        return Fraction(n)
    perms = _all_permutations(n)
    size = len(perms)
    rest = np.array(list(itertools.product(range(size), repeat=r - 1)), dtype=np.int64)
    batch = len(rest)
    total = 0
    for first in perms:
        edge_perms = {free_edges[0]: np.broadcast_to(first, (batch, n))}
        for j, edge in enumerate(free_edges[1:]):
            edge_perms[edge] = perms[rest[:, j]]
        total += int(_count_lifts(m, edge_perms, batch, n).sum())
    return Fraction(total, size ** r)


def phi_exact(
    gM: CoreGraph,
    gN: CoreGraph,
    n: int,
    guards: Optional[GuardConfig] = None,
    tree: str = "bfs",
) -> Fraction:
    """
    Exact Phi_{M,N}(n) by enumerating S_n^rank(N).

    Tree edges of a spanning tree of gN carry the identity and every other
    edge an independent permutation; the value does not depend on the tree.
    """
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    if morphism(gM, gN) is None:
        raise NotAQuotientError("no morphism between the graphs")
    guards = resolve_guards(guards)
    guards.check("exact_n_limit", n)
    guards.check("exact_tuple_limit", math.factorial(n) ** gN.rank, f"|S_{n}|^{gN.rank}")
    return _phi_exact(gM, gN, n, tree)


# =============================================================================
# MONTE CARLO
# =============================================================================

def phi_monte_carlo(
    w: Word, n: int, trials: int, seed: int, batch_size: int = 4096
) -> Tuple[float, float]:
    """
    Sample mean and standard error of the fixed-point count of w(sigma_1..sigma_k).

    Deterministic for a given seed. With a single trial the standard error is inf.
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    w = reduce(w)
    if w.is_identity:
        return float(n), 0.0
    rng = np.random.default_rng(seed)
    used = w.letters_used()
    counts = np.empty(trials, dtype=np.int64)
    base = np.arange(n)
    done = 0
    while done < trials:
        size = min(batch_size, trials - done)
        sigmas = [np.broadcast_to(base, (size, n))] * w.k
        for j in used:
            sigmas[j - 1] = rng.permuted(np.tile(base, (size, 1)), axis=1)
        result = evaluate_codes(w.codes, sigmas)
        counts[done:done + size] = (result == base).sum(axis=1)
        done += size
    mean = float(counts.mean())
    se = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return mean, se


# =============================================================================
# INTERVALS AND TABLES
# =============================================================================

@dataclass(frozen=True)
class QuotientInterval:
    """
    All quotients of a root core graph, ordered by the covering relation.

    Attributes:
        nodes: Quotient graphs, root first
        norms: X-distance of each node from the root
        order: order[i][j] is True iff nodes[i] covers nodes[j] (i <= j in the poset)
    """
    nodes: Tuple[CoreGraph, ...]
    norms: Tuple[int, ...]
    order: Tuple[Tuple[bool, ...], ...]

    @property
    def root(self) -> int:
        return 0

    def __len__(self) -> int:
        return len(self.nodes)

    def between(self, i: int, j: int) -> List[int]:
        """Indices of the closed interval [i, j]."""
        return [x for x in range(len(self.nodes)) if self.order[i][x] and self.order[x][j]]

    def comparable_pairs(self) -> List[Pair]:
        return [(i, j) for i in range(len(self.nodes)) for j in range(len(self.nodes)) if self.order[i][j]]


def interval_poset(g: CoreGraph, guards: Optional[GuardConfig] = None) -> QuotientInterval:
    quotients = enumerate_quotients(g, guards)
    nodes = tuple(q.graph for q in quotients)
    order = tuple(tuple(covers(a, b) for b in nodes) for a in nodes)
    logger.info(f"Quotient interval with {len(nodes)} nodes")
    return QuotientInterval(nodes, tuple(q.norm for q in quotients), order)


@dataclass
class MoebiusTable:
    """
    Exact Phi, L, R and C on every comparable pair of an interval, per n.

    Each of phi/L/R/C maps n -> {(i, j): Fraction}.
    """
    interval: QuotientInterval
    ns: Tuple[int, ...]
    phi: Dict[int, Dict[Pair, Fraction]] = field(default_factory=dict)
    L: Dict[int, Dict[Pair, Fraction]] = field(default_factory=dict)
    R: Dict[int, Dict[Pair, Fraction]] = field(default_factory=dict)
    C: Dict[int, Dict[Pair, Fraction]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def rat(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}"

        return {
            "nodes": [g.to_dict() for g in self.interval.nodes],
            "norms": list(self.interval.norms),
            "order": [[int(b) for b in row] for row in self.interval.order],
            "values": {
                str(n): [
                    {
                        "m": i,
                        "n": j,
                        "phi": rat(self.phi[n][(i, j)]),
                        "L": rat(self.L[n][(i, j)]),
                        "R": rat(self.R[n][(i, j)]),
                        "C": rat(self.C[n][(i, j)]),
                    }
                    for (i, j) in sorted(self.phi[n])
                ]
                for n in self.ns
            },
        }


def _invert_one(interval: QuotientInterval, phi: Dict[Pair, Fraction]):
    size = len(interval)
    pairs = interval.comparable_pairs()
    # proper quotients have strictly fewer vertices
    by_size = sorted(range(size), key=lambda x: interval.nodes[x].num_vertices)
    L: Dict[Pair, Fraction] = {}
    R: Dict[Pair, Fraction] = {}
    C: Dict[Pair, Fraction] = {}
    for j in range(size):
        for i in by_size:
            if (i, j) in phi:
                L[(i, j)] = phi[(i, j)] - sum(
                    (L[(x, j)] for x in interval.between(i, j) if x != i), Fraction(0)
                )
    for i in range(size):
        for j in reversed(by_size):
            if (i, j) in phi:
                below = [x for x in interval.between(i, j) if x != j]
                R[(i, j)] = phi[(i, j)] - sum((R[(i, x)] for x in below), Fraction(0))
                C[(i, j)] = L[(i, j)] - sum((C[(i, x)] for x in below), Fraction(0))
    for i, j in pairs:
        span = interval.between(i, j)
        checks = {
            "phi = sum L": phi[(i, j)] == sum((L[(x, j)] for x in span), Fraction(0)),
            "phi = sum R": phi[(i, j)] == sum((R[(i, x)] for x in span), Fraction(0)),
            "phi = sum C": phi[(i, j)] == sum(
                (C[(x, y)] for x in span for y in span if interval.order[x][y]), Fraction(0)
            ),
            "L = sum C": L[(i, j)] == sum((C[(i, x)] for x in span), Fraction(0)),
            "R = sum C": R[(i, j)] == sum((C[(x, j)] for x in span), Fraction(0)),
        }
        failed = [name for name, ok in checks.items() if not ok]
        if failed:
            raise InconsistentTableError(f"identities {failed} fail on pair {(i, j)}")
    return L, R, C


def moebius_invert(
    interval: QuotientInterval,
    ns: Sequence[int],
    guards: Optional[GuardConfig] = None,
    phi_values: Optional[Dict[int, Dict[Pair, Fraction]]] = None,
) -> MoebiusTable:
    """
    Solve L, R and C from Phi on every comparable pair and re-verify every identity.

    `phi_values` may supply Phi; otherwise it is computed exactly.
    """
    table = MoebiusTable(interval, tuple(ns))
    pairs = interval.comparable_pairs()
    for n in ns:
        if phi_values is not None:
            phi = phi_values[n]
            missing = [p for p in pairs if p not in phi]
            if missing:
                raise InvalidInputError(f"phi missing for pairs {missing[:5]} at n={n}")
        else:
            phi = {(i, j): phi_exact(interval.nodes[i], interval.nodes[j], n, guards) for i, j in pairs}
        table.phi[n] = dict(phi)
        table.L[n], table.R[n], table.C[n] = _invert_one(interval, phi)
        logger.info(f"Moebius table at n={n}: {len(pairs)} comparable pairs")
    return table


# =============================================================================
# CHECKS
# =============================================================================

@dataclass
class RSupportReport:
    """
    Attributes:
        algebraic: Whether each interval node is an algebraic extension of the root
        violations: (node index, n, R value) for nonzero R off the algebraic extensions
    """
    table: MoebiusTable
    algebraic: Tuple[bool, ...]
    violations: List[Tuple[int, int, Fraction]]

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_r_support(w: Word, ns: Sequence[int], guards: Optional[GuardConfig] = None) -> RSupportReport:
    """R_{<w>,N}(n) must vanish exactly on every N that is not an algebraic extension."""
    gH = word_graph(reduce(w))
    interval = interval_poset(gH, guards)
    table = moebius_invert(interval, ns, guards)
    algebraic = tuple(is_algebraic_extension(gH, node, guards) for node in interval.nodes)
    violations = [
        (j, n, table.R[n][(0, j)])
        for n in ns
        for j in range(len(interval))
        if not algebraic[j] and table.R[n][(0, j)] != 0
    ]
    if violations:
        logger.warning(f"R-support violated for {w}: {violations}")
    return RSupportReport(table, algebraic, violations)


@dataclass(frozen=True)
class AsymptoticRow:
    """
    Attributes:
        n: Permutation degree
        expectation: E[F_w,n], or its upper confidence value when not exact
        exact: Whether expectation is exact
        bound: 1 + n^(1-pi) (|Crit| + t^(2+2pi) / (n - t^2)); for primitive words 1,
            widened by the sampling error when not exact
        residual: (E - 1 - |Crit| / n^(pi-1)) * n^pi, None for primitive words
    """
    n: int
    expectation: float
    exact: bool
    bound: float
    residual: Optional[float]

    @property
    def holds(self) -> bool:
        return self.expectation <= self.bound + 1e-12


@dataclass(frozen=True)
class AsymptoticReport:
    word: str
    pi: float
    crit_count: int
    rows: Tuple[AsymptoticRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.holds for row in self.rows)


def asymptotic_check(
    w: Word,
    ns: Sequence[int],
    guards: Optional[GuardConfig] = None,
    trials: int = 20000,
    seed: int = 0,
) -> AsymptoticReport:
    """
    Check E[F_w,n] against 1 + n^(1-pi)(|Crit| + t^(2+2pi)/(n - t^2)) for every n > t^2.

    Exact Phi is used inside the configured guards, otherwise the Monte Carlo
    mean plus three standard errors. Primitive words are measured the same
    way and held to E = 1; the identity has E = n exactly.
    """
    w = reduce(w)
    t = len(w)
    bad = [n for n in ns if n <= t * t]
    if bad:
        raise InvalidInputError(f"need n > t^2 = {t * t}, got {bad}")
    guards = resolve_guards(guards)
    report = primitivity_rank(w, guards)
    pi, crit = report.pi, len(report.crit)
    gH = word_graph(w) if not w.is_identity else None
    top = CoreGraph.bouquet(w.k, w.letters_used())
    rows = []
    for n in ns:
        residual: Optional[float] = None
        exact_range = (
            n <= guards.exact_n_limit and math.factorial(n) ** top.rank <= guards.exact_tuple_limit
        )
        if pi == 0:
            value, exact, se = float(n), True, 0.0
        elif exact_range:
            value, exact, se = float(phi_exact(gH, top, n, guards)), True, 0.0
        else:
            mean, se = phi_monte_carlo(w, n, trials, seed + n)
            value, exact = mean + 3 * se, False
        if math.isinf(pi):
            # E = 1; the sampled mean may sit up to five standard errors above it
            bound = 1.0 + 8 * se
        else:
            bound = 1 + n ** (1 - pi) * (crit + t ** (2 + 2 * pi) / (n - t * t))
            residual = (value - 1 - crit / n ** (pi - 1)) * n ** pi
        row = AsymptoticRow(n, value, exact, bound, residual)
        if not row.holds:
            logger.warning(f"Bound fails for {w} at n={n}: {value} > {bound}")
        rows.append(row)
    return AsymptoticReport(str(w), pi, crit, tuple(rows))
