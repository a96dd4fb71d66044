"""
ramlab - Primitivity rank

pi(w) is the least rank of a subgroup J containing w in which w is not
primitive (math.inf if there is none), and Crit(w) is the set of those J of
rank pi(w). Only quotients of the core graph of <w> are searched: critical
subgroups are algebraic extensions of <w>, and the morphism from <w> to an
algebraic extension is onto.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple, Union

from ramlab.config import GuardConfig, resolve_guards
from ramlab.core_graphs import (
    CoreGraph,
    covers,
    enumerate_quotients,
    is_free_factor,
    membership,
    morphism,
    path_edge_counts,
    rank,
    word_graph,
)
from ramlab.errors import InvalidInputError, NotAQuotientError
from ramlab.free_words import Word, reduce

logger = logging.getLogger(__name__)

Rank = Union[int, float]


def _graph_key(g: CoreGraph) -> Tuple[int, Tuple]:
    return g.num_vertices, g.edges


@dataclass(frozen=True)
class PrimitivityReport:
    """
    Attributes:
        pi: Primitivity rank, math.inf for primitive words
        crit: The w-critical subgroups, as core graphs in a fixed order
    """
    pi: Rank
    crit: Tuple[CoreGraph, ...]

    def to_dict(self) -> dict:
        return {
            "pi": "inf" if math.isinf(self.pi) else int(self.pi),
            "crit": [g.to_dict() for g in self.crit],
        }


@lru_cache(maxsize=65536)
def _primitivity(codes: Tuple[int, ...], k: int, limit: int) -> PrimitivityReport:
    w = Word(codes, k)
    if not codes:
        return PrimitivityReport(0, (CoreGraph.trivial(k),))
    gH = word_graph(w)
    best: Rank = math.inf
    crit: List[CoreGraph] = []
    for q in enumerate_quotients(gH, GuardConfig(quotient_vertex_limit=limit)):
        if q.norm == 0:
            continue
        r = rank(q.graph)
        # gH covers q.graph, so w is primitive in it iff the distance is the rank gap
        if q.norm == r - 1 or r > best:
            continue
        if r < best:
            best, crit = r, []
        crit.append(q.graph)
    crit.sort(key=_graph_key)
    return PrimitivityReport(best, tuple(crit))


def primitivity_rank(w: Word, guards: Optional[GuardConfig] = None) -> PrimitivityReport:
    """pi(w) and Crit(w) for a word (reduced first)."""
    w = reduce(w)
    guards = resolve_guards(guards)
    if w.codes:
        gH = word_graph(w)
        guards.check("quotient_vertex_limit", gH.num_vertices, f"core graph of {w}")
    report = _primitivity(w.codes, w.k, guards.quotient_vertex_limit)
    logger.debug(f"pi({w}) = {report.pi} with {len(report.crit)} critical subgroups")
    return report


def critical_subgroups(w: Word, guards: Optional[GuardConfig] = None) -> Tuple[CoreGraph, ...]:
    return primitivity_rank(w, guards).crit


def is_primitive(w: Word, gJ: CoreGraph, guards: Optional[GuardConfig] = None) -> bool:
    """True iff w belongs to some basis of the subgroup J."""
    w = reduce(w)
    if w.is_identity:
        raise InvalidInputError("the identity is never primitive")
    if w.k > gJ.k:
        raise InvalidInputError(f"word over k={w.k} in a subgroup of F_{gJ.k}")
    if not membership(w, gJ):
        raise InvalidInputError(f"word {w} is not in the subgroup")
    return is_free_factor(word_graph(w.with_alphabet(gJ.k)), gJ, guards)


def is_algebraic_extension(gH: CoreGraph, gJ: CoreGraph, guards: Optional[GuardConfig] = None) -> bool:
    """
    True iff no intermediate subgroup H <= L < J is a proper free factor of J.

    Any such L can be replaced by the image of gH inside the graph of L: that
    image is a quotient of gH and a subgraph of gL, so it is a free factor of L
    and therefore a proper free factor of J containing H. Searching the
    quotients of gH that cover gJ is therefore complete.
    """
    m = morphism(gH, gJ)
    if m is None:
        raise NotAQuotientError("source subgroup is not contained in the target subgroup")
    if not m.is_surjective:
        return False
    for q in enumerate_quotients(gH, guards):
        if q.graph == gJ or not covers(q.graph, gJ):
            continue
        if is_free_factor(q.graph, gJ, guards):
            return False
    return True


def algebraic_extensions(gH: CoreGraph, guards: Optional[GuardConfig] = None) -> List[CoreGraph]:
    """All quotients of gH that are algebraic extensions of it."""
    return [
        q.graph
        for q in enumerate_quotients(gH, guards)
        if is_algebraic_extension(gH, q.graph, guards)
    ]


def traces_edges_twice(w: Word, gN: CoreGraph) -> bool:
    """True iff the basepoint path of w in gN crosses every edge at least twice."""
    return all(c >= 2 for c in path_edge_counts(reduce(w), gN))
