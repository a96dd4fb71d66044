"""
ramlab - Stallings core graphs

A finitely generated subgroup H of F_k is represented by its core graph: a
folded, pointed, edge-labelled directed multigraph whose reduced closed paths
at the basepoint spell exactly the elements of H.

Vertex ids of a CoreGraph are canonical: 0 is the basepoint and the remaining
vertices are numbered in BFS order, scanning the letters x1, x1^-1, x2, ...
at every vertex. Two CoreGraphs are equal iff they describe the same subgroup.
Edges are (origin, terminus, label) triples with labels 1..k.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from ramlab.config import GuardConfig, resolve_guards
from ramlab.errors import InvalidInputError, NotAQuotientError
from ramlab.free_words import Word, letter_order, reduce

logger = logging.getLogger(__name__)

Edge = Tuple[int, int, int]


# =============================================================================
# UNION-FIND
# =============================================================================

class UnionFind:
    """Disjoint sets over 0..n-1 with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; False if they were already merged."""
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        elif self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        self.parent[y] = x
        return True


# =============================================================================
# PARTITIONS
# =============================================================================

@dataclass(frozen=True)
class VertexPartition:
    """
    A partition of {0..n-1} into nonempty disjoint blocks.

    Blocks are stored sorted by their least element; norm = n - #blocks.
    """
    blocks: Tuple[FrozenSet[int], ...]

    def __post_init__(self):
        seen: set = set()
        for block in self.blocks:
            if not block:
                raise InvalidInputError("partition blocks must be nonempty")
            if seen & block:
                raise InvalidInputError("partition blocks must be disjoint")
            seen |= block
        if seen != set(range(len(seen))):
            raise InvalidInputError("partition blocks must cover 0..n-1")
        ordered = tuple(sorted((frozenset(b) for b in self.blocks), key=min))
        object.__setattr__(self, "blocks", ordered)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], n: Optional[int] = None) -> "VertexPartition":
        """Blocks may omit singletons when n is given."""
        listed = [frozenset(b) for b in blocks]
        if n is not None:
            covered = set().union(*listed) if listed else set()
            listed += [frozenset([v]) for v in range(n) if v not in covered]
        return cls(tuple(listed))

    @classmethod
    def discrete(cls, n: int) -> "VertexPartition":
        return cls(tuple(frozenset([v]) for v in range(n)))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "VertexPartition":
        """Partition whose blocks are the fibers of v -> labels[v]."""
        fibers: Dict[int, set] = {}
        for v, label in enumerate(labels):
            fibers.setdefault(label, set()).add(v)
        return cls(tuple(frozenset(b) for b in fibers.values()))

    @classmethod
    def from_permutation(cls, images: Sequence[int]) -> "VertexPartition":
        """Cycles of a 0-based permutation as a partition; its norm is the permutation norm."""
        uf = UnionFind(len(images))
        for i, j in enumerate(images):
            uf.union(i, j)
        return cls.from_labels([uf.find(i) for i in range(len(images))])

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def norm(self) -> int:
        return self.n - len(self.blocks)

    def block_of(self, v: int) -> FrozenSet[int]:
        for block in self.blocks:
            if v in block:
                return block
        raise InvalidInputError(f"vertex {v} not in partition")

    def is_coarser_than(self, other: "VertexPartition") -> bool:
        """True if every block of `other` lies inside a block of self."""
        if self.n != other.n:
            return False
        return all(any(b <= mine for mine in self.blocks) for b in other.blocks)

    def to_list(self) -> List[List[int]]:
        return [sorted(b) for b in self.blocks]


@dataclass(frozen=True)
class EdgePartition:
    """Blocks of edge indices to be identified; edges in a block must share a label."""
    blocks: Tuple[FrozenSet[int], ...]

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> "EdgePartition":
        return cls(tuple(frozenset(b) for b in blocks))


# =============================================================================
# GRAPHS
# =============================================================================

@dataclass(frozen=True)
class LabeledGraph:
    """
    A pointed, edge-labelled directed multigraph that need not be folded.

    This is the input to `fold`; vertices are 0..num_vertices-1.
    """
    num_vertices: int
    edges: Tuple[Edge, ...]
    basepoint: int
    k: int

    def __post_init__(self):
        if not 0 <= self.basepoint < self.num_vertices:
            raise InvalidInputError(f"basepoint {self.basepoint} outside 0..{self.num_vertices - 1}")
        for o, t, label in self.edges:
            if not (0 <= o < self.num_vertices and 0 <= t < self.num_vertices):
                raise InvalidInputError(f"edge {(o, t, label)} has an endpoint outside the graph")
            if not 1 <= label <= self.k:
                raise InvalidInputError(f"edge label {label} outside 1..{self.k}")

    @property
    def is_folded(self) -> bool:
        outgoing = {(o, label) for o, _, label in self.edges}
        incoming = {(t, label) for _, t, label in self.edges}
        return len(outgoing) == len(self.edges) == len(incoming)

    @classmethod
    def wedge(cls, k: int, generators: Sequence[Word]) -> "LabeledGraph":
        """One closed petal per generator, all petals glued at the basepoint 0."""
        edges: List[Edge] = []
        n = 1
        for word in generators:
            codes = reduce(word).codes
            if not codes:
                continue
            path = [0] + list(range(n, n + len(codes) - 1)) + [0]
            n += len(codes) - 1
            for (u, v), code in zip(zip(path, path[1:]), codes):
                edges.append((u, v, code) if code > 0 else (v, u, -code))
        return cls(n, tuple(edges), 0, k)


@dataclass(frozen=True)
class CoreGraph:
    """
    Canonical core graph of a finitely generated subgroup of F_k.

    Construct through `from_words`, `fold`/`core`, `quotient` or `from_dict`;
    the constructor only validates.

    Attributes:
        num_vertices: |V|, vertices are 0..num_vertices-1
        edges: Sorted (origin, terminus, label) triples
        k: Alphabet size
        basepoint: Always 0 in canonical form
    """
    num_vertices: int
    edges: Tuple[Edge, ...]
    k: int
    basepoint: int = 0

    def __post_init__(self):
        graph = LabeledGraph(self.num_vertices, self.edges, self.basepoint, self.k)
        if not graph.is_folded:
            raise InvalidInputError("core graph edges are not folded")

    @classmethod
    def trivial(cls, k: int) -> "CoreGraph":
        return cls(1, (), k)

    @classmethod
    def bouquet(cls, k: int, labels: Optional[Sequence[int]] = None) -> "CoreGraph":
        """One vertex with a loop per label (all k labels by default): the graph of F_k."""
        labels = range(1, k + 1) if labels is None else sorted(set(labels))
        return cls(1, tuple((0, 0, j) for j in labels), k)

    @property
    def vertices(self) -> range:
        return range(self.num_vertices)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def rank(self) -> int:
        return rank(self)

    def labels_used(self) -> List[int]:
        return sorted({label for _, _, label in self.edges})

    @cached_property
    def _out(self) -> Dict[Tuple[int, int], Tuple[int, int]]:
        return {(o, label): (t, i) for i, (o, t, label) in enumerate(self.edges)}

    @cached_property
    def _in(self) -> Dict[Tuple[int, int], Tuple[int, int]]:
        return {(t, label): (o, i) for i, (o, t, label) in enumerate(self.edges)}

    def step(self, v: int, code: int) -> Optional[Tuple[int, int]]:
        """Follow letter `code` from v: (next vertex, edge index), or None if absent."""
        if code > 0:
            return self._out.get((v, code))
        return self._in.get((v, -code))

    def read(self, codes: Sequence[int], start: Optional[int] = None) -> Optional[Tuple[int, List[int]]]:
        """Read a letter sequence from `start`: (end vertex, edge indices) or None."""
        v = self.basepoint if start is None else start
        used = []
        for code in codes:
            nxt = self.step(v, code)
            if nxt is None:
                return None
            v, edge = nxt
            used.append(edge)
        return v, used

    def degrees(self) -> List[int]:
        deg = [0] * self.num_vertices
        for o, t, _ in self.edges:
            deg[o] += 1
            deg[t] += 1
        return deg

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.vertices)
        for i, (o, t, label) in enumerate(self.edges):
            g.add_edge(o, t, key=i, label=label)
        return g

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "vertices": list(self.vertices),
            "edges": [list(e) for e in self.edges],
            "basepoint": self.basepoint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoreGraph":
        """Load a serialized graph; it is folded, trimmed and renumbered canonically."""
        try:
            vertices = list(data["vertices"])
            index = {v: i for i, v in enumerate(vertices)}
            edges = tuple((index[o], index[t], int(label)) for o, t, label in data["edges"])
            graph = LabeledGraph(len(vertices), edges, index[data.get("basepoint", vertices[0])],
                                 int(data["k"]))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InvalidInputError(f"malformed core graph: {exc}") from None
        return core(fold(graph))


@dataclass(frozen=True)
class GraphMorphism:
    """
    The unique basepoint-preserving label-preserving map between two core graphs.

    Attributes:
        source: Domain graph
        target: Codomain graph
        vertex_map: Image of every source vertex
        edge_map: Image of every source edge index
    """
    source: CoreGraph
    target: CoreGraph
    vertex_map: Tuple[int, ...]
    edge_map: Tuple[int, ...]

    @property
    def is_surjective(self) -> bool:
        return (len(set(self.vertex_map)) == self.target.num_vertices
                and len(set(self.edge_map)) == self.target.num_edges)

    @property
    def is_injective(self) -> bool:
        return len(set(self.vertex_map)) == self.source.num_vertices


# =============================================================================
# FOLDING, TRIMMING, CANONICAL FORM
# =============================================================================

def _fold_classes(graph: LabeledGraph, uf: UnionFind, edge_order: Sequence[int]) -> None:
    """Merge vertices in `uf` until equally-labelled edges agree at both ends."""
    changed = True
    while changed:
        changed = False
        heads: Dict[Tuple[int, int], int] = {}
        tails: Dict[Tuple[int, int], int] = {}
        for i in edge_order:
            o, t, label = graph.edges[i]
            o, t = uf.find(o), uf.find(t)
            prev = heads.setdefault((o, label), t)
            if uf.union(prev, t):
                changed = True
                o, t = uf.find(o), uf.find(t)
            prev = tails.setdefault((t, label), o)
            if uf.union(prev, o):
                changed = True


def _collapse(graph: LabeledGraph, uf: UnionFind) -> Tuple[LabeledGraph, List[int]]:
    reps = sorted({uf.find(v) for v in range(graph.num_vertices)})
    index = {r: i for i, r in enumerate(reps)}
    vmap = [index[uf.find(v)] for v in range(graph.num_vertices)]
    edges = sorted({(vmap[o], vmap[t], label) for o, t, label in graph.edges})
    return LabeledGraph(len(reps), tuple(edges), vmap[graph.basepoint], graph.k), vmap


def _canonical_order(graph: LabeledGraph) -> List[int]:
    """BFS from the basepoint over a folded graph; returns old ids in new-id order."""
    out = {(o, label): t for o, t, label in graph.edges}
    inc = {(t, label): o for o, t, label in graph.edges}
    order = [graph.basepoint]
    seen = {graph.basepoint}
    queue = deque(order)
    codes = letter_order(graph.k)
    while queue:
        v = queue.popleft()
        for code in codes:
            u = out.get((v, code)) if code > 0 else inc.get((v, -code))
            if u is not None and u not in seen:
                seen.add(u)
                order.append(u)
                queue.append(u)
    return order


def canonical(graph: LabeledGraph) -> Tuple[LabeledGraph, Dict[int, int]]:
    """Renumber a folded graph canonically; drops vertices unreachable from the basepoint."""
    order = _canonical_order(graph)
    new_id = {old: new for new, old in enumerate(order)}
    edges = sorted(
        (new_id[o], new_id[t], label) for o, t, label in graph.edges if o in new_id
    )
    return LabeledGraph(len(order), tuple(edges), 0, graph.k), new_id


def fold(graph: LabeledGraph, edge_order: Optional[Sequence[int]] = None) -> LabeledGraph:
    """
    Stallings folding.

    Repeatedly identifies equally-labelled edges with a common origin or a
    common terminus. The result is canonically numbered, so two scan orders
    give equal graphs.
    """
    order = list(range(len(graph.edges))) if edge_order is None else list(edge_order)
    if sorted(order) != list(range(len(graph.edges))):
        raise InvalidInputError("edge_order must be a permutation of the edge indices")
    uf = UnionFind(graph.num_vertices)
    _fold_classes(graph, uf, order)
    folded, _ = _collapse(graph, uf)
    return canonical(folded)[0]


def _trim_vertices(graph: LabeledGraph) -> set:
    """Vertices kept after repeatedly removing non-basepoint leaves and isolated vertices."""
    alive = set(range(graph.num_vertices))
    live_edges = set(range(len(graph.edges)))
    deg = [0] * graph.num_vertices
    incident: Dict[int, List[int]] = {v: [] for v in alive}
    for i, (o, t, _) in enumerate(graph.edges):
        deg[o] += 1
        deg[t] += 1
        incident[o].append(i)
        if t != o:
            incident[t].append(i)
    stack = [v for v in alive if v != graph.basepoint and deg[v] <= 1]
    while stack:
        v = stack.pop()
        if v not in alive or deg[v] > 1:
            continue
        alive.discard(v)
        for i in incident[v]:
            if i in live_edges:
                live_edges.discard(i)
                o, t, _ = graph.edges[i]
                other = t if o == v else o
                deg[other] -= 1
                if other != graph.basepoint and deg[other] <= 1:
                    stack.append(other)
    return alive


def core(graph: LabeledGraph) -> CoreGraph:
    """Fold (if needed), trim hanging trees away from the basepoint, renumber canonically."""
    if not graph.is_folded:
        graph = fold(graph)
    alive = _trim_vertices(graph)
    edges = tuple(e for e in graph.edges if e[0] in alive and e[1] in alive)
    kept = LabeledGraph(graph.num_vertices, edges, graph.basepoint, graph.k)
    result, _ = canonical(kept)
    return CoreGraph(result.num_vertices, result.edges, result.k)


def from_words(k: int, generators: Sequence[Word]) -> CoreGraph:
    """Core graph of the subgroup generated by `generators` (trivial graph for none)."""
    for word in generators:
        if word.k > k:
            raise InvalidInputError(f"generator {word} is over k={word.k} > {k}")
    return core(fold(LabeledGraph.wedge(k, generators)))


def word_graph(w: Word) -> CoreGraph:
    """Core graph of the cyclic subgroup <w>."""
    return from_words(w.k, [w])


# =============================================================================
# BASIC QUERIES
# =============================================================================

def rank(g: CoreGraph) -> int:
    """rk = |E| - |V| + 1."""
    return g.num_edges - g.num_vertices + 1


def membership(w: Word, g: CoreGraph) -> bool:
    """True iff w reads as a closed path at the basepoint."""
    result = g.read(reduce(w).codes)
    return result is not None and result[0] == g.basepoint


def path_edge_counts(w: Word, g: CoreGraph) -> List[int]:
    """How many times the basepoint path of w traverses each edge of g."""
    result = g.read(w.codes)
    if result is None:
        raise InvalidInputError(f"word {w} cannot be read in the graph")
    counts = [0] * g.num_edges
    for i in result[1]:
        counts[i] += 1
    return counts


def morphism(src: CoreGraph, dst: CoreGraph) -> Optional[GraphMorphism]:
    """The morphism src -> dst if it exists (iff the subgroup of src lies in that of dst)."""
    if src.k != dst.k:
        raise InvalidInputError(f"alphabet mismatch: {src.k} vs {dst.k}")
    vmap: Dict[int, int] = {src.basepoint: dst.basepoint}
    emap: Dict[int, int] = {}
    queue = deque([src.basepoint])
    codes = letter_order(src.k)
    while queue:
        v = queue.popleft()
        for code in codes:
            here = src.step(v, code)
            if here is None:
                continue
            there = dst.step(vmap[v], code)
            if there is None:
                return None
            u, e = here
            image_u, image_e = there
            if u in vmap:
                if vmap[u] != image_u:
                    return None
            else:
                vmap[u] = image_u
                queue.append(u)
            emap[e] = image_e
    return GraphMorphism(
        src, dst,
        tuple(vmap[v] for v in src.vertices),
        tuple(emap[i] for i in range(src.num_edges)),
    )


def image_subgraph(m: GraphMorphism) -> CoreGraph:
    """The image of a morphism as a core graph of its own."""
    edges = tuple(m.target.edges[i] for i in sorted(set(m.edge_map)))
    graph = LabeledGraph(m.target.num_vertices, edges, m.target.basepoint, m.target.k)
    return core(graph)


def induced_partition(g: CoreGraph, q: CoreGraph) -> VertexPartition:
    """Fibers of the morphism g -> q as a partition of V(g)."""
    m = morphism(g, q)
    if m is None:
        raise NotAQuotientError("no morphism between the graphs")
    return VertexPartition.from_labels(m.vertex_map)


def degree_profile(g: CoreGraph) -> Tuple[int, int]:
    """
    (max degree, number of topological edges) after dropping the basepoint string.

    Loops count twice. A topological edge is a maximal path through degree-2
    vertices; a pure cycle has one.
    """
    deg = g.degrees()
    removed = set()
    dropped = set()
    v = g.basepoint
    while deg[v] == 1:
        i = next(i for i, (o, t, _) in enumerate(g.edges) if i not in dropped and v in (o, t))
        o, t, _ = g.edges[i]
        u = t if o == v else o
        dropped.add(i)
        removed.add(v)
        deg[v] = 0
        deg[u] -= 1
        v = u
    remaining = [deg[u] for u in g.vertices if u not in removed]
    max_degree = max(remaining, default=0)
    if max_degree == 0:
        return 0, 0
    branch = sum(d for d in remaining if d >= 3)
    return max_degree, branch // 2 if branch else 1


# =============================================================================
# QUOTIENTS
# =============================================================================

def quotient_map(
    g: CoreGraph, partitions: Sequence[Union[VertexPartition, EdgePartition]]
) -> Tuple[CoreGraph, Tuple[int, ...]]:
    """Quotient of g by one or more vertex/edge partitions, and the image of every vertex."""
    uf = UnionFind(g.num_vertices)
    for part in partitions:
        if isinstance(part, VertexPartition):
            if part.n != g.num_vertices:
                raise InvalidInputError(f"partition of {part.n} vertices for graph with {g.num_vertices}")
            for block in part.blocks:
                first = min(block)
                for v in block:
                    uf.union(first, v)
        else:
            for block in part.blocks:
                if any(not 0 <= i < g.num_edges for i in block):
                    raise InvalidInputError("edge partition refers to a missing edge")
                labels = {g.edges[i][2] for i in block}
                if len(labels) > 1:
                    raise InvalidInputError(f"edge block mixes labels {sorted(labels)}")
                first = g.edges[min(block)]
                for i in block:
                    uf.union(first[0], g.edges[i][0])
                    uf.union(first[1], g.edges[i][1])
    graph = LabeledGraph(g.num_vertices, g.edges, g.basepoint, g.k)
    _fold_classes(graph, uf, range(len(graph.edges)))
    collapsed, vmap = _collapse(graph, uf)
    canon, new_id = canonical(collapsed)
    result = CoreGraph(canon.num_vertices, canon.edges, canon.k)
    return result, tuple(new_id[vmap[v]] for v in g.vertices)


def quotient(g: CoreGraph, partitions: Sequence[Union[VertexPartition, EdgePartition]]) -> CoreGraph:
    """Merge the blocks of every partition, then fold."""
    return quotient_map(g, partitions)[0]


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


@dataclass(frozen=True)
class Quotient:
    """
    A quotient of a root graph.

    Attributes:
        graph: The quotient core graph
        norm: Least partition norm producing it (its X-distance from the root)
        vertex_map: Image in `graph` of every root vertex
    """
    graph: CoreGraph
    norm: int
    vertex_map: Tuple[int, ...] = field(compare=False)


@lru_cache(maxsize=4096)
def _enumerate_quotients(g: CoreGraph) -> Tuple[Quotient, ...]:
    found: Dict[CoreGraph, Quotient] = {g: Quotient(g, 0, tuple(g.vertices))}
    frontier = [g]
    norm = 0
    while frontier:
        norm += 1
        nxt = []
        for q in frontier:
            base_map = found[q].vertex_map
            for a in range(q.num_vertices):
                for b in range(a + 1, q.num_vertices):
                    merged, vmap = quotient_map(q, [VertexPartition.from_blocks([[a, b]], q.num_vertices)])
                    if merged in found:
                        continue
                    found[merged] = Quotient(merged, norm, tuple(vmap[x] for x in base_map))
                    nxt.append(merged)
        frontier = nxt
    logger.debug(f"{len(found)} quotients for a graph on {g.num_vertices} vertices")
    return tuple(found.values())


def enumerate_quotients(g: CoreGraph, guards: Optional[GuardConfig] = None) -> List[Quotient]:
    """
    Every quotient of g with its least generating partition norm, g itself first.

    Search is breadth-first over single pair merges followed by folding, so the
    first time a quotient is reached its norm is minimal.
    """
    resolve_guards(guards).check(
        "quotient_vertex_limit", g.num_vertices,
        f"Bell({g.num_vertices}) = {bell_number(g.num_vertices)} vertex partitions",
    )
    return list(_enumerate_quotients(g))


def x_distance(gH: CoreGraph, gJ: CoreGraph, guards: Optional[GuardConfig] = None) -> int:
    """Least norm of a vertex partition P of gH with gH/P = gJ."""
    if gH == gJ:
        return 0
    for q in enumerate_quotients(gH, guards):
        if q.graph == gJ:
            return q.norm
    raise NotAQuotientError("target graph is not a quotient of the source graph")


def is_free_factor(gH: CoreGraph, gJ: CoreGraph, guards: Optional[GuardConfig] = None) -> bool:
    """
    True iff H is a free factor of J.

    H is a free factor of the image of its graph in gJ iff the X-distance
    equals the rank difference; the image is a subgraph, hence a free factor of J.
    """
    m = morphism(gH, gJ)
    if m is None:
        raise NotAQuotientError("source subgroup is not contained in the target subgroup")
    if m.is_injective:
        return True
    target = gJ if m.is_surjective else image_subgraph(m)
    return x_distance(gH, target, guards) == rank(target) - rank(gH)


def covers(gH: CoreGraph, gJ: CoreGraph) -> bool:
    """The X-covering relation: a surjective morphism gH -> gJ exists."""
    m = morphism(gH, gJ)
    return m is not None and m.is_surjective
