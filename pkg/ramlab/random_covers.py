"""
ramlab - Random graph models

Samplers for the permutation model (d/2 uniform permutations of [n]), random
n-sheeted covers of a base graph (one uniform permutation per base edge), the
configuration / matching model, and the odd-degree permutations-plus-matching
model.

Conventions:
    - Cover vertex (v, i) has index v * n + i.
    - A loop contributes 2 to its diagonal adjacency entry and 2 to the degree.
    - Base edge e (0-based) is the letter x_{e+1}; a closed path in the base is
      a sequence of signed codes, +(e+1) along e and -(e+1) against it.
    - Every sampler draws from an explicit numpy Generator (PCG64). Uniform
      permutations come from Generator.permutation (Fisher-Yates).
"""

import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import networkx as nx
import numpy as np

from ramlab.config import GuardConfig, resolve_guards
from ramlab.errors import GuardExceededError, InvalidInputError
from ramlab.free_words import Permutation, Word, evaluate_word, fixed_points

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_MAX_ATTEMPTS = 10000


def trial_seed(master: int, index: int) -> int:
    """64-bit seed of trial `index`: SeedSequence(master, spawn_key=(index,))."""
    seq = np.random.SeedSequence(master, spawn_key=(index,))
    return int(seq.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


# =============================================================================
# GRAPHS
# =============================================================================

@dataclass(frozen=True)
class BaseGraph:
    """
    A finite connected multigraph with oriented, numbered edges.

    Attributes:
        num_vertices: Vertices are 0..num_vertices-1
        edges: (origin, terminus) per edge; edge e carries label e + 1
    """
    num_vertices: int
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.num_vertices < 1:
            raise InvalidInputError("base graph needs at least one vertex")
        for u, v in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise InvalidInputError(f"edge {(u, v)} has an endpoint outside the graph")
        if not nx.is_connected(self.to_networkx()):
            raise InvalidInputError("base graph must be connected")

    @classmethod
    def bouquet(cls, k: int) -> "BaseGraph":
        return cls(1, tuple((0, 0) for _ in range(k)))

    @classmethod
    def figure_eight(cls) -> "BaseGraph":
        return cls.bouquet(2)

    @classmethod
    def barbell(cls) -> "BaseGraph":
        return cls(2, ((0, 0), (0, 1), (1, 1)))

    @classmethod
    def theta(cls) -> "BaseGraph":
        return cls.dipole(3)

    @classmethod
    def dipole(cls, d: int) -> "BaseGraph":
        """Two vertices joined by d parallel edges; its covers are the bipartite d-regular graphs."""
        return cls(2, tuple((0, 1) for _ in range(d)))

    @classmethod
    def from_dict(cls, data: dict) -> "BaseGraph":
        try:
            index = {v: i for i, v in enumerate(data["vertices"])}
            edges = tuple((index[u], index[v]) for u, v in data["edges"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed base graph: {exc}") from None
        return cls(len(index), edges)

    def to_dict(self) -> dict:
        return {"vertices": list(range(self.num_vertices)), "edges": [list(e) for e in self.edges]}

    @property
    def k(self) -> int:
        return len(self.edges)

    @property
    def rank(self) -> int:
        return len(self.edges) - self.num_vertices + 1

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.num_vertices, self.num_vertices), dtype=np.int64)
        for u, v in self.edges:
            A[u, v] += 1
            A[v, u] += 1
        return A

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def is_regular(self) -> bool:
        return len(set(self.degrees().tolist())) == 1

    def perron(self) -> float:
        """Largest adjacency eigenvalue pf(A)."""
        return float(np.linalg.eigvalsh(self.adjacency().astype(float))[-1])

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.num_vertices))
        g.add_edges_from(self.edges)
        return g

    def is_closed_path(self, codes: Sequence[int], start: Optional[int] = None) -> bool:
        try:
            visited = self.walk(codes, start)
        except InvalidInputError:
            return False
        return visited[0] == visited[-1]

    def walk(self, codes: Sequence[int], start: Optional[int] = None) -> List[int]:
        """Vertices visited by a path of signed edge codes."""
        if not codes:
            if start is None:
                raise InvalidInputError("an empty path needs a start vertex")
            return [start]
        first = self.edges[abs(codes[0]) - 1]
        v = (first[0] if codes[0] > 0 else first[1]) if start is None else start
        visited = [v]
        for code in codes:
            if code == 0 or abs(code) > self.k:
                raise InvalidInputError(f"edge code {code} outside 1..{self.k}")
            u, w = self.edges[abs(code) - 1]
            origin, terminus = (u, w) if code > 0 else (w, u)
            if origin != v:
                raise InvalidInputError(f"path breaks at edge code {code}")
            v = terminus
            visited.append(v)
        return visited


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """Undirected multigraph as a symmetric integer adjacency matrix (loops count 2)."""
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidInputError("adjacency must be square")
        if not np.array_equal(A, A.T):
            raise InvalidInputError("adjacency must be symmetric")
        if np.any(A < 0) or np.any(np.diag(A) % 2):
            raise InvalidInputError("adjacency entries must be >= 0 with even diagonal")

    @property
    def num_vertices(self) -> int:
        return int(self.adjacency.shape[0])

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def is_regular(self, d: Optional[int] = None) -> bool:
        degs = set(self.degrees().tolist())
        return len(degs) == 1 and (d is None or degs == {d})

    def is_simple(self) -> bool:
        return not np.any(np.diag(self.adjacency)) and int(self.adjacency.max(initial=0)) <= 1

    def loop_count(self) -> int:
        return int(np.diag(self.adjacency).sum() // 2)

    def edge_list(self) -> List[Tuple[int, int]]:
        """Edges with multiplicity, u <= v."""
        out = []
        for u in range(self.num_vertices):
            out += [(u, u)] * int(self.adjacency[u, u] // 2)
            for v in range(u + 1, self.num_vertices):
                out += [(u, v)] * int(self.adjacency[u, v])
        return out

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(range(self.num_vertices))
        g.add_edges_from(self.edge_list())
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_dict(self) -> dict:
        return {"vertices": self.num_vertices, "adjacency": self.adjacency.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "MultiGraph":
        try:
            return cls(np.asarray(data["adjacency"], dtype=np.int64))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed graph: {exc}") from None

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["u", "v"])
        writer.writerows(self.edge_list())
        return buffer.getvalue()

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Sequence[Tuple[int, int]]) -> "MultiGraph":
        A = np.zeros((num_vertices, num_vertices), dtype=np.int64)
        for u, v in edges:
            A[u, v] += 1
            A[v, u] += 1
        return cls(A)

    @classmethod
    def from_csv(cls, text: str, num_vertices: Optional[int] = None) -> "MultiGraph":
        rows = list(csv.reader(io.StringIO(text)))
        edges = []
        for line_no, row in enumerate(rows[1:], start=2):
            try:
                u, v = int(row[0]), int(row[1])
            except (IndexError, ValueError):
                raise InvalidInputError(f"malformed edge on line {line_no}: {row}") from None
            edges.append((u, v))
        n = num_vertices if num_vertices is not None else 1 + max((max(e) for e in edges), default=-1)
        return cls.from_edges(n, edges)


@dataclass(frozen=True, eq=False)
class CoverGraph:
    """
    An n-sheeted cover of a base graph.

    Attributes:
        base: The base graph
        n: Number of sheets
        sigma: One 0-based permutation array of [n] per base edge
    """
    base: BaseGraph
    n: int
    sigma: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError(f"sheet count must be >= 1, got {self.n}")
        if len(self.sigma) != self.base.k:
            raise InvalidInputError(f"need {self.base.k} permutations, got {len(self.sigma)}")
        for s in self.sigma:
            if sorted(np.asarray(s).tolist()) != list(range(self.n)):
                raise InvalidInputError("sigma entries must be permutations of range(n)")

    @property
    def num_vertices(self) -> int:
        return self.base.num_vertices * self.n

    def vertex(self, v: int, i: int) -> int:
        return v * self.n + i

    def projection(self) -> np.ndarray:
        """Base vertex under every cover vertex."""
        return np.arange(self.num_vertices) // self.n

    def permutations(self) -> List[Permutation]:
        return [Permutation.from_array(s) for s in self.sigma]

    def adjacency(self) -> np.ndarray:
        N = self.num_vertices
        A = np.zeros((N, N), dtype=np.int64)
        sheets = np.arange(self.n)
        for (u, v), s in zip(self.base.edges, self.sigma):
            rows = u * self.n + sheets
            cols = v * self.n + np.asarray(s)
            np.add.at(A, (rows, cols), 1)
            np.add.at(A, (cols, rows), 1)
        return A

    def to_multigraph(self) -> MultiGraph:
        return MultiGraph(self.adjacency())

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)


# =============================================================================
# SAMPLERS
# =============================================================================

def _rejection(draw: Callable[[], T], is_simple: Callable[[T], bool], max_attempts: int) -> T:
    for attempt in range(1, max_attempts + 1):
        sample = draw()
        if is_simple(sample):
            if attempt > 1:
                logger.debug(f"Simple sample after {attempt} attempts")
            return sample
    raise GuardExceededError("max_attempts", max_attempts + 1, max_attempts, "no simple sample found")


def sample_cover(
    base: BaseGraph,
    n: int,
    rng: np.random.Generator,
    simple: bool = False,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    guards: Optional[GuardConfig] = None,
) -> CoverGraph:
    """Random n-sheeted cover: one independent uniform permutation per base edge."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")

    def draw() -> CoverGraph:
        return CoverGraph(base, n, tuple(rng.permutation(n) for _ in base.edges))

    if simple:
        resolve_guards(guards).check(
            "dense_dimension_limit", base.num_vertices * n, "simple covers are checked densely"
        )
        return _rejection(draw, lambda c: c.to_multigraph().is_simple(), max_attempts)
    return draw()


def sample_permutation_model(
    n: int,
    d: int,
    rng: np.random.Generator,
    simple: bool = False,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    guards: Optional[GuardConfig] = None,
) -> CoverGraph:
    """d-regular graph on n vertices from d/2 uniform permutations (a cover of the bouquet)."""
    if d < 2 or d % 2:
        raise InvalidInputError(
            f"permutation model needs even d >= 2, got d={d}; use sample_perm_plus_matching for odd d"
        )
    return sample_cover(BaseGraph.bouquet(d // 2), n, rng, simple, max_attempts, guards)


def _matching_pairs(points: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform perfect matching of range(points) as a (points/2, 2) array."""
    return rng.permutation(points).reshape(-1, 2)


def sample_matching_model(
    n: int,
    d: int,
    rng: np.random.Generator,
    simple: bool = False,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    guards: Optional[GuardConfig] = None,
) -> MultiGraph:
    """Configuration model: dn points, point p on vertex p // d, a uniform perfect matching."""
    if n < 1 or d < 1:
        raise InvalidInputError(f"need n, d >= 1, got n={n}, d={d}")
    if (n * d) % 2:
        raise InvalidInputError(f"d*n must be even, got d={d}, n={n}")
    resolve_guards(guards).check("dense_dimension_limit", n, "matching model adjacency")

    def draw() -> MultiGraph:
        pairs = _matching_pairs(n * d, rng) // d
        A = np.zeros((n, n), dtype=np.int64)
        np.add.at(A, (pairs[:, 0], pairs[:, 1]), 1)
        np.add.at(A, (pairs[:, 1], pairs[:, 0]), 1)
        return MultiGraph(A)

    if simple:
        return _rejection(draw, MultiGraph.is_simple, max_attempts)
    return draw()


def sample_perm_plus_matching(
    n: int,
    d: int,
    rng: np.random.Generator,
    simple: bool = False,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    guards: Optional[GuardConfig] = None,
) -> MultiGraph:
    """Odd d: (d-1)/2 uniform permutations of [n] plus one uniform perfect matching of [n]."""
    if d < 1 or d % 2 == 0:
        raise InvalidInputError(f"perm+matching model needs odd d, got d={d}")
    if n < 2 or n % 2:
        raise InvalidInputError(f"perm+matching model needs even n >= 2, got n={n}")
    resolve_guards(guards).check("dense_dimension_limit", n, "perm+matching model adjacency")

    def draw() -> MultiGraph:
        A = np.zeros((n, n), dtype=np.int64)
        sheets = np.arange(n)
        for _ in range((d - 1) // 2):
            s = rng.permutation(n)
            np.add.at(A, (sheets, s), 1)
            np.add.at(A, (s, sheets), 1)
        pairs = _matching_pairs(n, rng)
        np.add.at(A, (pairs[:, 0], pairs[:, 1]), 1)
        np.add.at(A, (pairs[:, 1], pairs[:, 0]), 1)
        return MultiGraph(A)

    if simple:
        return _rejection(draw, MultiGraph.is_simple, max_attempts)
    return draw()


# =============================================================================
# LIFTS
# =============================================================================

def path_word(base: BaseGraph, codes: Sequence[int]) -> Word:
    """The word of a base path over the alphabet of base edges."""
    return Word(tuple(codes), max(base.k, 1))


def closed_lift_count(codes: Sequence[int], cover: CoverGraph, start: Optional[int] = None) -> int:
    """Closed lifts of a closed base path = fixed points of its word on the cover's permutations."""
    walk = cover.base.walk(codes, start)
    if walk[0] != walk[-1]:
        raise InvalidInputError("path is not closed")
    if not codes:
        return cover.n
    return fixed_points(evaluate_word(path_word(cover.base, codes), cover.permutations()))


def lift_path(codes: Sequence[int], cover: CoverGraph, sheet: int, start: Optional[int] = None) -> List[int]:
    """Cover vertices visited by the lift of a base path starting on `sheet`."""
    walk = cover.base.walk(codes, start)
    i = sheet
    out = [cover.vertex(walk[0], i)]
    inverses = {}
    for code, v in zip(codes, walk[1:]):
        e = abs(code) - 1
        if code > 0:
            i = int(cover.sigma[e][i])
        else:
            if e not in inverses:
                inverses[e] = np.argsort(cover.sigma[e])
            i = int(inverses[e][i])
        out.append(cover.vertex(v, i))
    return out


def explicit_lift_count(codes: Sequence[int], cover: CoverGraph, start: Optional[int] = None) -> int:
    """closed_lift_count computed by lifting the path from every sheet."""
    count = 0
    for i in range(cover.n):
        lifted = lift_path(codes, cover, i, start)
        count += lifted[0] == lifted[-1]
    return count
