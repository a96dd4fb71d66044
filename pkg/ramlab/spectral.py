"""
ramlab - Spectra

Full symmetric spectra (LAPACK via numpy.linalg.eigvalsh, deterministic),
non-trivial and new eigenvalues of covers, the spectral radius of the
universal covering tree, the cogrowth function and closed-walk counts.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ramlab.config import GuardConfig, resolve_guards
from ramlab.errors import InvalidInputError
from ramlab.random_covers import BaseGraph, CoverGraph, MultiGraph

logger = logging.getLogger(__name__)

GraphLike = Union[MultiGraph, CoverGraph, BaseGraph, np.ndarray]

OPERATORS = ("adjacency", "markov")


def adjacency_of(g: GraphLike) -> np.ndarray:
    if isinstance(g, MultiGraph):
        return g.adjacency
    if isinstance(g, (CoverGraph, BaseGraph)):
        return g.adjacency()
    return np.asarray(g)


# =============================================================================
# SPECTRA
# =============================================================================

def symmetric_spectrum(matrix: np.ndarray, guards: Optional[GuardConfig] = None) -> np.ndarray:
    """All eigenvalues of a real symmetric matrix, in descending order."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"matrix must be square, got shape {M.shape}")
    resolve_guards(guards).check("dense_dimension_limit", M.shape[0])
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * scale):
        raise InvalidInputError("matrix is not symmetric")
    return np.linalg.eigvalsh(M)[::-1]


def markov_matrix(g: GraphLike) -> np.ndarray:
    """Symmetric normalization Q = D^-1/2 A D^-1/2 (same spectrum as D^-1 A)."""
    A = adjacency_of(g).astype(float)
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise InvalidInputError("Markov operator needs every vertex to have positive degree")
    inv_sqrt = 1.0 / np.sqrt(deg)
    return inv_sqrt[:, None] * A * inv_sqrt[None, :]


def laplacian_matrix(g: GraphLike) -> np.ndarray:
    """Combinatorial Laplacian D - A."""
    A = adjacency_of(g).astype(float)
    return np.diag(A.sum(axis=1)) - A


def adjacency_spectrum(g: GraphLike, guards: Optional[GuardConfig] = None) -> np.ndarray:
    return symmetric_spectrum(adjacency_of(g), guards)


def markov_spectrum(g: GraphLike, guards: Optional[GuardConfig] = None) -> np.ndarray:
    return symmetric_spectrum(markov_matrix(g), guards)


def laplacian_spectrum(g: GraphLike, guards: Optional[GuardConfig] = None) -> np.ndarray:
    return symmetric_spectrum(laplacian_matrix(g), guards)


def _second_extreme(eigs: np.ndarray) -> Optional[float]:
    if len(eigs) < 2:
        return None
    return float(max(eigs[1], -eigs[-1]))


def lambda_nontrivial(g: GraphLike, guards: Optional[GuardConfig] = None) -> Optional[float]:
    """max(lambda_2, -lambda_n) of a regular graph; None for a single vertex."""
    A = adjacency_of(g)
    if len(set(A.sum(axis=1).tolist())) > 1:
        raise InvalidInputError("lambda_nontrivial needs a regular graph")
    return _second_extreme(symmetric_spectrum(A, guards))


def mu_nontrivial(g: GraphLike, guards: Optional[GuardConfig] = None) -> Optional[float]:
    """max(mu_2, -mu_n) of the Markov operator."""
    return _second_extreme(markov_spectrum(g, guards))


# =============================================================================
# NEW EIGENVALUES OF COVERS
# =============================================================================

def helmert_basis(n: int) -> np.ndarray:
    """n x (n-1) orthonormal basis of the vectors in R^n summing to zero."""
    H = np.zeros((n, n - 1))
    for j in range(1, n):
        H[:j, j - 1] = 1.0 / math.sqrt(j * (j + 1))
        H[j, j - 1] = -j / math.sqrt(j * (j + 1))
    return H


def fiber_zero_basis(num_base_vertices: int, n: int) -> np.ndarray:
    """Orthonormal basis of the functions summing to zero on every fiber (vertex v*n+i)."""
    return np.kron(np.eye(num_base_vertices), helmert_basis(n))


@dataclass(frozen=True)
class SpectrumReport:
    """
    Attributes:
        operator: "adjacency" or "markov"
        eigenvalues: Full spectrum of the chosen operator, descending
        new_eigenvalues: Spectrum on the fiber-sum-zero subspace, None when n = 1
        lambda_nontrivial: max(lambda_2, -lambda_n) of the chosen operator when regular
        lambda_A_new: Largest |new eigenvalue| of the adjacency operator
        lambda_M_new: Largest |new eigenvalue| of the Markov operator
    """
    operator: str
    eigenvalues: np.ndarray
    new_eigenvalues: Optional[np.ndarray]
    lambda_nontrivial: Optional[float]
    lambda_A_new: Optional[float]
    lambda_M_new: Optional[float]

    def to_dict(self) -> dict:
        def fix(x):
            return None if x is None else round(float(x), 12)

        return {
            "operator": self.operator,
            "eigenvalues": [fix(x) for x in self.eigenvalues],
            "new_eigenvalues": (
                None if self.new_eigenvalues is None else [fix(x) for x in self.new_eigenvalues]
            ),
            "lambda_nontrivial": fix(self.lambda_nontrivial),
            "lambda_A_new": fix(self.lambda_A_new),
            "lambda_M_new": fix(self.lambda_M_new),
        }


def compressed_spectrum(operator: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Spectrum of B^T Op B for an orthonormal basis B of an invariant subspace."""
    compressed = basis.T @ operator @ basis
    return np.linalg.eigvalsh((compressed + compressed.T) / 2)[::-1]


def new_spectrum(
    cover: CoverGraph, operator: str = "adjacency", guards: Optional[GuardConfig] = None
) -> SpectrumReport:
    """
    Eigenvalues of the cover on the functions that sum to zero on every fiber.

    Fibers are permuted along every edge and degrees are constant on fibers,
    so the subspace is invariant under both operators.
    """
    if operator not in OPERATORS:
        raise InvalidInputError(f"operator must be one of {OPERATORS}, got {operator!r}")
    resolve_guards(guards).check("dense_dimension_limit", cover.num_vertices, "cover adjacency")
    A = cover.adjacency().astype(float)
    Q = markov_matrix(A)
    full = symmetric_spectrum(A if operator == "adjacency" else Q, guards)
    regular = len(set(A.sum(axis=1).tolist())) == 1
    nontrivial = _second_extreme(full) if regular else None
    if cover.n == 1:
        return SpectrumReport(operator, full, None, nontrivial, None, None)
    basis = fiber_zero_basis(cover.base.num_vertices, cover.n)
    new_A = compressed_spectrum(A, basis)
    new_Q = compressed_spectrum(Q, basis)
    return SpectrumReport(
        operator,
        full,
        new_A if operator == "adjacency" else new_Q,
        nontrivial,
        float(np.abs(new_A).max()),
        float(np.abs(new_Q).max()),
    )


def base_spectrum(cover: CoverGraph, operator: str = "adjacency") -> np.ndarray:
    """Spectrum of the base operator, i.e. the eigenvalues pulled back along the projection."""
    A = cover.base.adjacency()
    return symmetric_spectrum(A if operator == "adjacency" else markov_matrix(A))


# =============================================================================
# UNIVERSAL COVER
# =============================================================================

def _directed_edges(base: BaseGraph) -> List[Tuple[int, int]]:
    """(origin, terminus) of both orientations of every edge; index 2e and 2e+1."""
    out = []
    for u, v in base.edges:
        out += [(u, v), (v, u)]
    return out


def _ball_is_below(base: BaseGraph, lam: float, depth: int, weights: np.ndarray) -> bool:
    """
    True iff lam*I - A is positive definite on every depth-`depth` ball of the tree.

    Gaussian elimination from the leaves: a tree node entered along directed
    edge f with h levels beneath it has pivot
        a_f(h) = lam - sum over continuations g of f of w_g^2 / a_g(h - 1),
    with a_f(0) = lam. A root at v has pivot lam - sum_{g out of v} w_g^2 / a_g(depth - 1).
    """
    darts = _directed_edges(base)
    followers = [
        [g for g, (o, _) in enumerate(darts) if o == t and g != (f ^ 1)]
        for f, (_, t) in enumerate(darts)
    ]
    w2 = weights ** 2
    pivots = np.full(len(darts), lam)
    for _ in range(depth - 1):
        if np.any(pivots <= 0):
            return False
        pivots = np.array([lam - sum(w2[g] / pivots[g] for g in followers[f]) for f in range(len(darts))])
    if np.any(pivots <= 0):
        return False
    for v in range(base.num_vertices):
        root = lam - sum(w2[g] / pivots[g] for g, (o, _) in enumerate(darts) if o == v)
        if root <= 0:
            return False
    return True


def rho_universal_cover(
    base: BaseGraph, depth: int = 100, operator: str = "adjacency", tol: float = 1e-12
) -> Tuple[float, Optional[float]]:
    """
    Perron eigenvalue of the depth-R ball of the universal covering tree,
    maximised over the root, and the exact radius when the base is regular.

    The estimate is nondecreasing in R and approaches rho from below with
    error O(1/R^2).
    """
    if depth < 1:
        raise InvalidInputError(f"depth must be >= 1, got {depth}")
    if operator not in OPERATORS:
        raise InvalidInputError(f"operator must be one of {OPERATORS}, got {operator!r}")
    if not base.edges:
        return 0.0, 0.0
    deg = base.degrees()
    darts = _directed_edges(base)
    if operator == "adjacency":
        weights = np.ones(len(darts))
        hi = float(deg.max())
    else:
        weights = np.array([1.0 / math.sqrt(deg[o] * deg[t]) for o, t in darts])
        hi = 1.0
    lo = 0.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if _ball_is_below(base, mid, depth, weights):
            hi = mid
        else:
            lo = mid
    exact = None
    if base.is_regular():
        d = int(deg[0])
        exact = 2 * math.sqrt(d - 1) if operator == "adjacency" else 2 * math.sqrt(d - 1) / d
    logger.debug(f"rho estimate {hi} at depth {depth}")
    return hi, exact


# =============================================================================
# WALK COUNTS
# =============================================================================

def tree_closed_walks(d: int, t: int) -> int:
    """Closed walks of length t at the root of the d-regular tree."""
    if t < 0:
        raise InvalidInputError(f"t must be >= 0, got {t}")
    dist = [1]
    for _ in range(t):
        nxt = [0] * (len(dist) + 1)
        for j, ways in enumerate(dist):
            if not ways:
                continue
            nxt[j + 1] += ways * (d if j == 0 else d - 1)
            if j > 0:
                nxt[j - 1] += ways
        dist = nxt
    return dist[0]


def cogrowth_unchecked(alpha: float, d: int) -> float:
    """g(alpha) without the domain checks; alpha = -1 gives the m = 0 bound term."""
    root = math.sqrt(d - 1)
    return 2 * root if alpha <= root else (d - 1) / alpha + alpha


def cogrowth_g(alpha: float, d: int) -> float:
    """g(alpha) = 2 sqrt(d-1) for alpha <= sqrt(d-1), else (d-1)/alpha + alpha; 1 <= alpha <= d-1."""
    if d < 2:
        raise InvalidInputError(f"d must be >= 2, got {d}")
    if not 1 <= alpha <= d - 1:
        raise InvalidInputError(f"alpha must lie in [1, {d - 1}], got {alpha}")
    return cogrowth_unchecked(alpha, d)


def trace_power(g: GraphLike, t: int) -> int:
    """tr(A^t) in exact integer arithmetic."""
    A = adjacency_of(g).astype(object)
    P = np.identity(A.shape[0], dtype=object)
    for _ in range(t):
        P = P.dot(A)
    return int(np.trace(P))


def closed_path_count(g: GraphLike, t: int, guards: Optional[GuardConfig] = None) -> int:
    """|CP_t| by explicit enumeration; each loop can be traversed in either direction."""
    A = adjacency_of(g)
    n = A.shape[0]
    max_deg = int(A.sum(axis=1).max(initial=0))
    resolve_guards(guards).check("enumeration_limit", n * max_deg ** t, f"closed paths of length {t}")
    darts: List[List[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in range(n):
            darts[u] += [v] * int(A[u, v])

    def walks(v: int, start: int, remaining: int) -> int:
        if remaining == 0:
            return int(v == start)
        return sum(walks(u, start, remaining - 1) for u in darts[v])

    return sum(walks(v, v, t) for v in range(n))


def spectral_power_sum(eigenvalues: Sequence[float], t: int) -> float:
    return float(np.sum(np.asarray(eigenvalues, dtype=float) ** t))
