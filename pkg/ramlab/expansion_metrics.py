"""
ramlab - Expansion metrics

Cheeger constant, conductance and the spectral inequalities tied to them,
checked exhaustively over vertex subsets (subsets are bitmasks, vertex v is
bit v). E(S, T) counts ordered incidences: an edge with both ends in S and T
is counted once per direction, so E(S, S) = 1_S^T A 1_S.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Tuple

import numpy as np

from ramlab.config import GuardConfig, resolve_guards
from ramlab.errors import InvalidInputError
from ramlab.random_covers import CoverGraph, MultiGraph
from ramlab.spectral import (
    laplacian_spectrum,
    markov_spectrum,
    new_spectrum,
)

logger = logging.getLogger(__name__)

CHUNK = 1 << 14
ROW_CHUNK = 256
TOLERANCE = 1e-9


def _subset_rows(n: int, start: int, stop: int) -> np.ndarray:
    masks = np.arange(start, stop, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def _subset_chunks(n: int, include_empty: bool = False) -> Iterator[np.ndarray]:
    start = 0 if include_empty else 1
    total = 1 << n
    for lo in range(start, total, CHUNK):
        yield _subset_rows(n, lo, min(total, lo + CHUNK))


def _fraction(num: float, den: float) -> Fraction:
    return Fraction(int(round(num)), int(round(den)))


def cheeger_and_conductance(g: MultiGraph, guards: Optional[GuardConfig] = None) -> Tuple[Fraction, Fraction]:
    """
    Exact (h, phi) by scanning every vertex subset.

    h = min |E(S, S^c)| / |S| over 0 < |S| <= |V|/2 and
    phi = min |E(S, S^c)| / deg(S) over 0 < deg(S) <= deg(V)/2.
    """
    n = g.num_vertices
    resolve_guards(guards).check("subset_vertex_limit", n, f"2^{n} vertex subsets")
    if n < 2:
        raise InvalidInputError("Cheeger constant needs at least two vertices")
    if not g.is_connected():
        raise InvalidInputError("Cheeger constant needs a connected graph")
    A = g.adjacency.astype(float)
    deg = A.sum(axis=1)
    volume = deg.sum()
    best_h = (math.inf, 1.0, 1.0)
    best_phi = (math.inf, 1.0, 1.0)
    for X in _subset_chunks(n):
        size = X.sum(axis=1)
        cut = ((X @ A) * (1 - X)).sum(axis=1)
        vol = X @ deg
        ok = size <= n / 2
        if ok.any():
            ratio = np.where(ok, cut / np.maximum(size, 1), np.inf)
            i = int(np.argmin(ratio))
            if ratio[i] < best_h[0]:
                best_h = (float(ratio[i]), cut[i], size[i])
        ok = (vol > 0) & (vol <= volume / 2)
        if ok.any():
            ratio = np.where(ok, cut / np.maximum(vol, 1), np.inf)
            i = int(np.argmin(ratio))
            if ratio[i] < best_phi[0]:
                best_phi = (float(ratio[i]), cut[i], vol[i])
    return _fraction(best_h[1], best_h[2]), _fraction(best_phi[1], best_phi[2])


# =============================================================================
# MIXING
# =============================================================================

@dataclass(frozen=True)
class MixingReport:
    """
    Attributes:
        max_slack: max over (S, T) of |deviation| - bound; <= 0 when the lemma holds
        violations: Pairs with slack above tolerance
        pairs: Number of (S, T) pairs checked
    """
    max_slack: float
    violations: int
    pairs: int

    @property
    def holds(self) -> bool:
        return self.violations == 0


def _mixing_scan(
    A: np.ndarray, expected_form: np.ndarray, weight: np.ndarray, lam: float
) -> MixingReport:
    """
    Check |1_S^T A 1_T - 1_S^T K 1_T| <= lam * sqrt(w(S) w(T)) for all S, T,
    where K = expected_form and w(S) = sum of weight over S.
    """
    n = A.shape[0]
    all_sets = _subset_rows(n, 0, 1 << n)
    w_all = all_sets @ weight
    deviation_form = A - expected_form
    right = deviation_form @ all_sets.T
    max_slack = -math.inf
    violations = 0
    for lo in range(0, 1 << n, ROW_CHUNK):
        X = all_sets[lo:lo + ROW_CHUNK]
        lhs = np.abs(X @ right)
        rhs = lam * np.sqrt(np.outer(X @ weight, w_all))
        slack = lhs - rhs
        max_slack = max(max_slack, float(slack.max()))
        violations += int(np.count_nonzero(slack > TOLERANCE))
    return MixingReport(max_slack, violations, (1 << n) ** 2)


def adjacency_mixing(g: MultiGraph, guards: Optional[GuardConfig] = None) -> MixingReport:
    """|E(S,T) - pf vol(S) vol(T)| <= lambda sqrt(|S||T|), vol along the unit Perron vector."""
    n = g.num_vertices
    resolve_guards(guards).check("mixing_vertex_limit", n, f"4^{n} subset pairs")
    A = g.adjacency.astype(float)
    values, vectors = np.linalg.eigh(A)
    pf = float(values[-1])
    f = np.abs(vectors[:, -1])
    lam = float(max(values[-2], -values[0])) if n > 1 else 0.0
    return _mixing_scan(A, pf * np.outer(f, f), np.ones(n), lam)


def markov_mixing(g: MultiGraph, guards: Optional[GuardConfig] = None) -> MixingReport:
    """|E(S,T) - deg(S) deg(T) / 2|E|| <= mu sqrt(deg(S) deg(T))."""
    n = g.num_vertices
    resolve_guards(guards).check("mixing_vertex_limit", n, f"4^{n} subset pairs")
    A = g.adjacency.astype(float)
    deg = A.sum(axis=1)
    mu_values = markov_spectrum(g, guards)
    mu = float(max(mu_values[1], -mu_values[-1])) if n > 1 else 0.0
    return _mixing_scan(A, np.outer(deg, deg) / deg.sum(), deg, mu)


def cover_mixing_check(cover: CoverGraph, guards: Optional[GuardConfig] = None) -> MixingReport:
    """
    Mixing for a cover with the pulled-back base spectrum as the trivial part:
    |E(S,T) - 1_S^T P A P 1_T| <= lambda_A_new sqrt(|S||T|), P the projection
    onto fiber-constant functions.
    """
    N = cover.num_vertices
    resolve_guards(guards).check("mixing_vertex_limit", N, f"4^{N} subset pairs")
    if cover.n < 2:
        raise InvalidInputError("cover mixing needs at least two sheets")
    A = cover.adjacency().astype(float)
    fibers = np.zeros((N, cover.base.num_vertices))
    fibers[np.arange(N), cover.projection()] = 1.0 / math.sqrt(cover.n)
    P = fibers @ fibers.T
    lam = new_spectrum(cover, "adjacency", guards).lambda_A_new
    return _mixing_scan(A, P @ A @ P, np.ones(N), float(lam))


# =============================================================================
# INEQUALITY SUITE
# =============================================================================

@dataclass(frozen=True)
class ExpansionReport:
    """
    Attributes:
        h: Cheeger constant
        phi: Conductance
        nu2: Second smallest Laplacian eigenvalue
        mu2: Second largest Markov eigenvalue
        max_degree: k in h^2 / 2k <= nu2
        conductance_sandwich: phi^2 / 2 <= 1 - mu2 <= 2 phi
        cheeger_sandwich: h^2 / 2k <= nu2 <= 2 h
        mixing: Adjacency mixing lemma over all subset pairs
        markov_mixing: Markov mixing lemma over all subset pairs
    """
    h: Fraction
    phi: Fraction
    nu2: float
    mu2: float
    max_degree: int
    conductance_sandwich: bool
    cheeger_sandwich: bool
    mixing: MixingReport
    markov_mixing: MixingReport

    @property
    def passed(self) -> bool:
        return (self.conductance_sandwich and self.cheeger_sandwich
                and self.mixing.holds and self.markov_mixing.holds)

    def to_dict(self) -> dict:
        return {
            "h": f"{self.h.numerator}/{self.h.denominator}",
            "phi": f"{self.phi.numerator}/{self.phi.denominator}",
            "nu2": round(self.nu2, 12),
            "mu2": round(self.mu2, 12),
            "max_degree": self.max_degree,
            "conductance_sandwich": self.conductance_sandwich,
            "cheeger_sandwich": self.cheeger_sandwich,
            "mixing_max_slack": round(self.mixing.max_slack, 12),
            "mixing_violations": self.mixing.violations,
            "markov_mixing_max_slack": round(self.markov_mixing.max_slack, 12),
            "markov_mixing_violations": self.markov_mixing.violations,
            "passed": self.passed,
        }


def inequality_suite(g: MultiGraph, guards: Optional[GuardConfig] = None) -> ExpansionReport:
    """Both Cheeger sandwiches and both mixing lemmas, exhaustively."""
    h, phi = cheeger_and_conductance(g, guards)
    nu2 = float(laplacian_spectrum(g, guards)[-2])
    mu2 = float(markov_spectrum(g, guards)[1])
    k = int(g.degrees().max())
    phi_f, h_f = float(phi), float(h)
    conductance_ok = phi_f ** 2 / 2 - TOLERANCE <= 1 - mu2 <= 2 * phi_f + TOLERANCE
    cheeger_ok = h_f ** 2 / (2 * k) - TOLERANCE <= nu2 <= 2 * h_f + TOLERANCE
    report = ExpansionReport(
        h, phi, nu2, mu2, k, conductance_ok, cheeger_ok, adjacency_mixing(g, guards), markov_mixing(g, guards)
    )
    if not report.passed:
        logger.warning(f"Expansion inequalities failed: {report.to_dict()}")
    return report
