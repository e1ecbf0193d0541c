"""Stratified flat geometry of the degeneration locus.

The base carries a family of affine strata indexed by subsets I of the
label set {0, ..., N} with at least two members: the image of the
coordinate planes where the labelled coordinates vanish upstairs.  In the
anisotropic flat metric induced by an SPD matrix A, distances to strata,
feet of perpendiculars, and the region decomposition used by the gluing
construction are all exactly computable, and this module computes them.

Subsets not containing the label 0 are handled through the involutive
change of basis that swaps label 0 with the smallest member; the change
preserves A-distances and determinants, so every formula below is stated
for subsets containing 0 and applied after the swap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .geometry import BasePoint, IndexSet, QuadForm, anorm, block, schur_complement

__all__ = [
    "Projection",
    "RegionConstants",
    "RegionReport",
    "zero_swap",
    "project",
    "dist_closed_stratum",
    "dist_boundary",
    "dist_locus",
    "region_membership",
    "rho_IJ",
    "all_strata",
]


@dataclass(frozen=True)
class Projection:
    """Foot of the perpendicular from a point onto a stratum's affine hull.

    ``nu`` lists the transverse coordinates of the foot (in the swapped
    frame when the subset misses 0); the foot lies on the stratum itself
    precisely when every entry is positive, and in that case ``dist`` is
    the distance to the stratum.  It is always the distance to the hull.
    """

    foot: BasePoint
    interior: bool
    nu: np.ndarray
    dist: float
    subset: IndexSet


def _chat_default(n: int, cond: float) -> float:
    # comparison constant for foot-vs-point stratum distances; any valid
    # upper bound works, a larger one only shrinks the innermost regions
    return 1.0 + cond ** (0.5 * (n + 2))


@dataclass(frozen=True)
class RegionConstants:
    """Constants steering the covering regions.

    c0 is the main aspect-ratio constant, c_hat the foot-comparison
    constant (computed from A's condition number when not supplied),
    c_levels the per-depth separation thresholds, c_prime the collar
    margin for the gluing cutoff.
    """

    c0: float = 32.0
    c_hat: float | None = None
    c_levels: tuple[float, ...] = ()
    c_prime: float | None = None

    def __post_init__(self) -> None:
        if self.c0 <= 1.0:
            raise ValueError("c0 must exceed 1")
        if self.c_hat is not None and not (1.0 < self.c_hat < self.c0):
            raise ValueError("need c0 > c_hat > 1")
        if any(b <= a for a, b in zip(self.c_levels, self.c_levels[1:])):
            raise ValueError("c_levels must increase")

    def chat(self, A: QuadForm) -> float:
        if self.c_hat is not None:
            return self.c_hat
        return _chat_default(A.n, A.condition)

    def level(self, s: int) -> float:
        if self.c_levels:
            return self.c_levels[min(s - 1, len(self.c_levels) - 1)]
        return 64.0 * 16.0 ** (s - 1)

    def cprime(self) -> float:
        return self.c_prime if self.c_prime is not None else 4.0 * self.c0 ** 2


def all_strata(N: int, min_size: int = 2, max_size: int | None = None) -> list[IndexSet]:
    """Every stratum index subset of {0..N} within the given size range."""
    hi = N + 1 if max_size is None else max_size
    out = []
    for k in range(min_size, hi + 1):
        for members in combinations(range(N + 1), k):
            out.append(IndexSet(members))
    return out


def zero_swap(A: QuadForm, I: IndexSet, p: BasePoint
              ) -> tuple[QuadForm, IndexSet, BasePoint, np.ndarray]:
    """Normalize so the subset contains label 0.

    Returns (A', I', p', S) where S is the involutive matrix with
    mu' = S mu, A' = S^T A S and I' containing 0.  Distances to strata and
    det A are preserved; S is the identity when 0 is already a member.
    """
    N = A.n
    I.require_stratum(N)
    if p.N != N:
        raise ValueError("point dimension does not match the form")
    S = np.eye(N)
    if I.contains_zero:
        return A, I, p, S
    i1 = I.members[0]
    S[:, i1 - 1] = -1.0
    A2 = QuadForm(S.T @ A.entries @ S)
    members = (0,) + tuple(m for m in I.members if m != i1)
    p2 = BasePoint(S @ p.mu, p.eta)
    return A2, IndexSet(members), p2, S


def _hull_data(A: QuadForm, I: IndexSet, p: BasePoint
               ) -> tuple[np.ndarray, float, tuple[int, ...], QuadForm]:
    """nu, hull distance, transverse labels; assumes 0 in I."""
    N = A.n
    act = I.active
    comp = I.active_complement(N)
    G = schur_complement(A, I)
    mu_I = p.mu[[a - 1 for a in act]]
    if comp:
        A_cc = block(A.entries, comp, comp)
        A_cI = block(A.entries, comp, act)
        nu = p.mu[[c - 1 for c in comp]] + np.linalg.solve(A_cc, A_cI @ mu_I)
    else:
        nu = np.zeros(0)
    d2 = float(mu_I @ G.entries @ mu_I) + A.det * abs(p.eta) ** 2
    return nu, float(np.sqrt(max(d2, 0.0))), comp, G


def project(A: QuadForm, I: IndexSet, p: BasePoint) -> Projection:
    """Perpendicular foot on the stratum's affine hull and its transverse
    coordinates.

    >>> import numpy as np
    >>> pr = project(QuadForm.identity(3), IndexSet((0, 1)),
    ...              BasePoint(np.array([1.0, 2.0, 3.0]), 0j))
    >>> pr.interior, pr.nu.tolist(), round(pr.dist, 12)
    (True, [2.0, 3.0], 1.0)
    """
    A2, I2, p2, S = zero_swap(A, I, p)
    nu, dist, comp, _ = _hull_data(A2, I2, p2)
    mu_foot = np.zeros(A.n)
    for lab, v in zip(comp, nu):
        mu_foot[lab - 1] = v
    foot = BasePoint(S @ mu_foot, 0j)
    interior = bool(nu.size == 0 or np.min(nu) > 0.0)
    return Projection(foot, interior, nu, dist, I)


def _interior_candidates(A: QuadForm, base: IndexSet, p: BasePoint,
                         proper_only: bool) -> float:
    """Min distance over supersets of ``base`` whose foot is interior.

    Works in a frame where 0 is a member of ``base``; enumerates every
    superset within {0..N}.
    """
    N = A.n
    comp = base.active_complement(N)
    best = np.inf
    sizes = range(1, len(comp) + 1) if proper_only else range(len(comp) + 1)
    for k in sizes:
        for extra in combinations(comp, k):
            J = base.union(IndexSet(base.members + extra))
            nu, dist, _, _ = _hull_data(A, J, p)
            if nu.size == 0 or np.min(nu) > -1e-12 * (1.0 + np.max(np.abs(nu))):
                best = min(best, dist)
    return best


def dist_closed_stratum(A: QuadForm, I: IndexSet, p: BasePoint) -> float:
    """Distance to the closed stratum (the stratum plus its boundary).

    The closure is a convex cone inside the affine hull, so the exact
    distance is the smallest hull distance among the supersets whose foot
    has nonnegative transverse coordinates.
    """
    A2, I2, p2, _ = zero_swap(A, I, p)
    return _interior_candidates(A2, I2, p2, proper_only=False)


def dist_boundary(A: QuadForm, I: IndexSet, p: BasePoint) -> float:
    """Distance to the union of strictly deeper strata bounding this one.

    Top-dimensional corners (|I| = N + 1) have empty boundary: +inf.
    """
    A2, I2, p2, _ = zero_swap(A, I, p)
    if len(I2) == A.n + 1:
        return np.inf
    return _interior_candidates(A2, I2, p2, proper_only=True)


def dist_locus(A: QuadForm, p: BasePoint) -> float:
    """Distance to the whole degeneration locus.

    Every stratum lies in the closure of a two-element one, so the minimum
    over |I| = 2 closed strata suffices.
    """
    return min(dist_closed_stratum(A, I, p) for I in all_strata(A.n, 2, 2))


def rho_IJ(A: QuadForm, I: IndexSet, J: IndexSet, p: BasePoint) -> float:
    """Separation scale between a stratum and a deeper one through the foot.

    Requires I a proper subset of J.  Computed from the transverse
    coordinates of the foot on I's hull: the K = J \\ I block of the
    complement form, reduced by the remaining transverse directions,
    evaluated on those coordinates.  Comparable to the foot's distance to
    the deeper stratum within explicit constants.
    """
    if not (I.issubset(J) and len(I) < len(J)):
        raise ValueError("need I strictly contained in J")
    A2, I2, p2, _ = zero_swap(A, I, p)
    # map J through the same relabeling
    if not I.contains_zero:
        i1 = I.members[0]
        J = IndexSet(tuple(0 if m == i1 else (i1 if m == 0 else m) for m in J.members))
    nu, _, comp, _ = _hull_data(A2, I2, p2)
    K = tuple(m for m in J.members if m not in I2.members)
    if not K:
        raise ValueError("J adds no new labels after normalization")
    rest = tuple(c for c in comp if c not in K)
    A_cc = block(A2.entries, comp, comp)
    pos = {lab: i for i, lab in enumerate(comp)}
    kk = [pos[m] for m in K]
    rr = [pos[m] for m in rest]
    if rr:
        red = (A_cc[np.ix_(kk, kk)]
               - A_cc[np.ix_(kk, rr)] @ np.linalg.solve(A_cc[np.ix_(rr, rr)], A_cc[np.ix_(rr, kk)]))
    else:
        red = A_cc[np.ix_(kk, kk)]
    nu_K = nu[kk]
    return float(np.sqrt(max(nu_K @ red @ nu_K, 0.0)))


@dataclass
class RegionReport:
    """Which covering regions contain a given point."""

    point: BasePoint
    near: list[IndexSet] = field(default_factory=list)        # B_I
    near_wide: list[IndexSet] = field(default_factory=list)   # B'_I
    near_core: list[IndexSet] = field(default_factory=list)   # B''_I
    generic: bool = False                                     # B_a
    far_levels: list[int] = field(default_factory=list)       # F_s
    corridors: list[tuple[IndexSet, IndexSet]] = field(default_factory=list)
    distances: dict[IndexSet, float] = field(default_factory=dict)

    def tags(self) -> set[str]:
        out = {f"near:{list(I.members)}" for I in self.near}
        out |= {f"core:{list(I.members)}" for I in self.near_core}
        if self.generic:
            out.add("generic")
        out |= {f"far:{s}" for s in self.far_levels}
        return out

    @property
    def covered(self) -> bool:
        return self.generic or bool(self.near)


def region_membership(A: QuadForm, consts: RegionConstants, p: BasePoint) -> RegionReport:
    """Evaluate every covering-region inequality at one point.

    near / near_wide / near_core compare c0 (resp. 2 c0, 4 c_hat c0) times
    the closed-stratum distance against the boundary distance; generic
    compares 2 c0^(N-1) times the locus distance against the distance to
    the origin; far levels require all strata of a given depth to be at
    least the level threshold away; corridors are the intersections
    B_I with (B_K minus the intermediate wide regions).
    """
    N = A.n
    chat = consts.chat(A)
    rep = RegionReport(point=p)
    dist_b: dict[IndexSet, float] = {}
    for I in all_strata(N, 2, N):
        dI = dist_closed_stratum(A, I, p)
        bI = dist_boundary(A, I, p)
        rep.distances[I] = dI
        dist_b[I] = bI
        if consts.c0 * dI < bI:
            rep.near.append(I)
        if 2.0 * consts.c0 * dI < bI:
            rep.near_wide.append(I)
        if 4.0 * chat * consts.c0 * dI < bI:
            rep.near_core.append(I)
    rep.generic = 2.0 * consts.c0 ** (N - 1) * dist_locus(A, p) > anorm(A, p)
    for s in range(1, N):
        depth = s + 2
        strata = all_strata(N, depth, depth)
        if strata and all(dist_closed_stratum(A, I, p) > consts.level(s) for I in strata):
            rep.far_levels.append(s)
    near_set = {I.members for I in rep.near}
    wide_set = {I.members for I in rep.near_wide}
    for I in rep.near:
        for K in rep.near:
            if K.members == I.members or not K.issubset(I):
                continue
            blocked = any(
                K.issubset(J) and J.issubset(I)
                and len(K) < len(J) < len(I) and J.members in wide_set
                for J in all_strata(N, len(K) + 1, len(I) - 1))
            if not blocked and K.members in near_set:
                rep.corridors.append((K, I))
    return rep
