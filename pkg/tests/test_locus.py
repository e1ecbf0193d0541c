"""Degenerate-set geometry against brute-force convex optimization.

The closed stratum of a subset is, after the zero-slot normalization, the
set {mu on active slots = 0, eta = 0, complement coordinates >= 0}.  Every
distance the module reports is re-derived here with scipy's bounded
L-BFGS-B on that explicit parametrization.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from ghlab.geometry import BasePoint, IndexSet, QuadForm, anorm_diff
from ghlab.locus import (
    RegionConstants,
    all_strata,
    dist_boundary,
    dist_closed_stratum,
    dist_locus,
    project,
    region_membership,
    rho_IJ,
    zero_swap,
)


def random_spd(rng, n, lo=0.5, hi=2.5):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return QuadForm(q @ np.diag(rng.uniform(lo, hi, n)) @ q.T)


def oracle_closed_dist(A: QuadForm, I: IndexSet, p: BasePoint) -> float:
    """Distance to the closed stratum by direct bounded minimization."""
    N = A.n
    A2, I2, p2, _ = zero_swap(A, I, p)
    act = list(I2.active)
    comp = [k for k in range(1, N + 1) if k not in act]

    def cost(w):
        q_mu = np.zeros(N)
        for lab, val in zip(comp, w):
            q_mu[lab - 1] = val
        d_mu = p2.mu - q_mu
        return float(d_mu @ A2.entries @ d_mu) + A2.det * abs(p2.eta) ** 2

    if not comp:
        return math.sqrt(cost(np.zeros(0)))
    best = None
    for start in (np.zeros(len(comp)),
                  np.maximum([p2.mu[c - 1] for c in comp], 0.0)):
        res = optimize.minimize(cost, start, bounds=[(0.0, None)] * len(comp),
                                method="L-BFGS-B",
                                options={"ftol": 1e-16, "gtol": 1e-14})
        if best is None or res.fun < best:
            best = res.fun
    return math.sqrt(best)


def test_project_frozen_example():
    A = QuadForm(np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]]))
    p = BasePoint(np.array([1.0, 0.0, 1.0]), 0.5 + 0.0j)
    pr = project(A, IndexSet((0, 1)), p)
    assert pr.interior
    np.testing.assert_allclose(pr.nu, [0.5, 1.0])
    # hull distance: G mu_act^2 + det A |eta|^2 = 1.5 + 3 * 0.25
    assert pr.dist == pytest.approx(1.5)


def test_projection_foot_on_stratum():
    rng = np.random.default_rng(5)
    for _ in range(50):
        N = int(rng.integers(2, 5))
        A = random_spd(rng, N)
        members = (0,) + tuple(sorted(
            rng.choice(np.arange(1, N + 1),
                       size=int(rng.integers(1, N)), replace=False).tolist()))
        I = IndexSet(members)
        p = BasePoint(rng.normal(size=N) * 2.0, complex(*rng.normal(size=2)))
        pr = project(A, I, p)
        for lab in I.active:
            assert pr.foot.mu[lab - 1] == pytest.approx(0.0, abs=1e-13)
        assert pr.foot.eta == 0j
        assert pr.dist == pytest.approx(anorm_diff(A, p, pr.foot), rel=1e-12)


def test_closed_distance_against_scipy():
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(500):
        N = int(rng.integers(2, 5))
        A = random_spd(rng, N)
        size = int(rng.integers(2, N + 2))
        members = tuple(sorted(rng.choice(np.arange(0, N + 1), size=size,
                                          replace=False).tolist()))
        I = IndexSet(members)
        p = BasePoint(rng.normal(size=N) * 2.5, complex(*rng.normal(size=2)))
        got = dist_closed_stratum(A, I, p)
        want = oracle_closed_dist(A, I, p)
        worst = max(worst, abs(got - want) / max(1.0, want))
    assert worst < 1e-9


def test_dist_locus_is_min_over_pairs():
    rng = np.random.default_rng(23)
    for _ in range(50):
        N = 3
        A = random_spd(rng, N)
        p = BasePoint(rng.normal(size=N) * 2.0, complex(*rng.normal(size=2)))
        d = dist_locus(A, p)
        pairs = [dist_closed_stratum(A, I, p) for I in all_strata(N, 2, 2)]
        assert d == pytest.approx(min(pairs), rel=1e-12)


@given(st.integers(0, 2 ** 31 - 1), st.floats(0.2, 5.0))
@settings(max_examples=50, deadline=None)
def test_distance_scale_invariance(seed, lam):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 5))
    A = random_spd(rng, N)
    I = IndexSet((0, int(rng.integers(1, N + 1))))
    p = BasePoint(rng.normal(size=N) * 2.0, complex(*rng.normal(size=2)))
    q = BasePoint(lam * p.mu, lam * p.eta)
    assert dist_closed_stratum(A, I, q) == pytest.approx(
        lam * dist_closed_stratum(A, I, p), rel=1e-10)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=60, deadline=None)
def test_zero_swap_involution(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(2, 5))
    A = random_spd(rng, N)
    size = int(rng.integers(2, N + 1))
    members = tuple(sorted(rng.choice(np.arange(1, N + 1), size=size,
                                      replace=False).tolist()))
    I = IndexSet(members)  # no zero: the swap acts nontrivially
    p = BasePoint(rng.normal(size=N), complex(*rng.normal(size=2)))
    A2, I2, p2, S = zero_swap(A, I, p)
    assert I2.contains_zero
    # the swap preserves the quadratic form and the point's norm
    np.testing.assert_allclose(S.T @ A2.entries @ S, A.entries, atol=1e-12)
    np.testing.assert_allclose(S @ p2.mu, p.mu, atol=1e-12)
    # distances agree through the relabeling
    assert dist_closed_stratum(A, I, p) == pytest.approx(
        dist_closed_stratum(A2, I2, p2), rel=1e-10)


def test_pythagoras_nested_hulls():
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(500):
        N = int(rng.integers(2, 5))
        A = random_spd(rng, N)
        p = BasePoint(rng.normal(size=N) * 3.0, complex(*rng.normal(size=2)))
        size_i = int(rng.integers(2, N + 1))
        members = (0,) + tuple(sorted(
            rng.choice(np.arange(1, N + 1), size=size_i - 1,
                       replace=False).tolist()))
        I = IndexSet(members)
        rest = [m for m in range(1, N + 1) if m not in members]
        if not rest:
            continue
        J = IndexSet(members + tuple(rest))
        pr = project(A, I, p)
        dj = project(A, J, p).dist
        dj_foot = project(A, J, pr.foot).dist
        gap = abs(dj ** 2 - pr.dist ** 2 - dj_foot ** 2)
        worst = max(worst, gap / max(1.0, dj ** 2))
    assert worst < 1e-10


def test_rho_matches_direct_schur():
    A = QuadForm(np.array([[2.0, 0.4, 0.1], [0.4, 1.5, 0.2],
                           [0.1, 0.2, 1.1]]))
    I = IndexSet((0, 1))
    J = IndexSet((0, 1, 2))
    p = BasePoint(np.array([0.3, 2.0, -1.0]), 0.2 + 0.1j)
    rho = rho_IJ(A, I, J, p)
    # K = {2}; transverse form of label 2 against remaining {3}
    a22 = A.entries[1, 1] - A.entries[1, 2] ** 2 / A.entries[2, 2]
    pr = project(A, I, p)
    nu2 = pr.nu[0]  # complement labels of I are (2, 3)
    assert rho == pytest.approx(math.sqrt(a22) * abs(nu2), rel=1e-12)


def test_rho_requires_proper_subset():
    A = QuadForm.identity(3)
    p = BasePoint(np.ones(3), 0.5 + 0j)
    with pytest.raises(ValueError):
        rho_IJ(A, IndexSet((0, 1)), IndexSet((0, 1)), p)


def test_region_constants_validation():
    RegionConstants()
    with pytest.raises(ValueError):
        RegionConstants(c0=0.5)
    with pytest.raises(ValueError):
        RegionConstants(c0=32.0, c_hat=40.0)
    assert RegionConstants().level(1) == pytest.approx(64.0)
    assert RegionConstants().level(2) == pytest.approx(1024.0)
    assert RegionConstants().cprime() == pytest.approx(4096.0)


def test_chat_for_identity_form():
    assert RegionConstants().chat(QuadForm.identity(3)) == pytest.approx(2.0)


def test_region_covering_and_tags():
    # every sampled point lands in at least one region of the decomposition
    rng = np.random.default_rng(41)
    A = random_spd(rng, 3)
    consts = RegionConstants()
    uncovered = 0
    for _ in range(2000):
        scale = 10.0 ** rng.uniform(-1, 3)
        p = BasePoint(rng.normal(size=3) * scale,
                      complex(*rng.normal(size=2)) * scale)
        rep = region_membership(A, consts, p)
        if not rep.covered:
            uncovered += 1
        assert isinstance(rep.tags(), set)
    assert uncovered == 0


def test_dist_boundary_full_set_infinite():
    A = QuadForm.identity(3)
    p = BasePoint(np.ones(3), 1.0 + 0j)
    assert dist_boundary(A, IndexSet((0, 1, 2, 3)), p) == math.inf
