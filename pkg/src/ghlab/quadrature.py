"""Deterministic quadrature engine for the singular orthant integrals.

Every kernel in this package is an integral over an orthant of a power of
an anisotropic distance,

    integral over tau in R_+^d of ((b - M tau)^T Q (b - M tau) + E)^(-p/2),

optionally together with its derivatives with respect to b and the two real
components hidden in E = c |eta|^2.  The integrand is smooth but sharply
peaked where the affine sheet {b - M tau} passes closest to the origin, and
it decays like |tau|^(-p) with p - d = 1, so the tail carries mass ~ 1/T.

The engine is a fixed-construction panel scheme: per-axis Gauss-Legendre
panels geometrically graded around the orthant-projected closest point and
geometrically growing out to an analytically chosen truncation radius.  The
construction depends only on the inputs, never on timing or thread count,
so results are bit-reproducible.  The error estimate compares two Gauss
orders on the same panels and adds the analytic tail bound.

A scrambled-Sobol quasi-Monte-Carlo evaluator of the same integral is
provided as an independent oracle; it is never the primary path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .geometry import ball_volume

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "QuadratureError",
    "SingularityProximity",
    "nonneg_argmin",
    "power_kernel_integral",
    "qmc_power_kernel_integral",
    "gauss_rule",
    "panel_nodes",
]


class QuadratureError(RuntimeError):
    """Raised when the engine cannot deliver the requested tolerance."""


class SingularityProximity(ValueError):
    """Evaluation point too close to the integrand's singular sheet."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and knobs for the panel engine.

    abs_tol/rel_tol apply to the final (prefactor-scaled) kernel value;
    tail_radius overrides the analytic truncation radius when set;
    max_evals bounds grid nodes per batch element.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_evals: int = 4_000_000
    method: str = "adaptive-nested"
    tail_radius: float | None = None
    order: int = 16
    order_low: int = 8
    refine_levels: int = 1

    def __post_init__(self) -> None:
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1000:
            raise ValueError("max_evals must be at least 1000")
        if self.method not in ("adaptive-nested", "quasi-monte-carlo"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class QuadResult:
    value: np.ndarray          # (B,) raw integral values, no prefactor
    error: np.ndarray          # (B,) error estimates, raw units
    gradient: np.ndarray | None  # (B, dim+2) d/d(b, Re eta, Im eta), raw
    evals: int
    converged: bool
    r_star: float              # distance from the sheet to the first point


@lru_cache(maxsize=32)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def panel_nodes(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for the panels between consecutive breaks."""
    x, w = gauss_rule(order)
    a = breaks[:-1]
    h = np.diff(breaks)
    nodes = a[:, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)
    wts = 0.5 * h[:, None] * w[None, :]
    return nodes.ravel(), wts.ravel()


def nonneg_argmin(P: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimize tau^T P tau - 2 q^T tau over tau >= 0, exactly.

    P must be SPD.  Enumerates active sets (d is at most 4 or 5 here, so the
    2^d candidates are cheap) and checks the KKT sign conditions.
    Returns (tau*, minimum value).
    """
    d = P.shape[0]
    if d == 0:
        return np.zeros(0), 0.0
    scale = max(float(np.max(np.abs(q))), float(np.max(np.abs(P))), 1.0)
    best: tuple[float, np.ndarray] | None = None
    idx = list(range(d))
    for k in range(d + 1):
        for free in combinations(idx, k):
            tau = np.zeros(d)
            if free:
                F = list(free)
                try:
                    x = np.linalg.solve(P[np.ix_(F, F)], q[F])
                except np.linalg.LinAlgError:
                    continue
                if np.any(x < -1e-12 * scale):
                    continue
                tau[F] = np.maximum(x, 0.0)
            grad = P @ tau - q
            fixed = [i for i in idx if i not in free]
            if fixed and np.any(grad[fixed] < -1e-9 * scale):
                continue
            val = float(tau @ P @ tau - 2.0 * q @ tau)
            if best is None or val < best[0]:
                best = (val, tau)
    assert best is not None  # free = all indices always yields a candidate
    return best[1], best[0]


def _axis_breakpoints(center: float, width: float, T: float,
                      fine_levels: int = 3) -> np.ndarray:
    """Geometric panel breakpoints on [0, T] clustered around ``center``."""
    pts = {0.0, T}
    c = min(max(center, 0.0), T)
    if 0.0 < c < T:
        pts.add(c)
    w = width
    # refine below the peak scale, then grow geometrically to the ends
    for j in range(-fine_levels, 60):
        step = w * (2.0 ** j)
        lo, hi = c - step, c + step
        added = False
        if 0.0 < lo < T:
            pts.add(lo)
            added = True
        if 0.0 < hi < T:
            pts.add(hi)
            added = True
        if j > 0 and not added:
            break
    breaks = np.array(sorted(pts))
    keep = np.concatenate([[True], np.diff(breaks) > 1e-13 * max(T, 1.0)])
    return breaks[keep]


def _tensor_pass(axes_nodes: list[np.ndarray], axes_wts: list[np.ndarray],
                 Q: np.ndarray, E: np.ndarray, b: np.ndarray, M: np.ndarray,
                 power: int, want_gradient: bool, ceta: float,
                 eta_xy: np.ndarray, chunk: int
                 ) -> tuple[np.ndarray, np.ndarray | None]:
    """One full tensor-product sweep.  b is (B, m), eta_xy is (B, 2)."""
    B, m = b.shape
    d = len(axes_nodes)
    sizes = [len(n) for n in axes_nodes]
    ntot = int(np.prod(sizes))
    val = np.zeros(B)
    grad = np.zeros((B, m + 2)) if want_gradient else None
    p2 = -0.5 * (power + 2)
    for start in range(0, ntot, chunk):
        stop = min(start + chunk, ntot)
        flat = np.arange(start, stop)
        multi = np.unravel_index(flat, sizes)
        tau = np.empty((stop - start, d))
        wts = np.ones(stop - start)
        for k in range(d):
            tau[:, k] = axes_nodes[k][multi[k]]
            wts *= axes_wts[k][multi[k]]
        # X has shape (B, nodes, m)
        X = b[:, None, :] - tau[None, :, :] @ M.T
        QX = X @ Q
        dist2 = np.einsum("bnm,bnm->bn", QX, X) + E[:, None]
        F = dist2 ** (-0.5 * power)
        val += F @ wts
        if want_gradient:
            core = dist2 ** p2 * wts[None, :]
            grad[:, :m] += -power * np.einsum("bn,bnm->bm", core, QX)
            s = core.sum(axis=1)
            grad[:, m] += -power * ceta * eta_xy[:, 0] * s
            grad[:, m + 1] += -power * ceta * eta_xy[:, 1] * s
    return val, grad


def power_kernel_integral(Q: np.ndarray, c_eta: float, b: np.ndarray,
                          eta: complex | np.ndarray, M: np.ndarray, power: int,
                          spec: QuadratureSpec, want_gradient: bool = False,
                          prefactor: float = 1.0) -> QuadResult:
    """Evaluate the orthant power integral, batched over base points.

    b may be (m,) or (B, m); eta scalar or (B,).  The panel construction is
    derived from the first row; extra rows are meant for nearby stencil
    points sharing the same geometry.  ``prefactor`` only converts the
    spec tolerances into raw-integral units; the returned values are raw.
    """
    b = np.atleast_2d(np.asarray(b, dtype=float))
    B, m = b.shape
    eta_arr = np.full(B, eta, dtype=complex) if np.ndim(eta) == 0 else np.asarray(eta, dtype=complex)
    eta_xy = np.stack([eta_arr.real, eta_arr.imag], axis=1)
    E = c_eta * np.abs(eta_arr) ** 2
    d = M.shape[1]

    # closest sheet point for the leading row
    P = M.T @ Q @ M
    q0 = M.T @ (Q @ b[0])
    tau_star, qp_min = nonneg_argmin(P, q0)
    r2 = float(b[0] @ Q @ b[0]) - 2.0 * q0 @ tau_star + tau_star @ P @ tau_star + E[0]
    r_star = math.sqrt(max(r2, 0.0))

    if d == 0:
        dist2 = np.einsum("bm,mk,bk->b", b, Q, b) + E
        val = dist2 ** (-0.5 * power)
        grad = None
        if want_gradient:
            core = dist2 ** (-0.5 * (power + 2))
            grad = np.empty((B, m + 2))
            grad[:, :m] = -power * (b @ Q) * core[:, None]
            grad[:, m] = -power * c_eta * eta_xy[:, 0] * core
            grad[:, m + 1] = -power * c_eta * eta_xy[:, 1] * core
        return QuadResult(val, np.zeros(B), grad, B, True, r_star)

    if r_star <= 0.0:
        raise SingularityProximity("point lies on the kernel's singular sheet")

    abs_raw = spec.abs_tol / max(prefactor, 1e-300)
    lamP = float(np.linalg.eigvalsh(P)[0])
    surf = d * ball_volume(d) / 2.0 ** d
    if spec.tail_radius is not None:
        T = float(spec.tail_radius)
    else:
        # integrand <= (lamP (|tau| - |tau*|)^2)^(-p/2) out there; the mass
        # beyond radius T is below surf 2^p lamP^(-p/2) T^(d-p) / (p - d)
        tail_target = 0.5 * abs_raw
        T = (surf * 2.0 ** power * lamP ** (-0.5 * power)
             / ((power - d) * tail_target)) ** (1.0 / (power - d))
    T = max(T, 4.0 * (float(np.linalg.norm(tau_star)) + 1.0), 8.0 * r_star)
    tail_bound = (surf * 2.0 ** power * lamP ** (-0.5 * power)
                  * T ** (d - power) / (power - d))

    def build_axes(extra_split: int) -> tuple[list[np.ndarray], list[np.ndarray], int, int]:
        axes_breaks = []
        for k in range(d):
            w_k = max(r_star / math.sqrt(max(P[k, k], 1e-300)), 1e-8)
            br = _axis_breakpoints(float(tau_star[k]), w_k, T,
                                   fine_levels=3 + extra_split)
            if extra_split:
                mids = 0.5 * (br[:-1] + br[1:])
                br = np.sort(np.concatenate([br, mids]))
            axes_breaks.append(br)
        hi, lo = [], []
        n_hi = n_lo = 1
        for br in axes_breaks:
            nh = panel_nodes(br, spec.order)
            nl = panel_nodes(br, spec.order_low)
            hi.append(nh)
            lo.append(nl)
            n_hi *= len(nh[0])
            n_lo *= len(nl[0])
        return hi, lo, n_hi, n_lo

    chunk = max(1 << 13, (1 << 18) // max(B, 1))
    evals = 0
    for attempt in range(spec.refine_levels + 1):
        hi, lo, n_hi, n_lo = build_axes(attempt)
        if n_hi + n_lo > spec.max_evals:
            raise QuadratureError(
                f"panel grid needs {n_hi + n_lo} evaluations per point, "
                f"budget is {spec.max_evals}")
        v_hi, g_hi = _tensor_pass([n for n, _ in hi], [w for _, w in hi],
                                  Q, E, b, M, power, want_gradient, c_eta,
                                  eta_xy, chunk)
        v_lo, _ = _tensor_pass([n for n, _ in lo], [w for _, w in lo],
                               Q, E, b, M, power, False, c_eta, eta_xy, chunk)
        evals += (n_hi + n_lo) * B
        err = np.abs(v_hi - v_lo) + tail_bound
        tol = np.maximum(abs_raw, spec.rel_tol * np.abs(v_hi))
        if np.all(err <= tol):
            return QuadResult(v_hi, err, g_hi, evals, True, r_star)
    return QuadResult(v_hi, err, g_hi, evals, False, r_star)


def qmc_power_kernel_integral(Q: np.ndarray, c_eta: float, b: np.ndarray,
                              eta: complex, M: np.ndarray, power: int,
                              n_pow2: int = 17, replicates: int = 8,
                              seed: int = 20240817) -> tuple[float, float]:
    """Scrambled-Sobol oracle for the same integral.

    Maps the orthant through t = u / (1 - u) per axis.  Returns the mean of
    the replicate estimates and their standard error.  Independent of the
    panel engine by construction; used only for cross-checks.
    """
    from scipy.stats import qmc

    b = np.asarray(b, dtype=float)
    d = M.shape[1]
    E = c_eta * abs(eta) ** 2
    if d == 0:
        val = float((b @ Q @ b + E) ** (-0.5 * power))
        return val, 0.0
    estimates = []
    for r in range(replicates):
        eng = qmc.Sobol(d, scramble=True, seed=seed + r)
        u = eng.random(2 ** n_pow2)
        u = np.clip(u, 1e-12, 1.0 - 1e-9)
        t = u / (1.0 - u)
        jac = np.prod((1.0 - u) ** -2, axis=1)
        X = b[None, :] - t @ M.T
        dist2 = np.einsum("nm,mk,nk->n", X, Q, X) + E
        estimates.append(float(np.mean(dist2 ** (-0.5 * power) * jac)))
    est = np.array(estimates)
    mean = float(est.mean())
    se = float(est.std(ddof=1) / math.sqrt(replicates))
    return mean, se
