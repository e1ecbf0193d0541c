"""Engine checks against oracles that bypass the panel machinery.

The one-dimensional sweep has an elementary antiderivative: for
a t^2 - 2 b t + c with discriminant D = a c - b^2 > 0,

    int_0^inf dt / (a t^2 - 2 b t + c)
        = (pi/2 + arctan(b / sqrt(D))) / sqrt(D).

That formula, derived by hand and frozen here, plus a scrambled-Sobol
estimator, are the two independent routes the adaptive engine must match.
"""

import math

import numpy as np
import pytest

from ghlab.quadrature import (
    QuadratureError,
    QuadratureSpec,
    SingularityProximity,
    gauss_rule,
    nonneg_argmin,
    panel_nodes,
    power_kernel_integral,
    qmc_power_kernel_integral,
)


def line_oracle(a: float, b: float, c: float) -> float:
    D = a * c - b * b
    assert D > 0
    return (0.5 * math.pi + math.atan(b / math.sqrt(D))) / math.sqrt(D)


def test_gauss_rule_integrates_polynomials():
    x, w = gauss_rule(8)
    # exact through degree 15 on [-1, 1]
    for k in range(0, 16, 2):
        assert float(w @ x ** k) == pytest.approx(2.0 / (k + 1), rel=1e-13)


def test_panel_nodes_partition():
    nodes, wts = panel_nodes(np.array([0.0, 1.0, 3.0]), 6)
    assert len(nodes) == 12
    assert float(np.sum(wts)) == pytest.approx(3.0)
    assert float(wts @ nodes ** 2) == pytest.approx(9.0)


def test_closed_form_no_sweep():
    # d = 0: value is (b Q b + E)^(-p/2) exactly, no panels involved
    Q = np.array([[2.0, 0.3], [0.3, 1.0]])
    b = np.array([[0.7, -0.4]])
    res = power_kernel_integral(Q, 1.7, b, 0.5 + 0.5j, np.zeros((2, 0)), 1,
                                QuadratureSpec())
    want = (b[0] @ Q @ b[0] + 1.7 * 0.5) ** -0.5
    assert res.value[0] == pytest.approx(want, rel=1e-15)
    assert res.evals == 1


@pytest.mark.parametrize("mu,eta", [
    ((0.8, -0.4), 0.6 + 0.2j),
    ((2.0, 1.0), 0.1j),
    ((-1.5, 0.7), 1.3 + 0.0j),
])
def test_engine_matches_line_oracle(mu, eta):
    # one sweep column along e_2 against mu and the eta mass
    A = np.array([[2.0, 0.5], [0.5, 1.5]])
    det_a = float(np.linalg.det(A))
    M = np.array([[0.0], [1.0]])
    b = np.array(mu, dtype=float)
    a = float(M[:, 0] @ A @ M[:, 0])
    bq = float(M[:, 0] @ A @ b)
    c = float(b @ A @ b) + det_a * abs(eta) ** 2
    want = line_oracle(a, bq, c)
    res = power_kernel_integral(A, det_a, b[None, :], eta, M, 2,
                                QuadratureSpec())
    assert res.converged
    assert res.value[0] == pytest.approx(want, rel=1e-8)
    assert abs(res.value[0] - want) <= max(res.error[0], 1e-12)


def test_engine_matches_qmc_two_dim():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    A = q @ np.diag([0.7, 1.2, 2.1]) @ q.T
    M = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    b = np.array([1.4, 0.8, -0.6])
    eta = 0.5 + 0.1j
    res = power_kernel_integral(A, float(np.linalg.det(A)), b[None, :], eta,
                                M, 3, QuadratureSpec())
    m, se = qmc_power_kernel_integral(A, float(np.linalg.det(A)), b, eta, M,
                                      3, n_pow2=15, replicates=8)
    assert abs(res.value[0] - m) < 4.0 * se + 1e-9


def test_engine_gradient_matches_differences():
    A = np.array([[1.5, 0.2], [0.2, 1.0]])
    det_a = float(np.linalg.det(A))
    M = np.array([[0.0], [1.0]])
    eta = 0.4 + 0.3j
    spec = QuadratureSpec()

    def value(b, et):
        return power_kernel_integral(A, det_a, np.atleast_2d(b), et, M, 2,
                                     spec).value[0]

    b0 = np.array([0.9, -0.3])
    res = power_kernel_integral(A, det_a, b0[None, :], eta, M, 2, spec,
                                want_gradient=True)
    h = 1e-6
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (value(b0 + e, eta) - value(b0 - e, eta)) / (2 * h)
        assert res.gradient[0, k] == pytest.approx(fd, rel=2e-5)
    fd_x = (value(b0, eta + h) - value(b0, eta - h)) / (2 * h)
    fd_y = (value(b0, eta + 1j * h) - value(b0, eta - 1j * h)) / (2 * h)
    assert res.gradient[0, 2] == pytest.approx(fd_x, rel=2e-5)
    assert res.gradient[0, 3] == pytest.approx(fd_y, rel=2e-5)


def test_singularity_raises():
    A = np.eye(2)
    M = np.array([[0.0], [1.0]])
    # b on the sweep ray with no eta mass: distance to the sheet is zero
    with pytest.raises(SingularityProximity):
        power_kernel_integral(A, 1.0, np.array([[0.0, 2.0]]), 0j, M, 2,
                              QuadratureSpec())


def test_budget_error():
    A = np.eye(3)
    M = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(QuadratureError):
        power_kernel_integral(A, 1.0, np.array([[1.0, 1.0, 1.0]]), 0.5 + 0j,
                              M, 3, QuadratureSpec(max_evals=1000))


def test_nonneg_argmin_against_scipy():
    from scipy import optimize

    rng = np.random.default_rng(11)
    for _ in range(150):
        d = int(rng.integers(1, 5))
        root = rng.normal(size=(d, d))
        P = root @ root.T + 0.05 * np.eye(d)
        q = 3.0 * rng.normal(size=d)
        tau, val = nonneg_argmin(P, q)
        assert np.all(tau >= 0.0)
        ref = optimize.minimize(
            lambda t: t @ P @ t - 2.0 * q @ t, np.maximum(q, 0.1),
            jac=lambda t: 2.0 * (P @ t - q),
            bounds=[(0.0, None)] * d, method="L-BFGS-B",
            options={"ftol": 1e-15, "gtol": 1e-12})
        assert val <= ref.fun + 1e-9 * (1.0 + abs(ref.fun))
