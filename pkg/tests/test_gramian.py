import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obslab import gramian as G
from obslab.lattice import build_lifted, ingham_c
from obslab.quadrature import ball_integral, ball_integral_adaptive


def test_ball_integral_at_zero_is_volume():
    assert G.ball_exp_integral([0.0, 0.0], 1.0) == pytest.approx(math.pi, rel=1e-15)


def test_one_dimensional_closed_form():
    for kappa, R in [(0.7, 2.0), (13.0, 0.4), (1e-9, 1.5)]:
        assert G.ball_exp_integral([kappa], R) == pytest.approx(2 * math.sin(kappa * R) / kappa, rel=1e-12)


def test_continuous_near_zero():
    for m in (2, 3, 4):
        assert G.ball_exp_integral(np.full(m, 1e-9), 1.2) == pytest.approx(G.ball_volume(m, 1.2), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_three_dimensional_against_quadrature(seed):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=3) * 3
    exact = G.ball_exp_integral(k, 1.3)
    approx, _ = ball_integral_adaptive(lambda z: np.cos(z @ k), 1.3, 3)
    assert exact == pytest.approx(approx, abs=1e-8)


def test_one_point_gram():
    g = G.gram_matrix([[0.3, 0.1]], 1.5)
    assert g.matrix.shape == (1, 1)
    assert g.matrix[0, 0] == G.ball_volume(2, 1.5)


def test_two_point_closed_form():
    rho, R = 0.8, 1.7
    g = G.gram_matrix([0.0, rho], R)
    off = 2 * math.sin(rho * R) / rho
    assert np.allclose(g.matrix, [[2 * R, off], [off, 2 * R]], atol=1e-14)
    assert G.smallest_eigenvalue(g) == pytest.approx(2 * R - abs(off), abs=1e-12)


def test_quadratic_form_against_quadrature(rng):
    pts = rng.uniform(-2, 2, size=(20, 2))
    R = 1.1
    g = G.gram_matrix(pts, R)
    for _ in range(5):
        a = rng.normal(size=20) + 1j * rng.normal(size=20)
        direct = ball_integral(lambda z: np.abs(np.exp(1j * z @ pts.T) @ a) ** 2, R, 2, 80)
        assert g.quadratic_form(a) == pytest.approx(direct, rel=1e-6)


def test_hermitian_psd_and_diagonal(rng):
    pts = rng.normal(size=(40, 3))
    g = G.gram_matrix(pts, 0.9)
    A = g.matrix
    assert np.allclose(A, A.conj().T)
    assert np.all(np.diag(A) == G.ball_volume(3, 0.9))
    assert G.smallest_eigenvalue(g) >= -1e-9 * np.linalg.norm(A, 2)


def test_smallest_eigenvalue_of_scaled_identity():
    assert G.smallest_eigenvalue(3.5 * np.eye(7)) == pytest.approx(3.5)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        G.smallest_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_rejects_duplicate_points():
    with pytest.raises(ValueError):
        G.gram_matrix([[0.0, 1.0], [0.0, 1.0]], 1.0)


@given(st.integers(3, 12), st.integers(0, 10_000))
def test_adding_a_point_never_raises_lambda_min(n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, 2)) * 2
    small = G.smallest_eigenvalue(G.gram_matrix(pts[:-1], 1.0))
    big = G.smallest_eigenvalue(G.gram_matrix(pts, 1.0))
    assert big <= small + 1e-10


def test_lambda_min_nondecreasing_in_radius(rng):
    pts = rng.normal(size=(10, 2)) * 2
    lams = [G.smallest_eigenvalue(G.gram_matrix(pts, R)) for R in np.linspace(0.2, 3.0, 15)]
    assert np.all(np.diff(lams) >= -1e-10)


def test_ingham_certificate_for_lifted_integers():
    pts = build_lifted(0.0, 5, 1).points
    cert = G.ingham_certify(pts, 1.01 * math.pi, ingham_c(2, 1.0), 1.0)
    assert cert.in_regime and cert.satisfied and cert.lambda_min > 0


def test_ingham_certificate_single_point():
    cert = G.ingham_certify([[0.0, 0.0, 0.0]], 2.0, 1.0, 1.0)
    assert cert.lambda_min == pytest.approx(G.ball_volume(3, 2.0))


def test_two_subset_union(rng):
    c = ingham_c(2, 1.0)
    a = build_lifted(0.0, 4, 1).points
    b = a * 3 + np.array([100.0, 0.0])
    d1, d2 = 1.0, 3.0
    R = 2 * (c / d1 + c / d2)
    cert = G.ingham_certify(np.vstack([a, b]), R, c, min(d1, d2))
    assert cert.lambda_min > 0


def test_certificate_rejects_delta_above_gap():
    with pytest.raises(ValueError):
        G.ingham_certify([[0.0, 0.0], [1.0, 0.0]], 2.0, 1.0, 1.5)


def test_csv_export(tmp_path):
    g = G.gram_matrix([0.0, 1.0, 2.5], 1.0)
    path = tmp_path / "g.csv"
    g.to_csv(path)
    back = np.loadtxt(path, delimiter=",")
    assert np.allclose(back, g.matrix.real)
