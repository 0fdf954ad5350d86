import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obslab import control as C
from obslab.floquet import ModalState, propagate, restrict_mass
from obslab.gramian import ball_volume, smallest_eigenvalue
from obslab.quadrature import gauss_legendre_interval

TWO_PI = 2 * math.pi


def test_single_mode_gramian():
    M = C.obs_gramian(0.5, 2.0, 0.7, 0)
    assert M.matrix.shape == (1, 1)
    assert M.matrix[0, 0].real == pytest.approx(2.0 * ball_volume(1, 0.7))


@pytest.mark.parametrize("theta", [0.0, 0.9, math.pi])
def test_full_torus_gramian_is_diagonal(theta):
    M = C.obs_gramian(theta, 1.5, math.pi, 6)
    off = M.matrix - np.diag(np.diag(M.matrix))
    assert np.max(np.abs(off)) < 1e-12
    assert M.lambda_min() == pytest.approx(TWO_PI * 1.5, rel=1e-12)


def test_gramian_matches_time_quadrature(rng):
    T, R_s = 1.0, 1.0
    M = C.obs_gramian(0.0, T, R_s, 5)
    t, w = gauss_legendre_interval(0.0, T, 80)
    for _ in range(5):
        s = ModalState.random(0.0, 5, rng)
        direct = sum(wi * restrict_mass(propagate(s, ti), R_s) for ti, wi in zip(t, w))
        assert M.quadratic_form(s) == pytest.approx(direct, rel=1e-6)


def test_gramian_hermitian_with_fixed_diagonal():
    M = C.obs_gramian(np.array([0.3, -0.4]), 2.0, 1.2, 2)
    A = M.matrix
    assert np.allclose(A, A.conj().T, atol=1e-13)
    assert np.allclose(np.diag(A).real, 2.0 * ball_volume(2, 1.2))
    assert M.lambda_min() > -1e-9 * np.linalg.norm(A, 2)


def test_time_factor_closed_form():
    lam = np.array([0.0, 1e-9, 0.3, -7.0])
    T = 2.5
    expected = np.where(lam == 0, T, (np.exp(1j * T * lam) - 1) / (1j * np.where(lam == 0, 1, lam)))
    assert np.allclose(C._time_factor(lam, T), expected, atol=1e-12)


def test_shifted_window_keeps_lambda_min():
    a = C.obs_gramian(0.7, 2.0, 1.0, 8).lambda_min()
    b = C.obs_gramian(0.7, 2.0, 1.0, 8, t0=-1.0).lambda_min()
    assert a == pytest.approx(b, rel=1e-10)


@pytest.mark.parametrize("T,R_s", [(2.0, 1.0), (TWO_PI, 1.0), (1.0, 2.0)])
def test_ball_lower_bound(T, R_s):
    cyl = C.obs_gramian(0.4, T, R_s, 6).matrix
    ball = C.ball_gramian(0.4, T, R_s, 6)
    diff = cyl - ball
    assert np.min(np.linalg.eigvalsh(diff)) >= -1e-9 * np.linalg.norm(cyl, 2)
    assert smallest_eigenvalue(cyl) >= smallest_eigenvalue(ball) - 1e-10


def test_invalid_gramian_arguments():
    with pytest.raises(ValueError):
        C.obs_gramian(0.0, 1.0, 4.0, 3)
    with pytest.raises(ValueError):
        C.obs_gramian(0.0, 0.0, 1.0, 3)


def test_sweep_full_torus_constant():
    rep = C.theta_sweep(1.0, math.pi, 5, 16)
    assert np.allclose(rep.lambda_min, TWO_PI, rtol=1e-12)
    assert rep.global_min == pytest.approx(min(rep.lambda_min))


def test_sweep_positive_and_refinement_stable():
    coarse = C.theta_sweep(TWO_PI, 1.0, 15, 64)
    assert np.all(coarse.lambda_min > 0)
    fine = C.theta_sweep(TWO_PI, 1.0, 15, 128)
    assert coarse.global_min - fine.global_min <= coarse.grid_modulus() + 1e-12
    assert 0 < coarse.stability_ratio <= 1 + 1e-9


def test_sweep_threads_agree():
    a = C.theta_sweep(2.0, 1.0, 6, 8)
    b = C.theta_sweep(2.0, 1.0, 6, 8, workers=3)
    assert np.array_equal(a.lambda_min, b.lambda_min)


def test_sweep_csv(tmp_path):
    rep = C.theta_sweep(2.0, 1.0, 4, 4)
    rep.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "theta_0,lambda_min" and len(rows) == 5


def test_theta_grid_nests_and_contains_pi():
    g64, g128 = C.theta_grid(64)[:, 0], C.theta_grid(128)[:, 0]
    assert np.allclose(g64, g128[1::2])
    assert g64[-1] == pytest.approx(math.pi)
    assert np.all((g64 > -math.pi) & (g64 <= math.pi))


# --- Duhamel simulation --------------------------------------------------------


def test_zero_control_is_free_evolution(rng):
    u0 = ModalState.random(0.2, 5, rng)
    zero = C.ControlTrajectory(u0.theta, 5, 1.0, 2.0, np.zeros((9, 11), dtype=complex))
    out = C.simulate_duhamel(u0, zero, 2.0)
    assert np.allclose(out.coefficients, propagate(u0, 2.0).coefficients, atol=1e-14)
    assert np.array_equal(C.simulate_duhamel(u0, None, 2.0).coefficients,
                          propagate(u0, 2.0).coefficients)


def test_constant_single_mode_forcing():
    # R_s = pi: only mode k is forced; exact value is int_0^T e^{-i(T-s) lam} c ds
    theta, cutoff, T = 0.6, 3, 1.7
    u0 = ModalState.zeros(theta, cutoff)
    k = 5
    c = 0.8 - 0.3j
    amp = np.zeros(7, dtype=complex)
    amp[k] = c
    lam = u0.eigenvalues[k]
    exact = c * (1 - np.exp(-1j * T * lam)) / (1j * lam)
    errs = []
    for n in (256, 512):
        out = C.simulate_duhamel(u0, lambda t: amp, T=T, time_steps=n, R_s=math.pi)
        assert np.allclose(np.delete(out.coefficients, k), 0.0, atol=1e-12)
        errs.append(abs(out.coefficients[k] - exact))
    assert errs[1] <= 1e-4 * abs(exact)
    assert errs[0] / errs[1] >= 3.6


def test_second_order_convergence(rng):
    u0 = ModalState.random(0.3, 4, rng)
    shape = rng.normal(size=9) + 1j * rng.normal(size=9)

    def f(t):
        return shape * np.cos(3 * t) * np.exp(0.5j * t * np.arange(9))

    ref = C.simulate_duhamel(u0, f, T=2.0, time_steps=4096, R_s=1.0).coefficients
    errs = [np.linalg.norm(C.simulate_duhamel(u0, f, T=2.0, time_steps=n, R_s=1.0).coefficients - ref)
            for n in (32, 64, 128)]
    assert errs[0] / errs[1] >= 4 * 0.9 and errs[1] / errs[2] >= 4 * 0.9


def test_mismatched_trajectory_rejected(rng):
    u0 = ModalState.random(0.2, 3, rng)
    bad = C.ControlTrajectory(u0.theta, 4, 1.0, 1.0, np.zeros((5, 9), dtype=complex))
    with pytest.raises(ValueError):
        C.simulate_duhamel(u0, bad, 1.0)
    with pytest.raises(ValueError):
        C.simulate_duhamel(u0, lambda t: np.zeros(7), T=1.0)


# --- HUM -----------------------------------------------------------------------


def test_hum_full_torus_closed_form(rng):
    T = 1.3
    u0 = ModalState.random(0.5, 6, rng)
    sol = C.hum_control(u0, T, math.pi, 64)
    assert sol.residual <= 1e-10
    expected = u0.l2_norm() ** 2 / (TWO_PI * T) * TWO_PI
    assert sol.cost == pytest.approx(expected, rel=1e-10)
    assert sol.cost_gramian == pytest.approx(expected, rel=1e-10)


def test_hum_zero_state():
    sol = C.hum_control(ModalState.zeros(0.1, 4), 1.0, 1.0, 32)
    assert sol.cost == 0.0
    assert np.all(sol.trajectory.amplitudes == 0)
    assert sol.final_state.norm() == 0.0


@pytest.mark.parametrize("theta", [0.0, 0.3, math.pi])
def test_hum_end_to_end(rng, theta):
    u0 = ModalState.random(theta, 30, rng)
    sol = C.hum_control(u0, TWO_PI, 1.0, 512)
    assert sol.residual <= 1e-8
    assert sol.cost <= sol.cost_bound * (1 + 1e-3)
    assert sol.cost == pytest.approx(sol.cost_gramian, rel=1e-8)


def test_hum_cost_bound_is_l2_over_operator_lambda(rng):
    u0 = ModalState.random(0.3, 8, rng)
    sol = C.hum_control(u0, 2.0, 1.0, 128)
    lam_operator = sol.lambda_min / TWO_PI
    assert sol.cost_bound == pytest.approx(u0.l2_norm() ** 2 / lam_operator, rel=1e-12)


def test_hum_singular_gramian(rng):
    u0 = ModalState.random(0.0, 25, rng)
    with pytest.raises(C.SingularGramianError):
        C.hum_control(u0, 0.05, 0.05, 64)


def test_steer_reaches_target(rng):
    u0 = ModalState.random(0.8, 10, rng)
    target = ModalState.random(0.8, 10, rng)
    sol = C.steer(u0, target, TWO_PI, 1.0, 256)
    assert sol.residual <= 1e-8
    assert np.allclose(sol.final_state.coefficients, target.coefficients, atol=1e-8)


@given(st.floats(-math.pi, math.pi), st.integers(0, 10_000))
def test_duality_positive_gramian_means_control(theta, seed):
    u0 = ModalState.random(theta, 6, np.random.default_rng(seed))
    sol = C.hum_control(u0, 2.0, 1.0, 64)
    assert sol.lambda_min > 0
    assert sol.residual <= 1e-9
    assert sol.cost <= sol.cost_bound * (1 + 1e-9)
