"""Observability Gramians, theta sweeps and HUM null-controls on a Floquet fibre.

All objects live on one fibre: modes ``exp(i gamma.y)`` with ``gamma`` in the
box-truncated ``theta/2pi + Z^d``, observed on the torus ball ``B_{R_s}``.

Time integrals of modal trajectories use a product rule: the slowly varying
envelope ``exp(i t |gamma|^2) c_gamma(t)`` is interpolated piecewise linearly
between nodes and the oscillating factors ``exp(i t omega)`` are integrated
exactly (Filon-type trapezoid). The rule is second order in the envelope and
exact when the envelope is constant, which is the case for HUM controls.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np
from scipy import linalg

from .floquet import ModalState, eigenbasis, propagate
from .gramian import ball_exp_integral_radial, ball_volume, gram_matrix, smallest_eigenvalue


class SingularGramianError(RuntimeError):
    """The truncated observability Gramian is numerically singular."""


def _space_factor(gammas: np.ndarray, R_s: float) -> np.ndarray:
    d = gammas.shape[1]
    diff = np.sqrt(np.sum((gammas[:, None, :] - gammas[None, :, :]) ** 2, axis=-1))
    S = ball_exp_integral_radial(diff, R_s, d)
    np.fill_diagonal(S, ball_volume(d, R_s))
    return S


def _time_factor(lam: np.ndarray, T: float, t0: float = 0.0) -> np.ndarray:
    """``int_{t0}^{t0+T} exp(i t lam) dt`` elementwise, stable as ``lam -> 0``."""
    return T * np.exp(1j * (t0 + T / 2) * lam) * np.sinc(T * lam / (2 * np.pi))


@dataclass
class ObservabilityGramian:
    theta: np.ndarray
    T: float
    R_s: float
    cutoff: int
    gammas: np.ndarray
    eigenvalues: np.ndarray  # |gamma|^2
    space: np.ndarray  # int_{B_Rs} exp(i y.(gamma_j - gamma_k)) dy
    matrix: np.ndarray
    t0: float = 0.0

    def lambda_min(self) -> float:
        return smallest_eigenvalue(self.matrix)

    def quadratic_form(self, state: ModalState) -> float:
        a = state.coefficients
        return float(np.real(np.conj(a) @ self.matrix @ a))


def _check_radius(R_s: float) -> None:
    if not 0 < R_s <= np.pi:
        raise ValueError("R_s must lie in (0, pi]: it exceeds the torus half-width otherwise")


def obs_gramian(theta, T: float, R_s: float, cutoff: int, d: int | None = None, t0: float = 0.0):
    """Observability Gramian on ``[t0, t0+T] x B_{R_s}``."""
    _check_radius(R_s)
    if T <= 0:
        raise ValueError("T must be positive")
    _, gam, lam = eigenbasis(theta, cutoff, d)
    S = _space_factor(gam, R_s)
    tau = _time_factor(lam[:, None] - lam[None, :], T, t0)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if d is not None and theta.size == 1:
        theta = np.full(d, theta[0])
    return ObservabilityGramian(theta, T, R_s, cutoff, gam, lam, S, S * tau, t0)


def ball_gramian(theta, T: float, R_s: float, cutoff: int, d: int | None = None) -> np.ndarray:
    """Gramian of the ``(d+1)``-ball of radius ``min(R_s, T/2)`` centred at ``(0, T/2)``.

    The ball sits inside ``[0, T] x B_{R_s}``, so ``cylinder - ball`` is
    positive semidefinite. Returned in the same modal coordinates as
    ``obs_gramian``.
    """
    _check_radius(R_s)
    _, gam, lam = eigenbasis(theta, cutoff, d)
    radius = min(R_s, T / 2)
    G = gram_matrix(np.column_stack([gam, lam]), radius).matrix
    D = np.exp(0.5j * T * lam)
    return D[:, None] * G * np.conj(D)[None, :]


@dataclass
class ThetaSweepReport:
    thetas: np.ndarray  # (n, d)
    lambda_min: np.ndarray  # (n,)
    T: float
    R_s: float
    cutoff: int
    stability_ratio: float  # lambda_min(2*cutoff) / lambda_min(cutoff) at the worst theta

    @property
    def global_min(self) -> float:
        return float(np.min(self.lambda_min))

    @property
    def worst_theta(self) -> np.ndarray:
        return self.thetas[int(np.argmin(self.lambda_min))]

    def grid_modulus(self) -> float:
        """Largest jump of ``lambda_min`` between neighbouring grid points (1-d sweeps)."""
        if self.thetas.shape[1] != 1 or len(self.lambda_min) < 2:
            return float("nan")
        lam = np.append(self.lambda_min, self.lambda_min[0])
        return float(np.max(np.abs(np.diff(lam))))

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "R_s": self.R_s,
            "cutoff": self.cutoff,
            "theta": self.thetas.tolist(),
            "lambda_min": self.lambda_min.tolist(),
            "global_min": self.global_min,
            "worst_theta": self.worst_theta.tolist(),
            "stability_ratio": self.stability_ratio,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"theta_{i}" for i in range(self.thetas.shape[1])] + ["lambda_min"])
            for th, lam in zip(self.thetas, self.lambda_min):
                w.writerow([*th.tolist(), repr(float(lam))])


def theta_grid(n: int, d: int = 1) -> np.ndarray:
    """Uniform grid ``-pi + 2 pi (j+1)/n`` per axis; contains ``pi`` and nests under doubling."""
    if n < 1:
        raise ValueError("theta grid needs at least one point")
    axis = -np.pi + 2 * np.pi * (np.arange(n) + 1) / n
    return np.array(list(product(axis, repeat=d)))


def theta_sweep(T: float, R_s: float, cutoff: int, n: int, d: int = 1, workers: int | None = None):
    thetas = theta_grid(n, d)

    def one(th):
        return obs_gramian(th, T, R_s, cutoff).lambda_min()

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            lams = np.array(list(pool.map(one, thetas)))
    else:
        lams = np.array([one(th) for th in thetas])
    worst = thetas[int(np.argmin(lams))]
    refined = obs_gramian(worst, T, R_s, 2 * cutoff).lambda_min()
    return ThetaSweepReport(thetas, lams, T, R_s, cutoff, refined / float(np.min(lams)))


# --- time quadrature -------------------------------------------------------


def _edge_weight(x: np.ndarray) -> np.ndarray:
    """``int_0^1 (1-u) exp(i x u) du``."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < 0.1
    xs = x[small]
    acc = np.zeros(xs.shape, dtype=complex)
    term = np.ones(xs.shape, dtype=complex)
    for k in range(12):
        acc += term / ((k + 1) * (k + 2))
        term = term * 1j * xs / (k + 1)
    out[small] = acc
    xl = x[~small]
    out[~small] = (1 + 1j * xl - np.exp(1j * xl)) / xl**2
    return out


def _product_rule(omega: np.ndarray, P_sum: np.ndarray, P_first, P_last, T: float, N: int):
    """``int_0^T exp(i s omega) p(s) ds`` for piecewise-linear ``p`` on ``N`` steps.

    ``P_sum`` is ``sum_n exp(i t_n omega) p(t_n)`` over all nodes; ``P_first``
    and ``P_last`` are ``p(0)`` and ``exp(i T omega) p(T)``.
    """
    h = T / N
    x = omega * h
    interior = h * np.sinc(x / (2 * np.pi)) ** 2
    w_first = h * _edge_weight(x)
    w_last = h * _edge_weight(-x)
    return interior * (P_sum - P_first - P_last) + w_first * P_first + w_last * P_last


@dataclass
class ControlTrajectory:
    """Control ``f(t, y) = 1_{B_{R_s}}(y) sum_gamma c_gamma(t) exp(i gamma.y)`` on a uniform grid."""

    theta: np.ndarray
    cutoff: int
    R_s: float
    T: float
    amplitudes: np.ndarray  # (time_steps + 1, n_modes)

    @property
    def time_steps(self) -> int:
        return self.amplitudes.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.time_steps + 1)

    @classmethod
    def sample(cls, func: Callable[[float], np.ndarray], theta, cutoff, R_s, T, time_steps):
        ts = np.linspace(0.0, T, time_steps + 1)
        amps = np.array([np.asarray(func(t), dtype=complex) for t in ts])
        return cls(np.atleast_1d(np.asarray(theta, dtype=float)), cutoff, R_s, T, amps)


def _phase_sums(C: np.ndarray, lam: np.ndarray, ts: np.ndarray, left: np.ndarray | None = None):
    """Return ``(sum_n, first, last)`` pieces of ``sum_n conj(L_n)_j C_nk`` for the product rule.

    Without ``left`` the left factor is ``exp(-i t_n lam_j)``, giving the
    Duhamel forcing sums; with ``left = C`` it gives the cost sums.
    """
    if left is None:
        left = np.exp(-1j * np.outer(ts, lam))
    L = np.conj(left)
    total = L.T @ C
    first = np.outer(L[0], C[0])
    last = np.outer(L[-1], C[-1])
    return total, first, last


def simulate_duhamel(u0: ModalState, f, T: float | None = None, time_steps: int | None = None,
                     R_s: float | None = None) -> ModalState:
    """Modal state at ``T`` of ``u(T) = e^{iT Delta} u0 + int_0^T e^{i(T-s) Delta} 1_B f(s) ds``.

    ``f`` is a ``ControlTrajectory``, ``None`` (free evolution) or a callable
    ``t -> amplitudes`` sampled on ``time_steps`` steps (then ``R_s`` is required).
    """
    if f is None:
        if T is None:
            raise ValueError("T is required for free evolution")
        return propagate(u0, T)
    if callable(f) and not isinstance(f, ControlTrajectory):
        if None in (T, time_steps, R_s):
            raise ValueError("a callable control needs T, time_steps and R_s")
        f = ControlTrajectory.sample(f, u0.theta, u0.cutoff, R_s, T, time_steps)
    if T is not None and abs(T - f.T) > 1e-12 * max(1.0, T):
        raise ValueError("control horizon does not match T")
    if f.cutoff != u0.cutoff or not np.allclose(f.theta, u0.theta):
        raise ValueError("control and state use different truncations")
    if f.amplitudes.shape[1] != u0.coefficients.size:
        raise ValueError("control amplitudes do not match the mode count")
    T, N = f.T, f.time_steps
    lam = u0.eigenvalues
    ts = f.times
    omega = lam[:, None] - lam[None, :]
    total, first, last = _phase_sums(f.amplitudes, lam, ts)
    Z = _product_rule(omega, total, first, last, T, N)
    S = _space_factor(u0.gammas, f.R_s)
    forcing = np.sum(S * Z, axis=1) / (2 * np.pi) ** u0.dimension
    out = np.exp(-1j * T * lam) * (u0.coefficients + forcing)
    return u0.with_coefficients(out)


def control_cost(f: ControlTrajectory, gammas: np.ndarray, lam: np.ndarray) -> float:
    """``||f||^2`` in ``L^2(B_{R_s} x (0, T))`` by the product rule."""
    ts = f.times
    omega = lam[:, None] - lam[None, :]
    total, first, last = _phase_sums(f.amplitudes, lam, ts, left=f.amplitudes)
    # left factor conj(c_j) c_k carries exp(i t omega_jk) times the envelope product
    Z = _product_rule(omega, total, first, last, f.T, f.time_steps)
    S = _space_factor(gammas, f.R_s)
    return float(np.real(np.sum(S * Z)))


@dataclass
class ControlSolution:
    trajectory: ControlTrajectory
    final_state: ModalState
    cost: float
    cost_gramian: float  # eta^* M eta
    residual: float  # ||u(T)|| / ||u0|| (coefficient norms)
    lambda_min: float  # of the Gramian matrix M
    cost_bound: float  # ||u0||_{L^2}^2 / lambda_min(operator) = (2pi)^{2d} ||a||^2 / lambda_min(M)
    wall_time: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": self.trajectory.theta.tolist(),
            "cutoff": self.trajectory.cutoff,
            "R_s": self.trajectory.R_s,
            "T": self.trajectory.T,
            "time_steps": self.trajectory.time_steps,
            "cost": self.cost,
            "cost_gramian": self.cost_gramian,
            "cost_bound": self.cost_bound,
            "residual": self.residual,
            "lambda_min": self.lambda_min,
            **self.extras,
        }


def hum_control(u0: ModalState, T: float, R_s: float, time_steps: int) -> ControlSolution:
    """Minimal-norm null control: ``f(t) = 1_B e^{it Delta} phi0`` with ``G phi0 = -u0``."""
    start = time.perf_counter()
    M = obs_gramian(u0.theta, T, R_s, u0.cutoff)
    lam_min = M.lambda_min()
    scale = np.linalg.norm(M.matrix, 2)
    if lam_min <= 1e-10 * scale:
        raise SingularGramianError(
            f"lambda_min={lam_min:.3e} vs ||M||={scale:.3e}: truncation is under-observed"
        )
    d = u0.dimension
    rhs = -((2 * np.pi) ** d) * u0.coefficients
    eta = linalg.solve(M.matrix, rhs, assume_a="her")
    ts = np.linspace(0.0, T, time_steps + 1)
    amps = eta[None, :] * np.exp(-1j * np.outer(ts, u0.eigenvalues))
    traj = ControlTrajectory(u0.theta.copy(), u0.cutoff, R_s, T, amps)
    final = simulate_duhamel(u0, traj, T)
    norm0 = u0.norm()
    residual = final.norm() / norm0 if norm0 > 0 else final.norm()
    cost = control_cost(traj, u0.gammas, u0.eigenvalues)
    cost_gram = float(np.real(np.conj(eta) @ M.matrix @ eta))
    bound = (2 * np.pi) ** (2 * d) * norm0**2 / lam_min
    return ControlSolution(traj, final, cost, cost_gram, residual, lam_min, bound,
                           time.perf_counter() - start)


def steer(u0: ModalState, u_target: ModalState, T: float, R_s: float, time_steps: int):
    """Control from ``u0`` to ``u_target`` by null-controlling ``u0 - e^{-iT Delta} u_target``."""
    shifted = u0.with_coefficients(u0.coefficients - propagate(u_target, -T).coefficients)
    sol = hum_control(shifted, T, R_s, time_steps)
    reached = simulate_duhamel(u0, sol.trajectory, T)
    err = np.linalg.norm(reached.coefficients - u_target.coefficients)
    scale = max(u0.norm(), u_target.norm(), 1e-300)
    sol.final_state = reached
    sol.residual = float(err / scale)
    return sol
