"""Discrete Floquet-Bloch transform and modal Schrödinger dynamics on the torus.

A function on ``R^d`` is held on ``K^d`` period cells ``2 pi n + [-pi, pi)^d``
with an ``M^d`` grid per cell. The discrete transform pairs the cell index
with ``K`` quasimomenta per axis, which makes forward/inverse an exact
unitary map. Phase convention: ``F(y, theta) = (2pi)^{-d/2} sum_n
exp(-i theta.n) u(y + 2 pi n)``, so that every fibre is theta-pseudoperiodic,
``F(y + 2 pi k) = exp(i k.theta) F(y)``, like the eigenfunctions
``exp(i gamma.y)``, ``gamma in theta/2pi + Z^d``.

Free evolution follows ``i u_t + Delta u = 0``: mode ``gamma`` picks up the
phase ``exp(-i t |gamma|^2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .gramian import ball_exp_integral_radial, ball_volume
from .lattice import integer_box
from .quadrature import ball_integral


def wrap_theta(theta):
    """Map angles into ``(-pi, pi]``."""
    t = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(t <= -np.pi, t + 2 * np.pi, t)


def torus_grid(M: int) -> np.ndarray:
    return -np.pi + 2 * np.pi * np.arange(M) / M


@dataclass
class SampledFunction:
    """Samples of ``u`` on ``K^d`` cells; ``values`` has shape ``(K,)*d + (M,)*d``."""

    values: np.ndarray
    origin: tuple = None  # integer index of the first cell per axis

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim % 2 or self.values.size == 0:
            raise ValueError("values must have shape (K,)*d + (M,)*d with at least one cell")
        if self.origin is None:
            self.origin = (0,) * self.dimension
        self.origin = tuple(int(o) for o in self.origin)

    @property
    def dimension(self) -> int:
        return self.values.ndim // 2

    @property
    def cells_per_axis(self) -> tuple:
        return self.values.shape[: self.dimension]

    @property
    def grid_per_axis(self) -> int:
        return self.values.shape[-1]

    def norm(self) -> float:
        h = (2 * np.pi / self.grid_per_axis) ** self.dimension
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * h))


@dataclass
class FloquetField:
    thetas: list  # per-axis arrays of quasimomenta in (-pi, pi]
    values: np.ndarray  # (K,)*d + (M,)*d, first block indexed like ``thetas``
    origin: tuple

    @property
    def dimension(self) -> int:
        return self.values.ndim // 2

    def norm(self) -> float:
        d = self.dimension
        M = self.values.shape[-1]
        dtheta = np.prod([2 * np.pi / len(t) for t in self.thetas])
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * (2 * np.pi / M) ** d * dtheta))

    def theta_at(self, index) -> np.ndarray:
        return np.array([self.thetas[a][i] for a, i in enumerate(index)])


def floquet_forward(u: SampledFunction) -> FloquetField:
    d = u.dimension
    K = u.cells_per_axis
    axes = tuple(range(d))
    thetas = [wrap_theta(2 * np.pi * np.arange(k) / k) for k in K]
    vals = np.fft.fftn(u.values, axes=axes) * (2 * np.pi) ** (-d / 2)
    # exp(-i theta.origin) for the shifted cell index
    phase = np.ones(K)
    for a, (t, o) in enumerate(zip(thetas, u.origin)):
        shape = [1] * d
        shape[a] = K[a]
        phase = phase * np.exp(-1j * t * o).reshape(shape)
    vals = vals * phase.reshape(K + (1,) * d)
    return FloquetField(thetas, vals, u.origin)


def floquet_inverse(F: FloquetField) -> SampledFunction:
    d = F.dimension
    K = F.values.shape[:d]
    if len(F.thetas) != d or any(len(t) != k for t, k in zip(F.thetas, K)):
        raise ValueError("theta grid does not match the field shape")
    phase = np.ones(K)
    for a, (t, o) in enumerate(zip(F.thetas, F.origin)):
        shape = [1] * d
        shape[a] = K[a]
        phase = phase * np.exp(1j * np.asarray(t) * o).reshape(shape)
    vals = F.values * phase.reshape(K + (1,) * d)
    vals = np.fft.ifftn(vals, axes=tuple(range(d))) * (2 * np.pi) ** (d / 2)
    return SampledFunction(vals, F.origin)


def eigenbasis(theta, cutoff: int, d: int | None = None):
    """Modes of the theta-twisted Laplacian: ``(indices, gammas, |gamma|^2)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if d is not None and theta.size == 1 and d > 1:
        theta = np.full(d, theta[0])
    idx = integer_box(cutoff, theta.size)
    gam = theta / (2 * np.pi) + idx
    return idx, gam, np.sum(gam * gam, axis=1)


def twisted_laplacian(values: np.ndarray, theta) -> np.ndarray:
    """Spectral ``Delta_theta`` of theta-pseudoperiodic samples on the torus grid."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    d = values.ndim
    M = values.shape[0]
    y = np.meshgrid(*([torus_grid(M)] * d), indexing="ij")
    shift = sum(th / (2 * np.pi) * yy for th, yy in zip(theta, y))
    periodic = values * np.exp(-1j * shift)
    freqs = np.meshgrid(*([np.fft.fftfreq(M, 1.0 / M)] * d), indexing="ij")
    symbol = sum((f + th / (2 * np.pi)) ** 2 for f, th in zip(freqs, theta))
    return np.fft.ifftn(-symbol * np.fft.fftn(periodic)) * np.exp(1j * shift)


@dataclass
class ModalState:
    """Coefficients of ``sum_gamma alpha_gamma exp(i gamma.y)`` on the box cutoff."""

    theta: np.ndarray
    cutoff: int
    coefficients: np.ndarray
    indices: np.ndarray = field(init=False, repr=False)
    gammas: np.ndarray = field(init=False, repr=False)
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.indices, self.gammas, self.eigenvalues = eigenbasis(self.theta, self.cutoff)
        self.coefficients = np.asarray(self.coefficients, dtype=complex).ravel()
        if self.coefficients.size != self.indices.shape[0]:
            raise ValueError(
                f"expected {self.indices.shape[0]} coefficients, got {self.coefficients.size}"
            )

    @property
    def dimension(self) -> int:
        return self.theta.size

    @classmethod
    def zeros(cls, theta, cutoff: int) -> "ModalState":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return cls(theta, cutoff, np.zeros((2 * cutoff + 1) ** theta.size, dtype=complex))

    @classmethod
    def random(cls, theta, cutoff: int, rng: np.random.Generator) -> "ModalState":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        n = (2 * cutoff + 1) ** theta.size
        return cls(theta, cutoff, rng.standard_normal(n) + 1j * rng.standard_normal(n))

    def norm(self) -> float:
        """ell^2 norm of the coefficients."""
        return float(np.linalg.norm(self.coefficients))

    def l2_norm(self) -> float:
        """L^2 norm on the torus, ``(2pi)^{d/2}`` times the coefficient norm."""
        return (2 * np.pi) ** (self.dimension / 2) * self.norm()

    def with_coefficients(self, coefficients) -> "ModalState":
        return ModalState(self.theta, self.cutoff, coefficients)

    def evaluate(self, y) -> np.ndarray:
        """Values at points ``y`` of shape ``(N, d)``."""
        y = np.asarray(y, dtype=float).reshape(-1, self.dimension)
        return np.exp(1j * y @ self.gammas.T) @ self.coefficients

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "cutoff": self.cutoff,
            "pairs": [
                [idx.tolist(), float(a.real), float(a.imag)]
                for idx, a in zip(self.indices, self.coefficients)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ModalState":
        state = cls.zeros(data["theta"], int(data["cutoff"]))
        lookup = {tuple(i): r for r, i in enumerate(state.indices.tolist())}
        coeffs = state.coefficients.copy()
        for idx, re, im in data["pairs"]:
            coeffs[lookup[tuple(idx)]] = complex(re, im)
        return state.with_coefficients(coeffs)

    @classmethod
    def from_json(cls, text: str) -> "ModalState":
        return cls.from_dict(json.loads(text))


def propagate(state: ModalState, t: float) -> ModalState:
    return state.with_coefficients(state.coefficients * np.exp(-1j * t * state.eigenvalues))


def field_modes(F: FloquetField, theta_index, cutoff: int) -> ModalState:
    """Fourier coefficients of the fibre ``y -> F(y, theta)`` in the eigenbasis."""
    d = F.dimension
    theta = F.theta_at(theta_index)
    fibre = F.values[tuple(theta_index)]
    M = fibre.shape[0]
    if 2 * cutoff + 1 > M:
        raise ValueError("cutoff exceeds the grid's resolvable band")
    state = ModalState.zeros(theta, cutoff)
    y = np.stack(np.meshgrid(*([torus_grid(M)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    basis = np.exp(-1j * y @ state.gammas.T)
    return state.with_coefficients(fibre.reshape(-1) @ basis / M**d)


def restrict_mass_quadrature(state: ModalState, ball_radius: float, n: int) -> float:
    """``int_{B_R} |u|^2`` by Gauss-Legendre on the ball (no Bessel functions)."""
    d = state.dimension
    return float(ball_integral(lambda y: np.abs(state.evaluate(y)) ** 2, ball_radius, d, n))


def restrict_mass(state: ModalState, ball_radius: float, quadrature_n: int = 0) -> float:
    """``int_{B_R} |sum alpha_gamma exp(i gamma.y)|^2 dy`` via the Gram formula.

    With ``quadrature_n > 0`` the value is cross-checked against
    ``restrict_mass_quadrature`` and a mismatch above 1e-6 relative raises.
    """
    if not 0 < ball_radius <= np.pi:
        raise ValueError("ball radius must lie in (0, pi] on the torus")
    d = state.dimension
    g = state.gammas
    diff = np.sqrt(np.sum((g[:, None, :] - g[None, :, :]) ** 2, axis=-1))
    S = ball_exp_integral_radial(diff, ball_radius, d)
    np.fill_diagonal(S, ball_volume(d, ball_radius))
    a = state.coefficients
    value = float(np.real(np.conj(a) @ S @ a))
    if quadrature_n:
        check = restrict_mass_quadrature(state, ball_radius, quadrature_n)
        if abs(check - value) > 1e-6 * max(abs(value), 1e-300):
            raise RuntimeError(f"Gram value {value} disagrees with quadrature {check}")
    return value
