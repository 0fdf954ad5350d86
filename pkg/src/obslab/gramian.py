"""Gram matrices of exponential systems on balls and their smallest eigenvalue.

For points ``x_1..x_n`` in ``R^m`` the Gram matrix on ``B_R`` is
``G[j, k] = int_{B_R} exp(i z.(x_j - x_k)) dz``. Its quadratic form is the
left-hand side of an Ingham-type inequality, so ``lambda_min(G)`` is the best
constant on that finite section.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bessel import bessel_j, bessel_j_scaled  # noqa: F401  (bessel_j re-exported)
from .lattice import gap_bruteforce


def ball_volume(m: int, R: float) -> float:
    return math.pi ** (m / 2) * R**m / math.gamma(m / 2 + 1)


def ball_exp_integral_radial(kn, R: float, m: int):
    """``int_{B_R} exp(i z.k) dz`` as a function of ``|k|`` (array friendly)."""
    kn = np.asarray(kn, dtype=float)
    if m == 1:
        # elementary; keeps the 1-d torus Gramians free of Bessel evaluations
        x = R * kn
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(x == 0, 2.0 * R, 2.0 * np.sin(x) / np.where(kn == 0, 1.0, kn))
        return out
    return (2 * np.pi) ** (m / 2) * R**m * bessel_j_scaled(m / 2, R * kn)


def ball_exp_integral(k, R: float) -> float:
    """Closed form of ``int_{B_R} exp(i z.k) dz`` for ``k`` in ``R^m``."""
    if R <= 0:
        raise ValueError("R must be positive")
    k = np.atleast_1d(np.asarray(k, dtype=float))
    return float(ball_exp_integral_radial(np.linalg.norm(k), R, k.size))


@dataclass
class GramMatrix:
    points: np.ndarray
    R: float
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def quadratic_form(self, alpha) -> float:
        a = np.asarray(alpha)
        return float(np.real(np.conj(a) @ self.matrix @ a))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerows(self.matrix.tolist())


def _pairwise_norms(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def gram_matrix(points, R: float) -> GramMatrix:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if R <= 0:
        raise ValueError("R must be positive")
    if pts.shape[0] > 1 and gap_bruteforce(pts) == 0.0:
        raise ValueError("duplicate points make the exponential system degenerate")
    m = pts.shape[1]
    dist = _pairwise_norms(pts)
    G = ball_exp_integral_radial(dist, R, m)
    np.fill_diagonal(G, ball_volume(m, R))
    return GramMatrix(pts, float(R), G)


def smallest_eigenvalue(G, check_residual: bool = True) -> float:
    """Smallest eigenvalue of a Hermitian matrix (``GramMatrix`` or array)."""
    A = G.matrix if isinstance(G, GramMatrix) else np.asarray(G)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(float(np.max(np.abs(A))), 1e-300)
    if np.max(np.abs(A - A.conj().T)) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    w, v = linalg.eigh(A, subset_by_index=[0, 0])
    lam = float(w[0])
    if check_residual:
        res = np.linalg.norm(A @ v[:, 0] - lam * v[:, 0])
        if res > 1e-8 * np.linalg.norm(A, 2):
            raise RuntimeError(f"eigensolver residual {res:.3e} too large")
    return lam


@dataclass
class InghamCertificate:
    n_points: int
    R: float
    c: float
    delta: float
    lambda_min: float
    in_regime: bool  # R >= c / delta

    @property
    def satisfied(self) -> bool:
        return self.lambda_min > 0

    def to_dict(self) -> dict:
        return {
            "n_points": self.n_points,
            "R": self.R,
            "c": self.c,
            "delta": self.delta,
            "lambda_min": self.lambda_min,
            "in_regime": self.in_regime,
            "satisfied": self.satisfied,
        }


def ingham_certify(points, R: float, c: float, delta: float) -> InghamCertificate:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    true_gap = gap_bruteforce(pts)
    if delta <= 0 or delta > true_gap * (1 + 1e-12):
        raise ValueError(f"delta={delta} exceeds the point set's gap {true_gap}")
    lam = smallest_eigenvalue(gram_matrix(pts, R))
    return InghamCertificate(pts.shape[0], float(R), float(c), float(delta), lam, R >= c / delta)
