"""Gauss-Legendre quadrature on Euclidean balls.

The ball ``B_R`` in ``R^m`` is parametrised by iterated sine substitutions,
``x_1 = R sin(phi_1)``, ``x_2 = R cos(phi_1) sin(phi_2)``, ..., with the last
coordinate left linear. This removes the square-root edge of the nested
limits, so a tensor Gauss-Legendre rule converges exponentially for smooth
integrands. Nothing here touches Bessel functions; it serves as the
independent check on the closed-form ball integrals.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def ball_nodes(radius: float, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``(N, m)`` and weights ``(N,)`` of an ``n**m``-point rule on ``B_radius``."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    t, w = _gauss_legendre(n)
    if m == 1:
        return (radius * t)[:, None], radius * w
    phi = 0.5 * np.pi * t
    wphi = 0.5 * np.pi * w
    grids = np.meshgrid(*([phi] * (m - 1) + [t]), indexing="ij")
    wgrids = np.meshgrid(*([wphi] * (m - 1) + [w]), indexing="ij")
    width = np.full(grids[0].shape, float(radius))
    weight = np.ones_like(width)
    coords = []
    for j in range(m - 1):
        coords.append(width * np.sin(grids[j]))
        weight = weight * wgrids[j] * width * np.cos(grids[j])
        width = width * np.cos(grids[j])
    coords.append(width * grids[-1])
    weight = weight * wgrids[-1] * width
    nodes = np.stack([c.ravel() for c in coords], axis=1)
    return nodes, weight.ravel()


def ball_integral(func: Callable[[np.ndarray], np.ndarray], radius: float, m: int, n: int):
    """Integrate ``func`` (vectorised over ``(N, m)`` points) over the ball."""
    nodes, weights = ball_nodes(radius, m, n)
    return np.tensordot(weights, func(nodes), axes=(0, 0))


def ball_integral_adaptive(
    func: Callable[[np.ndarray], np.ndarray],
    radius: float,
    m: int,
    tol: float = 1e-9,
    n0: int = 16,
    n_max: int = 256,
):
    """Refine the rule until two successive levels agree to ``tol``.

    Returns ``(value, n_used)``. Raises ``RuntimeError`` when ``n_max`` is
    reached first.
    """
    n = n0
    prev = ball_integral(func, radius, m, n)
    while n < n_max:
        n = min(n_max, int(np.ceil(n * 1.5)))
        cur = ball_integral(func, radius, m, n)
        if np.max(np.abs(np.asarray(cur) - np.asarray(prev))) <= tol:
            return cur, n
        prev = cur
    raise RuntimeError(f"ball quadrature did not settle to {tol} with {n_max} nodes per axis")


def gauss_legendre_interval(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = _gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (t + 1.0), half * w
