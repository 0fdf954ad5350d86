"""Lifted lattices and their gap decomposition.

For a quasimomentum ``theta`` the Schrödinger modes on the torus have
spatial frequencies ``gamma in theta/2pi + Z^d`` and temporal frequencies
``|gamma|^2``. Lifting gives points ``(gamma, |gamma|^2)`` in ``R^{d+1}``.
An Ingham-type lower bound on a ball of radius ``R`` needs the point set to
be split into pieces whose gaps ``delta_j`` satisfy ``2 sum c/delta_j <= R``;
``decompose`` builds such a split and certifies each gap by brute force.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .bessel import first_positive_root


@dataclass(frozen=True)
class LiftedLattice:
    theta: np.ndarray
    cutoff: int
    indices: np.ndarray  # (N, d) integer parts
    points: np.ndarray  # (N, d+1)

    @property
    def dimension(self) -> int:
        return self.indices.shape[1]

    @property
    def gammas(self) -> np.ndarray:
        return self.points[:, :-1]

    def __len__(self) -> int:
        return self.points.shape[0]


def integer_box(cutoff: int, d: int) -> np.ndarray:
    """All integer vectors with entries in ``[-cutoff, cutoff]``, lexicographic."""
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    axis = np.arange(-cutoff, cutoff + 1)
    return np.array(list(itertools.product(axis, repeat=d)), dtype=int).reshape(-1, d)


def build_lifted(theta, cutoff: int, d: int | None = None) -> LiftedLattice:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if d is None:
        d = theta.size
    if theta.size == 1 and d > 1:
        theta = np.full(d, theta[0])
    if theta.size != d:
        raise ValueError(f"theta has {theta.size} components but d={d}")
    idx = integer_box(cutoff, d)
    gam = theta / (2 * np.pi) + idx
    pts = np.column_stack([gam, np.sum(gam * gam, axis=1)])
    return LiftedLattice(theta=theta, cutoff=cutoff, indices=idx, points=pts)


def gap_bruteforce(points) -> float:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return math.inf
    return float(np.min(pdist(pts)))


def gap(points) -> float:
    """Minimum pairwise distance; ``inf`` for fewer than two points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        return math.inf
    if pts.shape[0] <= 64:
        return gap_bruteforce(pts)
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(np.min(dist[:, 1]))


def ingham_c(m: int, safety: float = 1.0) -> float:
    """``safety`` times the first positive zero of ``J_{(m-1)/2}``."""
    if m < 1:
        raise ValueError("ambient dimension must be >= 1")
    if safety < 1.0:
        raise ValueError("safety factor must be >= 1")
    return safety * first_positive_root((m - 1) / 2.0)


@dataclass(frozen=True)
class DecompositionParams:
    c: float
    R: float
    alpha: float
    beta: float
    n_alpha: int


@dataclass
class Subset:
    indices: np.ndarray  # rows of the parent lattice
    gap: float  # certified, equals the brute-force gap of the subset
    kind: str  # "axes-clear", "slab", "rest"
    claimed_gap: float = math.inf  # analytic lower bound from the construction


@dataclass
class GapDecomposition:
    lattice: LiftedLattice
    params: DecompositionParams
    subsets: list[Subset] = field(default_factory=list)

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    @property
    def budget(self) -> float:
        return 2.0 * sum(self.params.c / s.gap for s in self.subsets)

    def part_budget(self, kind: str) -> float:
        return 2.0 * sum(self.params.c / s.gap for s in self.subsets if s.kind == kind)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "theta": self.lattice.theta.tolist(),
            "cutoff": self.lattice.cutoff,
            "params": {"alpha": p.alpha, "beta": p.beta, "N_alpha": p.n_alpha, "c": p.c, "R": p.R},
            "N": self.n_subsets,
            "budget": self.budget,
            "subsets": [
                {
                    "kind": s.kind,
                    "indices": s.indices.tolist(),
                    "gap": None if math.isinf(s.gap) else s.gap,
                    "claimed_gap": None if math.isinf(s.claimed_gap) else s.claimed_gap,
                }
                for s in self.subsets
            ],
        }


class BudgetViolation(RuntimeError):
    pass


def n_alpha_count(theta: np.ndarray, alpha: float, axis: int) -> int:
    """Shifted-integer points of ``[-alpha-1, alpha+1]^{d-1}`` transverse to ``axis``."""
    count = 1
    for i, th in enumerate(theta):
        if i == axis:
            continue
        s = th / (2 * np.pi)
        lo = math.ceil(-alpha - 1 - s)
        hi = math.floor(alpha + 1 - s)
        count *= max(0, hi - lo + 1)
    return count


def _slab_chains(gam, idx, member, axis, beta):
    """Group slab points along ``axis`` by their transverse integer coordinates."""
    in_slab = member & (np.abs(gam[:, axis]) >= beta)
    rows = np.flatnonzero(in_slab)
    chains: dict[tuple, list[int]] = {}
    for r in rows:
        key = tuple(np.delete(idx[r], axis))
        chains.setdefault(key, []).append(r)
    return in_slab, [np.array(v, dtype=int) for _, v in sorted(chains.items())]


def decompose(lattice: LiftedLattice, R: float, c: float) -> GapDecomposition:
    """Split a lifted lattice into pieces obeying ``2 sum c/delta_j <= R``.

    Three parts, each allotted ``R/3`` of the budget: points whose spatial
    coordinates all stay at least ``alpha`` away from the axes, chains in the
    slabs around each axis beyond ``beta``, and singletons for the bounded
    rest. Every gap is measured by brute force; ``alpha`` and ``beta`` grow
    until the measured gaps meet the budget.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if c <= 0:
        raise ValueError("c must be positive")
    n = len(lattice)
    if n == 0:
        raise ValueError("empty lattice")
    d = lattice.dimension
    gam = lattice.gammas
    idx = lattice.indices
    theta = lattice.theta
    third = R / 3.0
    top = float(np.max(np.abs(gam))) if n else 0.0

    # part 1: away from all axes
    alpha = max(6.0 * c / R, 1.0)
    while True:
        in_a = np.all(np.abs(gam) >= alpha, axis=1)
        rows_a = np.flatnonzero(in_a)
        gap_a = gap(lattice.points[rows_a])
        if rows_a.size == 0 or 2.0 * c / gap_a <= third:
            break
        alpha *= 2.0

    # part 2: slabs |gamma_k| >= beta outside A_alpha, one chain per transverse index
    n_alpha = max((n_alpha_count(theta, alpha, k) for k in range(d)), default=1) if d > 1 else 1
    beta = max(3.0 * d * n_alpha * c / R, alpha + 1.0, 1.0)
    rest = ~in_a
    while True:
        member = rest.copy()
        chains = []
        for k in range(d):
            in_slab, ks = _slab_chains(gam, idx, member, k, beta)
            member &= ~in_slab
            chains.extend(ks)
        chain_gaps = [gap(lattice.points[ch]) for ch in chains]
        slab_budget = 2.0 * sum(c / g for g in chain_gaps)
        if slab_budget <= third or beta > top:
            break
        beta *= 1.5
    if slab_budget > third:
        # beta beyond the truncation: everything left becomes singletons
        member = rest.copy()
        chains, chain_gaps = [], []

    subsets: list[Subset] = []
    if rows_a.size:
        subsets.append(Subset(rows_a, gap_a, "axes-clear", claimed_gap=alpha))
    for ch, g in zip(chains, chain_gaps):
        subsets.append(Subset(ch, g, "slab", claimed_gap=2.0 * beta))
    for r in np.flatnonzero(member):
        subsets.append(Subset(np.array([r]), math.inf, "rest"))

    dec = GapDecomposition(lattice, DecompositionParams(c, R, alpha, beta, n_alpha), subsets)
    if dec.budget > R * (1 + 1e-12):
        raise BudgetViolation(f"budget {dec.budget} exceeds R={R}")
    return dec
