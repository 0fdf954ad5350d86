"""Gaussian states that are almost invisible from a set with large clearings.

For a normalised Gaussian ``u`` centred in a clearing of ``S`` the
observability quotient ``Q = int_0^T ||1_S e^{it Delta} u||^2 dt / ||u||^2``
is split as

* ``A1 = 2 int_0^T ||(e^{it Delta} - e^{t Delta}) u_1||^2 dt`` with ``u_1`` the
  part of ``u`` with frequencies in ``B_E``,
* ``A2 = 4 T ||u_2||^2`` for the remaining high frequencies,
* ``B = int_0^T ||1_S e^{t Delta} u||^2 dt`` (heat flow),

and ``Q <= 2 (A1 + A2) + 2 B``. ``A1`` is small once ``E`` is small, ``A2``
once the Gaussian is wide in space, ``B`` once the clearing is large.
Fourier transforms are unitary: ``u^(xi) = (2pi)^{-d/2} int u(x) e^{-ix.xi} dx``.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate, optimize

from .geometry import PERIOD, Clearing, ControlSet, PeriodicBalls
from .quadrature import gauss_legendre_interval

log = logging.getLogger(__name__)


class UnderResolvedError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianState:
    nu: float
    x0: tuple
    d: int

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = np.sum((x - np.asarray(self.x0)) ** 2, axis=-1)
        return (2 * np.pi * self.nu) ** (-self.d / 4) * np.exp(-r2 / (4 * self.nu))

    def fourier(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        k2 = np.sum(xi * xi, axis=-1)
        phase = np.exp(-1j * xi @ np.asarray(self.x0, dtype=float))
        return (2 * self.nu / np.pi) ** (self.d / 4) * np.exp(-self.nu * k2) * phase

    def heat_density(self, x, t: float) -> np.ndarray:
        """``|e^{t Delta} u|^2``: a Gaussian density of variance ``nu + t`` times ``(nu/(nu+t))^{d/2}``."""
        x = np.asarray(x, dtype=float)
        r2 = np.sum((x - np.asarray(self.x0)) ** 2, axis=-1)
        var = self.nu + t
        return (self.nu / var) ** (self.d / 2) * (2 * np.pi * var) ** (-self.d / 2) * np.exp(-r2 / (2 * var))

    def heat_norm2(self, t: float) -> float:
        return (self.nu / (self.nu + t)) ** (self.d / 2)


def gaussian(nu: float, x0, d: int) -> GaussianState:
    if nu <= 0:
        raise ValueError("ν must be positive")
    x0 = tuple(float(v) for v in np.atleast_1d(x0))
    if len(x0) == 1 and d > 1:
        x0 = x0 * d
    if len(x0) != d:
        raise ValueError("center has the wrong dimension")
    return GaussianState(float(nu), x0, int(d))


def _gap_fn(s):
    # cos s - e^{-s} written without cancellation for small s
    s = np.asarray(s, dtype=float)
    re = -2.0 * np.sin(0.5 * s) ** 2 - np.expm1(-s)
    return np.hypot(re, np.sin(s))


def schrodinger_heat_gap(E: float, T: float, n: int = 4097) -> float:
    """``max |e^{-i xi^2 t} - e^{-xi^2 t}|`` over ``|xi| <= E``, ``0 <= t <= T``."""
    if E < 0 or T < 0:
        raise ValueError("E and T must be non-negative")
    smax = T * E * E
    if smax == 0:
        return 0.0
    s = np.linspace(0.0, smax, n)
    g = _gap_fn(s)
    i = int(np.argmax(g))
    lo, hi = s[max(i - 1, 0)], s[min(i + 1, n - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda v: -_gap_fn(v), bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-13})
        return float(max(g[i], -res.fun))
    return float(g[i])


def heat_gap_constant(E: float, T: float, n: int = 4097) -> float:
    """``sup |e^{-is} - e^{-s}| / s`` over ``0 < s <= T E^2`` (at most sqrt(2))."""
    smax = T * E * E
    if smax == 0:
        return math.sqrt(2.0)
    s = np.linspace(smax / n, smax, n)
    return float(np.max(_gap_fn(s) / s))


def _sphere_area(d: int) -> float:
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def tail_mass(nu: float, E: float, d: int) -> float:
    """``||u^ 1_{|xi| >= E}||^2`` by radial quadrature (``u = sqrt(2 nu) |xi|``)."""
    if nu <= 0:
        raise ValueError("ν must be positive")
    if E < 0:
        raise ValueError("E must be non-negative")
    if E == 0:
        return 1.0
    lo = E * math.sqrt(2 * nu)
    if lo > 40:
        return 0.0
    c = _sphere_area(d) * math.pi ** (-d / 2)
    val, _ = integrate.quad(lambda r: c * r ** (d - 1) * math.exp(-r * r), lo, math.inf,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return float(val)


def low_frequency_gap_term(u: GaussianState, T: float, E: float, n: int = 64) -> float:
    """``A1 = 2 int_0^T int_{|xi|<=E} |e^{-i xi^2 t} - e^{-xi^2 t}|^2 |u^|^2 dxi dt``."""
    if T == 0 or E == 0:
        return 0.0
    r, wr = gauss_legendre_interval(0.0, E, n)
    t, wt = gauss_legendre_interval(0.0, T, n)
    dens = _sphere_area(u.d) * r ** (u.d - 1) * (2 * u.nu / np.pi) ** (u.d / 2) * np.exp(-2 * u.nu * r * r)
    s = np.outer(t, r * r)
    inner = _gap_fn(s) ** 2 @ (wr * dens)
    return float(2.0 * wt @ inner)


def _inside_intervals(S: ControlSet, lo: float, hi: float, n: int) -> list:
    """Maximal intervals of ``[lo, hi]`` inside a 1-d set, edges located by bisection.

    Features narrower than ``(hi - lo) / n`` can be missed; comparing two
    scan resolutions exposes that.
    """
    x = np.linspace(lo, hi, n + 1)
    v = S._contains(x[:, None])
    flips = np.flatnonzero(v[1:] != v[:-1])
    a, b = x[flips], x[flips + 1]
    va = v[flips]
    for _ in range(60):
        mid = 0.5 * (a + b)
        vm = S._contains(mid[:, None])
        same = vm == va
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    edges = 0.5 * (a + b)
    cuts = [lo, *edges.tolist(), hi]
    inside = [bool(v[0])] + [not bool(x) for x in va]
    return [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1) if inside[i]]


def _cell_weights(S: ControlSet, axes: list, sub: int) -> np.ndarray:
    """Fraction of each grid cell lying in ``S``.

    In 1-d the fractions are exact up to bisection accuracy; otherwise they
    are averages over ``sub`` midpoints per axis.
    """
    d = len(axes)
    h = [a[1] - a[0] for a in axes]
    if d == 1:
        x = axes[0]
        lo, hi = x[0] - h[0] / 2, x[-1] + h[0] / 2
        w = np.zeros(len(x))
        for a, b in _inside_intervals(S, lo, hi, len(x) * sub):
            # spread [a, b] over the cells it touches
            i0 = int(np.clip(np.floor((a - lo) / h[0]), 0, len(x) - 1))
            i1 = int(np.clip(np.floor((b - lo) / h[0]), 0, len(x) - 1))
            left = lo + h[0] * np.arange(i0, i1 + 1)
            w[i0:i1 + 1] += np.clip(np.minimum(b, left + h[0]) - np.maximum(a, left), 0, None)
        return w / h[0]
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    grids = np.meshgrid(*axes, indexing="ij")
    acc = np.zeros(grids[0].shape)
    for combo in np.stack(np.meshgrid(*([offs] * d), indexing="ij"), axis=-1).reshape(-1, d):
        pts = np.stack([g + o * hh for g, o, hh in zip(grids, combo, h)], axis=-1)
        acc += S._contains(pts)
    return acc / sub**d


def _interval_nodes(intervals: list, piece: float, n: int = 16):
    """Gauss-Legendre nodes on each interval, split into pieces of length <= ``piece``."""
    xs, ws = [], []
    for a, b in intervals:
        k = max(1, math.ceil((b - a) / piece))
        edges = np.linspace(a, b, k + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre_interval(lo, hi, n)
            xs.append(x)
            ws.append(w)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def heat_observation(u: GaussianState, S: ControlSet, T: float, grid: int | None = None,
                     time_nodes: int = 32, sub: int = 8, check: bool = True) -> float:
    """``int_0^T ||1_S e^{t Delta} u||^2 dt`` with the closed-form heat-evolved Gaussian.

    In 1-d the set is resolved into intervals (``grid`` scan cells) and the
    density is integrated on each by Gauss-Legendre. In higher dimension the
    density is summed against cell fractions on a ``grid``-per-axis mesh.
    With ``check`` the computation is repeated at twice the resolution and a
    change above 1e-4 raises ``UnderResolvedError``.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return 0.0
    half = 12.0 * math.sqrt(u.nu + T)
    t, wt = gauss_legendre_interval(0.0, T, time_nodes)
    if grid is None:
        grid = int(min(2 ** 16, max(1024, 2 * half / 0.02))) if u.d == 1 else 128

    def evaluate_1d(n):
        c = u.x0[0]
        x, w = _interval_nodes(_inside_intervals(S, c - half, c + half, n), 0.5 * math.sqrt(u.nu))
        if x.size == 0:
            return 0.0
        dens = np.array([u.heat_density(x[:, None], ti) for ti in t])
        return float(wt @ (dens @ w))

    def evaluate_grid(n):
        axes = [np.linspace(c - half, c + half, n) for c in u.x0]
        w = _cell_weights(S, axes, sub)
        h = np.prod([a[1] - a[0] for a in axes])
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return float(sum(wti * h * np.sum(w * u.heat_density(pts, ti)) for ti, wti in zip(t, wt)))

    evaluate = evaluate_1d if u.d == 1 else evaluate_grid
    val = evaluate(grid)
    if check:
        fine = evaluate(2 * grid)
        if abs(fine - val) > 1e-4:
            raise UnderResolvedError(f"heat observation changes by {abs(fine - val):.2e} on refinement")
        val = fine
    return val


# --- Schrödinger quotient ----------------------------------------------------


@dataclass
class QuotientReport:
    Q: float
    A1: float
    A2: float
    B: float
    E: float
    nu: float
    x0: list
    T: float
    clearing_radius: float | None = None
    box_change: float = 0.0

    @property
    def bound(self) -> float:
        return 2.0 * (self.A1 + self.A2) + 2.0 * self.B

    def splitting_holds(self, tol: float = 1e-6) -> bool:
        return self.Q <= self.bound + tol

    def to_dict(self) -> dict:
        out = asdict(self)
        out["bound"] = self.bound
        out["splitting_holds"] = self.splitting_holds()
        return out


def _schrodinger_observation(u: GaussianState, S: ControlSet, T: float, half: float, dx: float,
                             time_nodes: int, sub: int) -> float:
    d = u.d
    n = int(2 ** math.ceil(math.log2(2 * half / dx)))
    axes = [c - half + 2 * half * np.arange(n) / n for c in u.x0]
    h = (2 * half / n) ** d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    psi0 = u.values(pts).astype(complex)
    w = _cell_weights(S, axes, sub)
    k = 2 * np.pi * np.fft.fftfreq(n, d=2 * half / n)
    k2 = sum(kk**2 for kk in np.meshgrid(*([k] * d), indexing="ij"))
    spectrum = np.fft.fftn(psi0)
    norm2 = h * np.sum(np.abs(psi0) ** 2)
    t, wt = gauss_legendre_interval(0.0, T, time_nodes)
    total = 0.0
    for ti, wti in zip(t, wt):
        psi = np.fft.ifftn(spectrum * np.exp(-1j * k2 * ti))
        total += wti * h * np.sum(w * np.abs(psi) ** 2)
    return float(total / norm2)


def observability_quotient(u: GaussianState, S: ControlSet, T: float, E: float,
                           dx: float = 0.05, time_nodes: int = 48, sub: int = 8,
                           margin: float | None = None, leak_tol: float = 1e-8) -> QuotientReport:
    """Schrödinger quotient by exact Fourier propagation on a large periodic box.

    The box is centred at ``x0`` with half-width ``margin + 12 sigma``, where
    ``sigma`` bounds the spread of ``|e^{it Delta} u|^2`` up to time ``T``.
    The value is recomputed on a doubled box; a change above ``leak_tol``
    raises ``UnderResolvedError``.
    """
    if T < 0 or E < 0:
        raise ValueError("T and E must be non-negative")
    if T == 0:
        return QuotientReport(0.0, 0.0, 0.0, 0.0, E, u.nu, list(u.x0), T)
    sigma = math.sqrt(max(u.nu + T, (u.nu**2 + T**2) / u.nu))
    if margin is None:
        margin = S.radius if isinstance(S, Clearing) else 0.0
    half = margin + 12.0 * sigma
    Q = _schrodinger_observation(u, S, T, half, dx, time_nodes, sub)
    Q2 = _schrodinger_observation(u, S, T, 2 * half, dx, time_nodes, sub)
    if abs(Q2 - Q) > leak_tol:
        raise UnderResolvedError(f"box doubling changes Q by {abs(Q2 - Q):.2e}")
    A1 = low_frequency_gap_term(u, T, E)
    A2 = 4.0 * T * tail_mass(u.nu, E, u.d)
    B = heat_observation(u, S, T)
    rho = S.radius if isinstance(S, Clearing) else None
    return QuotientReport(Q, A1, A2, B, E, u.nu, list(u.x0), T, rho, abs(Q2 - Q))


def operator_norm_probe(S: ControlSet, times, rng: np.random.Generator, n_vectors: int = 8,
                        half: float = 20.0, n: int = 1024) -> float:
    """Largest ``||1_S (e^{it Delta} - e^{t Delta}) v|| / ||v||`` over random ``v`` (1-d box)."""
    if S.dimension != 1:
        raise ValueError("probe is implemented on a 1-d box")
    x = -half + 2 * half * np.arange(n) / n
    w = S._contains(x[:, None])
    k = 2 * np.pi * np.fft.fftfreq(n, d=2 * half / n)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        spectrum = np.fft.fft(v)
        for t in times:
            diff = np.fft.ifft(spectrum * (np.exp(-1j * k * k * t) - np.exp(-k * k * t)))
            worst = max(worst, float(np.linalg.norm(w * diff) / np.linalg.norm(v)))
    return worst


# --- the nested parameter schedule -------------------------------------------


@dataclass
class Schedule:
    T: float
    eps: float
    E: float
    nu: float
    rho_final: float
    radii: list
    reports: list = field(default_factory=list)

    def decreasing(self) -> bool:
        q = [r.Q for r in self.reports]
        return all(b < a for a, b in zip(q, q[1:]))

    def to_dict(self) -> dict:
        return {
            "T": self.T, "eps": self.eps, "E": self.E, "nu": self.nu,
            "rho_final": self.rho_final, "radii": self.radii,
            "decreasing": self.decreasing(),
            "reports": [r.to_dict() for r in self.reports],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "Q", "A1", "A2", "B", "bound"])
            for r in self.reports:
                w.writerow([r.clearing_radius, r.Q, r.A1, r.A2, r.B, r.bound])


def choose_E(T: float, eps: float) -> float:
    """Halve ``E`` until ``2 * A1 <= eps/3`` through ``A1 <= 2T gap(E,T)^2``."""
    E = 1.0
    while 4.0 * T * schrodinger_heat_gap(E, T) ** 2 > eps / 3:
        E /= 2.0
    return E


def choose_nu(T: float, eps: float, E: float, d: int) -> float:
    """Double ``nu`` until ``2 * A2 = 8 T ||u_2||^2 <= eps/3``."""
    nu = 1.0
    while 8.0 * T * tail_mass(nu, E, d) > eps / 3:
        nu *= 2.0
    return nu


def choose_clearing(u: GaussianState, base: ControlSet, T: float, eps: float,
                    start: float = 0.0) -> float:
    """Double the clearing radius, from ``max(sqrt(nu), start)``, until ``2 B <= eps/3``."""
    rho = max(math.sqrt(u.nu), start)
    while 2.0 * heat_observation(u, Clearing(base, rho, u.x0), T) > eps / 3:
        rho *= 2.0
    return rho


def run_schedule(T: float, eps: float, base: ControlSet | None = None, steps: int = 4,
                 x0=0.0, **quotient_kw) -> Schedule:
    """Pick ``E`` from ``T``, then ``nu`` from ``E``, then the clearing from ``nu``.

    The quotient is evaluated for clearing radii ``rho_final / 2^j``,
    ``j = steps-1, ..., 0``. The smallest of them is at least one period
    (times sqrt(d)), so that each doubling clears further control balls
    rather than repeating the same set.
    """
    base = base or PeriodicBalls(1, 1.0)
    d = base.dimension
    E = choose_E(T, eps)
    nu = choose_nu(T, eps, E, d)
    u = gaussian(nu, x0, d)
    rho = choose_clearing(u, base, T, eps, start=2 ** (steps - 1) * PERIOD * math.sqrt(d))
    log.info("schedule: E=%.4g nu=%.4g rho=%.4g", E, nu, rho)
    radii = [rho / 2**j for j in range(steps - 1, -1, -1)]
    sched = Schedule(T, eps, E, nu, rho, radii)
    for r in radii:
        sched.reports.append(observability_quotient(u, Clearing(base, r, u.x0), T, E, **quotient_kw))
    return sched
