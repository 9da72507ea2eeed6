"""Log-radial grids and the matrix pencils of the Hardy-type Rayleigh quotients.

With u(r) = r^((2-N)/2) psi(log r), a radial function in sector l satisfies

    int |grad u|^2 dx    = omega_N int (psi'^2 + (Lambda_N + l(l+N-2)) psi^2) dt
    int m u^2 / |x|^2 dx = omega_N int m(e^t) psi^2 dt

so every quotient in this package is a 1D form on the line (or on a period
cell) discretized with piecewise-linear elements.  The weight is sampled at
the nodes and its linear interpolant is integrated exactly on each element.

Two truncations of the line are provided:

* ``assemble_sector``: homogeneous Dirichlet ends, boundary nodes eliminated.
* ``assemble_open``: the window nodes plus exponential tails
  psi(t) = psi_end exp(-kappa |t - t_end|) beyond each end.  When the
  coefficients are constant outside the window the tail integrals are exact,
  so the trial space is still conforming, and kappa can be optimized per
  Rayleigh value (see ``OpenLine``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _tridiag
from .weightcore import WeightProfile, WeightSpecError

__all__ = [
    "AssemblyError",
    "LogGrid",
    "build_grid",
    "hardy_constant",
    "sphere_area",
    "SectorIndex",
    "Pencil",
    "OpenLine",
    "RadialFunction",
    "assemble_sector",
    "assemble_open",
    "assemble_form",
    "assemble_periodic",
    "to_physical",
    "physical_energy",
    "null_sequence_energy",
]


class AssemblyError(RuntimeError):
    """A pencil failed its positive-definiteness certificate."""


def hardy_constant(N: int) -> float:
    """Lambda_N = ((N - 2)/2)^2."""
    if int(N) != N or N < 3:
        raise ValueError("dimension must be ≥ 3")
    return ((N - 2) / 2.0) ** 2


def sphere_area(N: int) -> float:
    """Area of the unit sphere S^(N-1) in R^N."""
    if int(N) != N or N < 2:
        raise ValueError("sphere_area needs an integer N >= 2")
    w = 2 * math.pi if N % 2 == 0 else 4 * math.pi
    for k in range(4 if N % 2 == 0 else 5, N + 1, 2):
        w = 2 * math.pi * w / (k - 2)
    return w


@dataclass(frozen=True)
class LogGrid:
    t_min: float
    t_max: float
    n: int

    @property
    def h(self) -> float:
        return (self.t_max - self.t_min) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.t_min + np.arange(self.n) * self.h

    def translated(self, dt: float) -> "LogGrid":
        return build_grid(self.t_min + dt, self.t_max + dt, self.n)

    def refined(self) -> "LogGrid":
        """Nested refinement: every element halved."""
        return build_grid(self.t_min, self.t_max, 2 * self.n - 1)

    def to_json(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "n": self.n, "h": self.h}


def build_grid(t_min: float, t_max: float, n: int) -> LogGrid:
    t_min, t_max = float(t_min), float(t_max)
    if not (math.isfinite(t_min) and math.isfinite(t_max)):
        raise ValueError("grid bounds must be finite")
    if not t_min < t_max:
        raise ValueError(f"grid needs t_min < t_max, got [{t_min}, {t_max}]")
    if int(n) != n or n < 3:
        raise ValueError(f"grid needs n >= 3 nodes, got {n}")
    return LogGrid(t_min, t_max, int(n))


@dataclass(frozen=True)
class SectorIndex:
    l: int
    N: int

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise ValueError("sector index l must be a nonnegative integer")
        hardy_constant(self.N)

    @property
    def shift(self) -> float:
        return float(self.l * (self.l + self.N - 2))


@dataclass(frozen=True, eq=False)
class Pencil:
    """Symmetric tridiagonal pair (A, B); ``cycle`` adds one corner entry to each."""

    a_diag: np.ndarray
    a_off: np.ndarray
    b_diag: np.ndarray
    b_off: np.ndarray
    topology: str = "line"
    a_corner: float = 0.0
    b_corner: float = 0.0

    def __post_init__(self):
        d = len(self.a_diag)
        if self.topology not in ("line", "cycle"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if len(self.b_diag) != d or len(self.a_off) != d - 1 or len(self.b_off) != d - 1:
            raise ValueError("inconsistent pencil array lengths")
        if self.topology == "cycle" and d < 3:
            raise ValueError("cycle pencils need dimension >= 3")

    @property
    def dim(self) -> int:
        return len(self.a_diag)

    def a_dense(self) -> np.ndarray:
        return _tridiag.dense(self.a_diag, self.a_off, self.a_corner)

    def b_dense(self) -> np.ndarray:
        return _tridiag.dense(self.b_diag, self.b_off, self.b_corner)

    def apply_a(self, x) -> np.ndarray:
        return _tridiag.matvec(self.a_diag, self.a_off, np.asarray(x, float), self.a_corner)

    def apply_b(self, x) -> np.ndarray:
        return _tridiag.matvec(self.b_diag, self.b_off, np.asarray(x, float), self.b_corner)

    def shifted_solver(self, sigma: float = 0.0) -> _tridiag.SPDSolver:
        """Factor A - sigma B; raises numpy.linalg.LinAlgError if not positive definite."""
        return _tridiag.SPDSolver(self.a_diag - sigma * self.b_diag,
                                  self.a_off - sigma * self.b_off,
                                  self.a_corner - sigma * self.b_corner)

    @classmethod
    def from_dense(cls, A, B) -> "Pencil":
        A, B = np.asarray(A, float), np.asarray(B, float)
        return cls(np.diag(A).copy(), np.diag(A, 1).copy(), np.diag(B).copy(), np.diag(B, 1).copy())


def _certify(pencil: Pencil) -> Pencil:
    try:
        pencil.shifted_solver(0.0)
    except np.linalg.LinAlgError as exc:
        raise AssemblyError("numerator matrix failed positive-definiteness certification") from exc
    return pencil


def _element_arrays(h: float, q: np.ndarray, w: np.ndarray):
    """P1 forms of int psi'^2 + q psi^2 and int w psi^2 on a uniform line, natural ends.

    q and w are nodal values; each is linearly interpolated and integrated exactly.
    Returns (a_diag, a_off, b_diag, b_off) over all nodes.
    """
    def mass(c):
        lo, hi = c[:-1], c[1:]
        diag = np.zeros(len(c))
        diag[:-1] += h * (3 * lo + hi) / 12
        diag[1:] += h * (lo + 3 * hi) / 12
        return diag, h * (lo + hi) / 12

    n = len(q)
    k_diag = np.full(n, 2.0 / h)
    k_diag[0] = k_diag[-1] = 1.0 / h
    qd, qo = mass(q)
    wd, wo = mass(w)
    return k_diag + qd, -np.ones(n - 1) / h + qo, wd, wo


def _weight_nodes(profile: WeightProfile, t: np.ndarray) -> np.ndarray:
    return np.asarray(profile.eval(t), dtype=float)


def assemble_sector(grid: LogGrid, profile: WeightProfile, N: int, sector=0) -> Pencil:
    """Dirichlet-truncated pencil of sector ``sector`` (an int l or a SectorIndex)."""
    sec = sector if isinstance(sector, SectorIndex) else SectorIndex(int(sector), N)
    q0 = hardy_constant(N) + sec.shift
    t = grid.nodes
    ad, ao, bd, bo = _element_arrays(grid.h, np.full(grid.n, q0), _weight_nodes(profile, t))
    return _certify(Pencil(ad[1:-1].copy(), ao[1:-1].copy(), bd[1:-1].copy(), bo[1:-1].copy()))


@dataclass(frozen=True, eq=False)
class OpenLine:
    """Window pencil with natural ends plus exponential tails beyond both ends.

    The numerator is int psi'^2 + q psi^2 and the denominator int w psi^2,
    with q, w equal to the constants ``q_ends[i]``, ``w_ends[i]`` beyond end i
    (0 = t_min side, 1 = t_max side).  A tail of rate kappa contributes
    psi_end^2 (kappa^2 + q)/(2 kappa) to the numerator and psi_end^2 w/(2 kappa)
    to the denominator.  For a trial value Lam the best rate is
    kappa = sqrt(q - Lam w), and the tail contributes kappa psi_end^2 to
    numerator - Lam * denominator; the discrete Rayleigh value is the largest
    Lam for which that form, ``form(Lam)``, is positive semidefinite.
    """

    grid: LogGrid
    window: Pencil
    q_ends: tuple
    w_ends: tuple

    @property
    def saturation_level(self) -> float:
        """Limit of the quotient for tails spreading to 0 or infinity (inf if none can)."""
        levels = [q / w for q, w in zip(self.q_ends, self.w_ends) if w > 0]
        return min(levels) if levels else math.inf

    def tail_rates(self, lam: float) -> tuple:
        rates = []
        for q, w in zip(self.q_ends, self.w_ends):
            d = q - lam * w
            if not d >= 0:
                raise ValueError(f"no decaying tail at Lam = {lam!r}")
            rates.append(math.sqrt(d))
        return tuple(rates)

    def form(self, lam: float):
        """(diag, off) of A - Lam B with the tails closed optimally at Lam."""
        k0, k1 = self.tail_rates(lam)
        p = self.window
        diag = p.a_diag - lam * p.b_diag
        diag[0] += k0
        diag[-1] += k1
        return diag, p.a_off - lam * p.b_off

    def closed(self, kappas) -> Pencil:
        """Pencil of the trial space with fixed tail rates."""
        p = self.window
        ad, bd = p.a_diag.copy(), p.b_diag.copy()
        for end, k, q, w in zip((0, -1), kappas, self.q_ends, self.w_ends):
            if not k > 0:
                raise ValueError("tail rates must be positive")
            ad[end] += (k * k + q) / (2 * k)
            bd[end] += w / (2 * k)
        return Pencil(ad, p.a_off.copy(), bd, p.b_off.copy())


def assemble_form(grid: LogGrid, q_nodes, w_nodes, q_ends, w_ends) -> OpenLine:
    """Open-line form from nodal coefficients and their constant values beyond the window."""
    q_nodes = np.asarray(q_nodes, float)
    w_nodes = np.asarray(w_nodes, float)
    if q_nodes.shape != (grid.n,) or w_nodes.shape != (grid.n,):
        raise ValueError("coefficient arrays must have one value per grid node")
    if not all(q > 0 for q in q_ends):
        raise ValueError("numerator potential must be positive beyond the window")
    ad, ao, bd, bo = _element_arrays(grid.h, q_nodes, w_nodes)
    return OpenLine(grid, Pencil(ad, ao, bd, bo), tuple(map(float, q_ends)), tuple(map(float, w_ends)))


def window_covers(grid: LogGrid, profile: WeightProfile) -> bool:
    lo, hi = profile.flat_range()
    return grid.t_min <= lo and grid.t_max >= hi


def assemble_open(grid: LogGrid, profile: WeightProfile, N: int, sector=0) -> OpenLine:
    """Open-line form of sector ``sector`` for weight ``profile``."""
    if profile.is_periodic:
        raise WeightSpecError("open-line assembly needs a weight with limits")
    if not window_covers(grid, profile):
        lo, hi = profile.flat_range()
        raise ValueError(f"grid [{grid.t_min}, {grid.t_max}] must contain the non-constant "
                         f"part [{lo}, {hi}] of the weight for tail closure")
    sec = sector if isinstance(sector, SectorIndex) else SectorIndex(int(sector), N)
    q0 = hardy_constant(N) + sec.shift
    return assemble_form(grid, np.full(grid.n, q0), _weight_nodes(profile, grid.nodes),
                         (q0, q0), (profile.limit_origin, profile.limit_infinity))


def cell_grid(gamma: float, n: int, t0: float = 0.0) -> LogGrid:
    """Grid of one period cell [t0, t0 + log gamma]; the last node is the first one wrapped."""
    return build_grid(t0, t0 + math.log(gamma), n + 1)


def assemble_periodic(profile: WeightProfile, gamma: float, N: int, n: int, t0: float = 0.0) -> Pencil:
    """Cyclic pencil on n unknowns for psi periodic with period log(gamma)."""
    from .weightcore import check_periodic

    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    if int(n) != n or n < 3:
        raise ValueError("need at least 3 nodes per period cell")
    if not check_periodic(profile, gamma):
        raise WeightSpecError(f"weight is not periodic under r -> {gamma} r")
    g = cell_grid(gamma, n, t0)
    h = g.h
    t = g.nodes[:-1]
    w = _weight_nodes(profile, t)
    q = np.full(n, hardy_constant(N))
    wn, qn = np.roll(w, -1), np.roll(q, -1)
    # element i joins node i to node (i + 1) mod n
    ad = 2.0 / h + h * ((3 * q + qn) + np.roll(q + 3 * qn, 1)) / 12
    bd = h * ((3 * w + wn) + np.roll(w + 3 * wn, 1)) / 12
    a_link = -1.0 / h + h * (q + qn) / 12
    b_link = h * (w + wn) / 12
    return _certify(Pencil(ad, a_link[:-1].copy(), bd, b_link[:-1].copy(), "cycle",
                           float(a_link[-1]), float(b_link[-1])))


@dataclass(frozen=True)
class RadialFunction:
    """u(r) = r^((2-N)/2) psi(log r), with the reduced profile psi kept for log-domain work."""

    N: int
    reduced: Callable

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise ValueError("radius must be positive")
        return r ** ((2 - self.N) / 2.0) * self.reduced(np.log(r))


def to_physical(grid: LogGrid, psi, N: int, topology: str = "line", tails=None) -> RadialFunction:
    """Physical radial function of nodal values psi.

    ``line``: zero outside the grid, or exponential tails with rates ``tails``.
    ``cycle``: psi holds n = grid.n - 1 values of one period cell, extended periodically.
    """
    psi = np.asarray(psi, dtype=float)
    t = grid.nodes
    if topology == "cycle":
        if len(psi) != grid.n - 1:
            raise ValueError("cycle psi must have grid.n - 1 values")
        vals = np.append(psi, psi[0])
        P = grid.t_max - grid.t_min

        def reduced(s):
            s = grid.t_min + np.mod(np.asarray(s, float) - grid.t_min, P)
            return np.interp(s, t, vals)
    elif topology == "line":
        if len(psi) != grid.n:
            raise ValueError("psi must have one value per grid node")
        k0, k1 = tails if tails is not None else (math.inf, math.inf)

        def reduced(s):
            s = np.asarray(s, float)
            shape = s.shape
            s = s.reshape(-1)
            out = np.interp(s, t, psi)
            lo, hi = s < grid.t_min, s > grid.t_max
            out[lo] = 0.0 if math.isinf(k0) else psi[0] * np.exp(-k0 * (grid.t_min - s[lo]))
            out[hi] = 0.0 if math.isinf(k1) else psi[-1] * np.exp(-k1 * (s[hi] - grid.t_max))
            return out.reshape(shape)
    else:
        raise ValueError(f"unknown topology {topology!r}")
    return RadialFunction(N, reduced)


def physical_energy(grid: LogGrid, psi, N: int, refine: int = 10) -> tuple:
    """(omega_N int |u'|^2 r^(N-1) dr by quadrature, omega_N psi^T (K + Lambda_N M) psi)."""
    psi = np.asarray(psi, dtype=float)
    omega = sphere_area(N)
    ad, ao, _, _ = _element_arrays(grid.h, np.full(grid.n, hardy_constant(N)), np.zeros(grid.n))
    transformed = omega * float(psi @ _tridiag.matvec(ad, ao, psi))
    u = to_physical(grid, psi, N)
    s = grid.t_min + np.arange((grid.n - 1) * refine + 1) * (grid.h / refine)
    r = np.exp(s)
    ur = u(r)
    slope = np.diff(ur) / np.diff(r)
    g = r ** (N - 1)
    gradient = omega * float(np.sum(slope ** 2 * 0.5 * (g[:-1] + g[1:]) * np.diff(r)))
    return gradient, transformed


NULL_QUAD_MIN_POINTS = 100_000
NULL_QUAD_MAX_STEP = 0.01
NULL_REMAINDER_TOL = 1e-3


def null_sequence_energy(v, k: int, N: int, quad_range=None, sandwich: float | None = None) -> float:
    """omega_N/k^2 [int_{r<1} v^2 r^(2/k+N-3) dr + int_{r>1} v^2 r^(-2/k+N-3) dr].

    The energy of v w_k with w_k = |x|^(+-1/k).  Integrated by the trapezoid rule
    in t = log r.  ``quad_range`` = (r_lo, r_hi) defaults to |t| <= 10 k.  The
    neglected tails are bounded using v^2 r^(N-2) in [c^2, C^2] with C/c =
    ``sandwich`` (estimated from the samples when not given); the bound must be
    below 1e-3 relative.
    """
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if quad_range is None:
        t_lo, t_hi = -10.0 * k, 10.0 * k
    else:
        r_lo, r_hi = quad_range
        if not (0 < r_lo < 1 < r_hi):
            raise ValueError("quadrature range must contain r = 1")
        t_lo, t_hi = math.log(r_lo), math.log(r_hi)
    m_lo = max(NULL_QUAD_MIN_POINTS // 2, math.ceil(-t_lo / NULL_QUAD_MAX_STEP)) + 1
    m_hi = max(NULL_QUAD_MIN_POINTS // 2, math.ceil(t_hi / NULL_QUAD_MAX_STEP)) + 1
    s_lo = np.linspace(t_lo, 0.0, m_lo)
    s_hi = np.linspace(0.0, t_hi, m_hi)

    def g(s):
        # v^2 r^(N-2), i.e. psi^2, evaluated without forming r for large |t|
        if isinstance(v, RadialFunction):
            return np.asarray(v.reduced(s), float) ** 2
        r = np.exp(s)
        return np.asarray(v(r), float) ** 2 * r ** (N - 2)

    g_lo, g_hi = g(s_lo), g(s_hi)
    if not (np.any(g_lo) or np.any(g_hi)):
        return 0.0
    part_lo = np.trapezoid(g_lo * np.exp(2.0 * s_lo / k), s_lo)
    part_hi = np.trapezoid(g_hi * np.exp(-2.0 * s_hi / k), s_hi)
    total = sphere_area(N) / k ** 2 * (part_lo + part_hi)

    if sandwich is None:
        gs = np.concatenate([g_lo, g_hi])
        if gs.min() <= 0:
            raise ValueError("cannot bound the quadrature remainder: v vanishes on the range")
        sandwich = math.sqrt(gs.max() / gs.min())
    # tails: int_{|t|>T} C^2 e^{-2|t|/k} vs the kept part >= int c^2 e^{-2|t|/k}
    tail = sum(math.exp(-2.0 * abs(T) / k) for T in (t_lo, t_hi))
    kept = sum(1.0 - math.exp(-2.0 * abs(T) / k) for T in (t_lo, t_hi))
    bound = sandwich ** 2 * tail / kept
    if not bound < NULL_REMAINDER_TOL:
        raise ValueError(f"quadrature range too short for k = {k}: remainder bound {bound:.3g} "
                         f"exceeds {NULL_REMAINDER_TOL:g} relative")
    return float(total)
