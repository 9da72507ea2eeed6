"""Principal eigenvalue Lambda_m of -Delta - lam m/|x|^2, limit constants and existence classification.

Lambda_m is computed per angular sector l = 0..l_max and minimized.  The
limit constants are Lambda_+ = Lambda_N/m(inf) and Lambda_- = Lambda_N/m(0)
(infinite when the limit is <= 0), and Lambda_* = min(Lambda_+, Lambda_-).

Two truncations of the line are available (``closure``):

* ``"decay"`` (default): window nodes plus optimal exponential tails.  The
  discrete value never exceeds Lambda_*, and equals it exactly when tails
  escaping to 0 or infinity are optimal (no minimizer).
* ``"dirichlet"``: zero boundary values at t_min, t_max.  Simpler, but a
  saturated weight then sits above Lambda_* by roughly (pi/(t_max - t_min))^2.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .eigsolve import principal, principal_open
from .logradial import (LogGrid, Pencil, assemble_open, assemble_sector, build_grid,
                        hardy_constant, to_physical, window_covers)
from .weightcore import WeightProfile, ball_extrema, scaled_limits

__all__ = [
    "DEFAULT_GRID",
    "DEFAULT_LMAX",
    "CLASSIFICATION_TOL",
    "SpectralReport",
    "DecayFit",
    "BallBoundReport",
    "lambda_m",
    "check_lemma21",
    "decay_fit",
    "ball_bound",
    "ball_dirichlet_lambda1",
    "limit_constants",
]

DEFAULT_GRID = (-30.0, 30.0, 6001)
DEFAULT_LMAX = 3
CLASSIFICATION_TOL = 1e-3
DEFAULT_TOL = 1e-10
LEMMA21_SLACK = 1e-8

MINIMIZER_EXISTS = "MinimizerExists"
HARDY_SATURATED = "HardySaturated"
INCONCLUSIVE = "Inconclusive"


def _inf_or(x: float):
    return "inf" if math.isinf(x) else x


@dataclass
class SpectralReport:
    N: int
    sector_values: dict
    lambda_m: float
    lambda_plus: float
    lambda_minus: float
    lambda_star: float
    classification: str
    psi: np.ndarray = field(repr=False)
    grid: LogGrid
    gap: float
    closure: str = "decay"
    sector: int = 0
    saturated: bool = False
    obstruction: bool = False
    kappas: tuple | None = None
    iterations: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    classification_tol: float = CLASSIFICATION_TOL
    profile: WeightProfile | None = field(default=None, repr=False)

    def eigenfunction(self):
        """Physical radial eigenfunction u(r) of the winning sector."""
        return to_physical(self.grid, self.psi, self.N, "line", self.kappas)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "sector_values": {str(l): v for l, v in sorted(self.sector_values.items())},
            "lambda_m": self.lambda_m,
            "lambda_plus": _inf_or(self.lambda_plus),
            "lambda_minus": _inf_or(self.lambda_minus),
            "lambda_star": _inf_or(self.lambda_star),
            "classification": self.classification,
            "classification_tol": self.classification_tol,
            "gap": _inf_or(self.gap),
            "closure": self.closure,
            "sector": self.sector,
            "saturated": self.saturated,
            "obstruction": self.obstruction,
            "kappas": list(self.kappas) if self.kappas is not None else None,
            "grid": self.grid.to_json(),
            "psi": [float(v) for v in self.psi],
        }


def limit_constants(profile: WeightProfile, N: int) -> tuple:
    """(Lambda_+, Lambda_-, Lambda_*) with +inf for nonpositive limits."""
    LN = hardy_constant(N)
    m_plus, m_minus = scaled_limits(profile)
    lp = LN / m_plus if m_plus > 0 else math.inf
    lm = LN / m_minus if m_minus > 0 else math.inf
    return lp, lm, min(lp, lm)


def _resolve_closure(closure: str, grid: LogGrid, profile: WeightProfile) -> str:
    if closure == "auto":
        ok = not profile.is_periodic and window_covers(grid, profile)
        return "decay" if ok else "dirichlet"
    if closure not in ("decay", "dirichlet"):
        raise ValueError(f"unknown closure {closure!r}")
    return closure


def _solve_sector(profile, N, grid, l, tol, closure):
    if closure == "decay":
        r = principal_open(assemble_open(grid, profile, N, l), tol)
        return r.lam, r.vector, r.kappas, r.saturated, r.iterations, r.residual
    r = principal(assemble_sector(grid, profile, N, l), tol)
    psi = np.concatenate([[0.0], r.vector, [0.0]])
    return r.lam, psi, None, False, r.iterations, r.residual


def obstruction_holds(profile: WeightProfile, grid: LogGrid) -> bool:
    """m <= m(0) or m <= m(inf) at every grid node (a sufficient condition for no minimizer)."""
    m = profile.eval(grid.nodes)
    m_plus, m_minus = scaled_limits(profile)
    slack = 1e-12 * max(1.0, profile.sup_norm)
    return bool(np.all(m <= m_minus + slack) or np.all(m <= m_plus + slack))


def lambda_m(profile: WeightProfile, N: int, grid: LogGrid | None = None,
             l_max: int = DEFAULT_LMAX, tol: float = DEFAULT_TOL,
             classification_tol: float = CLASSIFICATION_TOL, closure: str = "decay",
             jobs: int = 1) -> SpectralReport:
    """Sector values for l = 0..l_max, their minimum, and the existence classification."""
    hardy_constant(N)
    if int(l_max) != l_max or l_max < 0:
        raise ValueError("l_max must be a nonnegative integer")
    grid = grid or build_grid(*DEFAULT_GRID)
    closure = _resolve_closure(closure, grid, profile)
    ls = list(range(int(l_max) + 1))
    if jobs > 1 and len(ls) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            outs = list(ex.map(lambda l: _solve_sector(profile, N, grid, l, tol, closure), ls))
    else:
        outs = [_solve_sector(profile, N, grid, l, tol, closure) for l in ls]
    values = {l: o[0] for l, o in zip(ls, outs)}
    best = min(ls, key=lambda l: (values[l], l))
    lam, psi, kappas, saturated, _, _ = outs[best]
    lp, lm, ls_ = limit_constants(profile, N)
    gap = ls_ - lam
    obstruction = obstruction_holds(profile, grid)
    if gap > classification_tol * ls_:
        cls = MINIMIZER_EXISTS
    elif abs(gap) <= classification_tol * ls_ and obstruction:
        cls = HARDY_SATURATED
    else:
        cls = INCONCLUSIVE
    return SpectralReport(
        N=N, sector_values=values, lambda_m=lam, lambda_plus=lp, lambda_minus=lm,
        lambda_star=ls_, classification=cls, psi=psi, grid=grid, gap=gap, closure=closure,
        sector=best, saturated=saturated, obstruction=obstruction, kappas=kappas,
        iterations={l: o[4] for l, o in zip(ls, outs)},
        residuals={l: o[5] for l, o in zip(ls, outs)},
        classification_tol=classification_tol, profile=profile)


def check_lemma21(profile: WeightProfile, N: int, grid: LogGrid | None = None,
                  closure: str = "decay", tol: float = DEFAULT_TOL) -> tuple:
    """(lambda_m, lambda_plus, lambda_minus, lambda_m <= min(lambda_+, lambda_-) + slack).

    Only sector 0 is solved: higher sectors add a positive multiple of the
    mass form to the numerator and cannot lower the minimum.
    """
    rep = lambda_m(profile, N, grid, l_max=0, tol=tol, closure=closure)
    slack = LEMMA21_SLACK * (1.0 + rep.lambda_m)
    holds = rep.lambda_m <= min(rep.lambda_plus, rep.lambda_minus) + slack
    return rep.lambda_m, rep.lambda_plus, rep.lambda_minus, bool(holds)


# -- decay near the origin ---------------------------------------------------

DEFAULT_DECAY_WINDOW = (math.exp(-14.0), math.exp(-7.0))
DECAY_MARGIN = 0.05
DECAY_MIN_NODES = 8


def decay_exponent(N: int, lam_m: float) -> float:
    """s = sqrt(Lambda_N) - sqrt(Lambda_N - lam_m) for lam_m = lambda * m."""
    LN = hardy_constant(N)
    disc = LN - lam_m
    if disc < 0:
        raise ValueError("lambda * m exceeds Lambda_N: the decay estimate does not apply")
    return math.sqrt(LN) - math.sqrt(disc)


@dataclass
class DecayFit:
    window: tuple
    fitted_s: float
    predicted_band: tuple
    band_margin: float
    band_r: float
    nodes: int

    @property
    def passes(self) -> bool:
        lo, hi = self.predicted_band
        return lo - self.band_margin <= self.fitted_s <= hi + self.band_margin

    def to_json(self) -> dict:
        return {"window": list(self.window), "fitted_s": self.fitted_s,
                "predicted_band": list(self.predicted_band), "band_margin": self.band_margin,
                "band_r": self.band_r, "nodes": self.nodes, "passes": self.passes}


def decay_fit(report: SpectralReport, window=DEFAULT_DECAY_WINDOW, band_r: float | None = None,
              margin: float = DECAY_MARGIN, profile: WeightProfile | None = None) -> DecayFit:
    """Least-squares slope of -log u against log r over ``window``, and its predicted band."""
    if report.classification != MINIMIZER_EXISTS:
        raise ValueError(f"decay fit needs a minimizer, classification is {report.classification}")
    profile = profile or report.profile
    if profile is None:
        raise ValueError("decay fit needs the weight profile")
    r_lo, r_hi = float(window[0]), float(window[1])
    band_r = r_hi if band_r is None else float(band_r)
    if not (0 < r_lo < r_hi <= band_r):
        raise ValueError("window must satisfy 0 < r_lo < r_hi <= band_r")
    g = report.grid
    t_lo, t_hi = math.log(r_lo), math.log(r_hi)
    if t_lo < g.t_min or t_hi > g.t_max:
        raise ValueError("decay window lies outside the grid")
    t = g.nodes
    sel = (t >= t_lo) & (t <= t_hi)
    if sel.sum() < DECAY_MIN_NODES:
        raise ValueError(f"decay window holds {int(sel.sum())} nodes, need {DECAY_MIN_NODES}")
    psi = report.psi[sel]
    if np.any(psi <= 0):
        raise ValueError("eigenfunction is not positive on the decay window")
    # -log u = ((N-2)/2) log r - log psi
    y = 0.5 * (report.N - 2) * t[sel] - np.log(psi)
    slope = float(np.polyfit(t[sel], y, 1)[0])
    ext = ball_extrema(profile, band_r)
    s = sorted(decay_exponent(report.N, report.lambda_m * m) for m in (ext.m_lower, ext.m_upper))
    return DecayFit((r_lo, r_hi), slope, (s[0], s[1]), margin, band_r, int(sel.sum()))


# -- ball criterion ----------------------------------------------------------

@dataclass
class BallBoundReport:
    N: int
    r: float
    d: float
    m_origin: float
    m_infinity: float
    m_peak: float
    criterion_rhs: float
    criterion_holds: bool
    apriori_bound: float
    sharp_bound: float | None
    exact: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {"N": self.N, "r": self.r, "d": self.d, "m_origin": self.m_origin,
                "m_infinity": self.m_infinity, "m_peak": self.m_peak,
                "criterion_rhs": self.criterion_rhs, "criterion_holds": self.criterion_holds,
                "apriori_bound": self.apriori_bound, "sharp_bound": self.sharp_bound,
                "exact": {k: f"{v.numerator}/{v.denominator}" for k, v in sorted(self.exact.items())}}


def ball_bound(N: int, r: float, d: float, m_origin: float, m_infinity: float, m_peak: float,
               use_sharp: bool = False, n: int = 4001) -> BallBoundReport:
    """Closed-form ball test for a bump of height m_peak on B(x_M, r), |x_M| = d.

    All arithmetic except the sharp bound is done in exact rationals.
    """
    hardy_constant(N)
    if not r > 0:
        raise ValueError("r must be positive")
    if not d > r:
        raise ValueError("need d > r so that the ball avoids the origin")
    if not m_peak > 0:
        raise ValueError("m_peak must be positive")
    R, D, M = Fraction(r), Fraction(d), Fraction(m_peak)
    m0, mi = Fraction(m_origin), Fraction(m_infinity)
    rhs = R ** 2 * (N - 2) ** 2 / (2 * (R + D) ** 2 * (N + 1) * (N + 2))
    apriori = Fraction((N + 1) * (N + 2)) * (R + D) ** 2 / (2 * R ** 2 * M)
    holds = m0 / M < rhs and mi / M < rhs
    sharp = None
    if use_sharp:
        sharp = ball_dirichlet_lambda1(N, n) * float((R + D) ** 2 / (R ** 2 * M))
    return BallBoundReport(N, float(r), float(d), float(m_origin), float(m_infinity), float(m_peak),
                           float(rhs), bool(holds), float(apriori), sharp,
                           {"criterion_rhs": rhs, "apriori_bound": apriori})


def ball_pencil(N: int, n: int) -> Pencil:
    """P1 pencil of -u'' - (N-1)/r u' on (0, 1) under r^(N-1) dr; u(1) = 0, natural at 0."""
    hardy_constant(N)
    if int(n) != n or n < 3:
        raise ValueError("need n >= 3 nodes")
    r = np.linspace(0.0, 1.0, n)
    h = 1.0 / (n - 1)
    a, b = r[:-1], r[1:]
    k = (b ** N - a ** N) / (N * h * h)
    x, w = np.polynomial.legendre.leggauss(N // 2 + 3)
    mid, half = 0.5 * (a + b), 0.5 * h
    s = mid[:, None] + half * x[None, :]
    wt = half * w[None, :] * s ** (N - 1)
    phi_a = (b[:, None] - s) / h
    phi_b = (s - a[:, None]) / h
    maa = np.sum(wt * phi_a ** 2, axis=1)
    mbb = np.sum(wt * phi_b ** 2, axis=1)
    mab = np.sum(wt * phi_a * phi_b, axis=1)
    ad = np.zeros(n)
    bd = np.zeros(n)
    ad[:-1] += k
    ad[1:] += k
    bd[:-1] += maa
    bd[1:] += mbb
    # drop the Dirichlet node r = 1
    return Pencil(ad[:-1].copy(), -k[:-1].copy(), bd[:-1].copy(), mab[:-1].copy())


def ball_dirichlet_lambda1(N: int, n: int = 4001, tol: float = DEFAULT_TOL) -> float:
    """First Dirichlet eigenvalue of the unit ball in R^N from radial P1 elements."""
    if n < 100:
        raise ValueError("need n >= 100 radial nodes")
    return principal(ball_pencil(N, n), tol).lam
