"""Perturbations of a critical Hardy-type potential.

* sigma(lam): principal value of grad^2 - lam V_0 against a second weight W,
  divided by lam, for V_0 = m_base/|x|^2 and W = w/|x|^2.
* bump_threshold: smallest bump amplitude B (to a bracket) for which
  A + B M(x) pushes the principal value below Lambda_N/A.
* strict_gap_check: a nonnegative compact excess over a periodic base weight
  lowers the principal value strictly below the base cell value.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigsolve import NotPositiveDefinite, principal_open
from .logradial import LogGrid, assemble_form, build_grid, hardy_constant, window_covers
from .periodic import DEFAULT_CELL_NODES, lambda_circ
from .spectra import DEFAULT_GRID, DEFAULT_TOL, lambda_m
from .weightcore import WeightProfile, WeightSpecError, check_periodic, combine

__all__ = [
    "InfeasibleLambda",
    "InvariantViolation",
    "SigmaPoint",
    "ThresholdResult",
    "StrictGap",
    "sigma",
    "sigma_curve",
    "bump_threshold",
    "strict_gap",
    "strict_gap_check",
]

THRESHOLD_TOL = 1e-6
BRACKET_TOL = 0.01
MAX_DOUBLINGS = 60
MONOTONE_SLACK = 1e-10
STRICT_GAP_MARGIN = 1e-6


class InfeasibleLambda(ValueError):
    """lam is at or beyond the principal value of the base weight."""


class InvariantViolation(RuntimeError):
    """A monotonicity property failed on computed values."""


@dataclass
class SigmaPoint:
    lam: float
    sigma: float
    feasible: bool

    def to_json(self) -> dict:
        return {"lambda": self.lam, "sigma": self.sigma, "feasible": self.feasible}


def _limits(p: WeightProfile, what: str) -> tuple:
    if p.is_periodic:
        raise WeightSpecError(f"{what} must have limits at 0 and infinity")
    return p.limit_origin, p.limit_infinity


def sigma(m_base: WeightProfile, w_weight: WeightProfile, lam: float, N: int,
          grid: LogGrid | None = None, tol: float = DEFAULT_TOL, strict: bool = True) -> SigmaPoint:
    """(1/lam) inf (int |grad u|^2 - lam int m_base u^2/|x|^2) / int w u^2/|x|^2.

    Raises InfeasibleLambda when the numerator is not positive definite; with
    strict=False an infeasible point is returned with sigma = nan instead.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    LN = hardy_constant(N)
    grid = grid or build_grid(*DEFAULT_GRID)
    if np.all(w_weight.eval(grid.nodes) <= 0):
        raise WeightSpecError("w must be positive on a set of positive measure")
    for p, what in ((m_base, "m_base"), (w_weight, "w")):
        _limits(p, what)
        if not window_covers(grid, p):
            raise ValueError(f"grid must contain the non-constant part of {what}")
    t = grid.nodes
    b0, b1 = _limits(m_base, "m_base")
    q_ends = (LN - lam * b0, LN - lam * b1)
    try:
        if min(q_ends) <= 0:
            raise NotPositiveDefinite("numerator is not positive at the ends")
        line = assemble_form(grid, LN - lam * m_base.eval(t), w_weight.eval(t), q_ends,
                             _limits(w_weight, "w"))
        res = principal_open(line, tol)
    except NotPositiveDefinite as exc:
        if strict:
            raise InfeasibleLambda(f"lambda = {lam!r} is not below the base principal value") from exc
        return SigmaPoint(float(lam), math.nan, False)
    return SigmaPoint(float(lam), res.lam / lam, True)


def sigma_curve(m_base: WeightProfile, w_weight: WeightProfile, lambda_grid, N: int,
                grid: LogGrid | None = None, tol: float = DEFAULT_TOL, jobs: int = 1) -> list:
    """sigma at each lam of an ascending grid; checks strict decrease."""
    lams = [float(x) for x in lambda_grid]
    if not lams:
        return []
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be strictly ascending")

    def one(i):
        try:
            return sigma(m_base, w_weight, lams[i], N, grid, tol)
        except InfeasibleLambda as exc:
            raise InfeasibleLambda(f"lambda_grid[{i}] = {lams[i]!r}: {exc}") from exc

    if jobs > 1 and len(lams) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            pts = list(ex.map(one, range(len(lams))))
    else:
        pts = [one(i) for i in range(len(lams))]
    for i, (a, b) in enumerate(zip(pts, pts[1:])):
        if not a.sigma > b.sigma:
            raise InvariantViolation(f"sigma not strictly decreasing at index {i + 1}")
    return pts


@dataclass
class ThresholdResult:
    b_low: float
    b_high: float
    lambda_at: dict = field(repr=False)
    converged: bool
    lambda_circ: float
    tol: float

    def to_json(self) -> dict:
        items = sorted(self.lambda_at.items())
        return {"b_low": self.b_low, "b_high": self.b_high, "converged": self.converged,
                "lambda_circ": self.lambda_circ, "tol": self.tol,
                "lambda_at": [{"B": b, "lambda_1": v} for b, v in items]}


def bump_threshold(A_level: float, bump: WeightProfile, N: int, grid: LogGrid | None = None,
                   bracket_tol: float = BRACKET_TOL, tol: float = THRESHOLD_TOL,
                   solver_tol: float = DEFAULT_TOL) -> ThresholdResult:
    """Bracket [b_low, b_high] of the amplitude where A + B*bump starts to bind.

    "Binds" means Lambda_1(B) < Lambda_N/A - tol.  The bracket is found by
    halving or doubling from B = 1 and refined by geometric bisection.
    """
    if not A_level > 0:
        raise ValueError("A_level must be positive")
    lo_lim, hi_lim = _limits(bump, "bump")
    if lo_lim != 0 or hi_lim != 0:
        raise WeightSpecError("bump must have limits (0, 0)")
    if not bump.is_nonnegative():
        raise WeightSpecError("bump must be nonnegative")
    if bump.sup_norm == 0:
        raise WeightSpecError("bump is identically zero")
    grid = grid or build_grid(*DEFAULT_GRID)
    target = hardy_constant(N) / A_level
    seen: dict = {}

    def lam1(B):
        if B not in seen:
            prof = combine([(B, bump)], offset=A_level)
            seen[B] = lambda_m(prof, N, grid, l_max=0, tol=solver_tol).lambda_m
        return seen[B]

    def binds(B):
        return lam1(B) < target - tol

    B = 1.0
    if binds(B):
        hi = B
        for _ in range(MAX_DOUBLINGS):
            B /= 2.0
            if not binds(B):
                break
            hi = B
        else:
            raise RuntimeError("threshold search exceeded 60 halvings")
        lo = B
    else:
        lo = B
        for _ in range(MAX_DOUBLINGS):
            B *= 2.0
            if binds(B):
                break
            lo = B
        else:
            raise RuntimeError("threshold search exceeded 60 doublings (bump too weak at this grid)")
        hi = B
    while hi / lo > 1.0 + bracket_tol:
        mid = math.sqrt(lo * hi)
        if binds(mid):
            hi = mid
        else:
            lo = mid
    vals = [seen[b] for b in sorted(seen)]
    for a, b in zip(vals, vals[1:]):
        if b > a + MONOTONE_SLACK:
            raise InvariantViolation("Lambda_1(B) increased with B")
    return ThresholdResult(lo, hi, dict(seen), hi / lo <= 1.0 + bracket_tol, target, tol)


@dataclass
class StrictGap:
    lambda_1: float
    lambda_circ: float
    margin: float

    @property
    def holds(self) -> bool:
        return self.lambda_1 < self.lambda_circ - self.margin * self.lambda_circ

    def to_json(self) -> dict:
        return {"lambda_1": self.lambda_1, "lambda_circ": self.lambda_circ,
                "margin": self.margin, "gap": self.lambda_circ - self.lambda_1, "holds": self.holds}


def strict_gap(m_base: WeightProfile, m_pert: WeightProfile, gamma: float, N: int,
               grid: LogGrid | None = None, n_cell: int = DEFAULT_CELL_NODES,
               margin: float = STRICT_GAP_MARGIN, tol: float = DEFAULT_TOL) -> StrictGap:
    """Lambda_1 of m_pert against the cell value Lambda_circ of the periodic base m_base.

    m_base must be gamma-periodic with limits (a constant) so that m_pert can
    carry limits too; m_pert - m_base must be nonnegative, nonzero and vanish
    outside a compact t-interval.
    """
    grid = grid or build_grid(*DEFAULT_GRID)
    if not check_periodic(m_base, gamma):
        raise WeightSpecError("m_base is not periodic under the given gamma")
    _limits(m_pert, "m_pert")
    excess = combine([(1.0, m_pert), (-1.0, m_base)])
    if excess.limit_origin != 0 or excess.limit_infinity != 0:
        raise WeightSpecError("m_pert - m_base must vanish near 0 and infinity")
    if not excess.is_nonnegative():
        raise WeightSpecError("m_pert must dominate m_base")
    if excess.sup_norm == 0 or not np.any(excess.eval(grid.nodes) > 0):
        raise WeightSpecError("m_pert has no excess over m_base on the grid")
    base = lambda_circ(m_base, gamma, N, n_cell, tol)
    lam1 = lambda_m(m_pert, N, grid, l_max=0, tol=tol).lambda_m
    return StrictGap(lam1, base.lambda_circ, margin)


def strict_gap_check(m_base: WeightProfile, m_pert: WeightProfile, gamma: float, N: int,
                     grid: LogGrid | None = None, margin: float = STRICT_GAP_MARGIN) -> bool:
    """Lambda_1 < Lambda_circ - margin * Lambda_circ."""
    return strict_gap(m_base, m_pert, gamma, N, grid, margin=margin).holds
