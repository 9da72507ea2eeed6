"""Smallest generalized Rayleigh value of a symmetric pencil (A, B) with A SPD.

Lambda = inf x^T A x / x^T B x over x^T B x > 0, i.e. 1/nu_max for B x = nu A x.
``principal`` runs power iteration on x -> (A - sigma B)^{-1} B x, which has
the same eigenvectors with nu' = 1/(Lambda - sigma); sigma = 0 is the plain
map A^{-1} B.  For line pencils an automatic sigma just below Lambda is found
from the tridiagonal spectrum of A - Lam B (LAPACK bisection), which makes the
iteration converge in a handful of steps.  ``dense_oracle`` is an independent
full solve by cyclic Jacobi rotations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, eigvalsh_tridiagonal, solve_triangular
from scipy.optimize import brentq

from . import _tridiag
from .logradial import OpenLine, Pencil

__all__ = [
    "ConvergenceError",
    "NoAdmissibleTestFunction",
    "NotPositiveDefinite",
    "EigResult",
    "OpenResult",
    "principal",
    "principal_open",
    "dense_oracle",
    "residual_norm",
    "DENSE_MAX_DIM",
]

DENSE_MAX_DIM = 400
JACOBI_OFF_TOL = 1e-13
_MAX_RESTARTS = 2


class ConvergenceError(RuntimeError):
    """Iteration limit reached without meeting the tolerance."""


class NoAdmissibleTestFunction(ValueError):
    """nu_max <= 0: no x with x^T B x > 0, so the Rayleigh value is undefined."""


class NotPositiveDefinite(ValueError):
    """The numerator form is not positive definite."""


@dataclass
class EigResult:
    lam: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    shift: float = 0.0

    @property
    def nu(self) -> float:
        return 1.0 / self.lam


def _normalize(x: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(x)))
    return x / x[i]


def residual_norm(pencil: Pencil, lam: float, vector) -> float:
    """||(B - A/lam) x||_2 / ||x||_2."""
    x = np.asarray(vector, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("zero vector")
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    return float(np.linalg.norm(pencil.apply_b(x) - pencil.apply_a(x) / lam) / nx)


def _inf_norm(diag, off, corner=0.0) -> float:
    r = np.abs(diag).copy()
    r[:-1] += np.abs(off)
    r[1:] += np.abs(off)
    if corner:
        r[0] += abs(corner)
        r[-1] += abs(corner)
    return float(r.max())


def _restart_vector(d: int, k: int) -> np.ndarray:
    i = np.arange(d)
    return np.ones(d) + 0.5 * np.sin((1.7 + 0.9 * k) * i + 0.3)


def _smallest_eig(diag, off) -> float:
    if len(diag) == 1:
        return float(diag[0])
    return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def _line_estimate(pencil: Pencil) -> float | None:
    """Lambda of a line pencil from the root of mu_min(A - Lam B); None if not bracketed.

    The matrices are first scaled by diag(A)^(-1/2) on both sides, a congruence
    that keeps the inertia (hence the root) and equilibrates the rows.
    """
    s = 1.0 / np.sqrt(pencil.a_diag)
    so = s[:-1] * s[1:]
    a, ao = pencil.a_diag * s * s, pencil.a_off * so
    b, bo = pencil.b_diag * s * s, pencil.b_off * so
    pos = b > 0
    if not np.any(pos):
        return None
    hi = float(np.min(a[pos] / b[pos]))

    def f(lam):
        return _smallest_eig(a - lam * b, ao - lam * bo)

    if f(hi) >= 0:
        return hi
    return brentq(f, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=200)


def principal(pencil: Pencil, tol: float = 1e-10, max_iter: int = 20000, shift="auto") -> EigResult:
    """Smallest Rayleigh value of ``pencil`` by (shifted) power iteration.

    Stops when successive estimates of nu = 1/Lambda agree to tol |nu| and the
    scaled residual ||(B - nu A) y|| / ((||B|| + |nu| ||A||) ||y||) is <= 10 tol.
    If the iteration locks onto a negative dominant nu, it is rerun on
    C^{-1}(B + mu C) with mu = |nu|.  A stalled run restarts from a fixed
    perturbed vector, at most twice.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    d = pencil.dim
    try:
        solver = pencil.shifted_solver(0.0)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("numerator matrix is not positive definite") from exc
    if shift == "auto":
        shift = 0.0
        if pencil.topology == "line" and d > 1:
            est = _line_estimate(pencil)
            if est is not None and est > 0:
                shift = est * (1.0 - 1e-6)
    shift = float(shift)
    if shift:
        for s in (shift, shift * (1 - 1e-3), 0.0):
            try:
                solver = pencil.shifted_solver(s)
                shift = s
                break
            except np.linalg.LinAlgError:
                continue
    c_diag = pencil.a_diag - shift * pencil.b_diag
    c_off = pencil.a_off - shift * pencil.b_off
    c_corner = pencil.a_corner - shift * pencil.b_corner
    norm_b = _inf_norm(pencil.b_diag, pencil.b_off, pencil.b_corner)
    norm_a = _inf_norm(pencil.a_diag, pencil.a_off, pencil.a_corner)

    def apply_c(x):
        return _tridiag.matvec(c_diag, c_off, x, c_corner)

    total = 0
    mu = 0.0
    restarts = 0
    x = np.ones(d)
    segment_budget = max(50, max_iter // (_MAX_RESTARTS + 1))
    while True:
        nu_prev = None
        converged = False
        x = x / np.linalg.norm(x)
        for _ in range(segment_budget):
            total += 1
            if total > max_iter:
                raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")
            y = solver.solve(pencil.apply_b(x)) + mu * x
            ny = np.linalg.norm(y)
            if ny == 0:
                raise NoAdmissibleTestFunction("B annihilates the iterate: no admissible test function")
            y /= ny
            by = pencil.apply_b(y)
            cy = apply_c(y)
            nu_s = float(y @ by) / float(y @ cy)
            # unshifted nu = 1/Lambda; immune to the cancellation in y^T C y near the shift
            nu = nu_s / (1.0 + shift * nu_s)
            res = np.linalg.norm(by - nu * pencil.apply_a(y)) / (norm_b + abs(nu) * norm_a)
            if nu_prev is not None and abs(nu - nu_prev) <= tol * abs(nu) and res <= 10 * tol:
                converged = True
                x = y
                break
            nu_prev = nu
            x = y
        if converged:
            if nu_s < 0 and mu == 0.0:
                mu = abs(nu_s)
                continue
            if nu_s <= 0:
                raise NoAdmissibleTestFunction("nu_max <= 0: the weight admits no test function")
            break
        restarts += 1
        if restarts > _MAX_RESTARTS:
            raise ConvergenceError(f"power iteration stalled after {total} steps")
        x = _restart_vector(d, restarts)
    lam = shift + 1.0 / nu_s
    if not lam > 0:
        raise NoAdmissibleTestFunction("nu_max <= 0: the weight admits no test function")
    vec = _normalize(x)
    return EigResult(lam, vec, residual_norm(pencil, lam, vec), total, shift)


# -- open lines (exponential tails) -------------------------------------------

SATURATION_REL = 1e-10


@dataclass
class OpenResult:
    lam: float
    vector: np.ndarray = field(repr=False)
    kappas: tuple
    saturated: bool
    residual: float
    iterations: int


def _mu_open(line: OpenLine, lam: float) -> float:
    return _smallest_eig(*line.form(lam))


def principal_open(line: OpenLine, tol: float = 1e-10, max_iter: int = 20000) -> OpenResult:
    """Smallest Rayleigh value over window functions with optimal exponential tails.

    The value is the largest Lam with form(Lam) positive semidefinite.  If the
    form is still semidefinite just below the saturation level (the quotient of
    tails escaping to 0 or infinity) the infimum is that level and is not
    attained; ``saturated`` is then set and the vector is a near-minimizer with
    slowly decaying tails.  Otherwise Lam is bracketed by the root of the
    smallest eigenvalue of form(Lam) and polished by a power iteration on the
    pencil with tails fixed at kappa(Lam).
    """
    if _mu_open(line, 0.0) <= 0:
        raise NotPositiveDefinite("numerator form is not positive definite")
    sat = line.saturation_level
    if math.isfinite(sat):
        hi = sat * (1.0 - SATURATION_REL)
        if _mu_open(line, hi) >= 0:
            ks = line.tail_rates(sat * (1.0 - 1e-6))
            res = principal(line.closed(ks), tol, max_iter, shift=sat * (1.0 - 1e-3))
            return OpenResult(sat, res.vector, ks, True, res.residual, res.iterations)
    else:
        hi = 1.0
        while _mu_open(line, hi) >= 0:
            hi *= 2.0
            if hi > 1e300:
                raise NoAdmissibleTestFunction("weight admits no test function")
    lam = brentq(lambda s: _mu_open(line, s), 0.0, hi, xtol=1e-15 * hi,
                 rtol=4 * np.finfo(float).eps, maxiter=200)
    iterations = 0
    for _ in range(4):
        ks = line.tail_rates(lam)
        res = principal(line.closed(ks), tol, max_iter, shift=lam * (1.0 - 1e-6))
        iterations += res.iterations
        # the closed value is stationary in kappa, so one step is usually enough
        done = abs(res.lam - lam) <= tol * lam or res.lam >= sat
        lam = res.lam
        if done:
            break
    return OpenResult(res.lam, res.vector, ks, False, res.residual, iterations)


# -- dense oracle ---------------------------------------------------------------

def _jacobi_eigenvalues(C: np.ndarray) -> np.ndarray:
    """Eigenvalues of symmetric C by round-robin cyclic Jacobi (all disjoint pairs per round)."""
    C = np.array(C, dtype=float)
    n = C.shape[0]
    if n == 1:
        return C.diagonal().copy()
    m = n + (n % 2)
    if m != n:
        C = np.pad(C, ((0, 1), (0, 1)))
    fro = np.linalg.norm(C)
    if fro == 0:
        return np.zeros(n)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    for _sweep in range(100):
        off = np.linalg.norm(C - np.diag(C.diagonal()))
        if off <= JACOBI_OFF_TOL * fro:
            break
        for p, q in rounds:
            apq = C[p, q]
            app, aqq = C[p, p], C[q, q]
            nz = apq != 0
            safe = np.where(nz, apq, 1.0)
            with np.errstate(over="ignore"):
                tau = (aqq - app) / (2.0 * safe)
                t = np.where(nz, np.sign(tau) / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
            t = np.where(nz & (tau == 0), 1.0, t)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            Cp, Cq = C[p, :].copy(), C[q, :].copy()
            C[p, :] = c[:, None] * Cp - s[:, None] * Cq
            C[q, :] = s[:, None] * Cp + c[:, None] * Cq
            Cp, Cq = C[:, p].copy(), C[:, q].copy()
            C[:, p] = Cp * c - Cq * s
            C[:, q] = Cp * s + Cq * c
    else:
        raise ConvergenceError("Jacobi sweeps did not converge")
    # a padding row stays exactly zero and is dropped
    return C.diagonal()[:n].copy()


def dense_oracle(pencil: Pencil) -> float:
    """1/nu_max from C = L^{-1} B L^{-T}, A = L L^T, diagonalized by cyclic Jacobi."""
    d = pencil.dim
    if d > DENSE_MAX_DIM:
        raise ValueError(f"dense oracle limited to dimension {DENSE_MAX_DIM}, got {d}")
    A, B = pencil.a_dense(), pencil.b_dense()
    try:
        L = cholesky(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("numerator matrix is not positive definite") from exc
    X = solve_triangular(L, B, lower=True)
    C = solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    nu = float(np.max(_jacobi_eigenvalues(C)))
    if not nu > 0:
        raise NoAdmissibleTestFunction("nu_max <= 0: the weight admits no test function")
    return 1.0 / nu
