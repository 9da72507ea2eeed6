"""Symmetric (cyclic-)tridiagonal kernels: products, factor/solve, inertia."""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cho_solve_banded, cholesky_banded

_DENSE_FALLBACK_MAX = 4000


def matvec(diag, off, x, corner=0.0):
    y = diag * x
    y[:-1] += off * x[1:]
    y[1:] += off * x[:-1]
    if corner:
        y[0] += corner * x[-1]
        y[-1] += corner * x[0]
    return y


def dense(diag, off, corner=0.0):
    M = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    if corner:
        M[0, -1] += corner
        M[-1, 0] += corner
    return M


def _banded(diag, off):
    ab = np.zeros((2, len(diag)))
    ab[0, :] = diag
    ab[1, :-1] = off
    return ab


class SPDSolver:
    """Cholesky-based solver for a symmetric positive definite (cyclic-)tridiagonal matrix.

    Construction is the definiteness certificate: it raises
    ``numpy.linalg.LinAlgError`` if the matrix is not positive definite.
    A cyclic matrix is split as T + beta u u^T with u = e_0 + sign(c) e_{n-1},
    beta = |c| (c the corner entry); T is tridiagonal, and T positive definite
    together with beta >= 0 certifies the full matrix.
    """

    def __init__(self, diag, off, corner=0.0):
        diag = np.asarray(diag, dtype=float)
        off = np.asarray(off, dtype=float)
        self.n = len(diag)
        self._dense = None
        self._z = None
        if self.n == 1:
            if not diag[0] > 0:
                raise np.linalg.LinAlgError("1x1 matrix is not positive")
            self._factor = cholesky_banded(_banded(diag, off), lower=True)
            return
        if corner:
            beta = abs(corner)
            s = np.sign(corner)
            t_diag = diag.copy()
            t_diag[0] -= beta
            t_diag[-1] -= beta
            try:
                self._factor = cholesky_banded(_banded(t_diag, off), lower=True)
            except np.linalg.LinAlgError:
                if self.n > _DENSE_FALLBACK_MAX:
                    raise
                self._dense = cho_factor(dense(diag, off, corner), lower=True)
                return
            u = np.zeros(self.n)
            u[0], u[-1] = 1.0, s
            z = cho_solve_banded((self._factor, True), u)
            self._u, self._z = u, z
            self._beta = beta
            self._denom = 1.0 + beta * (u @ z)
        else:
            self._factor = cholesky_banded(_banded(diag, off), lower=True)

    def solve(self, b):
        if self._dense is not None:
            return cho_solve(self._dense, b)
        y = cho_solve_banded((self._factor, True), b)
        if self._z is not None:
            y = y - self._z * (self._beta * (self._u @ y) / self._denom)
        return y

