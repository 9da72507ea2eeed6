"""Self-similar ground states for multiplicatively periodic weights m(gamma x) = m(x).

In t = log r the constraint v(gamma x) = gamma^((2-N)/2) v(x) is plain
periodicity of psi with period log(gamma), so the cell problem is a cyclic
pencil.  Its principal vector extends to a positive solution on all of R^N
with infinite Dirichlet energy, and the functions v w_k with
w_k = |x|^(+-1/k) form a null sequence whose energy decays like 1/k.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigsolve import principal
from .logradial import (RadialFunction, assemble_periodic, cell_grid, null_sequence_energy,
                        to_physical)
from .weightcore import WeightProfile, WeightSpecError

__all__ = [
    "PeriodicGroundState",
    "lambda_circ",
    "extend",
    "null_energy_decay",
    "DEFAULT_CELL_NODES",
]

DEFAULT_CELL_NODES = 256
POSITIVITY_FLOOR = -1e-8


class SignChangeError(RuntimeError):
    """The computed principal vector changed sign: a numerical fault."""


@dataclass
class PeriodicGroundState:
    gamma: float
    N: int
    lambda_circ: float
    psi: np.ndarray = field(repr=False)
    sandwich_c: float
    t0: float = 0.0
    iterations: int = 0
    residual: float = 0.0

    @property
    def n(self) -> int:
        return len(self.psi)

    @property
    def grid(self):
        return cell_grid(self.gamma, self.n, self.t0)

    def to_json(self) -> dict:
        return {"gamma": self.gamma, "N": self.N, "lambda_circ": self.lambda_circ,
                "sandwich_c": self.sandwich_c, "n": self.n,
                "cell": [self.t0, self.t0 + math.log(self.gamma)],
                "psi": [float(v) for v in self.psi]}


def lambda_circ(profile: WeightProfile, gamma: float, N: int, n: int = DEFAULT_CELL_NODES,
                tol: float = 1e-10, t0: float = 0.0) -> PeriodicGroundState:
    """Principal value and positive vector of the cell problem on [t0, t0 + log gamma)."""
    if not profile.is_nonnegative():
        raise WeightSpecError("periodic ground state needs a nonnegative weight")
    res = principal(assemble_periodic(profile, gamma, N, n, t0), tol)
    psi = res.vector
    if psi.min() < POSITIVITY_FLOOR:
        raise SignChangeError(f"principal vector changes sign (min {psi.min():.3e})")
    if psi.min() <= 0:
        raise SignChangeError("principal vector is not strictly positive")
    return PeriodicGroundState(float(gamma), N, res.lam, psi, float(psi.max() / psi.min()), float(t0),
                               res.iterations, res.residual)


def extend(state: PeriodicGroundState) -> RadialFunction:
    """v(r) = r^((2-N)/2) psi_per(log r) on all r > 0."""
    return to_physical(state.grid, state.psi, state.N, "cycle")


def null_energy_decay(state: PeriodicGroundState, k_list, jobs: int = 1) -> list:
    """[(k, Q_k, k Q_k)] with Q_k the energy of v w_k over the automatic range |t| <= 10 k."""
    ks = [int(k) for k in k_list]
    if any(k < 1 for k in ks) or ks != sorted(ks):
        raise ValueError("k_list must be ascending positive integers")
    v = extend(state)

    def one(k):
        q = null_sequence_energy(v, k, state.N, sandwich=state.sandwich_c)
        return k, q, k * q

    if jobs > 1 and len(ks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(one, ks))
    return [one(k) for k in ks]
