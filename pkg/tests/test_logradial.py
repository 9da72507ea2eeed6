import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hardyspec.eigsolve import dense_oracle
from hardyspec.logradial import (Pencil, RadialFunction, SectorIndex, assemble_open, assemble_periodic,
                                 assemble_sector, build_grid, cell_grid, hardy_constant,
                                 null_sequence_energy, physical_energy, sphere_area, to_physical)
from hardyspec.weightcore import WeightSpecError


def test_grid_spacing():
    assert_allclose(build_grid(-30, 30, 6001).h, 0.01, rtol=1e-14)
    assert_allclose(build_grid(0, math.log(2), 101).h, math.log(2) / 100, rtol=1e-14)
    with pytest.raises(ValueError):
        build_grid(1, 1, 10)


def test_grid_refined_nested():
    g = build_grid(-2, 3, 11)
    r = g.refined()
    assert r.n == 21
    assert_allclose(r.nodes[::2], g.nodes, rtol=0, atol=1e-15)


@pytest.mark.parametrize("N,val", [(3, 0.25), (4, 1.0), (5, 2.25), (6, 4.0)])
def test_hardy_constant(N, val):
    assert hardy_constant(N) == val


def test_hardy_constant_low_dimension():
    with pytest.raises(ValueError, match="dimension must be"):
        hardy_constant(2)


def test_sphere_area():
    assert_allclose(sphere_area(3), 4 * math.pi, rtol=1e-15)
    assert_allclose(sphere_area(4), 2 * math.pi ** 2, rtol=1e-15)
    assert_allclose(sphere_area(5), 8 * math.pi ** 2 / 3, rtol=1e-15)


def test_sector_shift():
    assert SectorIndex(0, 3).shift == 0
    assert SectorIndex(2, 3).shift == 6
    assert SectorIndex(1, 5).shift == 4


def test_sector_pencil_dimension(one):
    p = assemble_sector(build_grid(0, 1, 5), one, 3, 0)
    assert p.dim == 3
    assert p.topology == "line"


def test_sector_pencil_entries(one):
    g = build_grid(0, 1, 5)
    h = g.h
    p = assemble_sector(g, one, 3, 0)
    q = 0.25
    assert_allclose(p.a_diag, 2 / h + q * 2 * h / 3)
    assert_allclose(p.a_off, -1 / h + q * h / 6)
    assert_allclose(p.b_diag, 2 * h / 3)
    assert_allclose(p.b_off, h / 6)


def test_sector_shift_adds_to_stiffness(one):
    g = build_grid(-1, 1, 21)
    p0 = assemble_sector(g, one, 3, 0)
    p2 = assemble_sector(g, one, 3, 2)
    assert_allclose(p2.a_dense() - p0.a_dense(), 6 * p0.b_dense(), atol=1e-14)


def test_pencil_dense_roundtrip():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 6))
    A = X @ X.T + 6 * np.eye(6)
    A = np.triu(np.tril(A, 1), -1)
    B = np.diag(rng.normal(size=6))
    p = Pencil.from_dense(A, B)
    assert_allclose(p.a_dense(), A)
    x = rng.normal(size=6)
    assert_allclose(p.apply_a(x), A @ x)


def test_periodic_pencil(one, bump):
    p = assemble_periodic(one, 2.0, 3, 64)
    assert p.dim == 64 and p.topology == "cycle"
    # constants are exact: A 1 = Lambda_N B 1
    x = np.ones(64)
    assert_allclose(p.apply_a(x), 0.25 * p.apply_b(x), rtol=0, atol=1e-12)
    with pytest.raises(WeightSpecError, match="periodic"):
        assemble_periodic(bump, 2.0, 3, 64)


def test_cell_grid():
    g = cell_grid(2.0, 64)
    assert g.n == 65
    assert_allclose(g.t_max - g.t_min, math.log(2.0), rtol=1e-15)


def test_open_line_needs_cover(bump):
    with pytest.raises(ValueError):
        assemble_open(build_grid(0.1, 0.3, 21), bump, 3)


def test_open_line_saturation_level(bump):
    line = assemble_open(build_grid(-2, 2, 401), bump, 3)
    assert_allclose(line.saturation_level, 0.25, rtol=1e-15)


def test_to_physical_constant():
    g = build_grid(-5, 5, 11)
    u = to_physical(g, np.ones(11), 3)
    assert_allclose(u(4.0), 0.5, rtol=1e-14)
    u4 = to_physical(g, np.ones(11), 4)
    assert_allclose(u4(math.e), math.exp(-1), rtol=1e-14)


def test_to_physical_hat():
    g = build_grid(-1, 1, 11)
    psi = np.zeros(11)
    psi[5] = 1.0
    u = to_physical(g, psi, 3)
    assert_allclose(u(1.0), 1.0, rtol=1e-14)
    t = 0.05
    assert_allclose(u(math.exp(t)), math.exp(-t / 2) * 0.75, rtol=1e-12)
    assert_allclose(u(math.exp(0.2)), 0.0, atol=1e-14)
    assert u(math.exp(5.0)) == 0.0


def test_to_physical_rejects_nonpositive_radius():
    u = to_physical(build_grid(-1, 1, 3), np.ones(3), 3)
    with pytest.raises(ValueError):
        u(0.0)


def test_physical_energy_zero():
    g = build_grid(-1, 1, 21)
    assert physical_energy(g, np.zeros(21), 3) == (0.0, 0.0)


def test_physical_energy_hat_combination():
    g = build_grid(-4, 4, 801)
    rng = np.random.default_rng(5)
    psi = np.zeros(801)
    psi[1:-1] = rng.uniform(-1, 1, 799)
    grad, trans = physical_energy(g, psi, 3)
    assert_allclose(grad, trans, rtol=1e-3)


def test_null_sequence_energy_exact_hardy():
    v = lambda r: r ** -0.5
    q100 = null_sequence_energy(v, 100, 3, quad_range=(math.exp(-700), math.exp(700)))
    assert_allclose(q100, 4 * math.pi / 100, rtol=1e-3)
    hardy = RadialFunction(3, lambda s: np.ones_like(s))
    q200 = null_sequence_energy(hardy, 200, 3)
    assert_allclose(q200, q100 / 2, rtol=1e-3)


def test_null_sequence_energy_short_range_rejected():
    v = lambda r: r ** -0.5
    with pytest.raises(ValueError, match="too short"):
        null_sequence_energy(v, 100, 3, quad_range=(math.exp(-200), math.exp(200)))


def test_null_sequence_energy_zero():
    assert null_sequence_energy(lambda r: 0.0 * r, 10, 3) == 0.0


def test_sector_value_above_hardy_constant(one):
    g = build_grid(-5, 5, 101)
    lam = dense_oracle(assemble_sector(g, one, 3, 0))
    assert lam > 0.25
