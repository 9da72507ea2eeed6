import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import eigh

from _pencils import pencil_suite, random_pencil
from hardyspec.eigsolve import (NoAdmissibleTestFunction, NotPositiveDefinite, dense_oracle,
                                principal, principal_open, residual_norm)
from hardyspec.logradial import Pencil, assemble_open, assemble_sector, build_grid


def test_one_by_one():
    p = Pencil.from_dense([[2.0]], [[1.0]])
    assert_allclose(principal(p).lam, 2.0, rtol=1e-14)
    assert_allclose(dense_oracle(p), 2.0, rtol=1e-14)


def test_two_by_two():
    p = Pencil.from_dense([[2.0, -1.0], [-1.0, 2.0]], np.eye(2))
    assert_allclose(principal(p).lam, 1.0, rtol=1e-12)
    assert_allclose(dense_oracle(p), 1.0, rtol=1e-12)


def test_indefinite_diagonal():
    p = Pencil.from_dense(np.eye(3), np.diag([1.0, -1.0, 0.5]))
    res = principal(p)
    assert_allclose(res.lam, 1.0, rtol=1e-12)
    assert_allclose(dense_oracle(p), 1.0, rtol=1e-12)
    assert_allclose(np.abs(res.vector), [1, 0, 0], atol=1e-8)


def test_negative_dominant_nu():
    # |nu| is largest for the negative entry; the positive one must still be found
    p = Pencil.from_dense(np.eye(3), np.diag([0.5, -4.0, 0.1]))
    assert_allclose(principal(p).lam, 2.0, rtol=1e-10)
    assert_allclose(dense_oracle(p), 2.0, rtol=1e-12)


def test_not_positive_definite():
    p = Pencil.from_dense([[1.0, 2.0], [2.0, 1.0]], np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        principal(p)
    with pytest.raises(NotPositiveDefinite):
        dense_oracle(p)


def test_no_admissible_test_function():
    p = Pencil.from_dense(np.eye(3), -np.eye(3))
    with pytest.raises(NoAdmissibleTestFunction):
        principal(p)
    with pytest.raises(NoAdmissibleTestFunction):
        dense_oracle(p)


def test_residual_norm():
    p = Pencil.from_dense(np.diag([2.0, 3.0]), np.eye(2))
    assert residual_norm(p, 2.0, [1.0, 0.0]) <= 1e-15
    assert residual_norm(Pencil.from_dense([[2.0]], [[1.0]]), 2.0, [1.0]) == 0.0
    rng = np.random.default_rng(1)
    x = np.array([1.0, 0.0]) + 0.01 * rng.normal(size=2)
    assert residual_norm(p, 2.0, x) > 0


@pytest.mark.parametrize("k", range(12))
def test_principal_matches_lapack(k):
    rng = np.random.default_rng(100 + k)
    p = random_pencil(rng, int(rng.integers(3, 80)), cycle=k % 2 == 1, indefinite=k % 3 == 0)
    nu = eigh(p.b_dense(), p.a_dense(), eigvals_only=True).max()
    res = principal(p)
    assert_allclose(res.lam, 1 / nu, rtol=1e-9)
    assert res.residual < 1e-7


def test_dense_oracle_matches_lapack():
    for p in pencil_suite(seed=7, count=10, max_dim=60):
        nu = eigh(p.b_dense(), p.a_dense(), eigvals_only=True).max()
        assert_allclose(dense_oracle(p), 1 / nu, rtol=1e-11)


def test_dense_oracle_odd_dimension():
    A = np.diag([3.0, 2.0, 5.0])
    assert_allclose(dense_oracle(Pencil.from_dense(A, np.eye(3))), 2.0, rtol=1e-14)


def test_dense_oracle_size_limit():
    p = Pencil(np.ones(401), np.zeros(400), np.ones(401), np.zeros(400))
    with pytest.raises(ValueError, match="dimension"):
        dense_oracle(p)


def test_principal_vector_sign(one):
    p = assemble_sector(build_grid(-5, 5, 201), one, 3)
    res = principal(p)
    assert np.all(res.vector > 0)
    assert_allclose(res.lam, dense_oracle(p), rtol=1e-9)


def test_hardy_sector_value(one):
    res = principal(assemble_sector(build_grid(-30, 30, 6001), one, 3))
    assert 0.25 <= res.lam <= 0.255


def test_open_constant_is_saturated(one):
    res = principal_open(assemble_open(build_grid(-5, 5, 101), one, 3))
    assert res.saturated
    assert res.lam == 0.25


def test_open_bump_below_hardy(bump):
    res = principal_open(assemble_open(build_grid(-10, 10, 2001), bump, 3))
    assert not res.saturated
    assert res.lam < 0.25
    assert np.all(res.vector > 0)
    assert all(k > 0 for k in res.kappas)


def test_open_not_above_dirichlet(bump):
    # the open trial space contains the Dirichlet one
    g = build_grid(-10, 10, 2001)
    lo = principal_open(assemble_open(g, bump, 3)).lam
    hi = principal(assemble_sector(g, bump, 3)).lam
    assert lo <= hi
