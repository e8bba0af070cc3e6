import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_instance
from ptfm.errors import DimensionError, FactorizationError
from ptfm.lp_core import LpInstance, PrimalDualPoint
from ptfm.newton import direction_residuals, factorize, normal_matrix, solve_utd


def full_system_solve(A, x, s, d):
    """Dense solve of the (2n+m) block system as an independent oracle."""
    m, n = A.shape
    K = np.zeros((2 * n + m, 2 * n + m))
    rhs = np.zeros(2 * n + m)
    # unknowns ordered (dx, ds, dy)
    K[:n, :n] = np.diag(s)
    K[:n, n:2 * n] = np.diag(x)
    rhs[:n] = d
    K[n:n + m, :n] = A
    K[n + m:, n:2 * n] = np.eye(n)
    K[n + m:, 2 * n:] = A.T
    sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:2 * n], sol[2 * n:]


def mp_full_solve(A, x, s, d, dps=60):
    with mpmath.workdps(dps):
        m, n = A.shape
        N = 2 * n + m
        K = mpmath.zeros(N, N)
        rhs = mpmath.zeros(N, 1)
        for i in range(n):
            K[i, i] = mpmath.mpf(float(s[i]))
            K[i, n + i] = mpmath.mpf(float(x[i]))
            rhs[i] = mpmath.mpf(float(d[i]))
            K[n + m + i, n + i] = 1
            for j in range(m):
                K[n + m + i, 2 * n + j] = mpmath.mpf(float(A[j, i]))
        for j in range(m):
            for i in range(n):
                K[n + j, i] = mpmath.mpf(float(A[j, i]))
        sol = mpmath.lu_solve(K, rhs)
        return np.array([float(v) for v in sol[:n]]), np.array([float(v) for v in sol[n:2 * n]])


def test_r1_normal_matrix(r1, u0):
    state = factorize(r1, u0)
    np.testing.assert_allclose(state.sigma(), [[1.5]], rtol=1e-15)
    np.testing.assert_allclose(state.chol, [[math.sqrt(1.5)]], rtol=1e-15)


def test_square_instance_rejected_before_factorization():
    with pytest.raises(DimensionError):
        LpInstance(np.eye(2), np.ones(2), np.ones(2))


def test_r1_tangent_direction(r1, u0):
    d = np.array([-2.0 / 3.0, -8.0 / 3.0])
    dirn = solve_utd(factorize(r1, u0), d)
    np.testing.assert_allclose(dirn.dx, [2 / 3, -2 / 3], atol=1e-15)
    np.testing.assert_allclose(dirn.ds, [-4 / 3, -4 / 3], atol=1e-15)
    np.testing.assert_allclose(dirn.dy, [4 / 3], atol=1e-15)


def test_r1_xs_rhs_checked_by_residuals(r1, u0):
    # the defining equations decide; a hand chain that drops the sign of dy
    # gives A dx = 4 and is wrong
    d = u0.x * u0.s
    state = factorize(r1, u0)
    dirn = solve_utd(state, d)
    res = direction_residuals(state, d, dirn)
    assert max(res["null"], res["range"], res["comp"]) < 1e-14
    np.testing.assert_allclose(dirn.dy, [-4 / 3], rtol=1e-14)
    np.testing.assert_allclose(dirn.ds, [4 / 3, 4 / 3], rtol=1e-14)
    np.testing.assert_allclose(dirn.dx, [-1 / 3, 1 / 3], rtol=1e-14)
    dx, ds, dy = full_system_solve(r1.A, u0.x, u0.s, d)
    np.testing.assert_allclose(dirn.dx, dx, atol=1e-14)
    np.testing.assert_allclose(dirn.dy, dy, atol=1e-14)


def test_zero_rhs_gives_zero_direction(r1, u0):
    dirn = solve_utd(factorize(r1, u0), np.zeros(2))
    assert not np.any(dirn.dx) and not np.any(dirn.ds) and not np.any(dirn.dy)


def test_rank_deficient_matrix_pivot_failure():
    A = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    x = np.ones(3)
    inst = LpInstance(A, A @ x, np.ones(3))
    with pytest.raises(FactorizationError) as info:
        factorize(inst, PrimalDualPoint(x, np.ones(3), np.zeros(2)))
    assert info.value.pivot_index == 1


def test_ridge_is_recorded(r1, u0):
    state = factorize(r1, u0, ridge=True)
    assert state.ridge > 0


def test_nonpositive_point_rejected(r1):
    with pytest.raises(FactorizationError):
        factorize(r1, PrimalDualPoint(np.array([2.0, 0.0]), np.ones(2), np.zeros(1)))


def test_normal_matrix_is_symmetric():
    rng = np.random.default_rng(3)
    A = rng.uniform(-1, 1, (7, 15))
    S = normal_matrix(A, rng.uniform(0.1, 1, 15), rng.uniform(0.1, 1, 15))
    assert np.array_equal(S, S.T)


@pytest.mark.parametrize("spread", [1e8, 1e16])
def test_condition_stress(spread):
    rng = np.random.default_rng(11)
    m, n = 3, 7
    A = rng.uniform(-1, 1, (m, n))
    x = np.geomspace(1.0, math.sqrt(spread), n)
    s = 1.0 / x
    rng.shuffle(x)
    inst = LpInstance(A, A @ x, s)
    u = PrimalDualPoint(x, s, np.zeros(m))
    d = rng.normal(size=n)
    try:
        state = factorize(inst, u)
    except FactorizationError:
        return
    dirn = solve_utd(state, d)
    res = direction_residuals(state, d, dirn)
    scale_x = np.max(np.abs(A)) * np.max(np.abs(dirn.dx))
    assert res["comp"] <= 1e-10 * np.max(np.abs(d))
    assert res["range"] <= 1e-12 * (1 + np.max(np.abs(dirn.ds)))
    assert res["null"] <= 1e-6 * scale_x
    if spread <= 1e8:
        dx_mp, ds_mp = mp_full_solve(A, x, s, d)
        np.testing.assert_allclose(dirn.dx, dx_mp, rtol=1e-6, atol=1e-8 * np.max(np.abs(dx_mp)))
        np.testing.assert_allclose(dirn.ds, ds_mp, rtol=1e-6, atol=1e-8 * np.max(np.abs(ds_mp)))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 12))
def test_linearity(seed, m, extra):
    rng = np.random.default_rng(seed)
    inst, u = random_instance(rng, m, m + extra)
    state = factorize(inst, u)
    d1, d2 = rng.normal(size=inst.n), rng.normal(size=inst.n)
    a, b = rng.normal(size=2)
    lhs = solve_utd(state, a * d1 + b * d2)
    rhs = a * solve_utd(state, d1) + b * solve_utd(state, d2)
    scale = 1 + np.max(np.abs(lhs.dx)) + np.max(np.abs(lhs.ds))
    np.testing.assert_allclose(lhs.dx, rhs.dx, atol=1e-10 * scale)
    np.testing.assert_allclose(lhs.ds, rhs.ds, atol=1e-10 * scale)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10), st.integers(1, 10))
def test_matches_full_system(seed, m, extra):
    rng = np.random.default_rng(seed)
    inst, u = random_instance(rng, m, m + extra)
    d = rng.normal(size=inst.n)
    dirn = solve_utd(factorize(inst, u), d)
    dx, ds, dy = full_system_solve(inst.A, u.x, u.s, d)
    np.testing.assert_allclose(dirn.dx, dx, atol=1e-8 * (1 + np.max(np.abs(dx))))
    np.testing.assert_allclose(dirn.ds, ds, atol=1e-8 * (1 + np.max(np.abs(ds))))
