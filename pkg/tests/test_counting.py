import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sp4verify.counting.diophantine import (
    QuadPoly2,
    count_near_zero,
    dirichlet_approx,
    divisor_sigma,
    four_square_count,
    solve_quadratic_integer,
)
from sp4verify.counting.enumerate import (
    BudgetExceeded,
    CountingContext,
    ScanConfig,
    enumerate_S,
    naive_S,
    prop1_scan,
    quaternion_family,
    residual_check,
)
from sp4verify.symplectic import J, exp_cartan, random_k, random_n

# -- Dirichlet approximation ------------------------------------------------

def test_dirichlet_examples():
    assert dirichlet_approx([0.5], 2) == (2, (1,))
    assert dirichlet_approx([math.sqrt(2)], 10) == (5, (7,))


def _brute_dirichlet(xi, T):
    n = len(xi)
    for strict in (True, False):
        for q in range(1, int(T) + 1):
            ps = [round(q * x) for x in xi]
            errs = [abs(q * Fraction(x) - p) ** n for x, p in zip(xi, ps)]
            if all((e < 1 / Fraction(T)) if strict else (e <= 1 / Fraction(T)) for e in errs):
                return q, tuple(ps)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=4), st.floats(1.5, 100))
def test_dirichlet_postcondition(xi, T):
    q, ps = dirichlet_approx(xi, T)
    n = len(xi)
    assert 1 <= q <= T
    assert all(abs(q * x - p) <= T ** (-1 / n) * (1 + 1e-9) for x, p in zip(xi, ps))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=1, max_size=3), st.integers(2, 60))
def test_dirichlet_is_minimal(xi, T):
    assert dirichlet_approx(xi, T) == _brute_dirichlet(xi, T)


def test_dirichlet_rejects():
    with pytest.raises(ValueError):
        dirichlet_approx([], 5)
    with pytest.raises(ValueError):
        dirichlet_approx([0.3], 1)


# -- binary quadratics ---------------------------------------------------------

def _brute_points(P, lo, hi, strict, B=40):
    out = []
    for x, y in product(range(-B, B + 1), repeat=2):
        v = P(x, y)
        if (lo < v < hi) if strict else (lo <= v <= hi):
            out.append((x, y))
    return sorted(out)


def test_solve_quadratic_examples():
    assert len(solve_quadratic_integer(QuadPoly2(1, 0, 1, 0, 0, -25))) == 12
    assert solve_quadratic_integer(QuadPoly2(1, 0, 1, 0, 0, -3)) == []
    assert sorted(solve_quadratic_integer(QuadPoly2(1, 1, 1, 0, 0, -1))) == _brute_points(
        QuadPoly2(1, 1, 1, 0, 0, -1), 0, 0, False)
    with pytest.raises(TypeError):
        solve_quadratic_integer(QuadPoly2(1.5, 0, 1, 0, 0, -1))
    with pytest.raises(ValueError):
        solve_quadratic_integer(QuadPoly2(1, 0, -1, 0, 0, 0))


definite = st.tuples(st.integers(1, 6), st.integers(-5, 5), st.integers(1, 6),
                     st.integers(-9, 9), st.integers(-9, 9), st.integers(-30, 5))


@settings(max_examples=80, deadline=None)
@given(definite)
def test_integer_points_match_brute_force(coeffs):
    P = QuadPoly2(*coeffs)
    assume(P.positive_definite)
    assert sorted(P.points_in_band(0, 0)) == _brute_points(P, 0, 0, False)
    assert sorted(P.points_in_band(-3, 7)) == _brute_points(P, -3, 7, False)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 3), st.floats(-1, 1), st.floats(0.5, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-6, 0), st.floats(0.05, 1.0))
def test_near_zero_count_below_pipeline_bound(a, b, c, d, e, f, delta):
    P = QuadPoly2(a, b, c, d, e, f)
    assume(P.positive_definite and abs(P.discriminant) > 1e-3)
    res = count_near_zero(P, delta, T_max=2000)
    assert res.count == len(_brute_points(P, -delta, delta, True))
    assert res.count <= res.pipeline_bound


def test_near_zero_examples():
    assert count_near_zero(QuadPoly2(1, 0, 1, 0, 0, -25), 0.5).count == 12
    assert count_near_zero(QuadPoly2(1, 0, 1, 0, 0, -3), 0.5).count == 0
    res = count_near_zero(QuadPoly2(1, 0, 1, -1, 0, -2.0001), 0.01)
    assert sorted(res.points) == [(-1, 0), (2, 0)]


def test_four_square_count_by_brute_force():
    for m in range(1, 31):
        b = math.isqrt(m)
        brute = sum(1 for v in product(range(-b, b + 1), repeat=4) if sum(x * x for x in v) == m)
        assert four_square_count(m) == brute == len(quaternion_family(m))
        if m % 2:
            assert brute == 8 * divisor_sigma(m)


# -- enumeration of S(g)_delta[m] ----------------------------------------------------

IDENTITY = CountingContext.identity()


@pytest.mark.parametrize("m", range(1, 6))
@pytest.mark.parametrize("delta", [0.05, 0.2])
def test_identity_matches_oracle(m, delta):
    assert enumerate_S(IDENTITY, delta, m).keys() == naive_S(IDENTITY, delta, m).keys()


def test_m_one_count():
    res = enumerate_S(IDENTITY, 0.05, 1)
    assert len(res) == 32
    for g in res.matrices:
        assert np.array_equal(g.T @ J @ g, J)


def test_quaternion_family_is_inside():
    for m in (3, 5, 7):
        fam = quaternion_family(m)
        keys = enumerate_S(IDENTITY, 1e-3, m).keys()
        assert {tuple(int(v) for v in g.ravel()) for g in fam} <= keys


def _generic_context(seed=11, scale=0.05):
    rng = np.random.default_rng(seed)
    g = random_k(rng) @ exp_cartan((0.05, 0.02)) @ random_n(rng, scale)
    return CountingContext(g)


@pytest.mark.parametrize("m", [1, 2])
def test_generic_g_matches_oracle(m):
    ctx = _generic_context()
    assert ctx.kappa < 1.5
    assert enumerate_S(ctx, 0.2, m).keys() == naive_S(ctx, 0.2, m).keys()


def test_residuals_within_bounds():
    ctx = _generic_context()
    res = enumerate_S(ctx, 0.2, 2)
    for g in res.matrices:
        assert residual_check(g, ctx, 0.2, 2).passed


def test_membership_is_exact():
    g = np.eye(4, dtype=np.int64)
    assert IDENTITY.is_member(g, 1, 0.01)
    bad = g.copy()
    bad[0, 2] = 1  # symplectic, but far from K
    assert not IDENTITY.is_member(bad, 1, 0.1)
    assert not IDENTITY.is_member(2 * g, 1, 0.3)


def test_validation_and_budget():
    with pytest.raises(ValueError):
        enumerate_S(IDENTITY, 0.0, 1)
    with pytest.raises(ValueError):
        enumerate_S(IDENTITY, 0.1, 0)
    with pytest.raises(ValueError):
        enumerate_S(IDENTITY, 0.5, 1)
    with pytest.raises(BudgetExceeded):
        enumerate_S(IDENTITY, 0.1, 12, budget=5)
    with pytest.raises(ValueError):
        ScanConfig((), (0.1,))


def test_prop1_scan_small():
    rep = prop1_scan(IDENTITY, ScanConfig(tuple(range(1, 12, 2)), (1e-3, 0.1)), lower_bound=four_square_count)
    assert rep.lower_bound_ok and rep.monotone
    assert rep.min_discriminant > 0
    assert 0.5 < rep.slope < 1.4
