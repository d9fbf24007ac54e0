import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy.matrices.normalforms import smith_normal_form

from sp4verify import symplectic as sy


def _gamma(seed):
    return sy.random_gamma(np.random.default_rng(seed))


def test_gamma_is_integral_symplectic():
    for seed in range(10):
        g = _gamma(seed)
        assert g.dtype.kind == "i"
        assert np.array_equal(g.T @ sy.J @ g, sy.J)
        assert sy.similitude_of(g) == 1


def test_similitude_of_rejects_non_similitudes():
    assert sy.similitude_of(np.diag([1, 2, 3, 4])) is None
    assert sy.similitude_of(np.diag([1, 1, 5, 5])) == 5


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 3), st.integers(0, 3))
def test_hnf_is_a_left_gamma_invariant(seed, a, b):
    D = np.diag([2 ** a, 3 ** b, 2 ** a * 5, 3 ** b * 7])
    M = D @ _gamma(seed)
    H = sy.hnf(M)
    assert np.array_equal(sy.hnf(_gamma(seed + 1) @ M), H)
    assert np.all(np.tril(H, -1) == 0) and np.all(np.diag(H) > 0)
    for c in range(4):
        assert np.all((H[:c, c] >= 0) & (H[:c, c] < H[c, c]))
    # same row lattice: H M^-1 is unimodular
    U = sympy.Matrix(H.tolist()) * sympy.Matrix(M.tolist()).inv()
    assert all(x.is_integer for x in U) and abs(U.det()) == 1


def test_hnf_batch_matches_scalar():
    Ms = np.stack([np.diag([2, 1, 2, 4]) @ _gamma(s) for s in range(8)])
    assert np.array_equal(sy.hnf_batch(Ms), np.stack([sy.hnf(M) for M in Ms]))


@pytest.mark.parametrize("p, diag", [(2, (1, 2, 8, 4)), (3, (3, 3, 27, 27)), (2, (4, 4, 4, 4)), (5, (1, 5, 25, 5))])
def test_snf_exponents_against_sympy(p, diag):
    M = _gamma(1) @ np.diag(diag) @ _gamma(2)
    a, b = sy.snf_exponents(M, p)
    snf = smith_normal_form(sympy.Matrix(M.tolist()), domain=sympy.ZZ)
    divisors = sorted(abs(int(snf[i, i])) for i in range(4))
    r = sy.vp(sy.similitude_of(M), p)
    assert divisors == sorted([p ** a, p ** b, p ** (r - b), p ** (r - a)])
    lab = sy.snf_exponents_batch(M[None], p)[0]
    assert tuple(lab) == (a, b)


def test_snf_rejects_wrong_degree():
    with pytest.raises(sy.SymplecticError):
        sy.snf_exponents(np.diag([1, 1, 2, 2]), 2, r=2)


def test_rho_and_weyl_group():
    assert sy.rho_norm_sq() == Fraction(5, 12)
    assert len(set(sy.WEYL_GROUP)) == 8
    assert len(sy.weyl_orbit((3, 1))) == 8
    assert sy.rho_hull_contains((2, 1)) and not sy.rho_hull_contains((2.1, 1))


def _random_g(rng):
    H = rng.normal(size=2) * 0.6
    return sy.random_k(rng) @ sy.exp_cartan(H) @ sy.random_n(rng, 0.7)


def test_iwasawa_parts_reconstruct():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = _random_g(rng)
        k, a, n = sy.iwasawa_parts(g)
        assert np.allclose(k @ a @ n, g, atol=1e-9)
        assert np.allclose(k.T @ k, np.eye(4), atol=1e-9)
        assert sy.symplectic_defect(k) < 1e-9
        assert np.allclose(n[2:, :2], 0, atol=1e-9)
        assert np.allclose(np.diag(n), 1, atol=1e-9)


def test_iwasawa_H_equivariance():
    rng = np.random.default_rng(1)
    for _ in range(20):
        H = rng.normal(size=2)
        assert np.allclose(sy.iwasawa_H(sy.exp_cartan(H)), H)
        g = _random_g(rng)
        assert np.allclose(sy.iwasawa_H(sy.random_k(rng) @ g), sy.iwasawa_H(g))
        assert np.allclose(sy.iwasawa_H(g @ sy.random_n(rng)), sy.iwasawa_H(g))


def test_cartan_projection():
    rng = np.random.default_rng(2)
    H = sy.CartanVector(0.9, 0.3)
    g = sy.random_k(rng) @ H.exp() @ sy.random_k(rng)
    assert np.allclose(sy.cartan_C(g), H)
    assert sy.cartan_norms_batch(g[None])[0] == pytest.approx(H.norm)
    assert H.norm == pytest.approx(math.sqrt(12 * (0.81 + 0.09)))


def test_cartan_from_norm():
    H = sy.cartan_from_norm(2.0, (2, 1))
    assert H.norm == pytest.approx(2.0)
    assert H.t1 == pytest.approx(2 * H.t2)


def test_moebius_action_and_group_point():
    rng = np.random.default_rng(3)
    Z = sy.SiegelPoint(np.array([[0.3, 0.1], [0.1, -0.2]]), np.array([[1.5, 0.2], [0.2, 0.7]]))
    g = sy.point_to_group(Z)
    W = sy.moebius(g, sy.ISIEGEL)
    assert np.allclose(W.Z, Z.Z)
    k = sy.random_k(rng)
    assert np.allclose(sy.moebius(k, sy.ISIEGEL).Z, sy.ISIEGEL.Z)
    with pytest.raises(sy.SymplecticError):
        sy.SiegelPoint(np.zeros((2, 2)), -np.eye(2))


def test_k_embedding_roundtrip():
    rng = np.random.default_rng(4)
    u = sy.random_unitary(rng)
    k = sy.k_from_unitary(u)
    assert np.allclose(sy.unitary_from_k(k), u)
    assert sy.symplectic_defect(k) < 1e-12


def test_check_symplectic_rejects():
    with pytest.raises(sy.SymplecticError):
        sy.check_symplectic(np.diag([2.0, 1, 1, 1]))
    with pytest.raises(sy.SymplecticError):
        sy.check_symplectic(np.eye(3))


def test_levi_and_translation():
    assert np.array_equal(sy.levi([[1, 1], [0, 1]]).T @ sy.J @ sy.levi([[1, 1], [0, 1]]), sy.J)
    T = sy.translation([[1, 2], [2, 0]])
    assert np.array_equal(T.T @ sy.J @ T, sy.J)
    with pytest.raises(sy.SymplecticError):
        sy.levi([[2, 0], [0, 1]])
