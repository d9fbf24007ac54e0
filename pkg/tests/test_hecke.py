from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sp4verify.hecke import algebra, amplifier, eigen, identities
from sp4verify.hecke.algebra import HeckeElement, hecke_multiply, satake
from sp4verify.hecke.cache import TableCache, decode, encode
from sp4verify.hecke.cosets import (
    BudgetExceeded,
    coset_count,
    hnf_filter_cosets,
    is_prime,
    isotropic_plane_count,
    left_cosets,
)
from sp4verify.hecke.satake import REFERENCE_IMAGES, SatakePolynomial
from sp4verify.symplectic import J, hnf, similitude_of, snf_exponents

# -- coset tables ------------------------------------------------------------

@pytest.mark.parametrize("p, expected", [(2, 15), (3, 40), (5, 156), (7, 400)])
def test_degree_of_T_p(p, expected):
    table = left_cosets(p, 1)
    assert len(table) == expected == isotropic_plane_count(p) == coset_count(p, 1)


@pytest.mark.parametrize("p, r", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)])
def test_cosets_match_hermite_filter(p, r):
    table = left_cosets(p, r)
    ours = {tuple(h.ravel()) for h in table.hnf_keys()}
    oracle = {tuple(h.ravel()) for h in hnf_filter_cosets(p, r)}
    assert len(ours) == len(table)
    assert ours == oracle


def test_representatives_are_similitudes():
    table = left_cosets(3, 2)
    for M in table.reps[::7]:
        assert similitude_of(M) == 9
        assert np.array_equal(M.T @ J @ M, 9 * J)
    labels = {snf_exponents(M, 3, 2) for M in table.reps}
    assert labels == {(0, 0), (0, 1), (1, 1)}


def test_budget_and_prime_checks():
    with pytest.raises(BudgetExceeded):
        left_cosets(2, 3, budget=10)
    with pytest.raises(ValueError):
        left_cosets(9, 1)
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]


# -- multiplication ----------------------------------------------------------

@pytest.mark.parametrize("p", [2, 3, 5])
def test_square_of_T_p(p):
    sq = HeckeElement.T(p, 1) * HeckeElement.T(p, 1)
    assert sq.coefficient(2, 0, 0) == 1
    assert sq.coefficient(2, 0, 1) == p + 1
    assert sq.coefficient(2, 1, 1) == p ** 3 + p ** 2 + p + 1


@pytest.mark.parametrize("left, right", [((1, 0, 0), (1, 0, 0)), ((2, 0, 1), (1, 0, 0)), ((2, 0, 0), (2, 0, 1))])
def test_product_methods_agree(left, right):
    a = HeckeElement.basis(2, *left)
    b = HeckeElement.basis(2, *right)
    assert hecke_multiply(a, b, "targeted") == hecke_multiply(a, b, "products")


def test_degree_is_multiplicative():
    # deg(T1 T2) = deg T1 deg T2 where deg counts left cosets
    store = algebra.STORE
    for left, right in [((1, 0, 0), (1, 0, 0)), ((2, 0, 1), (2, 0, 0)), ((2, 0, 1), (1, 0, 0))]:
        prod = HeckeElement.basis(2, *left) * HeckeElement.basis(2, *right)
        total = sum(c * store.degree(2, *lab) for lab, c in prod.terms.items())
        assert total == store.degree(2, *left) * store.degree(2, *right)


small_labels = st.sampled_from([(1, 0, 0), (2, 0, 0), (2, 0, 1), (2, 1, 1)])


@settings(max_examples=12, deadline=None)
@given(small_labels, small_labels, small_labels)
def test_hecke_algebra_commutative_associative(x, y, z):
    a, b, c = (HeckeElement.basis(2, *t) for t in (x, y, z))
    assert a * b == b * a
    if x[0] + y[0] + z[0] <= 4:
        assert (a * b) * c == a * (b * c)


@pytest.mark.parametrize("p", [2, 3])
def test_identity_suite(p):
    results = identities.verify_identity_suite(p, 4)
    failed = [r.name for r in results if not r.passed]
    assert not failed
    names = " ".join(r.name for r in results)
    assert "T(p^4) relation" in names and "generating series" in names


def test_square4_constant_and_kodama_degree_two():
    assert identities.check_kodama(2, 2).passed
    chain = identities.check_square4(2)
    assert all(c.passed for c in chain)
    assert "400-bound" in chain[-1].name


def test_squarefinal_bound_small():
    for r in (1, 2, 4):
        res = identities.check_squarefinal(2, r)
        assert res.passed
        assert res.detail["C_observed"] <= 400


def test_coprime_product():
    assert identities.check_coprime(2, 3).passed


# -- Satake ------------------------------------------------------------------

@pytest.mark.parametrize("p", [2, 3, 5])
def test_satake_of_T_p(p):
    # T(p) -> x0 (1 + x1 + x2 + x1 x2)
    img = satake(HeckeElement.T(p, 1))
    rng = np.random.default_rng(p)
    for _ in range(5):
        x0, x1, x2 = rng.normal(size=3) + 1j * rng.normal(size=3)
        assert img.evaluate(x0, x1, x2) == pytest.approx(x0 * (1 + x1 + x2 + x1 * x2), rel=1e-12)


@pytest.mark.parametrize("p", [2, 3])
def test_homomorphism_random_pairs(p):
    pairs = identities.random_pairs(p, 10, 4, np.random.default_rng(7 + p))
    assert identities.check_homomorphism(p, pairs).passed


def test_images_are_weyl_invariant():
    for (r, b) in [(2, 0), (2, 1), (3, 1), (4, 2)]:
        assert identities.image_of(2, r, b).is_invariant()


def test_oracle_images_agree_low_degree():
    for p in (2, 3):
        for r in (1, 2):
            oracle = identities.oracle_images(p, r)
            for (a, b), img in oracle.items():
                if a == 0:
                    assert identities.image_of(p, r, b) == img


KNOWN_TABLE_DISCREPANCIES = {(4, 1): {"(0, 2)"}, (5, 1): {"(0, 2)"}, (5, 2): {"(2, 2)"}}


@pytest.mark.parametrize("p", [2, 3])
def test_table_rows_low_degree(p):
    rows = identities.table_rows(p, 4)
    assert {(t.r, t.b) for t in rows} == {k for k in REFERENCE_IMAGES if k[0] <= 4}
    for t in rows:
        assert t.matches_recursion
        if (t.r, t.b) in KNOWN_TABLE_DISCREPANCIES:
            assert set(t.mismatches()) == KNOWN_TABLE_DISCREPANCIES[(t.r, t.b)]
        else:
            assert t.matches_reference, (t.r, t.b, t.mismatches())


def test_table_discrepancy_values():
    # the computed coefficient of the orbit (0, 2) in T^(4)_(0,1) is (p-1)/p^2
    for p in (2, 3):
        (row,) = identities.table_rows(p, 4, rows=[(4, 1)])
        got = row.computed.orbit_coefficients()[(0, 2)]
        assert got == Fraction(p - 1, p ** 2)


def test_satake_polynomial_algebra():
    one = SatakePolynomial.one()
    t = satake(HeckeElement.T(2, 1))
    assert t * one == t
    assert (t + t) - t == t
    assert t.scale(Fraction(1, 2)) + t.scale(Fraction(1, 2)) == t


# -- eigenvalues and the amplifier ---------------------------------------------

def test_calibration_records_offset():
    rec = eigen.calibrate()
    assert rec.tp_solutions >= 1
    assert not rec.tp2_consistent
    assert "p=2: -5/2" in rec.tp2_offset and "p=3: -7/3" in rec.tp2_offset


def test_t4_relation_through_eigenvalues():
    # lambda(p^4) / p^6 from the Satake image agrees with the closed relation
    p = 2
    rng = np.random.default_rng(1)
    alpha = np.exp(1j * rng.uniform(0, np.pi, 6))
    beta = np.exp(1j * rng.uniform(0, np.pi, 6))
    x, y = alpha + 1 / alpha, beta + 1 / beta
    s = x + y
    q = amplifier.q_value(x, y, p, "satake")
    lam1 = eigen.eigenvalue_specialization(HeckeElement.T(p, 1), alpha, beta)
    lam2 = eigen.eigenvalue_specialization(HeckeElement.T(p, 2), alpha, beta)
    lam4 = eigen.eigenvalue_specialization(HeckeElement.T(p, 4), alpha, beta)
    assert np.allclose(lam1 / p ** 1.5, s)
    assert np.allclose(lam2 / p ** 3, q)
    assert np.allclose(lam4 / p ** 6, amplifier.r_value(s, q, p))


def test_amplifier_minimum_positive_coarse():
    rep = amplifier.amplifier_scan([2, 3], grid_step=0.05, refine=False)
    assert rep.minimum(2) == pytest.approx(2 ** -0.5, abs=1e-6)
    assert rep.minimum(3) > 0.7


def test_amplifier_expansion():
    rep = amplifier.amplifier_expand((2, 3))
    assert rep.shape_ok and rep.coprime_ok
    assert rep.bound_C == pytest.approx(7.116, abs=1e-3)
    with pytest.raises(ValueError):
        amplifier.amplifier_expand((2, 2))


# -- cache ---------------------------------------------------------------------

def test_cache_roundtrip(tmp_path):
    table = left_cosets(2, 2)
    cache = TableCache(tmp_path)
    cache.store(table)
    back = cache.load(2, 2)
    assert np.array_equal(back.reps, table.reps)
    assert np.array_equal(back.labels, table.labels)
    assert cache.load(2, 3) is None


def test_cache_corruption_is_not_reused(tmp_path):
    table = left_cosets(2, 2)
    cache = TableCache(tmp_path)
    path = cache.store(table)
    blob = bytearray(path.read_bytes())
    blob[40] ^= 0xFF
    path.write_bytes(bytes(blob))
    assert cache.load(2, 2) is None
    store = algebra.TableStore(cache=cache)
    rebuilt = store.full(2, 2)
    assert len(rebuilt) == len(table)
    assert decode(path.read_bytes()).reps.shape == table.reps.shape


def test_encode_is_deterministic():
    t = left_cosets(3, 1)
    assert encode(t) == encode(left_cosets(3, 1))


def test_cache_env_var(tmp_path, monkeypatch):
    from sp4verify.hecke.cache import default_cache_dir
    monkeypatch.setenv("SP4VERIFY_CACHE", str(tmp_path / "c"))
    assert default_cache_dir() == tmp_path / "c"


def test_hnf_of_coset_keys_is_reduced():
    for H in left_cosets(2, 2).hnf_keys()[:20]:
        assert np.array_equal(hnf(H), H)
