import math

import numpy as np
import pytest

from sp4verify.spherical import scans
from sp4verify.spherical.functions import (
    PoleError,
    SpectralParameter,
    c_function,
    c_inv_sq_closed,
    compare_c,
    iwasawa_batch,
    iwasawa_coordinates,
    phi,
    phi_fan,
    phi_grid,
)
from sp4verify.spherical.quadrature import (
    haar_quadrature,
    haar_rule,
    oscillatory_rule,
    random_unitaries,
)
from sp4verify.spherical.testfunction import (
    BALL_RADIUS,
    IM_BOUND,
    TestFunctionSpec,
    check_big,
    check_positivity,
    decay_order,
    exponential_type,
)
from sp4verify.symplectic import RHO, cartan_from_norm, iwasawa_H, k_from_unitary

# -- Haar quadrature -------------------------------------------------------------

def test_haar_moments():
    rule = haar_quadrature(12)
    u = rule.unitaries
    assert abs(rule.weights.sum() - 1) < 1e-13
    assert abs(rule.integrate(np.abs(np.trace(u, axis1=1, axis2=2)) ** 2) - 1) < 1e-12
    assert abs(rule.integrate(np.trace(u, axis1=1, axis2=2))) < 1e-12
    assert abs(rule.integrate(np.abs(u[:, 0, 0]) ** 2) - 0.5) < 1e-12
    assert abs(rule.integrate(np.abs(u[:, 0, 0]) ** 4) - 1 / 3) < 1e-12


def test_random_unitaries_agree_with_rule():
    u = random_unitaries(40_000, np.random.default_rng(0))
    assert np.mean(np.abs(u[:, 0, 0]) ** 4) == pytest.approx(1 / 3, abs=0.01)
    assert np.allclose(u @ np.conj(np.transpose(u, (0, 2, 1))), np.eye(2), atol=1e-12)


def test_rule_size_limits():
    with pytest.raises(ValueError):
        haar_quadrature(0)
    with pytest.raises(ValueError):
        haar_rule(0, 4, 4)
    assert len(oscillatory_rule(10.0)) > len(oscillatory_rule(1.0))


# -- Iwasawa projections -------------------------------------------------------------

def test_iwasawa_batch_against_siegel_route():
    rng = np.random.default_rng(1)
    u = random_unitaries(30, rng)
    t = (0.4, -0.25)
    batch = iwasawa_batch(t, u)
    a = np.diag(np.exp([t[0], t[1], -t[0], -t[1]]))
    direct = np.array([iwasawa_H(a @ k_from_unitary(x)) for x in u])
    assert np.allclose(batch, direct, atol=1e-10)


def test_iwasawa_coordinates_match_batch():
    rule = haar_rule(4, 8, 4)
    (block,) = list(rule.blocks())
    t = (0.3, 0.1)
    assert np.allclose(iwasawa_coordinates(t, block), iwasawa_batch(t, block.unitaries()), atol=1e-12)


# -- spherical functions ----------------------------------------------------------------

def test_phi_at_identity():
    for lam in [(0, 0), (10, 3), (40, -7)]:
        assert abs(phi(lam, (0.0, 0.0)).value - 1) <= 1e-10


def test_phi_at_i_rho_is_one():
    rng = np.random.default_rng(2)
    lam = 1j * np.asarray(RHO, float)
    for _ in range(5):
        H = cartan_from_norm(rng.uniform(0, 2), rng.normal(size=2))
        assert abs(phi(lam, H).value - 1) <= 1e-8


def test_phi_against_monte_carlo():
    rng = np.random.default_rng(3)
    u = random_unitaries(60_000, rng)
    t = (0.12, 0.05)
    lam = np.array([3.0, 1.0])
    Hk = iwasawa_batch(t, u)
    mc = np.mean(np.exp(-(Hk @ (np.asarray(RHO, float) + 1j * lam))))
    val = phi(lam, t)
    assert abs(val.value - mc) < 0.01
    assert val.error < 1e-8


def test_weyl_invariance_and_symmetry():
    rng = np.random.default_rng(4)
    for _ in range(4):
        lam = SpectralParameter(*rng.uniform(-15, 15, 2))
        H = cartan_from_norm(rng.uniform(0.05, 0.6), rng.normal(size=2))
        ref = phi(lam, H, check=False).value
        for w in lam.weyl_images():
            assert abs(phi(w, H, check=False).value - ref) <= 1e-6
        assert abs(phi(-lam, H, check=False).value - ref) <= 1e-6


def test_bounded_for_tempered():
    rng = np.random.default_rng(5)
    for _ in range(6):
        lam = SpectralParameter.from_norm(rng.uniform(0, 10), rng.normal(size=2))
        H = cartan_from_norm(rng.uniform(0, 1), rng.normal(size=2))
        assert abs(phi(lam, H).value) <= 1 + 1e-6


def test_phi_fan_matches_grid():
    H = cartan_from_norm(0.3, (2, 1))
    rule = oscillatory_rule(20 * 0.3)
    dirs = np.array([[1.0, 0.0], [2 / math.sqrt(5), 1 / math.sqrt(5)]])
    step = 5 * math.sqrt(12)
    fan = phi_fan(dirs, step, 4, H, rule)
    for i, d in enumerate(dirs):
        lams = np.array([k * step * d for k in range(5)])
        assert np.allclose(fan[i], phi_grid(lams, H, rule), atol=1e-12)


# -- c-function --------------------------------------------------------------------------

def test_c_function_forms_agree():
    rows = scans.c_function_grid(200, seed=1)
    assert max(r[4] for r in rows) <= 1e-10
    assert scans.wall_values() == 0.0


def test_c_function_normalisation_and_poles():
    assert abs(c_function(-1j * np.asarray(RHO, float)) - 1) < 1e-12
    with pytest.raises(PoleError):
        c_function((0.0, 0.0))
    assert c_inv_sq_closed((3.0, 3.0)) == 0.0
    assert compare_c((2.5, 0.7)).rel_diff < 1e-12


def test_plancherel_growth():
    # |c|^-2 grows like ||lambda||^4 along regular rays
    assert 15 < scans.growth_ratio() < 30


# -- test function --------------------------------------------------------------------------

@pytest.fixture(scope="module")
def spec():
    return TestFunctionSpec((6.0, 2.0))


def test_exponential_type(spec):
    assert exponential_type(spec.M, spec.eps) <= 1
    with pytest.raises(ValueError):
        TestFunctionSpec((1.0, 0.0), M=7)
    with pytest.raises(ValueError):
        TestFunctionSpec((1.0, 0.0), M=8, eps=0.5)


def test_calibration_inside_ball(spec):
    rng = np.random.default_rng(6)
    v = rng.standard_normal((20_000, 4))
    v *= (BALL_RADIUS * rng.uniform(0, 1, (20_000, 1)) ** 0.25) / np.linalg.norm(v, axis=1, keepdims=True)
    lam = np.stack([v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]], axis=1)
    assert np.real(spec.psi(lam)).min() >= 1


def test_positivity(spec):
    assert check_positivity(spec, np.random.default_rng(7), n=5000).passed


def test_big(spec):
    def factory(mu):
        return TestFunctionSpec(mu, eps=spec.eps, c_psi=spec.c_psi)
    rep = check_big(factory, np.linspace(0, 40, 5), np.linspace(-IM_BOUND, IM_BOUND, 7))
    assert rep.passed


def test_decay_order(spec):
    assert decay_order(spec, (1.0, 0.3)) >= spec.M / 2


def test_weyl_invariance_of_test_function(spec):
    lam = np.array([[3.0 + 0.2j, -1.0 + 0.1j]])
    swapped = lam[:, ::-1]
    assert np.allclose(spec(lam), spec(swapped))
    assert np.allclose(spec(lam), spec(-lam))


# -- phase probe and scans ---------------------------------------------------------------

def test_phase_probe():
    rep = scans.phase_probe(scans.PhaseProbe.random(np.random.default_rng(8)), samples=16)
    assert rep.passed
    assert rep.linear_term_error < 1e-6
    assert rep.min_grad_off_critical > 0


def test_phase_probe_requires_unit_vectors():
    with pytest.raises(ValueError):
        scans.PhaseProbe((1.0, 0.0), (0.0, 1.0))


def test_small_decay_scan(tmp_path):
    rep = scans.decay_scan(lambda_max=10, lambda_step=5, h_norms=(0.1, 0.5), validation=2)
    assert rep.h0_max <= 1 + 1e-6
    assert rep.c_emp <= 1.5
    assert rep.stability < 0.01
    assert rep.flagged == 0
    n = 1 + len(scans.LAMBDA_DIRECTIONS) * 2
    assert len(rep.rows) == n * (1 + 2 * len(scans.H_DIRECTIONS))
    path = rep.write(tmp_path / "d.csv")
    assert path.read_text().splitlines()[0].split(",") == list(scans.DECAY_HEADER)
