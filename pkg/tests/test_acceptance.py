"""Acceptance run: one PASS/FAIL line per criterion, collected in the terminal summary."""
import math
import time
from itertools import product

import numpy as np
import pytest

from sp4verify.counting.diophantine import (
    QuadPoly2,
    count_near_zero,
    dirichlet_approx,
    four_square_count,
)
from sp4verify.counting.enumerate import (
    CountingContext,
    ScanConfig,
    enumerate_S,
    naive_S,
    prop1_scan,
)
from sp4verify.exponent import exponent_report
from sp4verify.hecke import amplifier, identities
from sp4verify.hecke.cosets import left_cosets
from sp4verify.spherical import scans
from sp4verify.spherical.functions import phi, phi_fan
from sp4verify.spherical.quadrature import oscillatory_rule
from sp4verify.spherical.testfunction import (
    IM_BOUND,
    TestFunctionSpec,
    check_big,
    check_positivity,
    decay_order,
)
from sp4verify.symplectic import (
    KILLING_SCALE,
    RHO,
    WEYL_GROUP,
    cartan_from_norm,
    weyl_act,
)

pytestmark = pytest.mark.acceptance
ROOT12 = math.sqrt(KILLING_SCALE)


def lagrangian_planes(p: int) -> int:
    """Isotropic 2-planes of F_p^4 counted from pairs of vectors."""
    V = np.array(list(product(range(p), repeat=4)), dtype=np.int64)[1:]
    omega = (V[:, None, 0] * V[None, :, 2] + V[:, None, 1] * V[None, :, 3]
             - V[:, None, 2] * V[None, :, 0] - V[:, None, 3] * V[None, :, 1]) % p
    # v in the line of u: all 2x2 minors of (u, v) vanish mod p
    minors = np.zeros(omega.shape, dtype=bool)
    for i, j in [(a, b) for a in range(4) for b in range(a + 1, 4)]:
        minors |= (V[:, None, i] * V[None, :, j] - V[:, None, j] * V[None, :, i]) % p != 0
    pairs = int(np.count_nonzero((omega == 0) & minors))
    return pairs // ((p * p - 1) * (p * p - p))


def test_c01_coset_degrees(criterion):
    start = time.perf_counter()
    got = {p: len(left_cosets(p, 1)) for p in (2, 3, 5, 7)}
    oracle = {p: lagrangian_planes(p) for p in (2, 3, 5, 7)}
    secs = time.perf_counter() - start
    ok = got == oracle == {2: 15, 3: 40, 5: 156, 7: 400} and secs < 30
    assert criterion("1 coset degrees |S(p)| = 15, 40, 156, 400", ok, f"{got} oracle {oracle} {secs:.1f}s")


def test_c02_square(criterion):
    start = time.perf_counter()
    res = {p: identities.check_square(p).passed for p in (2, 3, 5)}
    secs = time.perf_counter() - start
    ok = all(res.values()) and secs < 120
    assert criterion("2 T(p)^2 = T(0,0) + (p+1)T(0,1) + (p^3+p^2+p+1)Z", ok, f"{res} {secs:.1f}s")


def test_c03_reference_images(criterion):
    start = time.perf_counter()
    rows = identities.table_rows(2, 4) + identities.table_rows(3, 4)
    rows += identities.table_rows(2, 6, rows=[(5, 0), (5, 1), (5, 2), (6, 0), (6, 1)])
    secs = time.perf_counter() - start
    bad = [f"p={t.p} T^({t.r})_(0,{t.b}) {t.mismatches()}" for t in rows if not t.matches_reference]
    routes = all(t.matches_recursion for t in rows)
    detail = f"{len(rows) - len(bad)}/{len(rows)} rows equal, second route agrees={routes}, {secs:.0f}s"
    if bad:
        detail += "; differing: " + "; ".join(bad)
    assert criterion("3 reference Satake image table, rows r <= 6", not bad and routes and secs < 1800, detail)


def test_c04_identities(criterion):
    out = []
    for p in (2, 3):
        out += [identities.check_kodama(p, 2), identities.check_series(p, 4), identities.check_t4(p)]
        for r in (0, 1, 2):
            out += identities.check_kodamanew(p, r)
        out += identities.check_square4(p)
    out += [identities.check_squarefinal(2, r) for r in (1, 2, 4)]
    failed = [c.name for c in out if not c.passed]
    C = max(c.detail["C_observed"] for c in out if "C_observed" in c.detail)
    assert criterion("4 kodama, series, T(p^4), kodamanew, square4, c_(r,b,s)", not failed,
                     f"{len(out)} checks, max c/p^(3r-2s) = {C:.3f}, failed {failed}")


def test_c05_homomorphism(criterion):
    res = {p: identities.check_homomorphism(p, identities.random_pairs(p, 10, 4, np.random.default_rng(p))).passed
           for p in (2, 3)}
    assert criterion("5 Satake homomorphism on 10 random pairs", all(res.values()), str(res))


def test_c06_amplifier(criterion):
    primes = (2, 3, 5, 7, 11)
    rep = amplifier.amplifier_scan(primes, grid_step=0.01)
    mins = {p: rep.minimum(p, m) for p in primes for m in amplifier.MODES}
    stab = max(rep.stability(p, m) for p in primes for m in amplifier.MODES)
    ok = all(v > 0 for v in mins.values()) and stab <= 1e-3
    detail = ", ".join(f"p={p}: {rep.minimum(p):.5f}" for p in primes) + f"; stability {stab:.1e}"
    assert criterion("6 amplifier minimum > 0, stable under refinement", ok, detail)


def _fan(lams: np.ndarray, H) -> np.ndarray:
    """phi at several real lambda of equal norm through one numba fan."""
    norm = float(np.linalg.norm(lams[0]))
    if norm == 0:
        return np.ones(len(lams), complex)
    dirs = lams / norm
    amp = norm * math.hypot(H[0], H[1])
    return phi_fan(dirs, norm, 1, H, oscillatory_rule(amp, 1.0))[:, 1]


def test_c07_spherical_sanity(criterion):
    rng = np.random.default_rng(7)
    e_err = max(abs(phi(lam, (0.0, 0.0)).value - 1) for lam in [(0, 0), (30, 10), (150, -40)])
    rho_err = 0.0
    for _ in range(20):
        H = cartan_from_norm(rng.uniform(0.05, 2), rng.normal(size=2))
        rho_err = max(rho_err, abs(phi(1j * np.asarray(RHO, float), H).value - 1))
    weyl_err = 0.0
    for _ in range(50):
        lam = rng.normal(size=2)
        lam *= rng.uniform(1, 20) * ROOT12 / np.linalg.norm(lam)
        H = cartan_from_norm(rng.uniform(0.05, 1), rng.normal(size=2))
        imgs = np.array([lam] + [weyl_act(w, lam) for w in WEYL_GROUP] + [-lam], dtype=float)
        vals = _fan(imgs, H)
        weyl_err = max(weyl_err, float(np.max(np.abs(vals - vals[0]))))
    bound = 0.0
    for _ in range(100):
        lam = rng.normal(size=2)
        lam *= rng.uniform(0, 50) * ROOT12 / np.linalg.norm(lam)
        H = cartan_from_norm(rng.uniform(0, 2), rng.normal(size=2))
        bound = max(bound, abs(_fan(lam[None], H)[0]))
    ok = e_err <= 1e-10 and rho_err <= 1e-8 and weyl_err <= 1e-6 and bound <= 1 + 1e-6
    assert criterion("7 phi(e)=1, phi_(i rho)=1, Weyl/-lambda symmetry, |phi|<=1", ok,
                     f"{e_err:.1e}, {rho_err:.1e}, {weyl_err:.1e}, max|phi| {bound:.6f}")


def test_c08_c_function(criterion):
    rows = scans.c_function_grid(1000, seed=0)
    worst = max(r[4] for r in rows)
    wall = scans.wall_values()
    assert criterion("8 c-function product vs closed form, zero on walls", worst <= 1e-10 and wall == 0.0,
                     f"max rel diff {worst:.1e} on {len(rows)} points, wall max {wall}")


def test_c09_decay_scan(criterion, tmp_path):
    rep = scans.decay_scan()
    rep.write(tmp_path / "decay_scan.csv")
    ok = (rep.h0_max <= 1 + 1e-6 and rep.stability <= 0.01 and rep.validation_max <= 1.5 * rep.c_emp
          and max(r[5] for r in rep.rows) <= 1.5 * rep.c_emp and rep.far_slope <= -0.45 and rep.seconds < 7200)
    detail = (f"C_emp {rep.c_emp:.4f} (stability {rep.stability:.1e}), off-grid max {rep.validation_max:.4f}, "
              f"far slope {rep.far_slope:.3f}, flagged {rep.flagged}/{len(rep.rows)}, {rep.seconds:.0f}s")
    assert criterion("9 bounded (1+||l|| ||H||)^(1/2)|phi|, far slope <= -0.45", ok, detail)


def test_c10_phase(criterion):
    reps = [scans.phase_probe(scans.PhaseProbe.random(np.random.default_rng(100 + i)), seed=i) for i in range(10)]
    exps = [r.exponent for r in reps]
    ok = all(1.8 <= e <= 2.2 for e in exps) and all(r.passed for r in reps)
    assert criterion("10 phase linearisation remainder exponent in [1.8, 2.2]", ok,
                     f"exponents {min(exps):.4f}..{max(exps):.4f}")


def test_c11_counting_oracle(criterion):
    ctx = CountingContext.identity()
    bad = [(m, d) for m in range(1, 9) for d in (0.05, 0.2)
           if enumerate_S(ctx, d, m).keys() != naive_S(ctx, d, m).keys()]
    n1 = len(enumerate_S(ctx, 0.05, 1))
    assert criterion("11 enumerate_S = naive oracle (m <= 8), m = 1 gives 32", not bad and n1 == 32,
                     f"mismatches {bad}, count(m=1) = {n1}")


def test_c12_lower_bound(criterion):
    ctx = CountingContext.identity()
    odd30 = tuple(range(1, 31, 2))
    low = prop1_scan(ctx, ScanConfig(odd30, (1e-3, 0.05, 0.2)), lower_bound=four_square_count)
    scan = prop1_scan(ctx, ScanConfig(tuple(range(1, 51, 2)), (1e-3,)))
    ok = low.lower_bound_ok and scan.slope <= 1.4
    assert criterion("12 count >= 8 sigma(m) for odd m <= 30, slope <= 1.4", ok,
                     f"lower bound {low.lower_bound_ok}, slope {scan.slope:.3f}")


def test_c13_diophantine(criterion):
    rng = np.random.default_rng(13)
    bad_dirichlet = 0
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        T = float(rng.uniform(1.5, 100))
        xi = rng.uniform(-10, 10, n)
        q, ps = dirichlet_approx(xi, T)
        if not (1 <= q <= T and all(abs(q * x - p) <= T ** (-1 / n) * (1 + 1e-12) for x, p in zip(xi, ps))):
            bad_dirichlet += 1
    bad_count, done = 0, 0
    while done < 100:
        a, c = rng.uniform(0.3, 4, 2)
        b = rng.uniform(-0.9, 0.9) * 2 * math.sqrt(a * c)  # keep the box inside the budget
        P = QuadPoly2(a, b, c, *rng.uniform(-4, 4, 2), rng.uniform(-8, 0))
        if not P.positive_definite or abs(P.discriminant) < 1e-3:
            continue
        res = count_near_zero(P, float(rng.uniform(0.01, 1)), T_max=5000)
        bad_count += res.count > res.pipeline_bound
        done += 1
    assert criterion("13 Dirichlet postcondition (1000), count <= pipeline bound (100)",
                     bad_dirichlet == 0 and bad_count == 0, f"violations {bad_dirichlet}, {bad_count}")


def test_c14_test_function(criterion):
    spec = TestFunctionSpec((6.0, 2.0))
    pos = check_positivity(spec, np.random.default_rng(14))

    def factory(mu):
        return TestFunctionSpec(mu, eps=spec.eps, c_psi=spec.c_psi)

    big = check_big(factory, np.linspace(0, 80, 17), np.linspace(-IM_BOUND, IM_BOUND, 21))
    order = min(decay_order(spec, d) for d in ((1.0, 0.3), (1.0, 1.0), (1.0, 0.0)))
    H_list = ((0.0, (1, 0)), (1.2, (2, 1)), (2.0, (2, 1)), (3.0, (1, 1)))
    inv = scans.inverse_transform_sample(spec, H_list)
    real_ok = inv.max_imag_ratio <= 1e-6
    tail = inv.tail_ratio(1.0)
    ok = pos.passed and big.passed and order >= spec.M / 2 and real_ok and tail <= 1e-5 and not any(inv.flagged)
    detail = (f"min f~ {pos.detail['min_value']:.1e}, big min {big.detail['min_value']:.3f}, decay order "
              f"{order:.1f}, inverse: imag ratio {inv.max_imag_ratio:.1e}, |f| beyond ||H|| = 1 "
              f"<= {tail:.1e} x peak")
    assert criterion("14 test function pos/big/decay, inverse transform", ok, detail)


def test_exponent_calculator(criterion):
    rep = exponent_report(0.2, 10)
    ok = abs(rep.exponent - 1.98929) < 5e-6 and rep.exponent < 2
    assert criterion("exponent calculator, eta = 0.2, B = 10", ok,
                     f"{rep.exponent:.11f} (half of squared-bound exponent {rep.squared_exponent / 2:.11f})")
