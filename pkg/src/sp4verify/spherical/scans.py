"""Grid experiments: c-function comparison, decay scan, phase probe, inverse transform."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from ..symplectic import KILLING_SCALE, CartanVector, cartan_from_norm, k_from_unitary
from .functions import c_inv_sq_closed, compare_c, gamma_wall, phi_fan, phi_grid
from .quadrature import haar_rule, oscillatory_rule, random_unitaries
from .testfunction import IM_BOUND, TestFunctionSpec

SQRT12 = math.sqrt(KILLING_SCALE)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


# ---------------------------------------------------------------------------
# spectrum region
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumRegion:
    """The real plane and the families ``(x + iy, -x + iy)``, ``(iy, x)`` with ``|y| <= sqrt(5/2)``.

    Coordinates may be permuted or negated (the region is W-stable).
    """
    im_bound: float = IM_BOUND

    def contains(self, lam) -> bool:
        l1, l2 = complex(lam[0]), complex(lam[1])
        if l1.imag == 0 and l2.imag == 0:
            return True
        for a, b in ((l1, l2), (l2, l1)):
            for s in (1, -1):
                a2 = s * a
                for t in (1, -1):
                    b2 = t * b
                    if a2.imag == b2.imag and a2.real == -b2.real and abs(a2.imag) <= self.im_bound:
                        return True
                    if a2.real == 0 and b2.imag == 0 and abs(a2.imag) <= self.im_bound:
                        return True
        return False


# ---------------------------------------------------------------------------
# c-function comparison
# ---------------------------------------------------------------------------

C_HEADER = ("lambda1", "lambda2", "product", "closed", "rel_diff")


def c_function_grid(n: int = 1000, seed: int = 0, radius: float = 60.0, margin: float = 1e-3):
    """Random real points at distance ``>= margin`` from every wall, compared both ways."""
    rng = np.random.default_rng(seed)
    rows = []
    while len(rows) < n:
        l1, l2 = rng.uniform(-radius, radius, 2)
        if min(abs(l1), abs(l2), abs(l1 + l2), abs(l1 - l2)) < margin:
            continue
        c = compare_c((l1, l2))
        rows.append((c.lambda1, c.lambda2, c.product, c.closed, c.rel_diff))
    return rows


WALL_TS = np.linspace(-50, 50, 101)


def wall_values(ts=WALL_TS) -> float:
    """Largest ``|c|^-2`` (closed form) on the four walls."""
    worst = 0.0
    for t in ts:
        for lam in ((t, 0.0), (0.0, t), (t, t), (t, -t)):
            worst = max(worst, abs(c_inv_sq_closed(lam)))
    return worst


GROWTH_NORMS = np.linspace(1, 100, 100)


def growth_ratio(norms=GROWTH_NORMS, directions=((2, 1), (3, 1), (1, 0.2))) -> float:
    """``max |c|^-2 / ||lambda||^4`` over a grid of real ``lambda``."""
    out = 0.0
    for n in norms:
        for d in directions:
            d = np.asarray(d, float) / np.linalg.norm(d) * n * SQRT12
            out = max(out, c_inv_sq_closed(d) / n ** 4)
    return out


# ---------------------------------------------------------------------------
# decay scan
# ---------------------------------------------------------------------------

DECAY_HEADER = ("lambda1", "lambda2", "t1", "t2", "abs_phi", "s", "error", "flagged")
LAMBDA_DIRECTIONS = ((1.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (3.0, 2.0))
H_DIRECTIONS = ((1.0, 0.0), (1.0, 1.0), (2.0, 1.0))
H_NORMS = (0.01, 0.03, 0.1, 0.3, 0.6, 1.0)


@dataclass
class DecayScanReport:
    rows: list[tuple]
    c_emp: float
    c_emp_fine: float
    h0_max: float
    far_slope: float
    h1_trend: float
    validation_max: float
    flagged: int
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)

    @property
    def stability(self) -> float:
        return abs(self.c_emp - self.c_emp_fine) / self.c_emp

    def as_dict(self) -> dict:
        return {"rows": len(self.rows), "C_emp": self.c_emp, "C_emp_finer_rule": self.c_emp_fine,
                "relative_stability": self.stability, "max_s_at_H0": self.h0_max,
                "far_region_slope": self.far_slope, "H1_log_s_slope": self.h1_trend,
                "validation_max_s": self.validation_max, "validation_ratio": self.validation_max / self.c_emp,
                "flagged_rows": self.flagged, "seconds": self.seconds, "notes": self.notes}

    def write(self, path) -> Path:
        return write_csv(path, DECAY_HEADER, self.rows)


def _unit(d) -> np.ndarray:
    d = np.asarray(d, float)
    return d / np.linalg.norm(d)


def decay_scan(lambda_max: float = 60.0, lambda_step: float = 5.0, lambda_dirs=LAMBDA_DIRECTIONS,
               h_norms=H_NORMS, h_dirs=H_DIRECTIONS, refine: float = 1.0, check_refine: float = 4 / 3,
               validation: int = 12, seed: int = 0, far_threshold: float = 5.0, tol: float = 1e-6):
    """Tabulate ``s = (1 + ||lambda|| ||H||)^(1/2) |phi_lambda(exp H)|``.

    ``||lambda||`` runs over multiples of ``lambda_step`` up to ``lambda_max``
    (Killing norms) on each direction; every ``H`` row uses a rule sized for
    the largest phase and a finer rule for the error column.  ``H = 0`` rows
    are included.  Random off-grid points check the recorded ``C_emp``.
    """
    import time
    start = time.perf_counter()
    kmax = round(lambda_max / lambda_step) if lambda_step > 0 else 0
    dirs = np.array([_unit(d) for d in lambda_dirs])
    step = lambda_step * SQRT12
    Hs = [CartanVector(0.0, 0.0)] + [cartan_from_norm(hn, d) for hn in h_norms for d in h_dirs]
    rows, s_coarse, s_fine = [], [], []
    far_x, far_y = [], []
    h1_x, h1_y = [], []
    for H in Hs:
        hn = H.norm
        amp = lambda_max * hn
        vals = phi_fan(dirs, step, kmax, H, oscillatory_rule(amp, refine))
        fine = phi_fan(dirs, step, kmax, H, oscillatory_rule(amp, check_refine)) if hn > 0 else vals
        for i, d in enumerate(dirs):
            for k in range(kmax + 1):
                if k == 0 and i > 0:
                    continue  # lambda = 0 is shared by all directions
                lam = k * step * d
                ln = k * lambda_step
                a = abs(vals[i, k])
                err = abs(vals[i, k] - fine[i, k])
                s = math.sqrt(1 + ln * hn) * a
                sf = math.sqrt(1 + ln * hn) * abs(fine[i, k])
                rows.append((lam[0], lam[1], H.t1, H.t2, a, s, err, int(err > tol)))
                s_coarse.append(s)
                s_fine.append(sf)
                if ln * hn >= far_threshold and a > 0:
                    far_x.append(math.log(ln * hn))
                    far_y.append(math.log(a))
                if abs(hn - 1.0) < 1e-12 and k > 0:
                    h1_x.append(math.log(ln))
                    h1_y.append(math.log(s))
    c_emp, c_fine = max(s_coarse), max(s_fine)
    h0 = max(r[5] for r in rows if r[2] == 0 and r[3] == 0)
    far_slope = float(np.polyfit(far_x, far_y, 1)[0]) if len(set(far_x)) > 2 else float("nan")
    h1_trend = float(np.polyfit(h1_x, h1_y, 1)[0]) if len(set(h1_x)) > 2 else float("nan")
    vmax = _validate(validation, seed, lambda_max, h_norms, refine) if validation and kmax else 0.0
    report = DecayScanReport(rows, c_emp, c_fine, h0, far_slope, h1_trend, vmax,
                             sum(r[7] for r in rows), time.perf_counter() - start)
    return report


def _validate(n: int, seed: int, lambda_max: float, h_norms, refine: float) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    hmax = max(h_norms) if h_norms else 0.0
    for _ in range(n):
        ang = rng.uniform(0, math.pi / 4)
        ln = rng.uniform(5, lambda_max)
        hn = math.exp(rng.uniform(math.log(0.01), math.log(max(hmax, 0.011))))
        H = cartan_from_norm(hn, (math.cos(rng.uniform(0, math.pi / 4)), 1e-9 + math.sin(rng.uniform(0, math.pi / 4))))
        d = np.array([[math.cos(ang), math.sin(ang)]])
        v = phi_fan(d, ln * SQRT12, 1, H, oscillatory_rule(ln * hn, refine))[0, 1]
        worst = max(worst, math.sqrt(1 + ln * hn) * abs(v))
    return worst


# ---------------------------------------------------------------------------
# phase probe
# ---------------------------------------------------------------------------

KILLING_TRACE = KILLING_SCALE // 2  # <A, B> = 6 tr(AB) on sp4

# a basis of u(2), the Lie algebra of K
_K_BASIS = (np.array([[1j, 0], [0, 0]]), np.array([[0, 0], [0, 1j]]),
            np.array([[0, 1], [-1, 0]], dtype=complex), np.array([[0, 1j], [1j, 0]]))


def _expm_skew(Z: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eig(Z)
    return (V * np.exp(w)) @ np.linalg.inv(V)


@dataclass(frozen=True)
class PhaseProbe:
    X: tuple[float, float]
    Y: tuple[float, float]
    resolution: int = 6
    deltas: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)

    def __post_init__(self):
        for v in (self.X, self.Y):
            n = math.sqrt(KILLING_SCALE * (v[0] ** 2 + v[1] ** 2))
            if abs(n - 1) > 1e-9:
                raise ValueError("X and Y must have unit Killing norm")

    @classmethod
    def random(cls, rng: np.random.Generator, **kw) -> PhaseProbe:
        def unit():
            a = rng.uniform(0, 2 * math.pi)
            return (math.cos(a) / SQRT12, math.sin(a) / SQRT12)
        return cls(unit(), unit(), **kw)


def f_xy(X, Y, unitaries: np.ndarray) -> np.ndarray:
    """``<X, Ad_k Y> = 6 tr(X k Y k^-1)`` for ``k`` given as unitaries.

    For diagonal ``X, Y`` this is ``12 sum_ij X_i Y_j (|Re u_ij|^2 - |Im u_ij|^2 ...)``;
    computed here from the 4x4 real matrices directly.
    """
    x = np.array([X[0], X[1], -X[0], -X[1]])
    y = np.array([Y[0], Y[1], -Y[0], -Y[1]])
    ks = np.array([k_from_unitary(u) for u in unitaries])
    # tr(X k Y k^T) = sum_ij x_i k_ij y_j k_ij
    return KILLING_TRACE * np.einsum("i,nij,j,nij->n", x, ks, y, ks)


def F_aY(X, Y, delta: float, unitaries: np.ndarray) -> np.ndarray:
    """``<Y, H(exp(delta X) k)>``."""
    from .functions import iwasawa_batch
    H = iwasawa_batch((delta * X[0], delta * X[1]), unitaries)
    return KILLING_SCALE * (H[:, 0] * Y[0] + H[:, 1] * Y[1])


def critical_points() -> list[np.ndarray]:
    """``M w M`` in U(2): sign changes times the Weyl representatives."""
    signs = [np.diag([a, b]).astype(complex) for a in (1, -1) for b in (1, -1)]
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    flips = [np.diag([a, b]) for a in (1, 1j) for b in (1, 1j)]
    weyl = [f @ s for f in flips for s in (np.eye(2, dtype=complex), swap)]
    out = []
    for m1 in signs:
        for w in weyl:
            for m2 in signs:
                out.append(m1 @ w @ m2)
    return out


def gradient(X, Y, unitaries: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``f_{X,Y}(k exp(s Z))`` along the basis of u(2)."""
    out = np.zeros((len(unitaries), len(_K_BASIS)))
    for j, Z in enumerate(_K_BASIS):
        Ep, Em = _expm_skew(h * Z), _expm_skew(-h * Z)
        out[:, j] = (f_xy(X, Y, unitaries @ Ep) - f_xy(X, Y, unitaries @ Em)) / (2 * h)
    return out


def _distance_to(points: list[np.ndarray], unitaries: np.ndarray) -> np.ndarray:
    d = np.full(len(unitaries), np.inf)
    for c in points:
        # modulo the centre direction kept: plain Frobenius distance
        d = np.minimum(d, np.linalg.norm(unitaries - c, axis=(1, 2)))
    return d


@dataclass
class PhaseReport:
    X: tuple[float, float]
    Y: tuple[float, float]
    f_identity: float
    inner_XY: float
    exponent: float
    remainders: list[float]
    max_grad_at_critical: float
    min_grad_off_critical: float
    linear_term_error: float

    @property
    def passed(self) -> bool:
        return (1.8 <= self.exponent <= 2.2 and self.max_grad_at_critical <= 1e-6
                and abs(self.f_identity - self.inner_XY) <= 1e-12)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def phase_probe(probe: PhaseProbe, seed: int = 0, samples: int = 64, neighbourhood: float = 0.25) -> PhaseReport:
    """Linearisation of ``F_{exp(delta X), Y}`` by ``delta f_{X,Y}`` and the critical set of ``f``."""
    X, Y = probe.X, probe.Y
    rng = np.random.default_rng(seed)
    ks = random_unitaries(samples, rng)
    f = f_xy(X, Y, ks)
    rems = []
    for d in probe.deltas:
        rems.append(float(np.max(np.abs(F_aY(X, Y, d, ks) - d * f))))
    exponent = float(np.polyfit(np.log(probe.deltas), np.log(rems), 1)[0])
    lin = float(np.max(np.abs((F_aY(X, Y, 1e-6, ks) - F_aY(X, Y, -1e-6, ks)) / 2e-6 - f)))

    crit = critical_points()
    g_crit = np.linalg.norm(gradient(X, Y, np.array(crit)), axis=1)
    n = probe.resolution
    grid = haar_rule(n, 2 * n, n).unitaries
    far = grid[_distance_to(crit, grid) > neighbourhood]
    g_far = np.linalg.norm(gradient(X, Y, far), axis=1) if len(far) else np.array([np.inf])
    inner = KILLING_SCALE * (X[0] * Y[0] + X[1] * Y[1])
    f_e = float(f_xy(X, Y, np.eye(2, dtype=complex)[None])[0])
    return PhaseReport(X, Y, f_e, inner, exponent, rems, float(g_crit.max()), float(g_far.min()), lin)


# ---------------------------------------------------------------------------
# inverse spherical transform
# ---------------------------------------------------------------------------

@njit(cache=True)
def _cubic_weights(u):
    # Catmull-free 4-point Lagrange weights at offset u in [0, 1)
    return ((-u * (u - 1) * (u - 2)) / 6, ((u + 1) * (u - 1) * (u - 2)) / 2,
            (-(u + 1) * u * (u - 2)) / 2, ((u + 1) * u * (u - 1)) / 6)


@njit(cache=True)
def _k_average_kernel(theta, xi, eta, eta_w, t1, t2, Fr, Fi, v0, h, half):
    """``sum_k w_k exp(-rho . Hk) F(Hk)`` for each table ``F = Fr[j] + i Fi[j]`` on a square grid."""
    ch1, ch2 = math.cosh(2 * t1), math.cosh(2 * t2)
    sh1, sh2 = math.sinh(2 * t1), math.sinh(2 * t2)
    n_theta = theta.shape[0] // 2 if half else theta.shape[0]
    scale = (2.0 if half else 1.0) / (theta.shape[0] * xi.shape[0] * xi.shape[0])
    nt = Fr.shape[0]
    n = Fr.shape[1]
    re = np.zeros(nt)
    im = np.zeros(nt)
    for a in range(n_theta):
        th2 = 2 * theta[a]
        for b in range(xi.shape[0]):
            x1 = xi[b]
            for c in range(xi.shape[0]):
                x2 = xi[c]
                cA = math.cos(th2 + 2 * x1)
                cB = math.cos(th2 - 2 * x2)
                cC = math.cos(th2 + 2 * x2)
                cD = math.cos(th2 - 2 * x1)
                cE = math.cos(x2 - x1)
                cF = math.cos(th2 + x1 + x2)
                cG = math.cos(th2 - x1 - x2)
                for e in range(eta.shape[0]):
                    ce = math.cos(eta[e])
                    se = math.sin(eta[e])
                    c2 = ce * ce
                    s2 = se * se
                    cs = ce * se
                    p11 = ch1 * c2 + ch2 * s2 + sh1 * c2 * cA + sh2 * s2 * cB
                    p22 = ch1 * s2 + ch2 * c2 + sh1 * s2 * cC + sh2 * c2 * cD
                    p12 = cs * ((ch1 - ch2) * cE + sh1 * cF - sh2 * cG)
                    h1 = 0.5 * math.log(p11)
                    h2 = 0.5 * (math.log(p11 * p22 - p12 * p12) - math.log(p11))
                    base = eta_w[e] * scale * math.exp(-2.0 * h1 - h2)
                    g1 = (h1 - v0) / h
                    g2 = (h2 - v0) / h
                    i1 = min(max(int(math.floor(g1)) - 1, 0), n - 4)  # noqa: RUF046  (numba typing)
                    i2 = min(max(int(math.floor(g2)) - 1, 0), n - 4)  # noqa: RUF046  (numba typing)
                    w1 = _cubic_weights(g1 - i1 - 1)
                    w2 = _cubic_weights(g2 - i2 - 1)
                    for j in range(nt):
                        sr = 0.0
                        si = 0.0
                        for p in range(4):
                            rr = 0.0
                            ri = 0.0
                            for q in range(4):
                                rr += w2[q] * Fr[j, i1 + p, i2 + q]
                                ri += w2[q] * Fi[j, i1 + p, i2 + q]
                            sr += w1[p] * rr
                            si += w1[p] * ri
                        re[j] += base * sr
                        im[j] += base * si
    return re + 1j * im


def plancherel_weighted(spec: TestFunctionSpec, cutoff: float, spacing: float):
    """Grid ``lambda`` and ``f~_mu(lambda) |c(lambda)|^-2`` on ``[-cutoff, cutoff]^2``."""
    n = math.ceil(cutoff / spacing)
    lam = spacing * np.arange(-n, n + 1)
    L1, L2 = np.meshgrid(lam, lam, indexing="ij")
    c = (np.pi / 4) ** 2 * gamma_wall(L1) * gamma_wall(L2) * gamma_wall(L1 + L2) * gamma_wall(L1 - L2)
    G = spec(np.stack([L1, L2], axis=-1)) * c
    return lam, G


def abel_profile(lam: np.ndarray, G: np.ndarray, spacing: float, v: np.ndarray) -> np.ndarray:
    """``F(v) = (1/8) int G(lambda) exp(-i lambda . v) dlambda`` on the grid ``v x v``."""
    E = np.exp(-1j * np.outer(v, lam))
    return (E @ G @ E.T) * spacing ** 2 / 8


@dataclass
class InverseTransformReport:
    mu: tuple[float, float]
    cutoff: float
    spacing: float
    H: list[tuple[float, float]]
    H_norms: list[float]
    values: list[complex]
    truncation: list[float]
    quadrature: list[float]
    seconds: float

    @property
    def peak(self) -> float:
        return max(abs(v.real) for v in self.values)

    @property
    def max_imag_ratio(self) -> float:
        return max(abs(v.imag) / max(abs(v), 1e-300) for v in self.values)

    def tail_ratio(self, threshold: float = 2.5) -> float:
        tail = [abs(v) for v, n in zip(self.values, self.H_norms) if n > threshold]
        return max(tail) / self.peak if tail else 0.0

    @property
    def flagged(self) -> list[bool]:
        return [t > 0.1 * self.peak for t in self.truncation]

    def as_dict(self) -> dict:
        return {"mu": list(self.mu), "cutoff": self.cutoff, "spacing": self.spacing,
                "samples": [{"t": list(h), "norm": n, "re": v.real, "im": v.imag, "truncation": t,
                             "quadrature": q, "flagged": fl}
                            for h, n, v, t, q, fl in zip(self.H, self.H_norms, self.values,
                                                         self.truncation, self.quadrature, self.flagged)],
                "peak": self.peak, "max_imag_ratio": self.max_imag_ratio,
                "tail_ratio_beyond_2.5": self.tail_ratio(), "seconds": self.seconds}


DEFAULT_H_SAMPLES = ((0.0, (1, 0)), (0.5, (2, 1)), (1.0, (2, 1)), (1.5, (2, 1)), (2.0, (2, 1)),
                     (2.5, (2, 1)), (3.0, (2, 1)), (3.0, (1, 0)), (3.0, (1, 1)))


def inverse_transform_sample(spec: TestFunctionSpec, H_list=DEFAULT_H_SAMPLES, lambda_cutoff: float | None = None,
                             spacing: float = 0.5, refine: float = 1.0, n_profile: int = 640):
    """``f_mu(exp H) = int_K exp(-rho . H(exp(H) k)) F(H(exp(H) k)) dk``.

    ``F`` is the Euclidean Fourier transform of ``f~_mu |c|^-2`` over the
    truncated real plane (the inner ``lambda`` integral of the inversion
    formula done first).  The truncation column compares against a cutoff
    shrunk by 20%, the quadrature column against a rule coarsened by 1/4.
    The K-rule is sized for frequencies up to ``|mu| + 2.5/eps``, beyond
    which ``f~ |c|^-2`` is below 1e-6 of its maximum.
    """
    import time
    start = time.perf_counter()
    Hs = [cartan_from_norm(n, d) for n, d in H_list]
    if lambda_cutoff is None:
        lambda_cutoff = float(np.max(np.abs(spec.mu))) + 6.0 / spec.eps
    band = float(np.linalg.norm(spec.mu)) + 2.5 / spec.eps
    vmax = max(max(abs(H.t1), abs(H.t2)) for H in Hs) + 0.02
    v = np.linspace(-vmax, vmax, n_profile)
    h = v[1] - v[0]
    lam, G = plancherel_weighted(spec, lambda_cutoff, spacing)
    F = abel_profile(lam, G, spacing, v)
    inner = np.abs(lam) <= 0.8 * lambda_cutoff
    F_short = abel_profile(lam[inner], G[np.ix_(inner, inner)], spacing, v)
    tables = np.stack([F, F_short])
    Fr, Fi = np.ascontiguousarray(tables.real), np.ascontiguousarray(tables.imag)
    values, trunc, quad = [], [], []
    for H in Hs:
        amp = band * math.hypot(H.t1, H.t2)
        out = []
        for ref in (refine, 0.75 * refine):
            rule = oscillatory_rule(amp, ref)
            half = len(rule.theta) % 2 == 0 and len(rule.xi) % 4 == 0
            out.append(_k_average_kernel(rule.theta, rule.xi, rule.eta, rule.eta_weights, H.t1, H.t2,
                                         Fr, Fi, float(v[0]), float(h), half))
        values.append(complex(out[0][0]))
        trunc.append(float(abs(out[0][0] - out[0][1])))
        quad.append(float(abs(out[0][0] - out[1][0])))
    return InverseTransformReport(tuple(spec.mu), lambda_cutoff, spacing, [(H.t1, H.t2) for H in Hs],
                                  [H.norm for H in Hs], values, trunc, quad, time.perf_counter() - start)


def phi_direct(lam, H, refine: float = 0.75) -> complex:
    """One value through the vectorised path (for cross-checks of the kernels)."""
    return complex(phi_grid(np.asarray(lam, complex), H, oscillatory_rule(
        float(np.linalg.norm(np.real(lam))) * math.hypot(H[0], H[1]), refine))[0])
