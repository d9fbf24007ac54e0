"""The W-invariant test function ``f~_mu = (sum_w psi(mu - w.lambda))^2``.

``psi(lambda) = c_psi h(lambda_1) h(lambda_2)`` with ``h(z) = (sin(eps z)/(eps z))^M``.
``h`` is even, so ``psi`` is already W-invariant (the sum over W of
``h((w.l)_1) h((w.l)_2)`` is ``8 h(l_1) h(l_2)``).  Its exponential type in the
dual Killing norm is ``M eps sqrt(2 * 12)``; the default ``eps = 1/(5M)``
keeps it below 1, so ``f~`` has type below 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..symplectic import KILLING_SCALE, WEYL_GROUP, weyl_act

BALL_RADIUS = math.sqrt(5.0)  # Euclidean radius covering ||Im mu|| <= sqrt(5/2) on both families
IM_BOUND = math.sqrt(5 / 2)


def sinc_power(z, eps: float, M: int):
    z = np.asarray(z, dtype=complex)
    x = eps * z
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    val = np.where(small, 1 - x * x / 6, np.sin(safe) / safe)
    return val ** M


def exponential_type(M: int, eps: float) -> float:
    return M * eps * math.sqrt(2 * KILLING_SCALE)


@dataclass
class TestFunctionSpec:
    __test__ = False  # not a pytest class despite the name

    mu: tuple[float, float]
    M: int = 8
    eps: float | None = None
    c_psi: float | None = None
    calibration: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 8 or self.M % 2:
            raise ValueError("M must be even and at least 8")
        if self.eps is None:
            self.eps = 1 / (5 * self.M)
        if exponential_type(self.M, self.eps) > 1:
            raise ValueError("exponential type of psi exceeds 1")
        if self.c_psi is None:
            self.c_psi, self.calibration = calibrate_c_psi(self.M, self.eps)

    def h(self, z):
        return sinc_power(z, self.eps, self.M)

    def psi(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        return self.c_psi * self.h(lam[..., 0]) * self.h(lam[..., 1])

    def __call__(self, lam) -> np.ndarray:
        """``f~_mu(lambda)`` for an array of shape ``(..., 2)``."""
        lam = np.asarray(lam, dtype=complex)
        mu = np.asarray(self.mu, dtype=float)
        total = 0
        for w in WEYL_GROUP:
            wl = np.stack(weyl_act(w, (lam[..., 0], lam[..., 1])), axis=-1)
            total = total + self.psi(mu - wl)
        return total * total


def _sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Points on the sphere of radius ``BALL_RADIUS`` in C^2 = R^4."""
    v = rng.standard_normal((n, 4))
    v *= BALL_RADIUS / np.linalg.norm(v, axis=1, keepdims=True)
    return np.stack([v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]], axis=1)


def calibrate_c_psi(M: int, eps: float, n: int = 200_000, margin: float = 1.05, seed: int = 0):
    """``c_psi`` with ``Re psi >= 1`` on the ball; ``Re`` of an entire function is
    harmonic, so its minimum over the ball is attained on the boundary sphere."""
    pts = _sphere(n, np.random.default_rng(seed))
    base = np.real(sinc_power(pts[:, 0], eps, M) * sinc_power(pts[:, 1], eps, M))
    low = float(base.min())
    if low <= 0:
        raise ArithmeticError("h(l1) h(l2) has non-positive real part on the ball")
    c = margin / low
    check = _sphere(n, np.random.default_rng(seed + 1))
    worst = float(np.min(c * np.real(sinc_power(check[:, 0], eps, M) * sinc_power(check[:, 1], eps, M))))
    return c, {"min_re_base": low, "margin": margin, "min_re_psi_check": worst, "radius": BALL_RADIUS}


# ---------------------------------------------------------------------------
# the families of possible spectral parameters
# ---------------------------------------------------------------------------

def family_real(x, y):
    return np.stack([np.asarray(x, complex), np.asarray(y, complex)], axis=-1)


def family_conjugate(x, y):
    """``lambda = (x + i y, -x + i y)``, real part ``(x, -x)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    return np.stack([x + 1j * y, -x + 1j * y], axis=-1)


def family_mixed(x, y):
    """``lambda = (i y, x)``, real part ``(0, x)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    return np.stack([1j * y + 0 * x, x + 0j * y], axis=-1)


@dataclass
class PropertyReport:
    name: str
    passed: bool
    detail: dict

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, **self.detail}


def check_positivity(spec: TestFunctionSpec, rng: np.random.Generator, n: int = 20_000) -> PropertyReport:
    """``f~ >= 0`` (and real) on random points of all three families."""
    x = rng.uniform(-300, 300, n)
    y = rng.uniform(-IM_BOUND, IM_BOUND, n)
    pts = np.concatenate([family_real(x, rng.uniform(-300, 300, n)), family_conjugate(x, y), family_mixed(x, y)])
    vals = spec(pts)
    scale = np.maximum(np.abs(vals), 1e-300)
    worst_im = float(np.max(np.abs(vals.imag) / scale))
    most_negative = float(np.min(vals.real))
    return PropertyReport("positivity", most_negative >= -1e-12 * float(np.max(np.abs(vals))) and worst_im < 1e-8,
                          {"min_value": most_negative, "max_rel_imag": worst_im, "samples": len(pts)})


def check_big(spec_factory, xs, ys) -> PropertyReport:
    """``f~_mu(lambda) >= 1`` whenever ``Re lambda = mu``, on the three families.

    ``spec_factory(mu)`` builds the test function for a given real part.
    """
    worst = math.inf
    where = None
    for x in xs:
        for fam, mu in (("real", (x, x / 3)), ("conjugate", (x, -x)), ("mixed", (0.0, x))):
            spec = spec_factory(mu)
            if fam == "real":
                lam = family_real(np.array([x]), np.array([x / 3]))
            elif fam == "conjugate":
                lam = family_conjugate(np.full(len(ys), x), ys)
            else:
                lam = family_mixed(np.full(len(ys), x), ys)
            v = np.real(spec(lam))
            if v.min() < worst:
                worst, where = float(v.min()), (fam, float(x))
    return PropertyReport("big", worst >= 1.0, {"min_value": worst, "at": where})


def decay_order(spec: TestFunctionSpec, direction=(1.0, 0.3), r_range=(10.0, 60.0), n: int = 4000,
                windows: int = 24) -> float:
    """Slope of ``-log max f~`` against ``log(1 + dist)`` along a real ray.

    Maxima over consecutive windows bridge the zeros of ``sin``; ``r`` is in
    units of ``1/eps``.
    """
    d = np.asarray(direction, float)
    d /= np.linalg.norm(d)
    r = np.linspace(r_range[0], r_range[1], n) / spec.eps
    lam = np.asarray(spec.mu, float) + r[:, None] * d
    vals = np.abs(spec(lam))
    dist = _weyl_distance(spec.mu, lam) / math.sqrt(KILLING_SCALE)
    idx = np.array_split(np.arange(n), windows)
    peaks = np.array([vals[i].max() for i in idx])
    at = np.array([dist[i][np.argmax(vals[i])] for i in idx])
    slope = np.polyfit(np.log1p(at), np.log(peaks), 1)[0]
    return float(-slope)


def _weyl_distance(mu, lam) -> np.ndarray:
    mu = np.asarray(mu, float)
    out = np.full(len(lam), np.inf)
    for w in WEYL_GROUP:
        wl = np.stack(weyl_act(w, (lam[:, 0], lam[:, 1])), axis=-1)
        out = np.minimum(out, np.linalg.norm(mu - wl, axis=1))
    return out
