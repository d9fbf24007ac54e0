"""Spherical functions and the c-function of Sp4(R).

``phi_lambda(exp H) = int_K exp(-(rho + i lambda) H(exp(H) k)) dk`` with the
Iwasawa projection of ``G = K A N``.  The minus sign is the Iwasawa
convention of this package (``g = k exp(H(g)) n`` with ``N`` upper
triangular); with it ``|phi_lambda| <= 1`` for real ``lambda``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import loggamma

from ..symplectic import KILLING_SCALE, POSITIVE_ROOTS, RHO, WEYL_GROUP, weyl_act
from .quadrature import Coordinates, QuadratureRule, oscillatory_rule

POLE_MARGIN = 1e-12
CONVERGENCE_TOL = 1e-6


class QuadratureWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpectralParameter:
    lambda1: complex
    lambda2: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2], dtype=complex)

    @property
    def norm(self) -> float:
        """``(||Re lambda||^2 + ||Im lambda||^2)^(1/2)`` in the dual Killing norm."""
        v = self.vector
        return math.sqrt(float(np.sum(v.real ** 2 + v.imag ** 2)) / KILLING_SCALE)

    def weyl_images(self) -> list[SpectralParameter]:
        return [SpectralParameter(*weyl_act(w, (self.lambda1, self.lambda2))) for w in WEYL_GROUP]

    def __neg__(self) -> SpectralParameter:
        return SpectralParameter(-self.lambda1, -self.lambda2)

    @classmethod
    def from_norm(cls, norm: float, direction) -> SpectralParameter:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d) * norm * math.sqrt(KILLING_SCALE)
        return cls(complex(d[0]), complex(d[1]))


def iwasawa_batch(t, unitaries: np.ndarray) -> np.ndarray:
    """``H(exp(t) k)`` for a stack of ``k`` given as unitaries, shape ``(N, 2)``.

    For ``g^-1 = [[A, B], [C, D]]`` one has ``Im(g^-1 . iI)^-1 = C C^T + D D^T``
    =: ``P``, and then ``H(g) = (log P11, log(det P / P11)) / 2``.
    """
    t1, t2 = float(t[0]), float(t[1])
    Bk, Ck = unitaries.real, unitaries.imag
    e2 = np.array([math.exp(2 * t1), math.exp(2 * t2)])
    P = np.einsum("nmi,m,nmj->nij", Ck, 1 / e2, Ck) + np.einsum("nmi,m,nmj->nij", Bk, e2, Bk)
    p11 = P[:, 0, 0]
    det = P[:, 0, 0] * P[:, 1, 1] - P[:, 0, 1] ** 2
    return 0.5 * np.stack([np.log(p11), np.log(det / p11)], axis=1)


def iwasawa_coordinates(t, q: Coordinates) -> np.ndarray:
    """Same as :func:`iwasawa_batch`, with ``P`` written out in Hopf coordinates."""
    ch1, ch2 = math.cosh(2 * t[0]), math.cosh(2 * t[1])
    sh1, sh2 = math.sinh(2 * t[0]), math.sinh(2 * t[1])
    c2, s2, cs = q.cos_eta ** 2, q.sin_eta ** 2, q.cos_eta * q.sin_eta
    th2 = 2 * q.theta
    p11 = ch1 * c2 + ch2 * s2 + sh1 * c2 * np.cos(th2 + 2 * q.xi1) + sh2 * s2 * np.cos(th2 - 2 * q.xi2)
    p22 = ch1 * s2 + ch2 * c2 + sh1 * s2 * np.cos(th2 + 2 * q.xi2) + sh2 * c2 * np.cos(th2 - 2 * q.xi1)
    p12 = cs * ((ch1 - ch2) * np.cos(q.xi2 - q.xi1) + sh1 * np.cos(th2 + q.xi1 + q.xi2)
                - sh2 * np.cos(th2 - q.xi1 - q.xi2))
    return 0.5 * np.stack([np.log(p11), np.log(p11 * p22 - p12 * p12) - np.log(p11)], axis=1)


def _as_lambda(lam) -> np.ndarray:
    if isinstance(lam, SpectralParameter):
        return lam.vector
    return np.asarray(lam, dtype=complex).reshape(2)


def phi_from_projections(lams, Hk: np.ndarray, weights: np.ndarray, chunk: int = 1 << 20) -> np.ndarray:
    """``sum_k w_k exp(-(rho + i lambda) . Hk)`` for every row of ``lams``."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    rho = np.asarray(RHO, dtype=float)
    out = np.zeros(len(lams), dtype=complex)
    for s in range(0, len(Hk), chunk):
        h = Hk[s:s + chunk]
        base = weights[s:s + chunk] * np.exp(-h @ rho)
        out += np.exp(-1j * (h @ lams.T)).T @ base
    return out


def phi_grid(lams, H, rule: QuadratureRule) -> np.ndarray:
    """``phi_lambda(exp H)`` for every row of ``lams`` with one rule."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    out = np.zeros(len(lams), dtype=complex)
    for block in rule.blocks():
        out += phi_from_projections(lams, iwasawa_coordinates(H, block), block.weights)
    return out


@dataclass(frozen=True)
class PhiValue:
    value: complex
    error: float
    nodes: int

    @property
    def flagged(self) -> bool:
        return self.error > CONVERGENCE_TOL


def phase_amplitude(lam, H) -> float:
    """``||Re lambda|| ||H||`` in Killing norms (the Euclidean product is the same)."""
    lam = _as_lambda(lam)
    return float(np.linalg.norm(lam.real) * math.hypot(float(H[0]), float(H[1])))


def phi(lam, H, rule: QuadratureRule | None = None, check: bool = True, refine: float = 0.75) -> PhiValue:
    """Spherical function at ``exp(H)``.

    Without an explicit rule the grid is sized to the phase amplitude; the
    error is the change against a rule refined by a further 1/3.
    """
    lam = _as_lambda(lam)
    amp = phase_amplitude(lam, H)
    if rule is None:
        rule = oscillatory_rule(amp, refine)
    val = phi_grid(lam, H, rule)[0]
    err = 0.0
    if check:
        finer = oscillatory_rule(amp, max(1.0, 4 * refine / 3))
        err = abs(val - phi_grid(lam, H, finer)[0])
    return PhiValue(complex(val), float(err), len(rule))


def _h_norm(H) -> float:
    return math.sqrt(KILLING_SCALE * (float(H[0]) ** 2 + float(H[1]) ** 2))


# ---------------------------------------------------------------------------
# c-function
# ---------------------------------------------------------------------------

def gamma_wall(x):
    """``x tanh(pi x / 2)``."""
    return x * np.tanh(np.pi * x / 2)


def c_inv_sq_closed(lam) -> float:
    l1, l2 = np.real(_as_lambda(lam))
    return float((np.pi / 4) ** 2 * gamma_wall(l1) * gamma_wall(l2)
                 * gamma_wall(l1 + l2) * gamma_wall(l1 - l2))


def _root_coordinate(lam: np.ndarray, root) -> complex:
    # <lambda, alpha> / <alpha, alpha>; the Killing scale cancels
    return (lam[0] * root[0] + lam[1] * root[1]) / (root[0] ** 2 + root[1] ** 2)


def _log_c_alpha(z: complex, m: int = 1) -> complex:
    """log of ``2^(-i z) Gamma(i z) / (Gamma(i z/2 + m/4 + 1/2) Gamma(i z/2 + m/4))``."""
    iz = 1j * z
    return (-iz * math.log(2) + loggamma(iz)
            - loggamma(iz / 2 + m / 4 + 0.5) - loggamma(iz / 2 + m / 4))


def _log_c_unnormalised(lam: np.ndarray) -> complex:
    return sum(_log_c_alpha(_root_coordinate(lam, a)) for a in POSITIVE_ROOTS)


_LOG_C0 = -_log_c_unnormalised(-1j * np.asarray(RHO, dtype=complex))


class PoleError(ValueError):
    pass


def c_function(lam) -> complex:
    """Product formula, normalised by ``c(-i rho) = 1``."""
    lam = _as_lambda(lam)
    for a in POSITIVE_ROOTS:
        z = 1j * _root_coordinate(lam, a)
        # poles of Gamma(iz) at iz = 0, -1, -2, ...
        if abs(z.imag) < POLE_MARGIN and z.real < POLE_MARGIN and abs(z.real - round(z.real)) < POLE_MARGIN:
            raise PoleError(f"lambda={lam} is within {POLE_MARGIN} of a pole")
    return complex(np.exp(_LOG_C0 + _log_c_unnormalised(lam)))


def c_inv_sq_product(lam) -> float:
    return float(abs(c_function(lam)) ** -2)


@dataclass(frozen=True)
class CComparison:
    lambda1: float
    lambda2: float
    product: float
    closed: float
    rel_diff: float


def compare_c(lam) -> CComparison:
    l = np.real(_as_lambda(lam))
    closed = c_inv_sq_closed(l)
    prod = c_inv_sq_product(l)
    return CComparison(float(l[0]), float(l[1]), prod, closed, abs(prod - closed) / abs(closed))


# ---------------------------------------------------------------------------
# fans of spectral parameters: lambda = k * step * direction, k = 0..kmax
# ---------------------------------------------------------------------------

@njit(cache=True)
def _fan_kernel(theta, xi, eta, eta_w, t1, t2, dirs, step, kmax, half):
    nd = dirs.shape[0]
    out = np.zeros((nd, kmax + 1), dtype=np.complex128)
    ch1, ch2 = math.cosh(2 * t1), math.cosh(2 * t2)
    sh1, sh2 = math.sinh(2 * t1), math.sinh(2 * t2)
    n_theta = theta.shape[0] // 2 if half else theta.shape[0]
    scale = (2.0 if half else 1.0) / (theta.shape[0] * xi.shape[0] * xi.shape[0])
    cos_e = np.cos(eta)
    sin_e = np.sin(eta)
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
                    c2 = cos_e[e] * cos_e[e]
                    s2 = sin_e[e] * sin_e[e]
                    cs = cos_e[e] * sin_e[e]
                    p11 = ch1 * c2 + ch2 * s2 + sh1 * c2 * cA + sh2 * s2 * cB
                    p22 = ch1 * s2 + ch2 * c2 + sh1 * s2 * cC + sh2 * c2 * cD
                    p12 = cs * ((ch1 - ch2) * cE + sh1 * cF - sh2 * cG)
                    h1 = 0.5 * math.log(p11)
                    h2 = 0.5 * (math.log(p11 * p22 - p12 * p12) - math.log(p11))
                    base = eta_w[e] * scale * math.exp(-2.0 * h1 - h2)
                    for d in range(nd):
                        ph = -step * (dirs[d, 0] * h1 + dirs[d, 1] * h2)
                        z = complex(math.cos(ph), math.sin(ph))
                        acc = complex(base, 0.0)
                        out[d, 0] += acc
                        for k in range(1, kmax + 1):
                            acc = acc * z
                            out[d, k] += acc
    return out


def phi_fan(directions, step: float, kmax: int, H, rule: QuadratureRule) -> np.ndarray:
    """``phi_{k step d}(exp H)`` for unit directions ``d`` and ``k = 0..kmax``.

    ``step`` is in Euclidean coordinates.  Uses the 2-fold symmetry
    ``(theta, xi1, xi2) -> (theta, xi1, xi2) + pi/2`` (left multiplication
    by ``diag(-1, 1)``) when the grid allows it.
    """
    dirs = np.ascontiguousarray(np.atleast_2d(np.asarray(directions, dtype=float)))
    half = len(rule.theta) % 2 == 0 and len(rule.xi) % 4 == 0
    return _fan_kernel(rule.theta, rule.xi, rule.eta, rule.eta_weights,
                       float(H[0]), float(H[1]), dirs, float(step), int(kmax), half)
