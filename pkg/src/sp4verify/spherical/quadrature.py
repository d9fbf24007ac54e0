"""Product quadrature for the Haar measure of K = U(2).

``u = e^{i theta} v`` with ``v`` in SU(2) written in Hopf coordinates::

    v = [[e^{i xi1} cos eta, e^{i xi2} sin eta], [-e^{-i xi2} sin eta, e^{-i xi1} cos eta]]

``(theta, v)`` and ``(theta + pi, -v)`` give the same ``u``, so ``theta`` runs
over ``[0, pi)``.  The Haar density is ``sin(2 eta)`` on ``[0, pi/2]``.  The
angles use trapezoidal rules (spectrally accurate for periodic integrands),
``eta`` a Gauss-Legendre rule carrying the density.
"""
from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ..symplectic import k_from_unitary

MAX_LEVEL = 160


@dataclass(frozen=True)
class Coordinates:
    """Flat arrays of the four Hopf coordinates of a block of nodes."""

    theta: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    cos_eta: np.ndarray
    sin_eta: np.ndarray
    weights: np.ndarray

    def unitaries(self) -> np.ndarray:
        c, s = self.cos_eta, self.sin_eta
        ph = np.exp(1j * self.theta)
        u = np.empty(self.theta.shape + (2, 2), dtype=complex)
        u[:, 0, 0] = ph * np.exp(1j * self.xi1) * c
        u[:, 0, 1] = ph * np.exp(1j * self.xi2) * s
        u[:, 1, 0] = -ph * np.exp(-1j * self.xi2) * s
        u[:, 1, 1] = ph * np.exp(-1j * self.xi1) * c
        return u


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor rule: ``level`` nodes in ``theta`` and ``eta``, ``2 level`` in each Hopf angle."""

    level: int
    theta: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    eta_weights: np.ndarray

    def __len__(self) -> int:
        return len(self.theta) * len(self.xi) ** 2 * len(self.eta)

    def blocks(self, max_nodes: int = 1 << 21) -> Iterator[Coordinates]:
        """The nodes in blocks of whole ``theta`` slices."""
        X1, X2, E = np.meshgrid(self.xi, self.xi, np.arange(len(self.eta)), indexing="ij")
        X1, X2, E = X1.ravel(), X2.ravel(), E.ravel()
        c, s = np.cos(self.eta)[E], np.sin(self.eta)[E]
        w = self.eta_weights[E] / (len(self.theta) * len(self.xi) ** 2)
        per = max(1, max_nodes // len(X1))
        for i in range(0, len(self.theta), per):
            th = self.theta[i:i + per]
            n = len(th)
            yield Coordinates(np.repeat(th, len(X1)), np.tile(X1, n), np.tile(X2, n),
                              np.tile(c, n), np.tile(s, n), np.tile(w, n))

    @cached_property
    def _all(self) -> Coordinates:
        parts = list(self.blocks(max_nodes=len(self)))
        return parts[0]

    @property
    def weights(self) -> np.ndarray:
        return self._all.weights

    @property
    def unitaries(self) -> np.ndarray:
        return self._all.unitaries()

    def nodes(self) -> np.ndarray:
        """Nodes as 4x4 real matrices ``[[B, C], [-C, B]]``."""
        u = self.unitaries
        B, C = u.real, u.imag
        return np.concatenate([np.concatenate([B, C], axis=2), np.concatenate([-C, B], axis=2)], axis=1)

    def integrate(self, values) -> complex:
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=32)
def haar_rule(n_theta: int, n_xi: int, n_eta: int) -> QuadratureRule:
    if min(n_theta, n_xi, n_eta) < 1 or n_theta * n_xi * n_xi * n_eta > 2 ** 34:
        raise ValueError("quadrature sizes out of range")
    x, gw = np.polynomial.legendre.leggauss(n_eta)
    eta = np.pi / 4 * (x + 1)
    ew = gw * np.pi / 4 * np.sin(2 * eta)
    theta = np.pi * np.arange(n_theta) / n_theta
    xi = 2 * np.pi * np.arange(n_xi) / n_xi
    return QuadratureRule(n_theta, theta, xi, eta, ew / ew.sum())


def haar_quadrature(level: int) -> QuadratureRule:
    """``level`` nodes in ``theta`` and ``eta``, ``2 level`` in each Hopf angle."""
    if not 1 <= level <= MAX_LEVEL:
        raise ValueError(f"level must lie in [1, {MAX_LEVEL}]")
    return haar_rule(level, 2 * level, level)


def _round_up(n: float, m: int) -> int:
    return int(m * math.ceil(n / m))


def oscillatory_rule(amplitude: float, refine: float = 1.0) -> QuadratureRule:
    """Rule sized for integrands ``exp(i phase)`` with phase amplitude ``amplitude``.

    The torus angles need about ``2 A`` nodes and ``eta`` about ``A``
    (measured on ``phi``); ``refine`` scales all three.
    """
    a = max(amplitude, 0.0) * refine
    return haar_rule(_round_up(2 * a + 24 * refine, 2), _round_up(2 * a + 24 * refine, 4),
                     _round_up(a + 12 * refine, 1))


def random_unitaries(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed samples of U(2) (an independent cross-check)."""
    z = (rng.standard_normal((n, 2, 2)) + 1j * rng.standard_normal((n, 2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def to_k(u) -> np.ndarray:
    return k_from_unitary(u)
