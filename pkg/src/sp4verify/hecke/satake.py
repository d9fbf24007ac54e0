"""Exact Satake polynomials ``x0^r * sum c * x1^e1 * x2^e2``.

A left coset with upper-left block of diagonal ``(p^alpha, p^beta)`` in
``S(p^r)`` contributes the monomial ``(x1/p)^(r-beta) * (x2/p^2)^(r-alpha)``
(times ``x0^r``).
"""
from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass
class SatakePolynomial:
    degree: int
    coeffs: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {k: Fraction(v) for k, v in self.coeffs.items() if v != 0}

    @classmethod
    def one(cls) -> SatakePolynomial:
        return cls(0, {(0, 0): Fraction(1)})

    @classmethod
    def from_cosets(cls, p: int, r: int, satake_exponents: np.ndarray) -> SatakePolynomial:
        counts: dict[tuple[int, int], int] = defaultdict(int)
        alpha, beta = satake_exponents[:, 0], satake_exponents[:, 1]
        keys, mult = np.unique(np.stack([r - beta, r - alpha], axis=1), axis=0, return_counts=True)
        for (e1, e2), n in zip(keys.tolist(), mult.tolist()):
            counts[(e1, e2)] += n
        return cls(r, {k: Fraction(n, p ** (k[0] + 2 * k[1])) for k, n in counts.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, SatakePolynomial):
            return NotImplemented
        if not self.coeffs and not other.coeffs:
            return True
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __add__(self, other: SatakePolynomial) -> SatakePolynomial:
        if not other.coeffs:
            return self
        if not self.coeffs:
            return other
        if self.degree != other.degree:
            raise ValueError("cannot add Satake polynomials of different degree")
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return SatakePolynomial(self.degree, out)

    def __sub__(self, other: SatakePolynomial) -> SatakePolynomial:
        return self + other.scale(-1)

    def scale(self, c) -> SatakePolynomial:
        return SatakePolynomial(self.degree, {k: v * c for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, SatakePolynomial):
            return self.scale(Fraction(other))
        out: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
        for (a1, a2), u in self.coeffs.items():
            for (b1, b2), v in other.coeffs.items():
                out[(a1 + b1, a2 + b2)] += u * v
        return SatakePolynomial(self.degree + other.degree, out)

    __rmul__ = scale

    def is_invariant(self) -> bool:
        """Symmetric in ``x1, x2`` and invariant under both inversion automorphisms."""
        r, c = self.degree, self.coeffs
        return all(c.get((e2, e1)) == v and c.get((r - e1, e2)) == v and c.get((e1, r - e2)) == v
                   for (e1, e2), v in c.items())

    def evaluate(self, x0: complex, x1: complex, x2: complex) -> complex:
        return x0 ** self.degree * sum(float(v) * x1 ** e1 * x2 ** e2 for (e1, e2), v in self.coeffs.items())

    def orbit_coefficients(self) -> dict[tuple[int, int], Fraction]:
        """Coordinates in the Weyl-orbit basis; raises if the polynomial is not invariant."""
        if not self.is_invariant():
            raise ValueError("polynomial is not Weyl invariant")
        out = {}
        for (e1, e2), v in self.coeffs.items():
            a1, a2 = sorted((min(e1, self.degree - e1), min(e2, self.degree - e2)))
            out[(a1, a2)] = v
        return dict(sorted(out.items()))

    def __repr__(self) -> str:
        terms = " + ".join(f"({v})*x1^{e1}*x2^{e2}" for (e1, e2), v in sorted(self.coeffs.items()))
        return f"x0^{self.degree}*[{terms or '0'}]"


def weyl_orbit_set(r: int, a1: int, a2: int) -> set[tuple[int, int]]:
    if not (0 <= a1 <= a2 and 2 * a2 <= r):
        raise ValueError("need 0 <= a1 <= a2 <= r/2")
    return {(a1, a2), (a2, a1), (r - a1, a2), (a2, r - a1),
            (a1, r - a2), (r - a2, a1), (r - a1, r - a2), (r - a2, r - a1)}


def weyl_orbit_basis(r: int, a1: int, a2: int) -> SatakePolynomial:
    return SatakePolynomial(r, {e: Fraction(1) for e in weyl_orbit_set(r, a1, a2)})


def from_orbit_coefficients(r: int, coeffs: Mapping[tuple[int, int], Fraction]) -> SatakePolynomial:
    out = SatakePolynomial(r)
    for (a1, a2), c in coeffs.items():
        out = out + weyl_orbit_basis(r, a1, a2).scale(c)
    return out


# Reference images of T^{(r)}_{0,b}(p) in the orbit basis, as functions of p.
_Q = Fraction
REFERENCE_IMAGES: dict[tuple[int, int], Callable[[int], dict[tuple[int, int], Fraction]]] = {
    (1, 0): lambda p: {(0, 0): _Q(1)},
    (2, 0): lambda p: {(0, 0): _Q(1), (0, 1): _Q(p - 1, p), (1, 1): _Q(2 * (p - 1), p)},
    (2, 1): lambda p: {(0, 1): _Q(1, p), (1, 1): _Q(p * p - 1, p ** 3)},
    (3, 0): lambda p: {(0, 0): _Q(1), (0, 1): _Q(p - 1, p), (1, 1): _Q((p - 1) * (2 * p - 1), p ** 2)},
    (3, 1): lambda p: {(0, 1): _Q(1, p), (1, 1): _Q((p - 1) * (2 * p + 1), p ** 3)},
    (4, 0): lambda p: {(0, 0): _Q(1), (0, 1): _Q(p - 1, p), (0, 2): _Q(p - 1, p),
                       (1, 1): _Q((p - 1) * (2 * p - 1), p ** 2), (1, 2): _Q(2 * (p - 1) ** 2, p ** 2),
                       (2, 2): _Q((p - 1) * (3 * p * p - 2 * p + 1), p ** 3)},
    (4, 1): lambda p: {(0, 1): _Q(1, p), (0, 2): _Q(p - 1, p), (1, 1): _Q(2 * (p - 1), p ** 2),
                       (1, 2): _Q(3 * (p - 1), p ** 2), (2, 2): _Q((p - 1) ** 2 * (3 * p + 1), p ** 4)},
    (4, 2): lambda p: {(0, 2): _Q(1, p ** 2), (1, 1): _Q(p - 1, p ** 3), (1, 2): _Q(p - 1, p ** 3),
                       (2, 2): _Q(2 * (p - 1), p ** 3)},
    (5, 0): lambda p: {(0, 0): _Q(1), (0, 1): _Q(p - 1, p), (0, 2): _Q(p - 1, p),
                       (1, 1): _Q((p - 1) * (2 * p - 1), p ** 2), (1, 2): _Q(2 * (p - 1) ** 2, p ** 2),
                       (2, 2): _Q((p - 1) * (3 * p * p - 3 * p + 1), p ** 3)},
    (5, 1): lambda p: {(0, 1): _Q(1, p), (0, 2): _Q(p - 1, p), (1, 1): _Q(2 * (p - 1), p ** 2),
                       (1, 2): _Q((3 * p - 1) * (p - 1), p ** 3), (2, 2): _Q((p - 1) * (4 * p - 3), p ** 3)},
    (5, 2): lambda p: {(0, 2): _Q(1, p ** 2), (1, 1): _Q(p - 1, p ** 3), (1, 2): _Q(2 * (p - 1), p ** 3),
                       (2, 2): _Q((p - 1) * (3 * p - 1), p ** 3)},
    (6, 0): lambda p: {(0, 0): _Q(1), (0, 1): _Q(p - 1, p), (0, 2): _Q(p - 1, p), (0, 3): _Q(p - 1, p),
                       (1, 1): _Q((p - 1) * (2 * p - 1), p ** 2), (1, 2): _Q(2 * (p - 1) ** 2, p ** 2),
                       (1, 3): _Q(2 * (p - 1) ** 2, p ** 2),
                       (2, 2): _Q((p - 1) * (3 * p * p - 3 * p + 1), p ** 3),
                       (2, 3): _Q((p - 1) ** 2 * (3 * p - 1), p ** 3),
                       (3, 3): _Q(2 * (p - 1) * (2 * p * p - 2 * p + 1), p ** 3)},
    (6, 1): lambda p: {(0, 1): _Q(1, p), (0, 2): _Q(p - 1, p ** 2), (0, 3): _Q(p - 1, p ** 2),
                       (1, 1): _Q(2 * (p - 1), p ** 2), (1, 2): _Q((p - 1) * (3 * p - 1), p ** 3),
                       (1, 3): _Q((p - 1) * (3 * p - 2), p ** 3), (2, 2): _Q(4 * (p - 1) ** 2, p ** 3),
                       (2, 3): _Q((p - 1) * (5 * p * p - 4 * p + 1), p ** 4),
                       (3, 3): _Q((p - 1) ** 2 * (5 * p - 1), p ** 4)},
}


def reference_image(p: int, r: int, b: int) -> SatakePolynomial:
    """Tabulated image of ``T^{(r)}_{0,b}(p)``."""
    return from_orbit_coefficients(r, REFERENCE_IMAGES[(r, b)](p))
