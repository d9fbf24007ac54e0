"""Binary quadratic polynomials, Dirichlet approximation and near-zero counts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import numpy as np

SLOP = 1e-9


def dirichlet_approx(xi, T: float) -> tuple[int, tuple[int, ...]]:
    """Smallest ``q <= T`` with ``|q xi_j - p_j| < T^(-1/n)`` for all ``j``.

    If no ``q`` meets the strict inequality the smallest ``q`` meeting it
    with equality allowed is returned (one always exists).  The search is
    exhaustive over ``q`` in vectorised blocks; exact rationals decide.
    """
    xi = [float(x) for x in xi]
    n = len(xi)
    if n < 1:
        raise ValueError("need at least one number")
    if not T > 1:
        raise ValueError("T must exceed 1")
    hit = _dirichlet_search(xi, T, strict=True)
    if hit is None:
        hit = _dirichlet_search(xi, T, strict=False)
    if hit is None:
        raise ArithmeticError("no denominator found")
    return hit


def _dirichlet_search(xi, T, strict):
    n = len(xi)
    bound = T ** (-1.0 / n)
    arr = np.asarray(xi)
    qmax = math.floor(T)
    block = 1 << 16
    for start in range(1, qmax + 1, block):
        q = np.arange(start, min(qmax, start + block - 1) + 1, dtype=float)
        prod = np.outer(q, arr)
        err = np.abs(prod - np.rint(prod)).max(axis=1)
        for i in np.flatnonzero(err <= bound * (1 + 1e-9) + 1e-12):
            qi = int(q[i])
            ps = tuple(round(qi * x) for x in xi)
            if _dirichlet_exact(xi, qi, ps, T, n, strict):
                return qi, ps
    return None


def _dirichlet_exact(xi, q, ps, T, n, strict) -> bool:
    # |q xi - p|^n against 1/T, in exact rational arithmetic
    lim = 1 / Fraction(T)
    if strict:
        return all(abs(q * Fraction(x) - p) ** n < lim for x, p in zip(xi, ps))
    return all(abs(q * Fraction(x) - p) ** n <= lim for x, p in zip(xi, ps))


@dataclass(frozen=True)
class QuadPoly2:
    """``P(x, y) = a x^2 + b x y + c y^2 + d x + e y + f``."""

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    @property
    def coefficients(self) -> tuple:
        return (self.a, self.b, self.c, self.d, self.e, self.f)

    @property
    def is_integral(self) -> bool:
        return all(isinstance(v, Integral) for v in self.coefficients)

    @property
    def discriminant(self):
        return self.b * self.b - 4 * self.a * self.c

    @property
    def height(self):
        return max(abs(v) for v in self.coefficients)

    @property
    def positive_definite(self) -> bool:
        return self.a > 0 and self.discriminant < 0

    def require_definite(self) -> None:
        if not self.positive_definite:
            raise ValueError(f"quadratic part of {self} is not positive definite")

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f

    def shift(self, r) -> QuadPoly2:
        return QuadPoly2(self.a, self.b, self.c, self.d, self.e, self.f - r)

    def centre(self) -> tuple[float, float]:
        """``(-xi, -eta)``, the minimum of ``P``."""
        D = self.discriminant
        xi = (self.b * self.e - 2 * self.c * self.d) / D
        eta = (self.b * self.d - 2 * self.a * self.e) / D
        return -xi, -eta

    def minimum(self) -> float:
        x0, y0 = self.centre()
        return float(self(x0, y0))

    def box(self, upper: float) -> tuple[int, int, int, int]:
        """Integer ranges for ``x, y`` containing ``{P <= upper}`` (completed square)."""
        self.require_definite()
        a, D = float(self.a), float(self.discriminant)
        x0, y0 = self.centre()
        room = max(upper - self.minimum(), 0.0)
        ry = math.sqrt(4 * a * room / -D) * (1 + SLOP) + SLOP
        # same bound for x by symmetry of the form
        rx = math.sqrt(4 * float(self.c) * room / -D) * (1 + SLOP) + SLOP
        return (math.ceil(x0 - rx), math.floor(x0 + rx), math.ceil(y0 - ry), math.floor(y0 + ry))

    def points_in_band(self, lo: float, hi: float, strict: bool = False) -> list[tuple[int, int]]:
        """All integer points with ``lo <= P <= hi`` (``lo < P < hi`` if strict).

        Rows in ``y`` come from the completed square; each row is an interval
        in ``x``.  Integral polynomials are tested exactly.
        """
        self.require_definite()
        if hi < lo:
            return []
        a, b = float(self.a), float(self.b)
        D = float(self.discriminant)
        x0, y0 = self.centre()
        pmin = self.minimum()
        room = hi - pmin
        if room < -SLOP * (1 + abs(hi)):
            return []
        room = max(room, 0.0)
        ry = math.sqrt(4 * a * room / -D) * (1 + SLOP) + SLOP
        out = []
        exact = self.is_integral and float(lo).is_integer() and float(hi).is_integer()
        for y in range(math.ceil(y0 - ry), math.floor(y0 + ry) + 1):
            # (2a(x - x0) + b(y - y0))^2 <= 4a room + D (y - y0)^2
            w = 4 * a * room + D * (y - y0) ** 2
            if w < -SLOP * (1 + 4 * a * room):
                continue
            half = math.sqrt(max(w, 0.0)) / (2 * a) * (1 + SLOP) + SLOP
            mid = x0 - b * (y - y0) / (2 * a)
            xs = np.arange(math.ceil(mid - half), math.floor(mid + half) + 1)
            if not len(xs):
                continue
            if exact:
                vals = [self(int(x), y) for x in xs]
                keep = [int(x) for x, v in zip(xs, vals) if (lo < v < hi if strict else lo <= v <= hi)]
            else:
                v = self(xs.astype(float), float(y))
                m = (v > lo) & (v < hi) if strict else (v >= lo) & (v <= hi)
                keep = [int(x) for x in xs[m]]
            out.extend((x, y) for x in keep)
        return out


def solve_quadratic_integer(P: QuadPoly2) -> list[tuple[int, int]]:
    """Integer zeros of an integral, positive definite ``P``."""
    if not P.is_integral:
        raise TypeError("coefficients must be integers")
    P.require_definite()
    return P.points_in_band(0, 0)


@dataclass
class NearZeroCount:
    count: int
    pipeline_bound: int
    q: int
    T: float
    R: float
    points: list[tuple[int, int]]

    def as_dict(self) -> dict:
        return {"count": self.count, "pipeline_bound": self.pipeline_bound, "q": self.q, "T": self.T, "R": self.R}


def count_near_zero(P: QuadPoly2, delta: float, D: float = 1e-6, T_max: float = 2e4,
                    box_budget: int = 10 ** 7) -> NearZeroCount:
    """Exact ``#{|P| < delta}`` and the count produced by the rational-approximation route.

    The route: approximate the six coefficients with a common denominator
    ``q <= T``, so that ``|q P - P~| <= T^(-1/6) * sum |monomials|`` on the
    box; every point with ``|P| < delta`` has ``|P~| <= R``, and the bound is
    the total number of box points on the level sets ``P~ = r``, ``|r| <= R``.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    P.require_definite()
    if abs(P.discriminant) < D:
        raise ValueError(f"|discriminant| below {D}")
    points = P.points_in_band(-delta, delta, strict=True)
    x0, x1, y0, y1 = P.box(delta)
    if (x1 - x0 + 1) * (y1 - y0 + 1) > box_budget:
        raise MemoryError("search box exceeds the enumeration budget")
    Z = delta + 1 + float(P.height)
    T = float(min(T_max, 1 + min(Z ** (12 / 7) * delta ** (-6 / 7), Z ** 12)))
    T = max(T, 2.0)
    q, ps = dirichlet_approx(P.coefficients, T)
    Pt = QuadPoly2(*ps)
    X = max(abs(x0), abs(x1), 1)
    Y = max(abs(y0), abs(y1), 1)
    monomials = (X * X, X * Y, Y * Y, X, Y, 1)
    err = max(abs(q * float(c) - p) for c, p in zip(P.coefficients, ps))
    R = q * delta + err * sum(monomials)
    xs = np.arange(x0, x1 + 1)
    ys = np.arange(y0, y1 + 1)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    vals = Pt(XX.astype(object), YY.astype(object)) if Pt.height > 2 ** 20 else Pt(XX, YY)
    levels = np.abs(np.asarray(vals, dtype=float)) <= R
    bound = int(np.count_nonzero(levels))
    return NearZeroCount(len(points), bound, q, T, float(R), points)


def divisor_sigma(n: int) -> int:
    return sum(d for d in range(1, n + 1) if n % d == 0)


def four_square_count(m: int) -> int:
    """``r_4(m) = 8 sum_{d | m, 4 !| d} d``."""
    return 8 * sum(d for d in range(1, m + 1) if m % d == 0 and d % 4)
