"""The three-term amplifier at a prime and the expansion of its square.

Writing ``lambda(p) = p^(3/2) s`` and ``lambda(p^2) = p^3 q`` the relation for
``T(p^4)`` gives ``lambda(p^4) = p^6 R`` with

    R = (2 + 1/p) s^2 - s^4 + q/p + q s^2 + q^2 - 1,

so the normalised amplifier ``p^(-3/2) (|lambda(p)| + p^(-3/2) |lambda(p^2)|
+ p^(-9/2) |lambda(p^4)|)`` equals ``|s| + |q| + |R|``.  ``q`` comes either
from the closed formula ``x^2 + xy + y^2`` ("stated") or from the Satake
image of ``T(p^2)`` ("satake"); the two differ by the constant ``2 + 1/p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.optimize import minimize

from .algebra import HeckeElement
from .identities import check_coprime, squarefinal_coefficients

MODES = ("stated", "satake")
AMPLIFIER_DEGREES = (1, 2, 4)


def q_value(x, y, p: int, mode: str = "stated"):
    q = x * x + x * y + y * y
    if mode == "satake":
        return q - (2 + 1 / p)
    if mode != "stated":
        raise ValueError(f"unknown mode {mode!r}")
    return q


def r_value(s, q, p: int):
    """``lambda(p^4) / p^6`` through the ``T(p^4)`` relation."""
    return (2 + 1 / p) * s * s - s ** 4 + q / p + q * s * s + q * q - 1


def objective(x, y, p: int, mode: str = "stated"):
    s = x + y
    q = q_value(x, y, p, mode)
    return np.abs(s) + np.abs(q) + np.abs(r_value(s, q, p))


# Parameter families.  "real": x, y real in [-w, w].  "conjugate": x = u + iv,
# y = u - iv, which keeps both eigenvalues real; u in [-w/2, w/2], v in [0, w].

def _family_xy(family: str, a, b):
    if family == "real":
        return a, b
    if family == "conjugate":
        return a + 1j * b, a - 1j * b
    raise ValueError(f"unknown family {family!r}")


def _family_box(family: str, width: float):
    if family == "real":
        return (-width, width), (-width, width)
    return (-width / 2, width / 2), (0.0, width)


def _real_objective(family, p, mode):
    def f(v):
        x, y = _family_xy(family, v[0], v[1])
        return float(np.real(objective(x, y, p, mode)))
    return f


@dataclass
class ScanResult:
    p: int
    mode: str
    family: str
    grid_step: float
    grid_min: float
    grid_argmin: tuple[float, float]
    polished_min: float
    polished_argmin: tuple[float, float]

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def scan_family(p: int, family: str, grid_step: float, mode: str = "stated",
                width: float = 3.0, polish_starts: int = 8) -> ScanResult:
    (a0, a1), (b0, b1) = _family_box(family, width)
    na = round((a1 - a0) / grid_step) + 1
    nb = round((b1 - b0) / grid_step) + 1
    A = np.linspace(a0, a1, na)
    B = np.linspace(b0, b1, nb)
    AA, BB = np.meshgrid(A, B, indexing="ij")
    x, y = _family_xy(family, AA, BB)
    vals = np.real(objective(x, y, p, mode))
    flat = np.argsort(vals, axis=None)[:polish_starts]
    i, j = np.unravel_index(flat[0], vals.shape)
    grid_min, grid_arg = float(vals[i, j]), (float(A[i]), float(B[j]))
    f = _real_objective(family, p, mode)
    best, best_arg = grid_min, grid_arg
    for k in flat:
        i, j = np.unravel_index(k, vals.shape)
        res = minimize(f, [A[i], B[j]], method="Nelder-Mead",
                       bounds=[(a0, a1), (b0, b1)],
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best:
            best, best_arg = float(res.fun), (float(res.x[0]), float(res.x[1]))
    return ScanResult(p, mode, family, grid_step, grid_min, grid_arg, best, best_arg)


@dataclass
class AmplifierScanReport:
    results: list[ScanResult]
    refined: list[ScanResult] = field(default_factory=list)

    def minimum(self, p: int, mode: str = "stated") -> float:
        return min(r.polished_min for r in self.results if r.p == p and r.mode == mode)

    def refined_minimum(self, p: int, mode: str = "stated") -> float:
        return min(r.polished_min for r in self.refined if r.p == p and r.mode == mode)

    def stability(self, p: int, mode: str = "stated") -> float:
        return abs(self.minimum(p, mode) - self.refined_minimum(p, mode))

    def as_dict(self) -> dict:
        out = {}
        for mode in sorted({r.mode for r in self.results}):
            for p in sorted({r.p for r in self.results}):
                row = {"min": self.minimum(p, mode)}
                if self.refined:
                    row["refined_min"] = self.refined_minimum(p, mode)
                    row["stability"] = self.stability(p, mode)
                row["families"] = [r.as_dict() for r in self.results if r.p == p and r.mode == mode]
                out[f"{mode}/p={p}"] = row
        return out


def amplifier_scan(p_list, grid_step: float = 0.01, modes=MODES, width: float = 3.0,
                   refine: bool = True) -> AmplifierScanReport:
    """Minimum of the normalised amplifier over both parameter families, per prime."""
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    runs = [(p, fam, mode) for p in p_list for mode in modes for fam in ("real", "conjugate")]
    results = [scan_family(p, fam, grid_step, mode, width) for p, fam, mode in runs]
    refined = [scan_family(p, fam, grid_step / 2, mode, width) for p, fam, mode in runs] if refine else []
    return AmplifierScanReport(results, refined)


# ---------------------------------------------------------------------------
# expansion of the squared amplifier over two primes
# ---------------------------------------------------------------------------

def xi_coefficients(l: int) -> dict[tuple[int, int], Fraction]:
    """``xi_{b,s}(l) = sum_r l^(-3(r-1)) c_{r,b,s}(l)`` over ``r = 1, 2, 4``."""
    out: dict[tuple[int, int], Fraction] = {}
    for r in AMPLIFIER_DEGREES:
        for key, c in squarefinal_coefficients(l, r).items():
            out[key] = out.get(key, Fraction(0)) + c / Fraction(l) ** (3 * (r - 1))
    return dict(sorted(out.items()))


def _local_square(l: int, r: int) -> HeckeElement:
    return HeckeElement.T(l, r) * HeckeElement.T(l, r)


@dataclass
class ExpansionReport:
    primes: tuple[int, int]
    signs: tuple[int, ...]
    diagonal: dict[int, dict[tuple[int, int], Fraction]]
    cross: dict[int, float]
    bound_C: float
    shape_ok: bool
    coprime_ok: bool

    def as_dict(self) -> dict:
        return {"primes": list(self.primes), "signs": list(self.signs),
                "xi": {str(l): {f"b={b},s={s}": str(v) for (b, s), v in d.items()}
                       for l, d in self.diagonal.items()},
                "cross": {f"r={r}": v for r, v in self.cross.items()},
                "C": self.bound_C, "shape_ok": self.shape_ok, "coprime_ok": self.coprime_ok}


def amplifier_expand(primes=(2, 3), signs=None) -> ExpansionReport:
    """Expand the squared amplifier for two primes.

    ``signs`` holds ``x(l^r)`` for ``(l, r)`` in ``primes x (1, 2, 4)`` order.
    Diagonal terms come from the exact decompositions of ``T(l^r)^2``; after
    cancelling scalar cosets each is ``sum xi_{b,s}(l) T^{(2s)}_{0,b}(l)``.
    The cross term for ``l1 != l2`` is ``2 x(l1^r) x(l2^r) (l1 l2)^(-3(r-1)/2)
    T(l1^r) T(l2^r)`` and ``T(l1^r) T(l2^r) = T((l1 l2)^r)``.
    """
    l1, l2 = primes
    if l1 == l2:
        raise ValueError("need two distinct primes")
    keys = list(product(primes, AMPLIFIER_DEGREES))
    signs = tuple(signs) if signs is not None else (1,) * len(keys)
    if len(signs) != len(keys) or any(s not in (1, -1) for s in signs):
        raise ValueError(f"need {len(keys)} signs in {{1, -1}}")
    sign = dict(zip(keys, signs))

    diagonal = {}
    shape_ok = True
    for l in primes:
        acc: dict[tuple[int, int], Fraction] = {}
        for r in AMPLIFIER_DEGREES:
            weight = Fraction(sign[(l, r)] ** 2) / Fraction(l) ** (3 * (r - 1))
            for (R, a, b), c in _local_square(l, r).terms.items():
                s, bb = r - a, b - a
                shape_ok &= R == 2 * r and 0 <= bb <= s <= 4
                acc[(bb, s)] = acc.get((bb, s), Fraction(0)) + weight * c
        diagonal[l] = dict(sorted(acc.items()))
    cross = {r: 2 * sign[(l1, r)] * sign[(l2, r)] * float(l1 * l2) ** (-1.5 * (r - 1))
             for r in AMPLIFIER_DEGREES}
    C = max(abs(float(v)) / l ** (3 - 2 * s) for l, d in diagonal.items() for (b, s), v in d.items())
    coprime_ok = check_coprime(min(primes), max(primes)).passed
    return ExpansionReport((l1, l2), signs, diagonal, cross, C, shape_ok, coprime_ok)
