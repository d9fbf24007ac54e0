"""Exact checks of Hecke relations for T(p^r) and the double cosets T^{(r)}_{a,b}.

All statements are homogeneous in the grading: a bare power ``p^k`` that
multiplies a term of lower degree is read as ``p^k`` times the matching power
of the scalar double coset ``Z = T^{(2)}_{1,1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache
from itertools import pairwise, product
from math import prod

import numpy as np

from ..symplectic import J, hnf_batch, snf_exponents
from .algebra import HeckeElement, _satake_of_label, hecke_multiply, satake
from .cosets import (
    BudgetExceeded,
    block_reduce,
    hnf_filter_cosets,
    left_cosets,
    similitude_from_hnf,
)
from .satake import REFERENCE_IMAGES, SatakePolynomial, reference_image


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)


def _T(p, r):
    return HeckeElement.T(p, r)


def _Z(p, a=1):
    return HeckeElement.scalar(p, a)


def _lab(p, r, a, b, c=1):
    return HeckeElement(p, {(r, a, b): Fraction(c)})


def _fmt(e: HeckeElement) -> dict[str, str]:
    return {f"{r},{a},{b}": str(c) for (r, a, b), c in e.terms.items()}


def _compare(name: str, lhs: HeckeElement, rhs: HeckeElement) -> CheckResult:
    diff = lhs - rhs
    return CheckResult(name, not diff, {"lhs": _fmt(lhs), "rhs": _fmt(rhs), "difference": _fmt(diff)})


def _dominated(name: str, small: HeckeElement, big: HeckeElement) -> CheckResult:
    bad = small.violations(big)
    return CheckResult(name, not bad, {
        "lhs": _fmt(small), "rhs": _fmt(big),
        "violations": [{"label": list(k), "lhs": str(x), "rhs": str(y)} for k, x, y in bad]})


# ---------------------------------------------------------------------------
# closed formulas
# ---------------------------------------------------------------------------

def square_formula(p: int) -> HeckeElement:
    return HeckeElement(p, {(2, 0, 0): 1, (2, 0, 1): p + 1, (2, 1, 1): p ** 3 + p ** 2 + p + 1})


def kodama_formula(p: int, r: int) -> HeckeElement:
    """Closed form of ``T(p^r) T(p^2)`` for ``r >= 2``."""
    if r < 2:
        raise ValueError("formula stated for r >= 2")
    R = r + 2
    c3 = p ** 2 + p + 1
    c4 = p ** 3 + p ** 2 + p + 1
    c5 = p ** 4 + 2 * p ** 3 + p ** 2 + p + 1
    c6 = p ** 6 + p ** 5 + 2 * p ** 4 + 2 * p ** 3 + p ** 2 + p + 1
    terms: dict = {}

    def add(label, c):
        terms[label] = terms.get(label, 0) + c

    add((R, 0, 0), 1)
    add((R, 0, 1), p + 1)
    for b in range(2, R // 2 + 1):
        add((R, 0, b), c3)
    add((R, 1, 1), c4)
    for b in range(1, r // 2 + 1):
        add((R, 1, b + 1), c5)
    for a in range(1, r // 2 + 1):
        for b in range((r - 2 * a) // 2 + 1):
            add((R, a + 1, a + 1 + b), c6)
    return HeckeElement(p, terms)


def t4_formula(p: int) -> HeckeElement:
    T1, T2, Z = _T(p, 1), _T(p, 2), _Z(p)
    return ((Z * T1 * T1).scale(p ** 2 + 2 * p ** 3) - T1 ** 4 + (Z * T2).scale(p ** 2)
            + T2 * T1 * T1 + T2 * T2 - (Z * Z).scale(p ** 6))


def series_denominator(p: int) -> list[HeckeElement]:
    """Coefficients of ``X^0..X^4`` in the denominator of the generating series."""
    T1, T2, Z = _T(p, 1), _T(p, 2), _Z(p)
    return [HeckeElement.unit(p), -T1, T1 * T1 - T2 - Z.scale(p ** 2), -(Z * T1).scale(p ** 3),
            (Z * Z).scale(p ** 6)]


def series_numerator(p: int) -> list[HeckeElement]:
    zero = HeckeElement(p)
    return [HeckeElement.unit(p), zero, -_Z(p).scale(p ** 2), zero, zero]


def kodamanew_middle(p: int, r: int) -> HeckeElement:
    terms: dict = {}
    R = 2 * r + 2
    for b in range(r + 2):
        terms[(R, 0, b)] = terms.get((R, 0, b), 0) + 3 * p ** 2
    for b in range(r + 1):
        terms[(R, 1, b + 1)] = terms.get((R, 1, b + 1), 0) + 6 * p ** 4
    for a in range(1, r + 1):
        for b in range(r - a + 1):
            terms[(R, a + 1, a + 1 + b)] = terms.get((R, a + 1, a + 1 + b), 0) + 9 * p ** 6
    return HeckeElement(p, terms)


def kodamanew_bound(p: int, r: int) -> HeckeElement:
    terms: dict = {}
    R = 2 * r + 2
    for s in range(r + 2):
        for b in range(s + 1):
            lab = (R, r + 1 - s, r + 1 - s + b)
            terms[lab] = terms.get(lab, 0) + 10 * p ** (2 * r + 4 - 2 * s)
    return HeckeElement(p, terms)


def square4_chain(p: int) -> list[tuple[str, HeckeElement]]:
    T2, T4 = _T(p, 2), _T(p, 4)
    step1 = T4 * T2 * T2
    step2 = HeckeElement(p)
    step3 = HeckeElement(p)
    for s in range(4):
        inner = HeckeElement(p, {(2 * s + 2 * (3 - s), 3 - s, 3 - s + b): 1 for b in range(s + 1)})
        step2 = step2 + (inner * T2).scale(10 * p ** (8 - 2 * s))
        step3 = step3 + (_T(p, 2 * s) * _Z(p, 3 - s) * T2).scale(10 * p ** (8 - 2 * s))
    step4_terms: dict = {}
    for s in range(4):
        for tau in range(s + 2):
            for b in range(tau + 1):
                lab = (8, 4 - tau, 4 - tau + b)
                step4_terms[lab] = step4_terms.get(lab, 0) + 100 * p ** (12 - 2 * tau)
    step5_terms = {(8, 4 - tau, 4 - tau + b): 400 * p ** (12 - 2 * tau)
                   for tau in range(5) for b in range(tau + 1)}
    return [("T(p^4)^2", T4 * T4), ("T(p^4)T(p^2)^2", step1), ("sum over s, b", step2),
            ("sum over s of T(p^2s)", step3), ("sum over s, tau", HeckeElement(p, step4_terms)),
            ("400-bound", HeckeElement(p, step5_terms))]


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def check_square(p: int) -> CheckResult:
    T1 = _T(p, 1)
    return _compare(f"T(p)^2, p={p}", T1 * T1, square_formula(p))


def check_kodama(p: int, r: int = 2) -> CheckResult:
    return _compare(f"T(p^{r})T(p^2), p={p}", _T(p, r) * _T(p, 2), kodama_formula(p, r))


def check_t4(p: int) -> CheckResult:
    return _compare(f"T(p^4) relation, p={p}", _T(p, 4), t4_formula(p))


def check_series(p: int, rmax: int) -> CheckResult:
    den, num = series_denominator(p), series_numerator(p)
    bad = {}
    for n in range(rmax + 1):
        acc = HeckeElement(p)
        for k in range(min(n, 4) + 1):
            acc = acc + _T(p, n - k) * den[k]
        target = num[n] if n < len(num) else HeckeElement(p)
        if acc != target:
            bad[n] = _fmt(acc - target)
    return CheckResult(f"generating series to X^{rmax}, p={p}", not bad, {"failures": bad})


def check_kodamanew(p: int, r: int) -> list[CheckResult]:
    lhs = _T(p, 2 * r + 2)
    prod_ = _T(p, 2 * r) * _T(p, 2)
    middle, bound = kodamanew_middle(p, r), kodamanew_bound(p, r)
    return [_dominated(f"T(p^{2*r+2}) <= T(p^{2*r})T(p^2), p={p}", lhs, prod_),
            _dominated(f"T(p^{2*r})T(p^2) <= 3/6/9 form, p={p}", prod_, middle),
            _dominated(f"3/6/9 form <= 10-bound, r={r}, p={p}", middle, bound)]


def check_square4(p: int) -> list[CheckResult]:
    chain = square4_chain(p)
    return [_dominated(f"{a} <= {b}, p={p}", x, y) for (a, x), (b, y) in pairwise(chain)]


def squarefinal_coefficients(p: int, r: int) -> dict[tuple[int, int], Fraction]:
    """``c_{r,b,s}`` with ``T(p^r)^2 = sum c * T^{(2r)}_{r-s, r-s+b}``."""
    sq = _T(p, r) * _T(p, r)
    out = {}
    for (R, a, b2), c in sq.terms.items():
        s = r - a
        out[(b2 - a, s)] = c
    return dict(sorted(out.items()))


def check_squarefinal(p: int, r: int, C: float = 400.0) -> CheckResult:
    coeffs = squarefinal_coefficients(p, r)
    ratios = {f"b={b},s={s}": float(c) / p ** (3 * r - 2 * s) for (b, s), c in coeffs.items()}
    worst = max(ratios.values())
    return CheckResult(f"c_(r,b,s) <= C p^(3r-2s), r={r}, p={p}", worst <= C,
                       {"C_observed": worst, "C_allowed": C, "ratios": ratios,
                        "coefficients": {f"b={b},s={s}": str(c) for (b, s), c in coeffs.items()}})


def hnf_filter_general(m: int, budget: int = 5_000_000) -> np.ndarray:
    """Hermite forms with ``H J H^T = 0 mod m`` and ``det H = m^2`` (any ``m``)."""
    divs = [d for d in range(1, m * m + 1) if (m * m) % d == 0]
    found, total = [], 0
    for diag in product(divs, repeat=3):
        last, rem = divmod(m * m, prod(diag))
        if rem or prod(diag) * last != m * m:
            continue
        piv = list(diag) + [last]
        ranges = [range(piv[j]) for i in range(4) for j in range(i + 1, 4)]
        n = prod(len(x) for x in ranges)
        total += n
        if total > budget:
            raise BudgetExceeded("HNF filter budget exceeded")
        grid = np.array(list(product(*ranges)), dtype=np.int64).reshape(n, 6)
        H = np.zeros((n, 4, 4), dtype=np.int64)
        H[:, range(4), range(4)] = piv
        k = 0
        for i in range(4):
            for j in range(i + 1, 4):
                H[:, i, j] = grid[:, k]
                k += 1
        G = H @ J @ np.transpose(H, (0, 2, 1))
        found.append(H[np.all(G.reshape(n, -1) % m == 0, axis=1)])
    return np.concatenate(found)


def check_coprime(p: int, q: int) -> CheckResult:
    """``T(p) T(q) = T(pq)``: products of coset representatives hit every coset of ``S(pq)`` once."""
    A, B = left_cosets(p, 1).reps, left_cosets(q, 1).reps
    keys = hnf_batch((A[:, None] @ B[None, :]).reshape(-1, 4, 4)).reshape(-1, 16)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    oracle = np.unique(hnf_filter_general(p * q).reshape(-1, 16), axis=0)
    same = len(uniq) == len(oracle) and bool(np.all(uniq == oracle))
    return CheckResult(f"T({p})T({q}) = T({p * q})", same and bool(np.all(counts == 1)),
                       {"products": len(keys), "distinct": len(uniq), "oracle": len(oracle)})


def verify_identity_suite(p: int, rmax: int) -> list[CheckResult]:
    """Every applicable check for one prime with coset tables up to degree ``rmax``."""
    out = [CheckResult("T(1) is the unit", _T(p, 0) == HeckeElement.unit(p))]
    if rmax >= 1:
        out.append(check_square(p))
    if rmax >= 2:
        out.append(check_kodama(p, 2))
        out.extend(check_kodamanew(p, 0))
        out.append(check_series(p, min(rmax, 4)))
    if rmax >= 4:
        out.append(check_t4(p))
        out.extend(check_kodamanew(p, 1))
        out.extend(check_kodamanew(p, 2))
        for r in (3, 4):
            out.append(check_kodama(p, r))
        out.extend(check_square4(p))
        for r in (1, 2, 4):
            out.append(check_squarefinal(p, r))
    if p != 2:
        out.append(check_coprime(2, p))
    return out


# ---------------------------------------------------------------------------
# Satake images: direct and recursive
# ---------------------------------------------------------------------------

def image_of(p: int, r: int, b: int) -> SatakePolynomial:
    """Image of ``T^{(r)}_{0,b}(p)`` from the coset table of degree ``r``."""
    return _satake_of_label(p, r, 0, b)


def image_by_recursion(p: int, r: int, b: int) -> SatakePolynomial:
    """Image of ``T^{(r)}_{0,b}`` from Hecke products and images of lower degree only.

    Every product ``T^{(i)}_{0,b1} T^{(r-i)}_{0,b2}`` gives one linear equation
    in the unknown degree-``r`` images (labels with a scalar part are known from
    lower degree).  The overdetermined system is solved exactly and every
    equation is checked afterwards.
    """
    return _recursive_images(p, r)[b]


def oracle_images(p: int, r: int) -> dict[tuple[int, int], SatakePolynomial]:
    """Images built without the parabolic enumeration.

    Cosets come from the Hermite-form filter, each is turned into a similitude
    by a symplectic basis of its alternating form and then block reduced.
    """
    if r == 0:
        return {(0, 0): SatakePolynomial.one()}
    groups: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for H in hnf_filter_cosets(p, r):
        M = similitude_from_hnf(H, p ** r)
        _, _, exps = block_reduce(M, p, r)
        groups.setdefault(snf_exponents(M, p, r), []).append(exps)
    return {key: SatakePolynomial.from_cosets(p, r, np.array(v, dtype=np.int64))
            for key, v in sorted(groups.items())}


def _scalar_image(p: int, a: int) -> SatakePolynomial:
    return SatakePolynomial(2 * a, {(a, a): Fraction(1, p ** (3 * a))})


@cache
def _recursive_images(p: int, r: int) -> dict[int, SatakePolynomial]:
    if r <= 2:
        return {b: img for (a, b), img in oracle_images(p, r).items() if a == 0}
    unknowns = list(range(r // 2 + 1))
    rows: list[tuple[dict[int, Fraction], SatakePolynomial]] = []
    for i in range(1, r // 2 + 1):
        for b1 in range(i // 2 + 1):
            for b2 in range((r - i) // 2 + 1):
                prod_ = _lab(p, i, 0, b1) * _lab(p, r - i, 0, b2)
                rhs = _recursive_images(p, i)[b1] * _recursive_images(p, r - i)[b2]
                coeffs: dict[int, Fraction] = {}
                for (R, a, bb), c in prod_.terms.items():
                    if a == 0:
                        coeffs[bb] = c
                    else:
                        low = _recursive_images(p, R - 2 * a)[bb - a] * _scalar_image(p, a)
                        rhs = rhs - low.scale(c)
                rows.append((coeffs, rhs))
    # Gaussian elimination with polynomial right-hand sides
    work = [(dict(c), v) for c, v in rows]
    pivots: dict[int, tuple[dict[int, Fraction], SatakePolynomial]] = {}
    for u in unknowns:
        idx = next((k for k, (c, _) in enumerate(work) if c.get(u, 0) != 0), None)
        if idx is None:
            raise ArithmeticError(f"degree {r}: image of (0, {u}) is not determined by products")
        pc, pv = work.pop(idx)
        inv = 1 / Fraction(pc[u])
        pc = {k: v * inv for k, v in pc.items()}
        pv = pv.scale(inv)
        new = []
        for c, v in work:
            f = c.get(u, 0)
            if f:
                c = {k: c.get(k, 0) - f * pc.get(k, 0) for k in set(c) | set(pc)}
                c = {k: x for k, x in c.items() if x}
                v = v - pv.scale(f)
            new.append((c, v))
        work = new
        pivots[u] = (pc, pv)
    solution: dict[int, SatakePolynomial] = {}
    for u in reversed(unknowns):
        pc, pv = pivots[u]
        acc = pv
        for k, x in pc.items():
            if k != u:
                acc = acc - solution[k].scale(x)
        solution[u] = acc
    for c, v in rows:
        lhs = SatakePolynomial(r)
        for k, x in c.items():
            lhs = lhs + solution[k].scale(x)
        if lhs != v:
            raise ArithmeticError(f"degree {r}: product equations are inconsistent")
    return solution


@dataclass
class TableRowReport:
    p: int
    r: int
    b: int
    computed: SatakePolynomial
    reference: SatakePolynomial
    recursive: SatakePolynomial | None

    @property
    def matches_reference(self) -> bool:
        return self.computed == self.reference

    @property
    def matches_recursion(self) -> bool:
        return self.recursive is None or self.computed == self.recursive

    def mismatches(self) -> dict[str, tuple[str, str]]:
        c = self.computed.orbit_coefficients()
        ref = self.reference.orbit_coefficients()
        keys = sorted(set(c) | set(ref))
        return {f"{k}": (str(c.get(k, 0)), str(ref.get(k, 0))) for k in keys if c.get(k, 0) != ref.get(k, 0)}


def table_rows(p: int, rmax: int, rows: list[tuple[int, int]] | None = None,
               recursion: bool = True) -> list[TableRowReport]:
    if rows is None:
        rows = [(r, b) for (r, b) in REFERENCE_IMAGES if r <= rmax]
    out = []
    for r, b in rows:
        rec = image_by_recursion(p, r, b) if recursion else None
        out.append(TableRowReport(p, r, b, image_of(p, r, b), reference_image(p, r, b), rec))
    return out


def check_homomorphism(p: int, pairs: list[tuple[HeckeElement, HeckeElement]]) -> CheckResult:
    bad = []
    for T1, T2 in pairs:
        if satake(hecke_multiply(T1, T2)) != satake(T1) * satake(T2):
            bad.append((repr(T1), repr(T2)))
    return CheckResult(f"Satake homomorphism on {len(pairs)} pairs, p={p}", not bad, {"failures": bad})


def random_pairs(p: int, n: int, rmax: int, rng: np.random.Generator) -> list[tuple[HeckeElement, HeckeElement]]:
    """Random pairs of small integer combinations whose product stays within degree ``rmax``."""
    pairs = []
    for _ in range(n):
        r1 = int(rng.integers(1, rmax))
        r2 = int(rng.integers(1, rmax - r1 + 1))
        pairs.append((_random_element(p, r1, rng), _random_element(p, r2, rng)))
    return pairs


def _random_element(p: int, r: int, rng: np.random.Generator) -> HeckeElement:
    terms = {}
    for a in range(r // 2 + 1):
        for b in range(a, r // 2 + 1):
            c = int(rng.integers(-3, 4))
            if c:
                terms[(r, a, b)] = c
    if not terms:
        terms[(r, 0, 0)] = 1
    return HeckeElement(p, terms)
