"""Exact arithmetic in the p-part of the Hecke algebra of Sp4(Z).

Elements are graded: the label ``(r, a, b)`` stands for
``T^{(r)}_{a,b}(p)``, and the scalar double coset ``(2a, a, a)`` is kept as its
own basis element rather than identified with the unit, so every identity is
homogeneous.  ``T^{(r)}_{a,b} = T^{(r-2a)}_{0,b-a} * T^{(2a)}_{a,a}`` holds on
the nose, which lets all products be reduced to primitive labels ``(r, 0, b)``.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cache

import numpy as np

from ..symplectic import J, snf_exponents_batch
from .cosets import (
    DEFAULT_CANDIDATE_BUDGET,
    CosetTable,
    DoubleCosetLabel,
    _check_prime,
    hnf_batch,
    labels_of_degree,
    left_cosets,
)
from .satake import SatakePolynomial

DEFAULT_PRODUCT_BUDGET = 50_000_000
Label = tuple[int, int, int]


class MultiplicityError(ArithmeticError):
    """A coset occurred with different multiplicities inside one double coset."""


@dataclass
class HeckeElement:
    """Finite rational combination of graded double-coset labels ``(r, a, b)``."""

    p: int
    terms: dict[Label, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (r, a, b), c in self.terms.items():
            DoubleCosetLabel(self.p, r, a, b)
            c = Fraction(c)
            if c:
                clean[(r, a, b)] = c
        self.terms = dict(sorted(clean.items()))

    # constructors ---------------------------------------------------------
    @classmethod
    def basis(cls, p: int, r: int, a: int, b: int) -> HeckeElement:
        return cls(p, {(r, a, b): Fraction(1)})

    @classmethod
    def unit(cls, p: int) -> HeckeElement:
        return cls.basis(p, 0, 0, 0)

    @classmethod
    def scalar(cls, p: int, a: int = 1) -> HeckeElement:
        """The scalar double coset ``p^a I`` in degree ``2a``."""
        return cls.basis(p, 2 * a, a, a)

    @classmethod
    def T(cls, p: int, r: int) -> HeckeElement:
        """``T(p^r)``, the sum of all double cosets of degree ``r``."""
        return cls(p, {(r, lab.a, lab.b): Fraction(1) for lab in labels_of_degree(p, r)})

    # linear structure -----------------------------------------------------
    def _check(self, other: HeckeElement):
        if other.p != self.p:
            raise ValueError("Hecke elements for different primes")

    def __add__(self, other: HeckeElement) -> HeckeElement:
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return HeckeElement(self.p, out)

    def __neg__(self) -> HeckeElement:
        return HeckeElement(self.p, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: HeckeElement) -> HeckeElement:
        return self + (-other)

    def scale(self, c) -> HeckeElement:
        return HeckeElement(self.p, {k: v * Fraction(c) for k, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, HeckeElement):
            return hecke_multiply(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def __pow__(self, n: int) -> HeckeElement:
        out = HeckeElement.unit(self.p)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, HeckeElement):
            return NotImplemented
        return self.p == other.p and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def coefficient(self, r: int, a: int, b: int) -> Fraction:
        return self.terms.get((r, a, b), Fraction(0))

    def degrees(self) -> set[int]:
        return {r for r, _, _ in self.terms}

    def homogeneous(self, r: int) -> HeckeElement:
        return HeckeElement(self.p, {k: v for k, v in self.terms.items() if k[0] == r})

    def collapse(self) -> dict[tuple[int, int], Fraction]:
        """Identify every scalar coset with the unit: ``(r, a, b) -> (r - 2a, b - a)``."""
        out: dict[tuple[int, int], Fraction] = defaultdict(Fraction)
        for (r, a, b), c in self.terms.items():
            out[(r - 2 * a, b - a)] += c
        return {k: v for k, v in sorted(out.items()) if v}

    def leq(self, other: HeckeElement) -> bool:
        """Coefficientwise ``self <= other``."""
        self._check(other)
        keys = set(self.terms) | set(other.terms)
        return all(self.coefficient(*k) <= other.coefficient(*k) for k in keys)

    def violations(self, other: HeckeElement) -> list[tuple[Label, Fraction, Fraction]]:
        keys = sorted(set(self.terms) | set(other.terms))
        return [(k, self.coefficient(*k), other.coefficient(*k)) for k in keys
                if self.coefficient(*k) > other.coefficient(*k)]

    def to_rows(self) -> list[tuple[int, int, int, int, int, int]]:
        """CSV rows ``p, r, a, b, numerator, denominator``."""
        return [(self.p, r, a, b, c.numerator, c.denominator) for (r, a, b), c in self.terms.items()]

    def __repr__(self) -> str:
        inner = " + ".join(f"{c}*T[{r}]({a},{b})" for (r, a, b), c in self.terms.items())
        return f"HeckeElement(p={self.p}: {inner or '0'})"


# ---------------------------------------------------------------------------
# coset tables, shared per process
# ---------------------------------------------------------------------------

class TableStore:
    """Lazily built coset tables, optionally backed by the on-disk cache."""

    def __init__(self, budget: int = DEFAULT_CANDIDATE_BUDGET, cache=None):
        self.budget = budget
        self.cache = cache
        self._tables: dict[tuple[int, int], CosetTable] = {}
        self._parts: dict[tuple[int, int, int, int], CosetTable] = {}

    def full(self, p: int, r: int) -> CosetTable:
        key = (p, r)
        if key not in self._tables:
            table = self.cache.load(p, r) if self.cache is not None else None
            if table is None:
                table = left_cosets(p, r, self.budget)
                if self.cache is not None:
                    self.cache.store(table)
            self._tables[key] = table
        return self._tables[key]

    def part(self, p: int, r: int, a: int, b: int) -> CosetTable:
        key = (p, r, a, b)
        if key not in self._parts:
            self._parts[key] = self.full(p, r).restrict(a, b)
        return self._parts[key]

    def degree(self, p: int, r: int, a: int, b: int) -> int:
        return len(self.part(p, r, a, b))


STORE = TableStore()


def set_store(store: TableStore):
    global STORE
    STORE = store
    _primitive_product.cache_clear()
    _satake_of_label.cache_clear()


# ---------------------------------------------------------------------------
# multiplication
# ---------------------------------------------------------------------------

def _targeted_coefficients(p: int, left: Label, right: Label, store: TableStore) -> dict[Label, int]:
    """``c_D = #{k : D B_k^-1 in Gamma L Gamma}`` for every target ``D``.

    ``L`` is the left label, ``B_k`` runs over left-coset representatives of
    the right label and ``D`` over the diagonal representatives of degree
    ``r1 + r2``.
    """
    r1, a1, b1 = left
    r2, a2, b2 = right
    r = r1 + r2
    m2 = p ** r2
    reps = store.part(p, r2, a2, b2).reps
    # B^-1 = J^-1 B^T J / m2
    adj = -J @ np.transpose(reps, (0, 2, 1)) @ J
    out = {}
    for lab in labels_of_degree(p, r):
        N = lab.diagonal() @ adj
        integral = np.all(N.reshape(len(N), -1) % m2 == 0, axis=1)
        Q = N[integral] // m2
        if len(Q) == 0:
            continue
        labs = snf_exponents_batch(Q, p)
        c = int(np.count_nonzero((labs[:, 0] == a1) & (labs[:, 1] == b1)))
        if c:
            out[(r, lab.a, lab.b)] = c
    return out


def _products_coefficients(p: int, left: Label, right: Label, store: TableStore,
                           budget: int = DEFAULT_PRODUCT_BUDGET) -> dict[Label, int]:
    """Bucket all products ``A_j B_k`` by Hermite form and read off multiplicities."""
    A = store.part(p, *left).reps
    B = store.part(p, *right).reps
    if len(A) * len(B) > budget:
        from .cosets import BudgetExceeded
        raise BudgetExceeded(f"{len(A) * len(B)} products exceed budget {budget}")
    r = left[0] + right[0]
    prods = (A[:, None] @ B[None, :]).reshape(-1, 4, 4)
    keys = hnf_batch(prods)
    _, first, counts = np.unique(keys.reshape(len(keys), -1), axis=0, return_index=True, return_counts=True)
    labs = snf_exponents_batch(prods[first], p)
    per_label: dict[tuple[int, int], list[int]] = defaultdict(list)
    for (a, b), n in zip(labs.tolist(), counts.tolist()):
        per_label[(a, b)].append(n)
    out = {}
    for (a, b), ns in per_label.items():
        if len(set(ns)) != 1:
            raise MultiplicityError(f"label {(r, a, b)}: multiplicities {sorted(Counter(ns).items())}")
        if len(ns) != store.degree(p, r, a, b):
            raise MultiplicityError(f"label {(r, a, b)}: {len(ns)} of {store.degree(p, r, a, b)} cosets hit")
        out[(r, a, b)] = ns[0]
    return out


@cache
def _primitive_product(p: int, left: Label, right: Label, method: str) -> tuple[tuple[Label, int], ...]:
    if method == "products":
        coeffs = _products_coefficients(p, left, right, STORE)
    else:
        # commutativity lets us enumerate over the smaller table
        if (right[0], STORE.degree(p, *right) if right[0] == left[0] else 0) > \
                (left[0], STORE.degree(p, *left) if right[0] == left[0] else 0):
            left, right = right, left
        coeffs = _targeted_coefficients(p, left, right, STORE)
    return tuple(sorted(coeffs.items()))


def _split_scalar(label: Label) -> tuple[Label, int]:
    r, a, b = label
    return (r - 2 * a, 0, b - a), a


def multiply_labels(p: int, left: Label, right: Label, method: str = "targeted") -> dict[Label, int]:
    (pl, sl), (pr, sr) = _split_scalar(left), _split_scalar(right)
    shift = sl + sr
    if pl[0] == 0:
        base = {pr: 1}
    elif pr[0] == 0:
        base = {pl: 1}
    else:
        key = (pl, pr) if pl <= pr else (pr, pl)
        base = dict(_primitive_product(p, key[0], key[1], method))
    return {(r + 2 * shift, a + shift, b + shift): c for (r, a, b), c in base.items()}


def hecke_multiply(T1: HeckeElement, T2: HeckeElement, method: str = "targeted") -> HeckeElement:
    """Exact product; ``method`` is ``"targeted"`` or ``"products"``."""
    if T1.p != T2.p:
        raise ValueError("Hecke elements for different primes")
    _check_prime(T1.p)
    out: dict[Label, Fraction] = defaultdict(Fraction)
    for l1, c1 in T1.terms.items():
        for l2, c2 in T2.terms.items():
            for lab, n in multiply_labels(T1.p, l1, l2, method).items():
                out[lab] += c1 * c2 * n
    return HeckeElement(T1.p, out)


# ---------------------------------------------------------------------------
# Satake map
# ---------------------------------------------------------------------------

@cache
def _satake_of_label(p: int, r: int, a: int, b: int) -> SatakePolynomial:
    if a > 0:
        # scalar part contributes (x1 x2 / p^3)^a in degree 2a
        base = _satake_of_label(p, r - 2 * a, 0, b - a)
        return base * SatakePolynomial(2 * a, {(a, a): Fraction(1, p ** (3 * a))})
    if r == 0:
        return SatakePolynomial.one()
    return SatakePolynomial.from_cosets(p, r, STORE.part(p, r, a, b).satake_exponents)


def satake(T: HeckeElement) -> SatakePolynomial:
    out = SatakePolynomial(0)
    for (r, a, b), c in T.terms.items():
        out = out + _satake_of_label(T.p, r, a, b).scale(c)
    return out


def satake_from_table(table: CosetTable) -> SatakePolynomial:
    return SatakePolynomial.from_cosets(table.p, table.r, table.satake_exponents)


def sum_of(elements: Iterable[HeckeElement]) -> HeckeElement:
    elements = list(elements)
    out = HeckeElement(elements[0].p)
    for e in elements:
        out = out + e
    return out


def from_mapping(p: int, coeffs: Mapping[Label, int | Fraction]) -> HeckeElement:
    return HeckeElement(p, {k: Fraction(v) for k, v in coeffs.items()})
