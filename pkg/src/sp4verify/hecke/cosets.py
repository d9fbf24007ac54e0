"""Left cosets of Sp4(Z) in S(p^r) and their double-coset labels.

Every left coset has a unique representative of parabolic shape::

    M = [[A, X D], [0, D]],   A = [[p^alpha, a], [0, p^beta]],   D = p^r A^{-T}

where ``A`` is the row Hermite form of the upper-left block (``0 <= a < p^beta``)
and ``X`` runs over symmetric rational matrices modulo integers with ``X D``
integral.  Writing ``y, z`` for the numerators of ``X`` over ``d22`` the upper
right block is ``[[j, y], [(y d11 + z d21) / d22, z]]`` with ``0 <= j < d11``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..symplectic import (
    J,
    SymplecticError,
    hnf_batch,
    similitude_of,
    snf_exponents_batch,
    vp,
)

DEFAULT_CANDIDATE_BUDGET = 5_000_000


class BudgetExceeded(RuntimeError):
    """An enumeration would exceed its configured budget."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def _check_prime(p: int):
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")


@dataclass(frozen=True, order=True)
class DoubleCosetLabel:
    """The double coset with elementary divisors ``p^a, p^b, p^(r-b), p^(r-a)``."""

    p: int
    r: int
    a: int
    b: int

    def __post_init__(self):
        if not (0 <= self.a <= self.b and 2 * self.b <= self.r):
            raise ValueError(f"invalid double coset label r={self.r}, a={self.a}, b={self.b}")

    @property
    def is_scalar(self) -> bool:
        return self.r == 2 * self.a and self.a == self.b

    def diagonal(self) -> np.ndarray:
        """Diagonal member of ``S(p^r)``; with ``J = [[0, I], [-I, 0]]`` the
        partner of ``p^a`` sits two places later, so the order is
        ``(p^a, p^b, p^(r-a), p^(r-b))``."""
        p, r, a, b = self.p, self.r, self.a, self.b
        return np.diag([p ** a, p ** b, p ** (r - a), p ** (r - b)]).astype(np.int64)


def labels_of_degree(p: int, r: int) -> list[DoubleCosetLabel]:
    return [DoubleCosetLabel(p, r, a, b) for a in range(r // 2 + 1) for b in range(a, r // 2 + 1)]


def coset_count(p: int, r: int) -> int:
    """``|Gamma \\ S(p^r)|`` from the parabolic parametrisation (closed-form sum)."""
    total = 0
    for alpha in range(r + 1):
        for beta in range(r + 1):
            for a in _upper_entries(p, r, alpha, beta):
                d11, d22 = p ** (r - alpha), p ** (r - beta)
                d21 = -a * p ** (r - alpha - beta) if alpha + beta <= r else -(a // p ** (alpha + beta - r))
                g = math.gcd(d11, d21, d22)
                # #{(y, z) mod d22 : d22 | y d11 + z d21} = d22 * gcd(d11, d21, d22)
                total += d11 * d22 * g
    return total


def _upper_entries(p: int, r: int, alpha: int, beta: int) -> range:
    """Admissible ``a`` (entry above ``p^beta``) such that ``p^r A^-T`` is integral."""
    if alpha + beta <= r:
        return range(p ** beta)
    step = p ** (alpha + beta - r)
    return range(0, p ** beta, step)


def _block(p: int, r: int, alpha: int, beta: int, a: int) -> np.ndarray:
    """All parabolic representatives with the given upper-left block."""
    d11, d22 = p ** (r - alpha), p ** (r - beta)
    num = -a * p ** r
    den = p ** (alpha + beta)
    assert num % den == 0
    d21 = num // den
    y, z = np.meshgrid(np.arange(d22, dtype=np.int64), np.arange(d22, dtype=np.int64), indexing="ij")
    y, z = y.ravel(), z.ravel()
    t = y * d11 + z * d21
    keep = t % d22 == 0
    y, z, b21 = y[keep], z[keep], t[keep] // d22
    n_yz = len(y)
    j = np.repeat(np.arange(d11, dtype=np.int64), n_yz)
    y, z, b21 = np.tile(y, d11), np.tile(z, d11), np.tile(b21, d11)
    out = np.zeros((len(j), 4, 4), dtype=np.int64)
    out[:, 0, 0] = p ** alpha
    out[:, 0, 1] = a
    out[:, 1, 1] = p ** beta
    out[:, 0, 2] = j
    out[:, 0, 3] = y
    out[:, 1, 2] = b21
    out[:, 1, 3] = z
    out[:, 2, 2] = d11
    out[:, 3, 2] = d21
    out[:, 3, 3] = d22
    return out


@dataclass
class CosetTable:
    """Left-coset representatives for all of ``S(p^r)`` or for one double coset.

    ``reps`` are parabolic representatives; ``satake_exponents`` holds the
    ``(alpha, beta)`` valuations of the diagonal of the upper-left block and
    ``labels`` the double-coset label ``(a, b)`` of every row.
    """

    p: int
    r: int
    reps: np.ndarray
    satake_exponents: np.ndarray
    labels: np.ndarray
    label: DoubleCosetLabel | None = None
    version: int = 1
    _hnf: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.reps)

    def hnf_keys(self) -> np.ndarray:
        """Row Hermite forms of the representatives, the canonical coset labels."""
        if self._hnf is None:
            chunks = [hnf_batch(self.reps[i:i + 200_000]) for i in range(0, len(self.reps), 200_000)]
            self._hnf = np.concatenate(chunks) if chunks else np.zeros((0, 4, 4), np.int64)
        return self._hnf

    def restrict(self, a: int, b: int) -> CosetTable:
        mask = (self.labels[:, 0] == a) & (self.labels[:, 1] == b)
        return CosetTable(self.p, self.r, self.reps[mask], self.satake_exponents[mask],
                          self.labels[mask], DoubleCosetLabel(self.p, self.r, a, b), self.version)


def left_cosets(p: int, r: int, budget: int = DEFAULT_CANDIDATE_BUDGET) -> CosetTable:
    """One parabolic representative per left coset of ``Gamma`` in ``S(p^r)``."""
    _check_prime(p)
    if r < 0:
        raise ValueError("r must be nonnegative")
    candidates = sum(p ** (r - alpha) * p ** (2 * (r - beta)) * len(_upper_entries(p, r, alpha, beta))
                     for alpha in range(r + 1) for beta in range(r + 1))
    if candidates > budget:
        raise BudgetExceeded(f"S({p}^{r}) needs {candidates} candidates (budget {budget})")
    blocks, exps = [], []
    for alpha in range(r + 1):
        for beta in range(r + 1):
            for a in _upper_entries(p, r, alpha, beta):
                reps = _block(p, r, alpha, beta, a)
                blocks.append(reps)
                exps.append(np.broadcast_to(np.array([alpha, beta], np.int64), (len(reps), 2)))
    reps = np.concatenate(blocks)
    exps = np.ascontiguousarray(np.concatenate(exps))
    labels = np.concatenate([snf_exponents_batch(reps[i:i + 100_000], p)
                             for i in range(0, len(reps), 100_000)])
    return CosetTable(p, r, reps, exps, labels)


def double_coset_split(table: CosetTable) -> dict[tuple[int, int], CosetTable]:
    if table.label is not None:
        raise ValueError("double_coset_split needs a table of all of S(p^r)")
    keys = sorted({(int(a), int(b)) for a, b in table.labels})
    return {key: table.restrict(*key) for key in keys}


def hnf_filter_cosets(p: int, r: int, budget: int = DEFAULT_CANDIDATE_BUDGET) -> np.ndarray:
    """Independent enumeration: Hermite forms ``H`` with ``H J H^T = 0 mod p^r``.

    Slow (the candidate space grows like ``p^(6r)``); used as an oracle.
    """
    _check_prime(p)
    m = p ** r
    found = []
    total = 0
    for diag in product(range(2 * r + 1), repeat=4):
        if sum(diag) != 2 * r:
            continue
        piv = [p ** e for e in diag]
        ranges = [range(piv[j]) for i in range(4) for j in range(i + 1, 4)]
        n = math.prod(len(x) for x in ranges)
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


def isotropic_plane_count(p: int) -> int:
    """Number of Lagrangian planes in ``F_p^4``: ``(p + 1)(p^2 + 1)``."""
    return (p + 1) * (p * p + 1)


# ---------------------------------------------------------------------------
# block reduction of an arbitrary similitude
# ---------------------------------------------------------------------------

def _pair_reduce(M: list[list[int]], g: list[list[int]], i: int, k: int, col: int):
    """Euclid on rows ``i`` and ``k = i + 2`` (a hyperbolic pair), clearing ``M[k][col]``."""
    while M[k][col] != 0:
        q = M[i][col] // M[k][col]
        # rows (i, k) <- (k, -(i - q k)) is an SL2 move on the pair
        for T in (M, g):
            ri = [x - q * y for x, y in zip(T[i], T[k])]
            T[i], T[k] = T[k], [-x for x in ri]


def _levi_reduce(M, g, col: int):
    """Clear ``M[1][col]`` with ``diag(U, U^-T)``, ``U`` acting on rows 0, 1."""
    while M[1][col] != 0:
        q = M[0][col] // M[1][col]
        for T in (M, g):
            # U = [[0, 1], [-1, q]] applied to rows (0, 1); U^-T = [[q, 1], [-1, 0]] on rows (2, 3)
            r0, r1, r2, r3 = T
            T[0] = r1
            T[1] = [-x + q * y for x, y in zip(r0, r1)]
            T[2] = [q * x + y for x, y in zip(r2, r3)]
            T[3] = [-x for x in r2]


def _flip(M, g, i: int):
    for T in (M, g):
        T[i] = [-x for x in T[i]]
        T[i + 2] = [-x for x in T[i + 2]]


def block_reduce(M, p: int | None = None, r: int | None = None):
    """Left-multiply ``M`` by ``gamma`` in Sp4(Z) to reach parabolic shape.

    Returns ``(gamma @ M, gamma, (alpha, beta))``: the lower-left block of the
    output vanishes and the upper-left block is upper triangular with positive
    diagonal ``(p^alpha, p^beta)``.
    """
    m = similitude_of(M)
    if m is None:
        raise SymplecticError("block_reduce needs an integral similitude")
    W = [[int(x) for x in row] for row in np.asarray(M).tolist()]
    g = [[int(i == j) for j in range(4)] for i in range(4)]
    _pair_reduce(W, g, 1, 3, 0)
    _pair_reduce(W, g, 0, 2, 0)
    _levi_reduce(W, g, 0)
    if W[0][0] < 0:
        _flip(W, g, 0)
    _pair_reduce(W, g, 1, 3, 1)
    if W[1][1] < 0:
        _flip(W, g, 1)
    out = np.array(W, dtype=np.int64)
    if np.any(out[2:, :2]) or out[1, 0] != 0:
        raise SymplecticError("block reduction failed")  # cannot happen for similitudes
    gamma = np.array(g, dtype=np.int64)
    if similitude_of(gamma) != 1:
        raise SymplecticError("reduction matrix left Sp4(Z)")
    exps = None
    if p is not None:
        exps = (vp(out[0, 0], p), vp(out[1, 1], p))
        if r is not None and m != p ** r:
            raise SymplecticError(f"similitude {m} is not {p}^{r}")
    return out, gamma, exps


# ---------------------------------------------------------------------------
# from Hermite forms back to similitudes
# ---------------------------------------------------------------------------

def _ext_gcd_vector(row: list[int]) -> list[int]:
    """Integer ``c`` with ``sum(c_i row_i) = gcd(row)``."""
    coeffs = [0] * len(row)
    g = 0
    for i, x in enumerate(row):
        if x == 0:
            continue
        if g == 0:
            g, coeffs = x, [0] * len(row)
            coeffs[i] = 1
            continue
        # extended Euclid on (g, x)
        a, b, u0, u1, v0, v1 = g, x, 1, 0, 0, 1
        while b:
            q = a // b
            a, b = b, a - q * b
            u0, u1 = u1, u0 - q * u1
            v0, v1 = v1, v0 - q * v1
        coeffs = [u0 * c for c in coeffs]
        coeffs[i] += v0
        g = a
    if g < 0:
        coeffs = [-c for c in coeffs]
    return coeffs


def _form(F, u, v) -> int:
    return sum(u[i] * F[i][j] * v[j] for i in range(len(u)) for j in range(len(v)) if F[i][j])


def symplectic_basis(F) -> np.ndarray:
    """``U`` in GL4(Z) with ``U F U^T = J`` for a unimodular alternating form ``F``."""
    F = [[int(x) for x in row] for row in np.asarray(F).tolist()]
    n = len(F)
    basis = [[int(i == j) for j in range(n)] for i in range(n)]
    es, fs = [], []
    while basis:
        e = basis[0]
        pair = [_form(F, e, w) for w in basis]
        c = _ext_gcd_vector(pair)
        if sum(ci * pi for ci, pi in zip(c, pair)) != 1:
            raise SymplecticError("alternating form is not unimodular")
        f = [sum(c[k] * basis[k][i] for k in range(len(basis))) for i in range(n)]
        rest = []
        for w in basis:
            wf, we = _form(F, w, f), _form(F, w, e)
            rest.append([wi - wf * ei + we * fi for wi, ei, fi in zip(w, e, f)])
        es.append(e)
        fs.append(f)
        basis = _lattice_basis(rest)
    U = np.array(es + fs, dtype=np.int64)
    return U


def _lattice_basis(vectors: list[list[int]]) -> list[list[int]]:
    """Echelon basis of the lattice spanned by integer row vectors."""
    rows = [list(v) for v in vectors if any(v)]
    out = []
    n = len(vectors[0]) if vectors else 0
    for col in range(n):
        active = [r for r in rows if r[col] != 0]
        rows = [r for r in rows if r[col] == 0]
        while len(active) > 1:
            active.sort(key=lambda r: abs(r[col]))
            piv = active[0]
            nxt = [piv]
            for r in active[1:]:
                q = r[col] // piv[col]
                r = [a - q * b for a, b in zip(r, piv)]
                if r[col] != 0:
                    nxt.append(r)
                elif any(r):
                    rows.append(r)
            active = nxt
        if active:
            out.append(active[0])
    return out


def similitude_from_hnf(H, m: int) -> np.ndarray:
    """A member of ``S(m)`` in the left coset with Hermite form ``H``.

    ``F = H J H^T / m`` is integral, alternating and unimodular; if
    ``U F U^T = J`` then ``U H`` is a similitude with factor ``m``.
    """
    H = np.asarray(H, dtype=np.int64)
    G = H @ J @ H.T
    if np.any(G % m):
        raise SymplecticError("H J H^T is not divisible by m")
    U = symplectic_basis(G // m)
    M = U @ H
    if similitude_of(M) != m:
        raise SymplecticError("normalisation did not produce a similitude")
    return M
