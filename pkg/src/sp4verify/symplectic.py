"""Linear algebra for Sp4: membership, integer normal forms, Iwasawa and
Cartan projections, root data and the action on the Siegel upper half space.

Conventions
-----------
``J = [[0, I], [-I, 0]]``.  Integral similitudes satisfy ``M.T @ J @ M = m J``.
The Cartan subalgebra is ``diag(t1, t2, -t1, -t2)``; ``(t1, t2)`` are the
coordinates of a :class:`CartanVector`.  Killing-form norms are
``<H, H> = 12 (t1^2 + t2^2)`` on the Lie algebra side and
``<lam, lam> = (lam1^2 + lam2^2) / 12`` on the dual side.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.linalg import sqrtm

J = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=np.int64)
I4 = np.eye(4, dtype=np.int64)

DEFAULT_TOL = 1e-9
KILLING_SCALE = 12


class SymplecticError(ValueError):
    """Raised when an input violates a symplectic precondition."""


# ---------------------------------------------------------------------------
# integral similitudes
# ---------------------------------------------------------------------------

def _as_int_rows(M) -> list[list[int]]:
    arr = np.asarray(M)
    if arr.shape != (4, 4):
        raise SymplecticError(f"expected a 4x4 matrix, got shape {arr.shape}")
    rows = [[int(x) for x in row] for row in arr.tolist()]
    if not np.array_equal(np.asarray(rows, dtype=object), np.asarray(arr, dtype=object)):
        raise SymplecticError("matrix entries must be integers")
    return rows


def _matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))]
            for i in range(len(A))]


def _transpose(A):
    return [list(col) for col in zip(*A)]


_J_ROWS = J.tolist()


def similitude_of(M) -> int | None:
    """Return ``m > 0`` if ``M.T J M == m J`` holds exactly, else ``None``."""
    try:
        rows = _as_int_rows(M)
    except SymplecticError:
        return None
    S = _matmul(_matmul(_transpose(rows), _J_ROWS), rows)
    m = S[0][2]
    if m <= 0:
        return None
    for i in range(4):
        for j in range(4):
            if S[i][j] != m * _J_ROWS[i][j]:
                return None
    return m


@dataclass(frozen=True)
class SymplecticIntMatrix:
    """An exact integral similitude with its factor ``m``."""

    entries: tuple[tuple[int, ...], ...]
    similitude: int

    def __post_init__(self):
        m = similitude_of(self.entries)
        if m is None or m != self.similitude:
            raise SymplecticError(f"not a similitude with factor {self.similitude}")

    @classmethod
    def from_array(cls, M) -> SymplecticIntMatrix:
        rows = _as_int_rows(M)
        m = similitude_of(rows)
        if m is None:
            raise SymplecticError("matrix is not an integral symplectic similitude")
        return cls(tuple(tuple(r) for r in rows), m)

    def to_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    @property
    def det(self) -> int:
        return self.similitude ** 2


# ---------------------------------------------------------------------------
# Hermite and Smith data
# ---------------------------------------------------------------------------

def hnf(M) -> np.ndarray:
    """Row-style Hermite normal form ``U @ M`` of a nonsingular integer matrix.

    The result is upper triangular with positive diagonal and every entry
    above a pivot reduced into ``[0, pivot)``.  Exact (Python integers).
    """
    A = [[int(x) for x in row] for row in np.asarray(M).tolist()]
    n = len(A)
    for c in range(n):
        while True:
            nz = [i for i in range(c, n) if A[i][c] != 0]
            if not nz:
                raise SymplecticError("singular matrix has no Hermite normal form")
            piv = min(nz, key=lambda i: abs(A[i][c]))
            A[c], A[piv] = A[piv], A[c]
            done = True
            for i in range(c + 1, n):
                if A[i][c]:
                    q = A[i][c] // A[c][c]
                    A[i] = [a - q * b for a, b in zip(A[i], A[c])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if A[c][c] < 0:
            A[c] = [-a for a in A[c]]
        for i in range(c):
            q = A[i][c] // A[c][c]
            if q:
                A[i] = [a - q * b for a, b in zip(A[i], A[c])]
    return np.array(A, dtype=object if max(abs(x) for r in A for x in r) > 2**62 else np.int64)


def hnf_batch(Ms: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hnf` for a stack of nonsingular ``4x4`` int64 matrices."""
    A = np.array(Ms, dtype=np.int64, copy=True)
    n = A.shape[-1]
    idx = np.arange(A.shape[0])
    for c in range(n):
        while True:
            col = A[:, c:, c]
            absc = np.where(col == 0, np.iinfo(np.int64).max, np.abs(col))
            piv = np.argmin(absc, axis=1) + c
            if np.any(absc[idx, piv - c] == np.iinfo(np.int64).max):
                raise SymplecticError("singular matrix in batch")
            prow = A[idx, piv].copy()
            A[idx, piv] = A[:, c]
            A[:, c] = prow
            below = A[:, c + 1:, c]
            if not below.any():
                break
            q = np.floor_divide(below, A[:, c, c][:, None])
            A[:, c + 1:] -= q[:, :, None] * A[:, c][:, None, :]
        sign = np.where(A[:, c, c] < 0, -1, 1)
        A[:, c] *= sign[:, None]
        for i in range(c):
            q = np.floor_divide(A[:, i, c], A[:, c, c])
            A[:, i] -= q[:, None] * A[:, c]
    return A


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


_MINOR_IDX = [(i, j) for i in range(4) for j in range(i + 1, 4)]


def _minors2(M) -> list[int]:
    out = []
    for r1, r2 in _MINOR_IDX:
        for c1, c2 in _MINOR_IDX:
            out.append(M[r1][c1] * M[r2][c2] - M[r1][c2] * M[r2][c1])
    return out


def snf_exponents(M, p: int, r: int | None = None) -> tuple[int, int]:
    """Double-coset label ``(a, b)`` of ``M`` in ``S(p^r)``.

    The elementary divisors are ``p^a, p^b, p^(r-b), p^(r-a)``; they are read
    from the gcd of the entries and of the ``2x2`` minors.
    """
    rows = _as_int_rows(M)
    m = similitude_of(rows)
    if m is None:
        raise SymplecticError("snf_exponents needs a symplectic similitude")
    rm = vp(m, p)
    if p ** rm != m:
        raise SymplecticError(f"similitude {m} is not a power of {p}")
    if r is not None and r != rm:
        raise SymplecticError(f"similitude is p^{rm}, expected p^{r}")
    g1 = 0
    for row in rows:
        for x in row:
            g1 = math.gcd(g1, x)
    g2 = 0
    for x in _minors2(rows):
        g2 = math.gcd(g2, x)
    a = vp(g1, p)
    b = vp(g2, p) - a
    if not (0 <= a <= b <= rm - b) or g1 != p ** a or g2 != p ** (a + b):
        raise SymplecticError("elementary divisors are not of symplectic shape")
    return a, b


def snf_exponents_batch(Ms: np.ndarray, p: int) -> np.ndarray:
    """Vectorised ``(a, b)`` labels for a stack of similitudes of a fixed p-power."""
    Ms = np.asarray(Ms, dtype=np.int64)
    g1 = np.gcd.reduce(Ms.reshape(len(Ms), -1), axis=1)
    minors = np.stack([Ms[:, r1, c1] * Ms[:, r2, c2] - Ms[:, r1, c2] * Ms[:, r2, c1]
                       for r1, r2 in _MINOR_IDX for c1, c2 in _MINOR_IDX], axis=1)
    g2 = np.gcd.reduce(minors, axis=1)
    return np.stack([_vp_array(g1, p), _vp_array(g2, p) - _vp_array(g1, p)], axis=1)


def _vp_array(x: np.ndarray, p: int) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=np.int64))
    v = np.zeros(x.shape, dtype=np.int64)
    mask = (x % p == 0) & (x != 0)
    while mask.any():
        x = np.where(mask, x // p, x)
        v += mask
        mask = (x % p == 0) & (x != 0)
    return v


# ---------------------------------------------------------------------------
# root system
# ---------------------------------------------------------------------------

POSITIVE_ROOTS = ((1, -1), (1, 1), (2, 0), (0, 2))
ROOT_MULTIPLICITY = {root: 1 for root in POSITIVE_ROOTS}
RHO = (2, 1)
DUAL_NORM_SCALE = Fraction(1, KILLING_SCALE)

# signed permutations of (lam1, lam2): (swap, s1, s2)
WEYL_GROUP = tuple((swap, s1, s2) for swap in (False, True) for s1 in (1, -1) for s2 in (1, -1))


def weyl_act(w, lam):
    """Apply a signed permutation ``w = (swap, s1, s2)`` to a pair."""
    swap, s1, s2 = w
    a, b = (lam[1], lam[0]) if swap else (lam[0], lam[1])
    return (s1 * a, s2 * b)


def weyl_orbit(lam) -> list[tuple]:
    return [weyl_act(w, lam) for w in WEYL_GROUP]


def dual_inner(lam, mu):
    """Killing inner product on the dual of the Cartan subalgebra."""
    return (lam[0] * mu[0] + lam[1] * mu[1]) * DUAL_NORM_SCALE


def rho_norm_sq() -> Fraction:
    half_sum = [Fraction(0), Fraction(0)]
    for alpha in POSITIVE_ROOTS:
        half_sum[0] += Fraction(alpha[0] * ROOT_MULTIPLICITY[alpha], 2)
        half_sum[1] += Fraction(alpha[1] * ROOT_MULTIPLICITY[alpha], 2)
    assert tuple(half_sum) == RHO
    return dual_inner(half_sum, half_sum)


def laplace_eigenvalue(lam) -> complex:
    """Image of the Laplacian, ``<rho, rho> + <lam, lam>``."""
    return float(rho_norm_sq()) + (lam[0] ** 2 + lam[1] ** 2) / KILLING_SCALE


def rho_hull_contains(eta, tol: float = 1e-12) -> bool:
    """Membership in the convex hull ``C_rho`` of the Weyl orbit of rho.

    The hull is the octagon ``|x| + |y| <= 3, |x| <= 2, |y| <= 2``.
    """
    x, y = abs(eta[0]), abs(eta[1])
    return x + y <= 3 + tol and x <= 2 + tol and y <= 2 + tol


class CartanVector(NamedTuple):
    t1: float
    t2: float

    @property
    def norm(self) -> float:
        """Killing norm."""
        return math.sqrt(KILLING_SCALE * (self.t1 ** 2 + self.t2 ** 2))

    def as_matrix(self) -> np.ndarray:
        return np.diag([self.t1, self.t2, -self.t1, -self.t2])

    def exp(self) -> np.ndarray:
        return np.diag(np.exp([self.t1, self.t2, -self.t1, -self.t2]))


def cartan_from_norm(norm: float, direction) -> CartanVector:
    """Cartan vector of Killing norm ``norm`` along ``direction``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    scale = norm / math.sqrt(KILLING_SCALE)
    return CartanVector(float(scale * d[0]), float(scale * d[1]))


def spectral_norm(lam) -> float:
    """``(||Re lam||^2 + ||Im lam||^2)^(1/2)`` in the dual Killing norm."""
    lam = np.asarray(lam, dtype=complex)
    return float(np.sqrt(np.sum(np.abs(lam) ** 2) / KILLING_SCALE))


# ---------------------------------------------------------------------------
# real group elements
# ---------------------------------------------------------------------------

def symplectic_defect(g) -> float:
    g = np.asarray(g, dtype=float)
    return float(np.linalg.norm(g.T @ J @ g - J))


def check_symplectic(g, tol: float = DEFAULT_TOL) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (4, 4):
        raise SymplecticError(f"expected a 4x4 matrix, got {g.shape}")
    d = symplectic_defect(g)
    if d > tol * max(1.0, np.linalg.norm(g) ** 2):
        raise SymplecticError(f"matrix is not symplectic (defect {d:.3e})")
    return g


def k_from_unitary(u) -> np.ndarray:
    """Embed ``u = B + iC`` in U(2) as ``[[B, C], [-C, B]]``."""
    u = np.asarray(u, dtype=complex)
    B, C = u.real, u.imag
    return np.block([[B, C], [-C, B]])


def unitary_from_k(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return k[:2, :2] + 1j * k[:2, 2:]


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_k(rng: np.random.Generator) -> np.ndarray:
    return k_from_unitary(random_unitary(rng))


def random_n(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random element of the unipotent radical ``[[B, C], [0, B^-T]]``."""
    B = np.eye(2)
    B[0, 1] = scale * rng.standard_normal()
    S = rng.standard_normal((2, 2)) * scale
    S = S + S.T
    n_upper = np.block([[B, np.zeros((2, 2))], [np.zeros((2, 2)), np.linalg.inv(B).T]])
    n_trans = np.block([[np.eye(2), S], [np.zeros((2, 2)), np.eye(2)]])
    return n_upper @ n_trans


def exp_cartan(H) -> np.ndarray:
    return CartanVector(*H).exp()


@dataclass(frozen=True)
class SiegelPoint:
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.shape != (2, 2) or Y.shape != (2, 2):
            raise SymplecticError("Siegel point needs 2x2 X and Y")
        if not (Y[0, 0] > 0 and np.linalg.det(Y) > 0):
            raise SymplecticError("imaginary part is not positive definite")
        object.__setattr__(self, "X", (X + X.T) / 2)
        object.__setattr__(self, "Y", (Y + Y.T) / 2)

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @classmethod
    def from_complex(cls, Z) -> SiegelPoint:
        Z = np.asarray(Z, dtype=complex)
        return cls(Z.real, Z.imag)


def moebius(g, Z: SiegelPoint) -> SiegelPoint:
    """``(A Z + B)(C Z + D)^-1``."""
    g = np.asarray(g, dtype=float)
    A, B, C, D = g[:2, :2], g[:2, 2:], g[2:, :2], g[2:, 2:]
    den = C @ Z.Z + D
    if abs(np.linalg.det(den)) < 1e-300:
        raise SymplecticError("C Z + D is singular")
    return SiegelPoint.from_complex((A @ Z.Z + B) @ np.linalg.inv(den))


def point_to_group(Z: SiegelPoint) -> np.ndarray:
    """The representative ``[[I, X], [0, I]] diag(V, V^-1)`` with ``V^2 = Y``."""
    V = np.real(sqrtm(Z.Y))
    V = (V + V.T) / 2
    upper = np.block([[np.eye(2), Z.X], [np.zeros((2, 2)), np.eye(2)]])
    return upper @ np.block([[V, np.zeros((2, 2))], [np.zeros((2, 2)), np.linalg.inv(V)]])


ISIEGEL = SiegelPoint(np.zeros((2, 2)), np.eye(2))


def iwasawa_H(g, tol: float = DEFAULT_TOL) -> CartanVector:
    """Iwasawa projection: ``g in K exp(H) N``.

    Uses ``g^-1 . iI = X' + iY'`` with ``Y' = B diag(d1, d2) B^T`` (``B``
    unit upper triangular); then ``H = -(log d1, log d2) / 2``.
    """
    g = check_symplectic(g, tol)
    Zp = moebius(np.linalg.inv(g), ISIEGEL)
    Y = Zp.Y
    d2 = Y[1, 1]
    d1 = Y[0, 0] - Y[0, 1] ** 2 / d2
    if d1 <= 0 or d2 <= 0:
        raise SymplecticError("Y' is not positive definite")
    return CartanVector(-0.5 * math.log(d1), -0.5 * math.log(d2))


def iwasawa_parts(g) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Explicit ``(k, a, n)`` with ``g = k a n``; used to cross-check :func:`iwasawa_H`."""
    g = np.asarray(g, dtype=float)
    H = iwasawa_H(g)
    Zp = moebius(np.linalg.inv(g), ISIEGEL)
    Y = Zp.Y
    b = Y[0, 1] / Y[1, 1]
    Bu = np.array([[1.0, b], [0.0, 1.0]])
    # g^-1 . iI = n^-1 a^-1 . iI  with n^-1 = [[Bu, X Bu^-T], [0, Bu^-T]]
    n_inv = np.block([[Bu, Zp.X @ np.linalg.inv(Bu).T], [np.zeros((2, 2)), np.linalg.inv(Bu).T]])
    a = H.exp()
    n = np.linalg.inv(n_inv)
    k = g @ np.linalg.inv(a @ n)
    return k, a, n


def cartan_C(g, tol: float = DEFAULT_TOL) -> CartanVector:
    """Dominant Cartan projection ``t1 >= t2 >= 0`` from the singular values of ``g``."""
    g = check_symplectic(g, tol)
    ev = np.linalg.eigvalsh(g.T @ g)
    if np.any(ev <= 0):
        raise SymplecticError("g^T g has non-positive eigenvalues")
    logs = np.sort(0.5 * np.log(ev))[::-1]
    t1 = 0.5 * (logs[0] - logs[3])
    t2 = 0.5 * (logs[1] - logs[2])
    return CartanVector(float(max(t1, 0.0)), float(max(t2, 0.0)))


def cartan_norms_batch(gs: np.ndarray) -> np.ndarray:
    """Killing norms of the Cartan projections of a stack of symplectic matrices."""
    sv = np.linalg.svd(np.asarray(gs, dtype=float), compute_uv=False)
    logs = np.log(sv)
    t1 = 0.5 * (logs[:, 0] - logs[:, 3])
    t2 = 0.5 * (logs[:, 1] - logs[:, 2])
    return np.sqrt(KILLING_SCALE * (t1 ** 2 + t2 ** 2))


# ---------------------------------------------------------------------------
# integral generators of Sp4(Z)
# ---------------------------------------------------------------------------

def translation(S) -> np.ndarray:
    S = np.asarray(S, dtype=np.int64)
    return np.block([[np.eye(2, dtype=np.int64), S], [np.zeros((2, 2), np.int64), np.eye(2, dtype=np.int64)]])


def levi(U) -> np.ndarray:
    U = np.asarray(U, dtype=np.int64)
    det = round(np.linalg.det(U))
    if abs(det) != 1:
        raise SymplecticError("Levi block must be unimodular")
    Uinv_T = np.array([[U[1, 1], -U[1, 0]], [-U[0, 1], U[0, 0]]], dtype=np.int64) * det
    return np.block([[U, np.zeros((2, 2), np.int64)], [np.zeros((2, 2), np.int64), Uinv_T]])


def random_gamma(rng: np.random.Generator, steps: int = 6, size: int = 2) -> np.ndarray:
    """Random element of Sp4(Z) as a word in elementary generators."""
    g = I4.copy()
    for _ in range(steps):
        kind = rng.integers(4)
        if kind == 0:
            a, b, c = rng.integers(-size, size + 1, 3)
            h = translation([[a, b], [b, c]])
        elif kind == 1:
            a, b, c = rng.integers(-size, size + 1, 3)
            h = translation([[a, b], [b, c]]).T
        elif kind == 2:
            t = int(rng.integers(-size, size + 1))
            h = levi([[1, t], [0, 1]] if rng.integers(2) else [[1, 0], [t, 1]])
        else:
            h = J.copy()
        g = h @ g
    return g
