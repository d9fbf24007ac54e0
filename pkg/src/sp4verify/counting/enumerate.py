"""Enumeration of ``S(g)_delta[m]``.

``S(g)_delta[m]`` is the set of integral ``gamma`` with ``gamma^T J gamma = m J``
and ``||C(g^-1 gamma~ g)|| <= delta``, ``gamma~ = m^(-1/2) gamma``.  Write
``y = g^-1 gamma~ g = k1 exp(H) k2`` and ``tau = delta / sqrt(12)``.  Every
pruning bound below follows from two facts:

* ``gamma~^T Q gamma~ - Q = g^-T (y^T y - I) g^-1`` with
  ``||y^T y - I|| <= e^(2 tau) - 1``, so for columns ``c_i, c_j`` of ``gamma``
  ``|c_i^T Q c_j - m Q_ij| <= m (e^(2 tau) - 1) sqrt(Q_ii Q_jj)`` and
  ``c_i^T Q c_i`` lies in ``m Q_ii [e^(-2 tau), e^(2 tau)]``;
* ``gamma~ = x (I + E)`` with ``x = g k1 k2 g^-1`` and
  ``||E|| <= kappa(g) (e^tau - 1)``, where ``x`` commutes with the complex
  structure ``M = Q^-1 J``; so the first two columns predict the last two.

Floating point only prunes; membership is decided by the exact test
``gamma^T J gamma = m J`` and the Cartan criterion.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from itertools import pairwise, product

import numpy as np

from ..symplectic import KILLING_SCALE, J, cartan_C, check_symplectic
from .diophantine import SLOP, QuadPoly2

log = logging.getLogger(__name__)

DELTA_CEILING = 0.3
THETA = 0.25
JF = J.astype(float)


class BudgetExceeded(RuntimeError):
    pass


def _col_matrix(*cols) -> np.ndarray:
    """4x4 matrix from four columns, ``None`` meaning zero."""
    return np.stack([np.zeros(4) if c is None else c for c in cols], axis=1)


@dataclass
class CountingContext:
    g: np.ndarray
    Q: np.ndarray = field(init=False)
    Q1: np.ndarray = field(init=False)
    Q2: np.ndarray = field(init=False)
    A: dict = field(init=False)
    B: dict = field(init=False)
    kappa: float = field(init=False)
    M: np.ndarray = field(init=False)
    right_coeffs: np.ndarray = field(init=False)

    def __post_init__(self):
        g = check_symplectic(np.asarray(self.g, dtype=float))
        self.g = g
        Q = np.linalg.inv(g @ g.T)
        Q = (Q + Q.T) / 2
        if np.min(np.linalg.eigvalsh(Q)) <= 0:
            raise ValueError("Q is not positive definite")
        self.Q = Q
        q = [Q[:, i] for i in range(4)]
        self.Q1 = _col_matrix(q[0], None, q[2], None)
        self.Q2 = _col_matrix(None, q[1], None, q[3])
        self.A = {(1, 1): _col_matrix(-q[1], None, None, -q[2]), (1, 2): _col_matrix(-q[3], q[2], None, None),
                  (2, 1): _col_matrix(None, None, -q[1], q[0]), (2, 2): _col_matrix(None, -q[0], -q[3], None)}
        self.B = {(1, 1): _col_matrix(None, -q[0], -q[3], None), (1, 2): _col_matrix(q[3], -q[2], None, None),
                  (2, 1): _col_matrix(None, None, q[1], -q[0]), (2, 2): _col_matrix(-q[1], None, None, -q[2])}
        self.kappa = float(np.linalg.cond(g))
        self.M = np.linalg.solve(Q, JF)
        basis = np.stack([np.eye(4)[0], np.eye(4)[1], self.M[:, 0], self.M[:, 1]], axis=1)
        # e3, e4 in the real basis e1, e2, M e1, M e2
        self.right_coeffs = np.linalg.solve(basis, np.eye(4)[:, 2:]).T

    @classmethod
    def identity(cls) -> CountingContext:
        return cls(np.eye(4))

    @property
    def split_defect(self) -> float:
        return float(np.max(np.abs(self.Q1 + self.Q2 - self.Q)))

    def tau(self, delta: float) -> float:
        return delta / math.sqrt(KILLING_SCALE)

    def entry_bound(self, delta: float, m: int) -> float:
        """``|gamma_ij| <= sqrt(m) ||g|| ||g^-1|| e^tau``."""
        return math.sqrt(m) * self.kappa * math.exp(self.tau(delta))

    def predict_right(self, r: np.ndarray, s: np.ndarray) -> np.ndarray:
        """Columns 3, 4 of the element of ``gKg^-1`` with columns ``r, s`` (shape (2, 4))."""
        Mr, Ms = self.M @ r, self.M @ s
        return np.array([a1 * r + a2 * s + b1 * Mr + b2 * Ms for a1, a2, b1, b2 in self.right_coeffs])

    def right_halfwidth(self, delta: float, m: int) -> np.ndarray:
        nM = np.linalg.norm(self.M, 2)
        dist = self.kappa ** 2 * math.expm1(self.tau(delta))
        return np.array([math.sqrt(m) * dist * (1 + abs(a1) + abs(a2) + nM * (abs(b1) + abs(b2)))
                         for a1, a2, b1, b2 in self.right_coeffs])

    def cartan_norm(self, gamma, m: int) -> float:
        y = np.linalg.solve(self.g, np.asarray(gamma, dtype=float) / math.sqrt(m)) @ self.g
        return cartan_C(y, tol=1e-6).norm

    def is_member(self, gamma, m: int, delta: float) -> bool:
        G = np.asarray(gamma, dtype=np.int64)
        if not np.array_equal(G.T @ J @ G, m * J):
            return False
        return self.cartan_norm(G, m) <= delta


def validate(m: int, delta: float) -> None:
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("m must be a positive integer")
    if not 0 < delta <= DELTA_CEILING:
        raise ValueError(f"delta must lie in (0, {DELTA_CEILING}]")


@dataclass
class EnumerationStats:
    r_candidates: int = 0
    s_candidates: int = 0
    completions: int = 0
    min_discriminant: float = math.inf
    branches: dict = field(default_factory=lambda: {1: 0, 2: 0})
    seconds: float = 0.0


def _widen(lo: float, hi: float) -> tuple[float, float]:
    pad = SLOP * (1 + abs(lo) + abs(hi))
    return lo - pad, hi + pad


def _r_vectors(ctx: CountingContext, lo: float, hi: float, budget: int, stats: EnumerationStats) -> list[np.ndarray]:
    """All ``r`` with ``lo <= r^T Q r <= hi``: loop ``r1, r2``, solve for ``r3, r4``."""
    Q = ctx.Q
    Qinv = np.linalg.inv(Q)
    b1 = math.floor(math.sqrt(hi * Qinv[0, 0]) + SLOP)
    b2 = math.floor(math.sqrt(hi * Qinv[1, 1]) + SLOP)
    lo, hi = _widen(lo, hi)
    out = []
    for r1 in range(-b1, b1 + 1):
        for r2 in range(-b2, b2 + 1):
            P = QuadPoly2(Q[2, 2], 2 * Q[2, 3], Q[3, 3],
                          2 * (Q[0, 2] * r1 + Q[1, 2] * r2), 2 * (Q[0, 3] * r1 + Q[1, 3] * r2),
                          Q[0, 0] * r1 * r1 + 2 * Q[0, 1] * r1 * r2 + Q[1, 1] * r2 * r2)
            for r3, r4 in P.points_in_band(lo, hi):
                out.append(np.array([r1, r2, r3, r4], dtype=np.int64))
            if len(out) > budget:
                raise BudgetExceeded(f"more than {budget} first columns")
    stats.r_candidates += len(out)
    return out


def _s_vectors(ctx: CountingContext, r: np.ndarray, m: int, tau: float, stats: EnumerationStats,
               theta: float = THETA) -> list[np.ndarray]:
    """Second columns for a given ``r`` through the linear system and one binary quadric."""
    Q = ctx.Q
    eps = math.expm1(2 * tau)
    EQ = m * eps * math.sqrt(Q[0, 0] * Q[1, 1])
    rf = r.astype(float)
    v1, v2 = float(rf @ ctx.Q1 @ rf), float(rf @ ctx.Q2 @ rf)
    floor_ = theta * m * Q[0, 0]
    if max(v1, v2) < floor_ * (1 - 1e-12):
        raise ArithmeticError(f"neither branch reaches theta*m*q11 for r={r.tolist()}")
    branch = 1 if v1 >= v2 else 2
    stats.branches[branch] += 1
    # s = affine in the two free coordinates; (dep, free) index pairs
    if branch == 1:
        dep, free, mats, v = (0, 2), (1, 3), ctx.A, v1
    else:
        dep, free, mats, v = (1, 3), (0, 2), ctx.B, v2
    coef = np.array([[rf @ mats[(i, j)] @ rf for j in (1, 2)] for i in (1, 2)]) / v
    const = m * Q[0, 1] * rf[list(dep)] / v
    err = np.abs(rf[list(dep)]) * EQ / v  # bound on the dependent coordinates
    # shat(u, w) = L (u, w) + c0 in R^4
    L = np.zeros((4, 2))
    c0 = np.zeros(4)
    L[free[0], 0] = L[free[1], 1] = 1
    L[list(dep), :] = coef
    c0[list(dep)] = const
    Qt = L.T @ Q @ L
    lin = 2 * (c0 @ Q @ L)
    P = QuadPoly2(Qt[0, 0], 2 * Qt[0, 1], Qt[1, 1], lin[0], lin[1], float(c0 @ Q @ c0))
    disc = -float(P.discriminant)
    stats.min_discriminant = min(stats.min_discriminant, disc)
    if disc <= 0:
        raise ArithmeticError("reduced quadric lost definiteness")
    dq = math.sqrt(err @ Q[np.ix_(dep, dep)] @ err + 2 * err[0] * err[1] * abs(Q[dep[0], dep[1]]))
    lo_s, hi_s = m * Q[1, 1] * math.exp(-2 * tau), m * Q[1, 1] * math.exp(2 * tau)
    lo = max(math.sqrt(lo_s) - dq, 0.0) ** 2
    hi = (math.sqrt(hi_s) + dq) ** 2
    lo, hi = _widen(lo, hi)
    out = []
    rJ = r @ J
    for u, w in P.points_in_band(lo, hi):
        pred = L @ np.array([u, w], dtype=float) + c0
        ranges = []
        for k, i in enumerate(dep):
            h = err[k] * (1 + SLOP) + SLOP * (1 + abs(pred[i]))
            ranges.append(range(math.ceil(pred[i] - h), math.floor(pred[i] + h) + 1))
        for a, b in product(*ranges):
            s = np.zeros(4, dtype=np.int64)
            s[free[0]], s[free[1]] = u, w
            s[dep[0]], s[dep[1]] = a, b
            if rJ @ s != 0:
                continue
            sf = s.astype(float)
            if not (lo_s * (1 - SLOP) <= sf @ Q @ sf <= hi_s * (1 + SLOP)):
                continue
            if abs(rf @ Q @ sf - m * Q[0, 1]) > EQ * (1 + SLOP) + SLOP:
                continue
            out.append(s)
    stats.s_candidates += len(out)
    return out


def _complete(ctx: CountingContext, r, s, m: int, delta: float, stats: EnumerationStats) -> list[np.ndarray]:
    """Integral right halves near the prediction satisfying the exact J-relations."""
    pred = ctx.predict_right(r.astype(float), s.astype(float))
    half = ctx.right_halfwidth(delta, m)
    cols = []
    # rows of the constraints: column c3 needs r J c3 = m, s J c3 = 0; c4 needs r J c4 = 0, s J c4 = m
    rJ, sJ = r @ J, s @ J
    for k, (tr, ts) in enumerate(((m, 0), (0, m))):
        cands = _lattice_solutions(rJ, sJ, tr, ts, pred[k], half[k])
        cols.append(cands)
        stats.completions += len(cands)
    out = []
    for c3 in cols[0]:
        c3J = c3 @ J
        for c4 in cols[1]:
            if c3J @ c4 != 0:
                continue
            gamma = np.stack([r, s, c3, c4], axis=1)
            if ctx.is_member(gamma, m, delta):
                out.append(gamma)
    return out


def _lattice_solutions(u, v, tu, tv, centre, half) -> list[np.ndarray]:
    """Integer ``c`` in the box ``|c - centre| <= half`` with ``u.c = tu`` and ``v.c = tv``."""
    lo = np.ceil(centre - half * (1 + SLOP) - SLOP).astype(np.int64)
    hi = np.floor(centre + half * (1 + SLOP) + SLOP).astype(np.int64)
    if np.any(hi < lo):
        return []
    # choose the two coordinates with an invertible 2x2 minor as dependent ones
    best = None
    for i in range(4):
        for j in range(i + 1, 4):
            det = int(u[i] * v[j] - u[j] * v[i])
            if det and (best is None or abs(det) < abs(best[2])):
                best = (i, j, det)
    out = []
    if best is None:
        for c in product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            c = np.array(c, dtype=np.int64)
            if u @ c == tu and v @ c == tv:
                out.append(c)
        return out
    i, j, det = best
    free = [k for k in range(4) if k not in (i, j)]
    for a, b in product(range(lo[free[0]], hi[free[0]] + 1), range(lo[free[1]], hi[free[1]] + 1)):
        ru = tu - u[free[0]] * a - u[free[1]] * b
        rv = tv - v[free[0]] * a - v[free[1]] * b
        ni = ru * v[j] - rv * u[j]
        nj = u[i] * rv - v[i] * ru
        if ni % det or nj % det:
            continue
        ci, cj = ni // det, nj // det
        if not (lo[i] <= ci <= hi[i] and lo[j] <= cj <= hi[j]):
            continue
        c = np.zeros(4, dtype=np.int64)
        c[free[0]], c[free[1]], c[i], c[j] = a, b, ci, cj
        out.append(c)
    return out


@dataclass
class EnumerationResult:
    m: int
    delta: float
    matrices: list[np.ndarray]
    stats: EnumerationStats

    def keys(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in g.ravel()) for g in self.matrices}

    def __len__(self) -> int:
        return len(self.matrices)


def enumerate_S(ctx: CountingContext, delta: float, m: int, budget: int = 2_000_000,
                theta: float = THETA) -> EnumerationResult:
    validate(m, delta)
    start = time.perf_counter()
    stats = EnumerationStats()
    tau = ctx.tau(delta)
    Q = ctx.Q
    rs = _r_vectors(ctx, m * Q[0, 0] * math.exp(-2 * tau), m * Q[0, 0] * math.exp(2 * tau), budget, stats)
    found: dict[tuple, np.ndarray] = {}
    for r in rs:
        for s in _s_vectors(ctx, r, m, tau, stats, theta):
            for gamma in _complete(ctx, r, s, m, delta, stats):
                found[tuple(int(v) for v in gamma.ravel())] = gamma
        if stats.s_candidates + stats.completions > budget:
            raise BudgetExceeded(f"more than {budget} partial candidates")
    stats.seconds = time.perf_counter() - start
    if stats.r_candidates and stats.min_discriminant <= 0:
        raise ArithmeticError("Minkowski guard violated")
    mats = [found[k] for k in sorted(found)]
    return EnumerationResult(m, delta, mats, stats)


# ---------------------------------------------------------------------------
# naive oracle
# ---------------------------------------------------------------------------

def naive_S(ctx: CountingContext, delta: float, m: int) -> EnumerationResult:
    """Two-column nested loop over a ball of integer vectors, completed by brute force.

    Uses only ``e^-tau / kappa <= |gamma~ v| / |v| <= kappa e^tau``.
    """
    validate(m, delta)
    start = time.perf_counter()
    tau = ctx.tau(delta)
    hi = m * (ctx.kappa * math.exp(tau)) ** 2 * (1 + SLOP)
    lo = m * (math.exp(-tau) / ctx.kappa) ** 2 * (1 - SLOP)
    B = math.floor(math.sqrt(hi))
    rng = np.arange(-B, B + 1)
    V = np.array(np.meshgrid(rng, rng, rng, rng, indexing="ij")).reshape(4, -1).T.astype(np.int64)
    n2 = np.einsum("ij,ij->i", V, V)
    V = V[(n2 >= lo) & (n2 <= hi)]
    P = V @ J @ V.T  # P[i, j] = v_i^T J v_j
    found = {}
    for i in range(len(V)):
        for j in np.flatnonzero(P[i] == 0):
            c3 = np.flatnonzero((P[i] == m) & (P[j] == 0))
            c4 = np.flatnonzero((P[i] == 0) & (P[j] == m))
            if not len(c3) or not len(c4):
                continue
            for a in c3:
                for b in c4[P[a, c4] == 0]:
                    gamma = np.stack([V[i], V[j], V[a], V[b]], axis=1)
                    if ctx.is_member(gamma, m, delta):
                        found[tuple(int(x) for x in gamma.ravel())] = gamma
    stats = EnumerationStats(seconds=time.perf_counter() - start)
    return EnumerationResult(m, delta, [found[k] for k in sorted(found)], stats)


def quaternion_family(m: int) -> list[np.ndarray]:
    """The matrices built from ``a_1^2 + a_2^2 + a_3^2 + a_4^2 = m``."""
    b = math.isqrt(m)
    out = []
    for a1, a2, a3, a4 in product(range(-b, b + 1), repeat=4):
        if a1 * a1 + a2 * a2 + a3 * a3 + a4 * a4 == m:
            out.append(np.array([[a1, a3, a2, a4], [-a3, a1, a4, -a2],
                                 [-a2, -a4, a1, a3], [-a4, a2, -a3, a1]], dtype=np.int64))
    return out


# ---------------------------------------------------------------------------
# residuals and the scan
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    residuals: dict
    bounds: dict
    entry_ratio: float
    entry_bound: float

    @property
    def passed(self) -> bool:
        return all(self.residuals[k] <= self.bounds[k] * (1 + 1e-9) + 1e-12 for k in self.residuals) \
            and self.entry_ratio <= self.entry_bound

    def as_dict(self) -> dict:
        return {"residuals": self.residuals, "bounds": self.bounds, "entry_ratio": self.entry_ratio,
                "entry_bound": self.entry_bound, "passed": self.passed}


def residual_check(gamma, ctx: CountingContext, delta: float, m: int) -> ResidualReport:
    """Scaled residuals of the defining quadrics and predictions, each with its ``C_g delta`` bound."""
    G = np.asarray(gamma, dtype=float)
    r, s = G[:, 0], G[:, 1]
    Q = ctx.Q
    tau = ctx.tau(delta)
    eps = math.expm1(2 * tau)
    res = {"rQr": abs(r @ Q @ r - m * Q[0, 0]) / m, "sQs": abs(s @ Q @ s - m * Q[1, 1]) / m,
           "rJs": abs(r @ JF @ s) / m, "rQs": abs(r @ Q @ s - m * Q[0, 1]) / m}
    bnd = {"rQr": eps * Q[0, 0], "sQs": eps * Q[1, 1], "rJs": 0.0, "rQs": eps * math.sqrt(Q[0, 0] * Q[1, 1])}
    v1, v2 = r @ ctx.Q1 @ r, r @ ctx.Q2 @ r
    if v1 >= v2:
        dep, free, mats, v = (0, 2), (1, 3), ctx.A, v1
    else:
        dep, free, mats, v = (1, 3), (0, 2), ctx.B, v2
    pred = [(s[free[0]] * (r @ mats[(i, 1)] @ r) + s[free[1]] * (r @ mats[(i, 2)] @ r) + m * r[dep[i - 1]] * Q[0, 1]) / v
            for i in (1, 2)]
    res["linear_prediction"] = max(abs(p - s[d]) for p, d in zip(pred, dep)) / math.sqrt(m)
    bnd["linear_prediction"] = max(abs(r[d]) for d in dep) * m * eps * math.sqrt(Q[0, 0] * Q[1, 1]) / v / math.sqrt(m)
    right = ctx.predict_right(r, s)
    res["right_half"] = float(np.max(np.abs(right - G[:, 2:].T))) / math.sqrt(m)
    bnd["right_half"] = float(np.max(ctx.right_halfwidth(delta, m))) / math.sqrt(m)
    ratio = float(np.max(np.abs(G))) / math.sqrt(m)
    return ResidualReport(res, bnd, ratio, ctx.kappa * math.exp(tau))


@dataclass
class ScanConfig:
    m_values: tuple[int, ...]
    deltas: tuple[float, ...]
    theta: float = THETA
    budget: int = 2_000_000

    def __post_init__(self):
        if not self.m_values:
            raise ValueError("empty m-range")
        if not self.deltas:
            raise ValueError("empty delta list")
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        for d in self.deltas:
            validate(1, d)


COUNT_HEADER = ("m", "delta", "count", "seconds", "budget_hit")


@dataclass
class Prop1Report:
    rows: list[tuple]
    slope: float
    monotone: bool
    lower_bound_ok: bool | None
    min_discriminant: float
    results: dict = field(repr=False, default_factory=dict)

    def as_dict(self) -> dict:
        return {"rows": len(self.rows), "slope_smallest_delta": self.slope, "monotone_in_delta": self.monotone,
                "four_square_lower_bound": self.lower_bound_ok, "min_reduced_discriminant": self.min_discriminant}


def prop1_scan(ctx: CountingContext, config: ScanConfig, lower_bound=None) -> Prop1Report:
    """Counts over ``m`` and ``delta``; slope of ``log count`` against ``log m`` at the smallest ``delta``.

    ``lower_bound(m)``, if given, is checked for odd ``m``.
    """
    from .diophantine import divisor_sigma  # noqa: F401  (re-exported for callers)
    rows, results = [], {}
    min_disc = math.inf
    for m in config.m_values:
        for d in sorted(config.deltas, reverse=True):
            try:
                res = enumerate_S(ctx, d, m, config.budget, config.theta)
                rows.append((m, d, len(res), round(res.stats.seconds, 4), 0))
                results[(m, d)] = res
                min_disc = min(min_disc, res.stats.min_discriminant)
            except BudgetExceeded:
                rows.append((m, d, -1, float("nan"), 1))
    dmin = min(config.deltas)
    pts = [(math.log(m), math.log(c)) for m, d, c, _, hit in rows if d == dmin and c > 0 and not hit and m > 1]
    slope = float(np.polyfit(*zip(*pts), 1)[0]) if len(pts) > 1 else float("nan")
    monotone = True
    for m in config.m_values:
        counts = [c for mm, d, c, _, hit in sorted(rows, key=lambda t: -t[1]) if mm == m and not hit]
        monotone &= all(a >= b for a, b in pairwise(counts))
    lb = None
    if lower_bound is not None:
        lb = all(c >= lower_bound(m) for m, d, c, _, hit in rows if m % 2 and not hit)
    return Prop1Report(rows, slope, monotone, lb, min_disc, results)
