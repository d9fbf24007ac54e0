"""Exponent bookkeeping for the amplified pre-trace bound.

With savings ``eta, B`` in the matrix count, the two contributions are
``||mu||^(7/2) delta^(-1/2) L^B`` (matrices far from ``gKg^-1``) and
``||mu||^4 L^(4+eps) (1 + delta^eta L^B)`` (near ones).  The choice

    delta^(1/2 + eta) = ||mu||^(-1/2),    L = ceil(delta^(-eta/B))

balances them, and the amplified bound ``|F|^2 << ||mu||^4 L^(-3/4)`` gives the
exponent below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


def _check(eta: float, B: float) -> None:
    if not (eta > 0 and B > 0) or not (math.isfinite(eta) and math.isfinite(B)):
        raise ValueError("eta and B must be positive and finite")


def saving(eta: float, B: float) -> float:
    """``3 eta / (4 B (1 + 2 eta))``."""
    _check(eta, B)
    return 3 * eta / (4 * B * (1 + 2 * eta))


def sup_norm_exponent(eta: float, B: float) -> float:
    """``2 - 3 eta / (4 B (1 + 2 eta))``."""
    return 2 - saving(eta, B)


def choose_delta(mu_norm: float, eta: float) -> float:
    return mu_norm ** (-1 / (1 + 2 * eta))


def choose_L(delta: float, eta: float, B: float) -> int:
    return math.ceil(delta ** (-eta / B))


@dataclass
class ExponentReport:
    eta: float
    B: float
    exponent: float
    squared_exponent: float
    chain: list[dict]

    def lines(self) -> list[str]:
        out = [f"eta = {self.eta!r}, B = {self.B!r}",
               "delta(mu) = ||mu||^(-1/(1+2 eta))   [delta^(1/2+eta) = ||mu||^(-1/2)]",
               "L(mu) = ceil(delta^(-eta/B))",
               f"L ~ ||mu||^(eta/(B(1+2eta))) = ||mu||^{self.eta / (self.B * (1 + 2 * self.eta)):.12g}",
               f"|F|^2 << ||mu||^4 L^(-3/4) = ||mu||^{self.squared_exponent:.12g}",
               f"exponent = 2 - 3 eta/(4B(1+2eta)) = {self.exponent:.12g}",
               f"(half of the squared-bound exponent: {self.squared_exponent / 2:.12g})"]
        for row in self.chain:
            out.append("  ||mu|| = {mu:.3g}: delta = {delta:.6g}, L = {L}, "
                       "log(||mu||^4 L^-3/4)/log||mu|| = {effective:.6f}".format(**row))
        return out

    def as_dict(self) -> dict:
        return {"eta": self.eta, "B": self.B, "exponent": self.exponent,
                "squared_bound_exponent": self.squared_exponent,
                "half_squared_exponent": self.squared_exponent / 2, "chain": self.chain}


def exponent_report(eta: float, B: float, mu_samples=(1e3, 1e6, 1e12, 1e24)) -> ExponentReport:
    """The selection rules evaluated at a few ``||mu||`` and the limiting exponent."""
    s = saving(eta, B)
    chain = []
    for mu in mu_samples:
        d = choose_delta(mu, eta)
        L = choose_L(d, eta, B)
        eff = 4 - 0.75 * math.log(L) / math.log(mu)
        chain.append({"mu": mu, "delta": d, "L": L, "effective": eff})
    return ExponentReport(eta, B, 2 - s, 4 - s, chain)
