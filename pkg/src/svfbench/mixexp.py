"""Exact waiting-time laws under exponential service.

The law of W is kept as an atom at zero plus a density on t > 0 of the form
sum_j c_j t^k_j exp(-r_j t). This family is closed under the Lindley map
W -> (W + B - x)^+ with B exponential. Equal rates produce polynomial factors
instead of a division by zero, so repeated rates are handled exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb, factorial, fsum

import numpy as np
from scipy import special

MASS_TOL = 1e-9


@dataclass(frozen=True)
class MixExpLaw:
    atom: float
    terms: tuple  # of (coef, rate, power)

    @classmethod
    def zero(cls) -> "MixExpLaw":
        return cls(1.0, ())

    def mass(self) -> float:
        return fsum([self.atom] + [c * factorial(k) / r ** (k + 1) for c, r, k in self.terms])

    def mean(self) -> float:
        return fsum(c * factorial(k + 1) / r ** (k + 2) for c, r, k in self.terms)

    def sf(self, t: float) -> float:
        """P(W > t) for t >= 0."""
        return fsum(_tail(c, r, k, t) for c, r, k in self.terms)

    def cdf(self, t: float) -> float:
        if t < 0:
            return 0.0
        return 1.0 - self.sf(t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, r, k in self.terms:
            out += c * t**k * np.exp(-r * t)
        return out

    def check(self, probes: int = 64) -> None:
        m = self.mass()
        if abs(m - 1.0) > MASS_TOL:
            raise FloatingPointError(f"mixture mass {m!r} drifted from 1")
        if not self.terms:
            return
        rmin = min(r for _, r, _ in self.terms)
        ts = np.logspace(-4, 2, probes) / rmin
        cdf = np.array([self.cdf(t) for t in ts])
        if cdf[0] < self.atom - MASS_TOL or np.any(np.diff(cdf) < -MASS_TOL):
            raise FloatingPointError("mixture cdf is not monotone")


def _tail(c, r, k, t):
    # integral_t^inf c s^k e^{-rs} ds = c k! / r^{k+1} * Q(k+1, r t)
    return c * factorial(k) / r ** (k + 1) * special.gammaincc(k + 1, r * t)


def _head(c, r, k, t):
    return c * factorial(k) / r ** (k + 1) * special.gammainc(k + 1, r * t)


def _collect(parts) -> tuple:
    acc: dict = {}
    for c, r, k in parts:
        acc.setdefault((r, k), []).append(c)
    out = []
    for (r, k), cs in sorted(acc.items()):
        c = fsum(cs)
        if c != 0.0:
            out.append((c, r, k))
    return tuple(out)


def add_exponential(law: MixExpLaw, lam: float) -> list:
    """Density terms of W + B for B ~ Exp(lam); the result has no atom."""
    parts = [(law.atom * lam, lam, 0)]
    for c, r, k in law.terms:
        if r == lam:
            parts.append((c * lam / (k + 1), lam, k + 1))
            continue
        d = r - lam
        # c*lam*e^{-lam t} * int_0^t s^k e^{-d s} ds
        base = c * lam * factorial(k) / d ** (k + 1)
        parts.append((base, lam, 0))
        for j in range(k + 1):
            parts.append((-base * d**j / factorial(j), r, j))
    return parts


def shift_clip(parts, x: float) -> MixExpLaw:
    """Law of (V - x)^+ where V has the given density terms on t > 0."""
    if x < 0:
        raise ValueError("negative slot length")
    out = []
    for c, r, k in parts:
        e = c * math.exp(-r * x)
        for j in range(k + 1):
            out.append((e * comb(k, j) * x ** (k - j), r, j))
    terms = _collect(out)
    tail = fsum(c * factorial(k) / r ** (k + 1) for c, r, k in terms)
    head = fsum(_head(c, r, k, x) for c, r, k in parts)
    atom = 1.0 - tail
    if abs(atom - head) > MASS_TOL:
        raise FloatingPointError(f"mass conservation failed: {atom!r} vs {head!r}")
    return MixExpLaw(max(atom, 0.0), terms)


def lindley_step(law: MixExpLaw, lam: float, x: float) -> tuple[MixExpLaw, float]:
    """Return (law of W', E I') for W' = (W + B - x)^+, B ~ Exp(lam)."""
    new = shift_clip(add_exponential(law, lam), x)
    ei = new.mean() - law.mean() - 1.0 / lam + x
    return new, max(ei, 0.0)
