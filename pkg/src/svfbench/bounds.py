"""Computable performance bounds for the SVF rule.

Every function returns a :class:`BoundReport` (or a plain number for the
elementary constants). Monte Carlo reports carry a standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, stats

from . import dist as D
from .lindley import Instance
from .schedule import lognormal_multiplicative_alpha, svf_order

SQRT_2PI = math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    assumptions: tuple = ()
    method: str = "closed-form"
    stderr: float | None = None
    details: dict = field(default_factory=dict, compare=False)

    def row(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "stderr": "" if self.stderr is None else self.stderr,
            "method": self.method,
            "assumptions": "; ".join(self.assumptions),
        }


# ---------------------------------------------------------------- newsvendor constant


def standardized(d: D.ServiceDistribution) -> D.ServiceDistribution:
    if d.var == 0:
        raise ValueError("a degenerate law has no standardized shape")
    return D.Shifted(D.Scaled(d, 1.0 / d.sd), -d.mean / d.sd)


def newsvendor_density(z: D.ServiceDistribution, omega: float) -> float:
    """omega E(Z - q)^- + (1 - omega) E(Z - q)^+ at q = Q_Z(1 - omega), by quadrature."""
    q = D.quantile(z, 1 - omega)
    if D.is_atomic(z):
        v, p = z.atoms()
        return float(omega * np.dot(np.maximum(q - v, 0), p) + (1 - omega) * np.dot(np.maximum(v - q, 0), p))
    lo, hi = z.support()
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    # split at 0 to help with kinks of the density at the mode of symmetric laws
    def piece(fun, a, b):
        cuts = [a] + [c for c in (0.0,) if a < c < b] + [b]
        return math.fsum(integrate.quad(fun, s, t, **opts)[0] for s, t in zip(cuts, cuts[1:]))

    plus = piece(lambda t: float(z.sf(t)), q, hi)
    minus = piece(lambda t: float(z.cdf(t)), lo, q)
    return omega * minus + (1 - omega) * plus


def _closed_form_k(b, omega):
    if isinstance(b, D.Normal):
        return math.sqrt(2 * omega) / stats.norm.pdf(stats.norm.ppf(1 - omega))
    if isinstance(b, D.Uniform):
        return math.sqrt(2 * omega) / (math.sqrt(3) * omega * (1 - omega))
    if isinstance(b, D.Exponential):
        return math.sqrt(2 * omega) / (-omega * math.log(omega))
    if isinstance(b, D.Laplace):
        s = 1 / math.sqrt(2)
        if omega <= 0.5:
            den = omega * s * (1 + math.log(1 / (2 * omega)))
        else:
            den = (1 - omega) * s * (1 + math.log(1 / (2 * (1 - omega))))
        return math.sqrt(2 * omega) / den
    if isinstance(b, D.ParetoII):
        be = b.beta
        return math.sqrt(2 * omega / (be * (be - 2))) / (omega ** (1 - 1 / be) - omega)
    return None


def k_constant(family: D.ServiceDistribution, omega: float, method: str = "auto") -> BoundReport:
    """K(B, omega) = sqrt(2 omega) / [omega E B(omega)^- + (1 - omega) E B(omega)^+].

    ``family`` may be any member of the location-scale family; it is
    standardized first. ``method`` is "auto", "closed-form" or "quadrature".
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    b = D.base_law(family)
    plain = family is b or not isinstance(family, D.Negated)
    if method in ("auto", "closed-form") and plain and not _has_negation(family):
        v = _closed_form_k(b, omega)
        if v is not None:
            return BoundReport("K", v, (f"family={type(b).__name__}",), "closed-form")
        if method == "closed-form":
            raise ValueError(f"no closed form for {type(b).__name__}")
    den = newsvendor_density(standardized(family), omega)
    if den <= 0:
        raise ZeroDivisionError("degenerate family: newsvendor term is zero")
    return BoundReport("K", math.sqrt(2 * omega) / den, (f"family={type(b).__name__}",), "quadrature")


def _has_negation(d) -> bool:
    while isinstance(d, (D.Shifted, D.Scaled, D.Negated)):
        if isinstance(d, D.Negated):
            return True
        d = d.base
    return False


def _shape_of(instance: Instance):
    keys = []
    for d in instance.patients:
        k = D.location_scale_key(d)
        if k is None:
            raise ValueError("patient law has no location-scale description")
        keys.append(k)
    tags = {k[0] for k in keys if k[0] != ("point",)}
    if len(tags) > 1:
        raise ValueError("patients do not share a location-scale family")
    shape = next((d for d, k in zip(instance.patients, keys) if k[0] != ("point",)), None)
    return shape


def _head_sigma(instance: Instance) -> float:
    sig = np.sort(instance.sds)
    return math.fsum(sig[:-1])


def newsvendor_lower(instance: Instance, omega: float) -> BoundReport:
    """[omega E B(omega)^- + (1 - omega) E B(omega)^+] * sum_{i<n} sigma_i."""
    shape = _shape_of(instance)
    if shape is None:
        return BoundReport("newsvendor_lower", 0.0, ("deterministic",))
    den = math.sqrt(2 * omega) / k_constant(shape, omega).value
    return BoundReport("newsvendor_lower", den * _head_sigma(instance), ("location-scale",))


def svf_upper(instance: Instance, omega: float) -> BoundReport:
    """sqrt(2 omega) * sum_{i<n} sigma_i, valid for SVF with the sigma-slack schedule."""
    _shape_of(instance)
    return BoundReport("svf_upper", math.sqrt(2 * omega) * _head_sigma(instance), ("location-scale",))


# ---------------------------------------------------------------- mean-based envelopes


def theorem12_envelope(instance: Instance) -> BoundReport:
    """2 under dilation order plus symmetry, 4 under dilation order alone, else inf."""
    cert = D.check_dilation_order(instance.patients)
    if not cert.proven:
        return BoundReport("envelope", math.inf, ("dilation Unknown", "no bound"))
    if all(D.is_symmetric(d) for d in instance.patients):
        return BoundReport("envelope", 2.0, (f"dilation Proven ({cert.rule})", "symmetric"))
    return BoundReport("envelope", 4.0, (f"dilation Proven ({cert.rule})",))


def normal_f(c):
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("c must be nonnegative")
    a, b = np.sqrt(c + 1), np.sqrt(c)
    out = 2 * (a + b) / (a + np.sqrt(c / 2) + np.sqrt(c / 2 + 1))
    return float(out) if out.ndim == 0 else out


def normal_ratio_limit() -> float:
    return 4 * (math.sqrt(2) - 1)


def symmetric_walk_bounds(sigmas):
    """Per-k bounds on E W_{k+1} for normal services under mean-based schedules.

    upper[k-1] bounds SVF; lower[k-1] bounds any sequence whose first k slots
    hold the k smallest variances.
    """
    sig = np.sort(np.asarray(sigmas, dtype=float))
    cum = np.cumsum(sig**2)
    upper, lower = [], []
    for k in range(1, sig.size + 1):
        sk = math.sqrt(cum[k - 1])
        sk1sq = cum[k - 2] if k >= 2 else 0.0
        upper.append((sk + math.sqrt(sk1sq)) / SQRT_2PI)
        lower.append((sk + math.sqrt(sk1sq / 2) + math.sqrt(sk1sq / 2 + sig[k - 1] ** 2)) / (2 * SQRT_2PI))
    return upper, lower


# ---------------------------------------------------------------- asymmetry split


@dataclass(frozen=True)
class AsymmetrySplit:
    """Split of a centered law X into a symmetric part and an asymmetric part.

    g(x) = min(f(x), f(-x)) is the symmetric part and h = f - g the rest; p is
    the mass of h. ``accept(x)`` is h(x)/f(x), the probability that a draw x
    of X is kept as the asymmetric contribution A J. Atomic laws use their
    mass function in place of f.
    """

    law: D.ServiceDistribution
    mean: float
    p: float
    description: str

    def _atom_table(self):
        v, pv = self.law.atoms()
        c = v - self.mean
        mirror = np.array([_mass_at(c, pv, -t) for t in c])
        return c, pv, 1 - np.minimum(1.0, mirror / pv)

    def accept(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if D.is_atomic(self.law):
            c, _, acc = self._atom_table()
            idx = np.clip(np.searchsorted(c, x - 1e-9), 0, c.size - 1)
            if not np.allclose(c[idx], x, atol=1e-9):
                raise ValueError("value is not an atom of the law")
            return acc[idx]
        fx = np.asarray(self.law.pdf(x + self.mean), dtype=float)
        fm = np.asarray(self.law.pdf(-x + self.mean), dtype=float)
        ratio = np.divide(fm, fx, out=np.ones_like(fx), where=fx > 0)
        return 1 - np.minimum(1.0, ratio)

    def sample(self, rng, size):
        """Joint draw of (X, A J)."""
        if D.is_atomic(self.law):
            c, pv, acc = self._atom_table()
            idx = np.minimum(np.searchsorted(np.cumsum(pv), rng.random(size), side="right"), c.size - 1)
            x, a = c[idx], acc[idx]
        else:
            x = np.asarray(self.law.sample(rng, size), dtype=float) - self.mean
            a = self.accept(x)
        keep = rng.random(size) < a
        return x, np.where(keep, x, 0.0)


def _mass_at(c, p, t, tol=1e-9):
    hit = np.abs(c - t) <= tol
    return float(p[hit].sum())


def asymmetry_split(d: D.ServiceDistribution) -> AsymmetrySplit:
    mu = d.mean
    if D.is_atomic(d):
        v, p = d.atoms()
        c = v - mu
        g = math.fsum(min(pv, _mass_at(c, p, -cv)) for cv, pv in zip(c, p))
        return AsymmetrySplit(d, mu, float(max(0.0, 1 - g)), "pmf split on the symmetrized grid")
    if D.is_symmetric(d):
        return AsymmetrySplit(d, mu, 0.0, "symmetric family")
    lo, hi = d.support()
    # g vanishes outside [-r, r]
    r = min(mu - lo, hi - mu)

    def fun(t):
        return min(float(d.pdf(t + mu)), float(d.pdf(mu - t)))

    g = 2 * integrate.quad(fun, 0, r, limit=400, epsabs=1e-12)[0]
    return AsymmetrySplit(d, mu, float(max(0.0, 1 - g)), "density split g=min(f(x),f(-x))")


def theorem5_bound(instance: Instance, samples: int = 1_000_000, seed: int = 0,
                   batch: int = 250_000, require_dilation: bool = True) -> BoundReport:
    """2 + 2 max_k E|A_1J_1+...+A_kJ_k| / E|X_1+...+X_k| in SVF order, by simulation."""
    cert = D.check_dilation_order(instance.patients)
    if require_dilation and not cert.proven:
        raise ValueError("the asymmetry bound needs a dilation certificate")
    order = svf_order(instance)
    splits = [asymmetry_split(instance.patients[j]) for j in order]
    assumptions = (f"dilation {cert.status.value}",)
    if all(s.p == 0.0 for s in splits):
        return BoundReport("theorem5", 2.0, assumptions + ("symmetric",), "closed-form",
                           details={"p": [0.0] * len(splits)})
    if all(instance.patients[j].var == 0 for j in order):
        raise ZeroDivisionError("all-deterministic instance")
    n = len(splits)
    rng = np.random.default_rng(seed)
    s_a = np.zeros(n)
    s_x = np.zeros(n)
    s_aa = np.zeros(n)
    s_xx = np.zeros(n)
    s_ax = np.zeros(n)
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        sx = np.zeros(m)
        sa = np.zeros(m)
        for k, sp in enumerate(splits):
            x, aj = sp.sample(rng, m)
            sx += x
            sa += aj
            ax, aa = np.abs(sx), np.abs(sa)
            s_a[k] += aa.sum()
            s_x[k] += ax.sum()
            s_aa[k] += np.dot(aa, aa)
            s_xx[k] += np.dot(ax, ax)
            s_ax[k] += np.dot(aa, ax)
        done += m
    N = samples
    ea, ex = s_a / N, s_x / N
    va = s_aa / N - ea**2
    vx = s_xx / N - ex**2
    cov = s_ax / N - ea * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ex > 0, ea / ex, 0.0)
        var_r = (va / ex**2 + ea**2 * vx / ex**4 - 2 * ea * cov / ex**3) / N
    k = int(np.argmax(ratio))
    se = 2 * math.sqrt(max(float(var_r[k]), 0.0))
    return BoundReport("theorem5", 2 + 2 * float(ratio[k]), assumptions,
                       f"monte-carlo(seed={seed}, samples={samples})", se,
                       details={"argmax_k": k + 1, "ratios": ratio.tolist(),
                                "p": [s.p for s in splits]})


# ---------------------------------------------------------------- other bounds


def kingman(mean_step: float, var_step: float) -> float:
    """Upper bound Var(Y) / (2|E Y|) on the expected maximum of a negative-drift walk."""
    if not mean_step < 0:
        raise ValueError("Kingman's bound needs a negative drift")
    if var_step < 0:
        raise ValueError("variance must be nonnegative")
    return var_step / (2 * -mean_step)


def theorem9_bound(instance: Instance, omega: float) -> BoundReport:
    """2 omega alpha / [(1-omega) P(Z >= z - s_1) - omega P(Z <= z - s_1)], z = Q_Z(1 - omega)."""
    for d in instance.patients:
        if type(d) is not D.Lognormal:
            raise TypeError("every patient must be lognormal")
    order = svf_order(instance)
    laws = [instance.patients[j] for j in order]
    for a, b in zip(laws, laws[1:]):
        if a.m > b.m + 1e-15 or a.s**2 > b.s**2 + 1e-15:
            raise ValueError("m and s^2 must be nondecreasing in variance order")
    alpha = lognormal_multiplicative_alpha(instance, omega)
    s1 = laws[0].s
    z = stats.norm.ppf(1 - omega)
    den = float((1 - omega) * stats.norm.sf(z - s1) - omega * stats.norm.cdf(z - s1))
    det = {"alpha": alpha, "s1": s1, "s_n_minus_1": laws[-2].s, "denominator": den}
    if den <= 0:
        return BoundReport("theorem9", math.inf, ("lognormal ordered", "bound vacuous"), details=det)
    return BoundReport("theorem9", float(2 * omega * alpha / den), ("lognormal ordered",), details=det)


def asymptotic_constant() -> float:
    """E|Z| for a standard normal Z."""
    return math.sqrt(2 / math.pi)
