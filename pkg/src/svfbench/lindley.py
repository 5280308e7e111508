"""Cost of a sequence and schedule via the Lindley recursion.

Patients, sequences and schedules use 0-based indices in the Python API:
``seq[i]`` is the patient served in slot ``i`` and ``schedule[j]`` is the slot
length reserved for patient ``j``. The slot length of the last patient in the
sequence never affects the cost.

Exact evaluators are exposed as small classes with ``start()`` and
``advance(state, patient, x)`` so that sequence search can share prefixes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import dist as D
from .mixexp import MixExpLaw, lindley_step
from .pmf import GridPMF, convolve_probs

PHASE_TOL = 1e-9
MASS_LEAK = 1e-9


@dataclass(frozen=True)
class Instance:
    patients: tuple
    omega: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "patients", tuple(self.patients))
        if not self.patients:
            raise ValueError("an instance needs at least one patient")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"omega must lie in (0, 1], got {self.omega}")

    @property
    def n(self) -> int:
        return len(self.patients)

    @property
    def means(self) -> np.ndarray:
        return np.array([d.mean for d in self.patients])

    @property
    def variances(self) -> np.ndarray:
        return np.array([d.var for d in self.patients])

    @property
    def sds(self) -> np.ndarray:
        return np.sqrt(self.variances)

    def with_omega(self, omega: float) -> "Instance":
        return Instance(self.patients, omega)


@dataclass(frozen=True)
class CostBreakdown:
    ew: tuple
    ei: tuple
    total_wait: float
    total_idle: float
    objective: float
    omega: float
    service_means: tuple = field(default=(), compare=False)

    @classmethod
    def build(cls, ew, ei, omega, service_means=()):
        tw = math.fsum(ew)
        ti = math.fsum(ei)
        return cls(tuple(map(float, ew)), tuple(map(float, ei)), tw, ti,
                   omega * ti + (1 - omega) * tw, omega, tuple(service_means))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "EW", "EI"])
        for i, (a, b) in enumerate(zip(self.ew, self.ei), start=1):
            w.writerow([i, repr(a), repr(b)])
        w.writerow(["totalWait", "totalIdle", "objective"])
        w.writerow([repr(self.total_wait), repr(self.total_idle), repr(self.objective)])
        return buf.getvalue()


def check_sequence(seq, n: int) -> tuple:
    seq = tuple(int(s) for s in seq)
    if sorted(seq) != list(range(n)):
        raise ValueError(f"sequence {seq} is not a permutation of 0..{n - 1}")
    return seq


def _check_schedule(schedule, n: int) -> np.ndarray:
    x = np.asarray(schedule, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"schedule must have {n} entries")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("schedule entries must be finite and nonnegative")
    return x


def run(evaluator, seq, schedule, omega) -> CostBreakdown:
    state = evaluator.start()
    ew, ei = [0.0], [0.0]
    for j in seq[:-1]:
        state, w, i = evaluator.advance(state, j, float(schedule[j]))
        ew.append(w)
        ei.append(i)
    return CostBreakdown.build(ew, ei, omega, [evaluator.service_mean(j) for j in seq])


# ---------------------------------------------------------------- discrete grid


class PhasedLaw:
    """Law on {k*step + phase}, stored as phase -> GridPMF of k (nonnegative values)."""

    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = parts  # tuple of (phase, GridPMF), phase in [0, step)

    def mean(self) -> float:
        return math.fsum(p.mean() + ph * p.total for ph, p in self.parts)

    def total(self) -> float:
        return math.fsum(p.total for _, p in self.parts)


class DiscreteEvaluator:
    """Exact evaluation on a grid of width ``step``.

    Service laws are mapped to the grid (atomic laws exactly, others by
    nearest-bin rounding). With ``offgrid="error"`` every schedule entry must be
    a grid multiple. With ``offgrid="phase"`` off-grid entries are handled
    exactly by tracking the waiting-time law on shifted copies of the grid.
    """

    def __init__(self, instance: Instance, step: float, mass_tol: float = 1e-12,
                 offgrid: str = "error"):
        if offgrid not in ("error", "phase"):
            raise ValueError("offgrid must be 'error' or 'phase'")
        self.step = float(step)
        self.offgrid = offgrid
        self.kernels = [D.to_grid(d, self.step, mass_tol) for d in instance.patients]
        self._means = [k.mean() for k in self.kernels]

    def service_mean(self, j) -> float:
        return self._means[j]

    def start(self) -> PhasedLaw:
        return PhasedLaw(((0.0, GridPMF.point(0, self.step)),))

    def _split(self, x: float) -> tuple[int, float]:
        r = x / self.step
        q = math.floor(r + PHASE_TOL)
        f = (r - q) * self.step
        if abs(f) <= PHASE_TOL * self.step:
            f = 0.0
        if f and self.offgrid == "error":
            raise ValueError(f"schedule entry {x} is not a multiple of the grid step {self.step}")
        return q, f

    def advance(self, state: PhasedLaw, j: int, x: float):
        h = self.step
        q, f = self._split(x)
        kern = self.kernels[j]
        out: dict = {}
        atom0 = 0.0
        idle = []
        for ph, pmf in state.parts:
            probs = convolve_probs(pmf.probs, kern.probs)
            off = pmf.offset + kern.offset - q
            nph = ph - f
            if nph < 0:
                nph += h
                off -= 1
            if nph > h - PHASE_TOL * h:
                nph = 0.0
                off += 1
            elif nph < PHASE_TOL * h:
                nph = 0.0
            # cells with k*h + nph <= 0 clip to the atom at zero
            kmax = 0 if nph == 0.0 else -1
            cut = min(max(kmax - off + 1, 0), probs.size)
            if cut:
                neg = probs[:cut]
                vals = (off + np.arange(cut)) * h + nph
                idle.append(float(-np.dot(vals, neg)))
                atom0 += float(neg.sum())
                probs = probs[cut:]
                off += cut
            if probs.size:
                key = round(nph / h, 9)
                out.setdefault(key, []).append((nph, off, probs))
        if atom0 > 0:
            out.setdefault(0.0, []).append((0.0, 0, np.array([atom0])))
        parts = []
        for key in sorted(out):
            items = out[key]
            nph = items[0][0]
            lo = min(o for _, o, _ in items)
            hi = max(o + p.size for _, o, p in items)
            acc = np.zeros(hi - lo)
            for _, o, p in items:
                acc[o - lo : o - lo + p.size] += p
            parts.append((nph, GridPMF(h, lo, acc).trimmed()))
        new = PhasedLaw(tuple(parts))
        tot = new.total()
        if abs(tot - 1.0) > MASS_LEAK:
            raise FloatingPointError(f"pmf mass leak: total {tot!r}")
        return new, new.mean(), math.fsum(idle)


def evaluate_exact_discrete(instance: Instance, seq, schedule, grid_step: float,
                            mass_tol: float = 1e-12, offgrid: str = "error") -> CostBreakdown:
    seq = check_sequence(seq, instance.n)
    x = _check_schedule(schedule, instance.n)
    ev = DiscreteEvaluator(instance, grid_step, mass_tol, offgrid)
    return run(ev, seq, x, instance.omega)


# ---------------------------------------------------------------- exponential


class ExpMixEvaluator:
    def __init__(self, rates):
        self.rates = [float(r) for r in rates]
        if any(not r > 0 for r in self.rates):
            raise ValueError("rates must be positive")

    @classmethod
    def from_instance(cls, instance: Instance) -> "ExpMixEvaluator":
        rates = []
        for d in instance.patients:
            if type(d) is not D.Exponential:
                raise TypeError("the exponential evaluator needs Exponential patients")
            rates.append(d.rate)
        return cls(rates)

    def service_mean(self, j) -> float:
        return 1.0 / self.rates[j]

    def start(self) -> MixExpLaw:
        return MixExpLaw.zero()

    def advance(self, state: MixExpLaw, j: int, x: float):
        new, ei = lindley_step(state, self.rates[j], x)
        return new, new.mean(), ei


def evaluate_exact_expmix(rates, seq, schedule, omega: float) -> CostBreakdown:
    rates = list(rates)
    seq = check_sequence(seq, len(rates))
    x = _check_schedule(schedule, len(rates))
    if not 0.0 < omega <= 1.0:
        raise ValueError("omega must lie in (0, 1]")
    return run(ExpMixEvaluator(rates), seq, x, omega)


def exact_evaluator(instance: Instance, grid_step: float | None = None, offgrid: str = "error",
                    mass_tol: float = 1e-12):
    """Pick the exponential evaluator when possible, else the grid evaluator."""
    if all(type(d) is D.Exponential for d in instance.patients) and grid_step is None:
        return ExpMixEvaluator.from_instance(instance)
    if grid_step is None:
        raise ValueError("a grid step is needed for non-exponential instances")
    return DiscreteEvaluator(instance, grid_step, mass_tol, offgrid)


# ---------------------------------------------------------------- Monte Carlo


def evaluate_mc(instance: Instance, seq, schedule, omega: float | None = None,
                samples: int = 100_000, seed: int = 0, batch: int = 1_000_000):
    """Direct simulation. Returns (mean CostBreakdown, stderr CostBreakdown)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    omega = instance.omega if omega is None else omega
    seq = check_sequence(seq, instance.n)
    x = _check_schedule(schedule, instance.n)
    n = instance.n
    rng = np.random.default_rng(seed)
    s1 = np.zeros((3, n))  # rows: W, I, unused
    s2 = np.zeros((3, n))
    tot = np.zeros(3)  # wait, idle, objective
    tot2 = np.zeros(3)
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        w = np.zeros(m)
        sw = np.zeros(m)
        si = np.zeros(m)
        for i, j in enumerate(seq[:-1], start=1):
            v = w + np.asarray(instance.patients[j].sample(rng, m), dtype=float) - x[j]
            w = np.maximum(v, 0.0)
            idle = np.maximum(-v, 0.0)
            sw += w
            si += idle
            s1[0, i] += w.sum()
            s2[0, i] += np.dot(w, w)
            s1[1, i] += idle.sum()
            s2[1, i] += np.dot(idle, idle)
        obj = omega * si + (1 - omega) * sw
        for r, a in enumerate((sw, si, obj)):
            tot[r] += a.sum()
            tot2[r] += np.dot(a, a)
        done += m

    def se(s, q):
        var = np.maximum(q / samples - (s / samples) ** 2, 0.0)
        return np.sqrt(var * samples / max(samples - 1, 1) / samples)

    mean = CostBreakdown(tuple(map(float, s1[0] / samples)), tuple(map(float, s1[1] / samples)),
                         *map(float, tot / samples), omega,
                         tuple(instance.patients[j].mean for j in seq))
    sev = se(s1, s2)
    tse = se(tot, tot2)
    err = CostBreakdown(tuple(map(float, sev[0])), tuple(map(float, sev[1])), float(tse[0]), float(tse[1]),
                        float(tse[2]), omega)
    return mean, err


# ---------------------------------------------------------------- identities


def session_identity_residual(cb: CostBreakdown, instance: Instance, seq, schedule) -> float:
    """sum EI + sum mu - sum_{i<n} x - EW_n - mu_last; zero for exact evaluations.

    Means are taken from ``cb.service_means`` when present, so discretized
    laws are compared against their own grid means.
    """
    seq = check_sequence(seq, instance.n)
    mu = list(cb.service_means) if cb.service_means else [instance.patients[j].mean for j in seq]
    xs = [float(schedule[j]) for j in seq[:-1]]
    return math.fsum(list(cb.ei) + mu + [-v for v in xs] + [-cb.ew[-1], -mu[-1]])
