"""Schedule rules: mean-based, slack heuristics and optimal spacing.

Schedules are arrays indexed by patient. Optimal solvers work in slot order
internally and write the result back by patient.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import dist as D
from .lindley import Instance, check_sequence

MAX_DISCRETE_N = 16


def svf_order(instance: Instance) -> tuple:
    return tuple(int(i) for i in np.argsort(instance.variances, kind="stable"))


def mean_based(instance: Instance) -> np.ndarray:
    return instance.means.copy()


def sigma_slack_alpha(instance: Instance, omega: float) -> float:
    if instance.n < 2:
        raise ValueError("need at least two patients")
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    sig = instance.sds[list(svf_order(instance))]
    head = math.fsum(sig[:-1])
    if head == 0.0:
        return 0.0
    return math.sqrt((1 - omega) / (2 * omega) + sig[-2] / (2 * head))


def sigma_slack(instance: Instance, omega: float, alpha: float | None = None):
    """x = mu + alpha * sigma; alpha=None resolves the automatic value."""
    if alpha is None:
        alpha = sigma_slack_alpha(instance, omega)
    return alpha, instance.means + alpha * instance.sds


def lognormal_multiplicative_alpha(instance: Instance, omega: float) -> float:
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    if instance.n < 2:
        raise ValueError("need at least two patients")
    for d in instance.patients:
        if type(d) is not D.Lognormal:
            raise TypeError("every patient must be lognormal")
    order = svf_order(instance)
    s = instance.patients[order[-2]].s
    return math.sqrt(math.expm1(s * s)) / math.sqrt(2 * omega)


def lognormal_multiplicative(instance: Instance, omega: float, alpha: float | None = None):
    if alpha is None:
        alpha = lognormal_multiplicative_alpha(instance, omega)
    return alpha, (1 + alpha) * instance.means


# ---------------------------------------------------------------- cost oracle


class SlotCost:
    """Objective of a fixed sequence as a function of its first n-1 slot lengths.

    Evaluations share prefixes through a small cache of Lindley states.
    """

    def __init__(self, evaluator, seq, omega: float, cache_size: int = 200_000):
        self.ev = evaluator
        self.seq = tuple(seq)
        self.omega = omega
        self.cache: dict = {(): (evaluator.start(), 0.0, 0.0)}
        self.cache_size = cache_size
        self.calls = 0

    def __call__(self, xs) -> float:
        xs = tuple(float(v) for v in xs)
        if any(v < 0 for v in xs):
            return math.inf
        self.calls += 1
        k = len(xs)
        while xs[:k] not in self.cache:
            k -= 1
        state, sw, si = self.cache[xs[:k]]
        for i in range(k, len(xs)):
            state, w, idle = self.ev.advance(state, self.seq[i], xs[i])
            sw += w
            si += idle
            if len(self.cache) >= self.cache_size:
                self.cache = {(): self.cache[()]}
            self.cache[xs[: i + 1]] = (state, sw, si)
        return self.omega * si + (1 - self.omega) * sw


def _to_schedule(seq, xs, last: float, n: int) -> np.ndarray:
    out = np.zeros(n)
    for j, v in zip(seq[:-1], xs):
        out[j] = v
    out[seq[-1]] = last
    return out


@dataclass(frozen=True)
class ScheduleResult:
    schedule: np.ndarray
    objective: float
    evaluations: int
    rounds: int


def optimal_schedule_discrete(instance: Instance, seq, omega: float, grid_step: float,
                              evaluator=None, start=None, mass_tol: float = 1e-12) -> ScheduleResult:
    """Steepest descent over the L-natural neighbourhood of the appointment times.

    The variables are the integer appointment times t_k = x_1 + ... + x_k of
    slots 2..n, in grid units. The expected cost is L-natural convex in t, so a
    point that no move t +/- 1_S improves is a global minimum. Moves that would
    make a slot length negative are infeasible.
    """
    from .lindley import DiscreteEvaluator

    if not 0.0 < omega < 1.0:
        raise ValueError("schedule optimization needs omega in (0, 1)")
    seq = check_sequence(seq, instance.n)
    n = instance.n
    if n > MAX_DISCRETE_N:
        raise ValueError(f"subset neighbourhood scan is limited to n <= {MAX_DISCRETE_N}")
    h = float(grid_step)
    ev = evaluator or DiscreteEvaluator(instance, h, mass_tol)
    cost = SlotCost(ev, seq, omega)
    means = instance.means
    last = h * round(means[seq[-1]] / h)
    if n == 1:
        return ScheduleResult(_to_schedule(seq, (), last, n), 0.0, 0, 0)
    m = n - 1
    if start is None:
        x0 = [max(0, int(round(means[j] / h))) for j in seq[:-1]]
    else:
        x0 = [max(0, int(round(start[j] / h))) for j in seq[:-1]]
    t = tuple(itertools.accumulate(x0))

    def f(tt):
        xs = np.diff((0,) + tt)
        if np.any(xs < 0):
            return math.inf
        return cost(tuple(h * xs))

    memo = {t: f(t)}
    masks = [np.array([(s >> i) & 1 for i in range(m)]) for s in range(1, 1 << m)]
    rounds = 0
    while True:
        rounds += 1
        cur = memo[t]
        thresh = cur - 1e-13 * max(1.0, abs(cur))
        best = None
        ta = np.asarray(t)
        for mask in masks:
            for d in (1, -1):
                nt = tuple(int(a) for a in ta + d * mask)
                v = memo.get(nt)
                if v is None:
                    v = memo[nt] = f(nt)
                if v < thresh:
                    key = (v, np.diff((0,) + nt).tolist(), nt)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        t = best[2]
    xs = h * np.diff((0,) + t)
    return ScheduleResult(_to_schedule(seq, xs, last, n), memo[t], cost.calls, rounds)


def _golden(fun, lo, hi, tol):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    xm = (a + b) / 2
    return xm, fun(xm)


def optimal_schedule_continuous(instance: Instance, seq, omega: float, tol: float = 1e-8,
                                evaluator=None, start=None, coord_tol: float = 1e-10,
                                max_cycles: int = 500) -> ScheduleResult:
    """Cyclic coordinate descent with golden-section line searches."""
    from .lindley import exact_evaluator

    if not 0.0 < omega < 1.0:
        raise ValueError("schedule optimization needs omega in (0, 1)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    seq = check_sequence(seq, instance.n)
    n = instance.n
    ev = evaluator or exact_evaluator(instance)
    cost = SlotCost(ev, seq, omega)
    means, sds = instance.means, instance.sds
    x = list(means[list(seq[:-1])] if start is None else np.asarray(start)[list(seq[:-1])])
    last = float(means[seq[-1]])
    if n == 1:
        return ScheduleResult(_to_schedule(seq, (), last, n), 0.0, 0, 0)
    cur = cost(x)
    cycles = 0
    while cycles < max_cycles:
        cycles += 1
        prev = cur
        for i in range(n - 1):
            j = seq[i]
            hi = max(2 * x[i], x[i] + means[j] + 6 * sds[j] + 1e-9)

            def line(v, i=i):
                y = list(x)
                y[i] = v
                return cost(y)

            for _ in range(60):
                v, fv = _golden(line, 0.0, hi, coord_tol)
                if v < hi - 10 * coord_tol:
                    break
                hi *= 2
            else:
                raise RuntimeError("bracket expansion failed: cost does not increase")
            if fv <= cur:
                x[i], cur = v, fv
        if prev - cur < tol:
            break
    return ScheduleResult(_to_schedule(seq, x, last, n), cur, cost.calls, cycles)
