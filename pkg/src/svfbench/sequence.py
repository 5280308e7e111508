"""Sequence search: SVF, exhaustive enumeration and the V-shaped restriction.

Patients with identical laws are interchangeable, so enumeration walks over
type sequences and reports the canonical representative that gives the
lowest patient index to the earliest slot of each type. For schedules that do
not depend on the sequence (mean-based and the slack rules) the Lindley state
of every prefix is computed once and shared by all its completions.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dist as D
from . import schedule as S
from .lindley import Instance, exact_evaluator

log = logging.getLogger(__name__)

DEFAULT_CAP_EXP = 11
DEFAULT_CAP_DISCRETE = 8


class CapExceededError(RuntimeError):
    pass


def svf(instance: Instance) -> tuple:
    """Patients by nondecreasing variance, ties by index."""
    return S.svf_order(instance)


@dataclass(frozen=True)
class ScheduleRule:
    """kind: mean | sigma-slack | lognormal-mult | opt-discrete | opt-continuous."""

    kind: str = "mean"
    alpha: float | None = None
    grid_step: float | None = None
    tol: float = 1e-8

    KINDS = ("mean", "sigma-slack", "lognormal-mult", "opt-discrete", "opt-continuous")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown schedule rule {self.kind!r}")
        if self.kind == "opt-discrete" and self.grid_step is None:
            raise ValueError("opt-discrete needs a grid step")

    @property
    def per_sequence(self) -> bool:
        return self.kind.startswith("opt")

    def fixed_schedule(self, instance: Instance, omega: float) -> np.ndarray:
        if self.kind == "mean":
            return S.mean_based(instance)
        if self.kind == "sigma-slack":
            return S.sigma_slack(instance, omega, self.alpha)[1]
        if self.kind == "lognormal-mult":
            return S.lognormal_multiplicative(instance, omega, self.alpha)[1]
        raise ValueError("optimal rules have no sequence-independent schedule")

    def solve(self, instance: Instance, seq, omega: float, evaluator):
        if self.kind == "opt-discrete":
            r = S.optimal_schedule_discrete(instance, seq, omega, self.grid_step, evaluator)
        else:
            r = S.optimal_schedule_continuous(instance, seq, omega, self.tol, evaluator)
        return r.objective, r.schedule


@dataclass(frozen=True)
class SearchReport:
    best_seq: tuple
    best_objective: float
    svf_seq: tuple
    svf_objective: float
    ratio: float
    sequences_evaluated: int
    pruning_used: bool
    per_sequence_log: tuple | None = field(default=None, compare=False)

    def row(self) -> dict:
        return {
            "n": len(self.best_seq),
            "optimal_sequence": format_seq(self.best_seq),
            "optimal_cost": self.best_objective,
            "svf_cost": self.svf_objective,
            "ratio": self.ratio,
        }


def format_seq(seq) -> str:
    return ",".join(str(j + 1) for j in seq)


def _ratio(num: float, den: float) -> float:
    if den <= 0.0:
        return 1.0 if num <= 0.0 else math.inf
    return num / den


# ---------------------------------------------------------------- types


def patient_types(instance: Instance) -> list:
    """types[j] = smallest index of a patient with a law identical to patient j."""
    types = []
    for j, d in enumerate(instance.patients):
        for i in range(j):
            if types[i] == i and D._same_law(instance.patients[i], d):
                types.append(i)
                break
        else:
            types.append(j)
    return types


def _multiset_count(counts) -> int:
    tot = sum(counts)
    out = math.factorial(tot)
    for c in counts:
        out //= math.factorial(c)
    return out


def candidate_count(instance: Instance, prune: bool) -> int:
    types = patient_types(instance)
    members = {}
    for j, t in enumerate(types):
        members.setdefault(t, []).append(j)
    counts = {t: len(v) for t, v in members.items()}
    if prune:
        counts[types[svf(instance)[-1]]] -= 1
    return _multiset_count([c for c in counts.values() if c])


# ---------------------------------------------------------------- DFS


@dataclass
class _Job:
    instance: Instance
    rule: ScheduleRule
    omega: float
    grid_step: float | None
    offgrid: str
    mass_tol: float
    prefix: tuple
    remaining: dict  # type -> list of patient indices (ascending)
    last: int | None
    log: bool


def _make_evaluator(job: _Job):
    return exact_evaluator(job.instance, job.grid_step, job.offgrid, job.mass_tol)


def _run_job(job: _Job):
    """Evaluate every completion of ``job.prefix``; returns (count, best, svf_hit, log)."""
    ev = _make_evaluator(job)
    omega = job.omega
    results = []
    if job.rule.per_sequence:
        def leaf(seq):
            obj, _ = job.rule.solve(job.instance, seq, omega, ev)
            results.append((obj, seq))

        _walk_plain(job.prefix, job.remaining, job.last, leaf)
    else:
        x = job.rule.fixed_schedule(job.instance, omega)
        state = ev.start()
        sw = si = 0.0
        for j in job.prefix:
            state, w, i = ev.advance(state, j, float(x[j]))
            sw += w
            si += i
        _walk_shared(ev, x, omega, job.prefix, job.remaining, job.last, state, sw, si, results)
    return results


def _walk_plain(prefix, remaining, last, leaf):
    keys = sorted(k for k, v in remaining.items() if v)
    if not keys:
        leaf(prefix + ((last,) if last is not None else ()))
        return
    for k in keys:
        j = remaining[k].pop(0)
        _walk_plain(prefix + (j,), remaining, last, leaf)
        remaining[k].insert(0, j)


def _walk_shared(ev, x, omega, prefix, remaining, last, state, sw, si, results):
    keys = sorted(k for k, v in remaining.items() if v)
    todo = sum(len(remaining[k]) for k in keys) + (last is not None)
    if todo <= 1:
        # the final slot length never matters: the last patient closes the session
        tail = (last,) if last is not None else tuple(remaining[k][0] for k in keys)
        results.append((omega * si + (1 - omega) * sw, prefix + tail))
        return
    for k in keys:
        j = remaining[k].pop(0)
        nstate, w, i = ev.advance(state, j, float(x[j]))
        _walk_shared(ev, x, omega, prefix + (j,), remaining, last, nstate, sw + w, si + i, results)
        remaining[k].insert(0, j)


def _split_jobs(base: _Job, depth: int) -> list:
    jobs = [base]
    for _ in range(depth):
        nxt = []
        for job in jobs:
            keys = sorted(k for k, v in job.remaining.items() if v)
            if sum(len(job.remaining[k]) for k in keys) <= 1:
                nxt.append(job)
                continue
            for k in keys:
                rem = {kk: list(vv) for kk, vv in job.remaining.items()}
                j = rem[k].pop(0)
                nxt.append(_Job(**{**job.__dict__, "prefix": job.prefix + (j,), "remaining": rem}))
        jobs = nxt
    return jobs


def enumerate_optimal(instance: Instance, rule: ScheduleRule | None = None,
                      omega: float | None = None, prune: bool = True,
                      prune_override: bool = False, grid_step: float | None = None,
                      offgrid: str = "error", mass_tol: float = 1e-12,
                      threads: int = 1, cap: int | None = None, force: bool = False,
                      keep_log: bool = False) -> SearchReport:
    """Exact best sequence under ``rule`` by enumeration of distinct sequences.

    With ``prune`` the largest-variance patient is fixed in the last slot,
    which is sound when the laws are dilation ordered. Pruning on an
    uncertified instance needs ``prune_override``.
    """
    rule = rule or ScheduleRule("mean")
    omega = instance.omega if omega is None else omega
    grid_step = rule.grid_step if grid_step is None else grid_step
    if rule.kind == "opt-discrete" and grid_step is None:
        grid_step = rule.grid_step
    if prune:
        cert = D.check_dilation_order(instance.patients)
        if not cert.proven:
            if prune_override:
                log.warning("pruning without a dilation certificate (override)")
            else:
                log.info("no dilation certificate; searching without largest-last pruning")
                prune = False
    if cap is None:
        exp = all(type(d) is D.Exponential for d in instance.patients) and grid_step is None
        cap = DEFAULT_CAP_EXP if exp else DEFAULT_CAP_DISCRETE
    count = candidate_count(instance, prune)
    if count > math.factorial(cap - 1) and not force:
        raise CapExceededError(
            f"{count} candidate sequences exceed the cap ({math.factorial(cap - 1)}); use force")

    order = svf(instance)
    types = patient_types(instance)
    remaining: dict = {}
    for j in range(instance.n):
        remaining.setdefault(types[j], []).append(j)
    last = None
    if prune:
        last = order[-1]
        remaining[types[last]].remove(last)
        # keep the canonical representative: the fixed patient is the highest index
        grp = remaining[types[last]]
        if grp and grp[-1] > last:
            grp.append(last)
            grp.sort()
            last = grp.pop()
    base = _Job(instance, rule, omega, grid_step, offgrid, mass_tol, (), remaining, last, keep_log)

    threads = max(1, int(threads))
    if threads == 1:
        results = _run_job(base)
    else:
        jobs = _split_jobs(base, 2 if instance.n > 4 else 1)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = [r for part in pool.map(_run_job, jobs) for r in part]
    results.sort(key=lambda r: (r[0], r[1]))
    best_obj, best_seq = results[0]
    svf_canon = _canonical(order, types)
    svf_hits = [o for o, s in results if s == svf_canon]
    if svf_hits:
        svf_obj = svf_hits[0]
    else:
        svf_obj = evaluate_sequence(instance, order, rule, omega, grid_step, offgrid, mass_tol)
    return SearchReport(best_seq, best_obj, order, svf_obj, _ratio(svf_obj, best_obj),
                        len(results), prune, tuple(results) if keep_log else None)


def _canonical(seq, types) -> tuple:
    pools: dict = {}
    for j in sorted(range(len(types))):
        pools.setdefault(types[j], []).append(j)
    out = []
    for j in seq:
        out.append(pools[types[j]].pop(0))
    return tuple(out)


def evaluate_sequence(instance: Instance, seq, rule: ScheduleRule, omega: float,
                      grid_step=None, offgrid="error", mass_tol=1e-12) -> float:
    ev = exact_evaluator(instance, grid_step, offgrid, mass_tol)
    if rule.per_sequence:
        return rule.solve(instance, seq, omega, ev)[0]
    x = rule.fixed_schedule(instance, omega)
    state = ev.start()
    sw = si = 0.0
    for j in seq[:-1]:
        state, w, i = ev.advance(state, j, float(x[j]))
        sw += w
        si += i
    return omega * si + (1 - omega) * sw


def vshaped_candidates(instance: Instance):
    order = svf(instance)
    valley, rest = order[0], order[1:]
    m = len(rest)
    for mask in range(1 << m):
        left = [rest[i] for i in range(m) if mask >> i & 1]
        right = [rest[i] for i in range(m) if not mask >> i & 1]
        yield tuple(left[::-1]) + (valley,) + tuple(right)


def vshaped_best(instance: Instance, omega: float | None = None, rule: ScheduleRule | None = None,
                 grid_step=None, offgrid="error", mass_tol=1e-12) -> SearchReport:
    """Best sequence among V-shaped ones (variances fall, then rise)."""
    rule = rule or ScheduleRule("mean")
    omega = instance.omega if omega is None else omega
    order = svf(instance)
    results = []
    seen = set()
    for seq in vshaped_candidates(instance):
        if seq in seen:
            continue
        seen.add(seq)
        results.append((evaluate_sequence(instance, seq, rule, omega, grid_step, offgrid, mass_tol), seq))
    results.sort(key=lambda r: (r[0], r[1]))
    svf_obj = next(o for o, s in results if s == order)
    best_obj, best_seq = results[0]
    return SearchReport(best_seq, best_obj, order, svf_obj, _ratio(svf_obj, best_obj),
                        len(results), False)


def ratio_meanbased(instance: Instance, **kw) -> SearchReport:
    """rho: SVF cost over the best cost, both with mean-based schedules."""
    return enumerate_optimal(instance, ScheduleRule("mean"), **kw)


def ratio_optspaced(instance: Instance, grid_step: float | None = None, tol: float = 1e-8,
                    **kw) -> SearchReport:
    """r: SVF with its optimal schedule over the jointly optimal sequence and schedule."""
    if grid_step is None:
        rule = ScheduleRule("opt-continuous", tol=tol)
    else:
        rule = ScheduleRule("opt-discrete", grid_step=grid_step)
    return enumerate_optimal(instance, rule, grid_step=grid_step, **kw)


def default_threads() -> int:
    return os.cpu_count() or 1
