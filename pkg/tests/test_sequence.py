import itertools
import math

import pytest

from svfbench import dist as D
from svfbench.lindley import Instance, exact_evaluator, run
from svfbench.sequence import (CapExceededError, ScheduleRule, candidate_count,
                               enumerate_optimal, format_seq, patient_types, svf,
                               vshaped_best, vshaped_candidates)


def _exp(n, omega=1.0):
    return Instance(tuple(D.Exponential(n - i) for i in range(n)), omega)


def test_format_seq_is_one_based():
    assert format_seq((1, 0, 2)) == "2,1,3"


def test_types_and_counts():
    tp = D.TwoPoint(0, 1, 0.5)
    inst = Instance((tp, tp, D.Scaled(tp, 3), D.Scaled(tp, 3)), 1.0)
    assert len(set(patient_types(inst))) == 2
    assert candidate_count(inst, prune=False) == 6
    assert candidate_count(inst, prune=True) == 3


def test_search_matches_plain_enumeration():
    inst = _exp(5)
    ev = exact_evaluator(inst)
    costs = {p: run(ev, p, inst.means, 1.0).objective for p in itertools.permutations(range(5))}
    best = min(costs.values())
    rep = enumerate_optimal(inst, prune=False)
    assert rep.best_objective == pytest.approx(best, abs=1e-14)
    assert rep.sequences_evaluated == 120
    pruned = enumerate_optimal(inst)
    assert pruned.best_objective == pytest.approx(best, abs=1e-14)
    assert pruned.pruning_used and pruned.sequences_evaluated == 24
    assert rep.svf_seq == svf(inst)


def test_threads_do_not_change_result():
    inst = _exp(6)
    a = enumerate_optimal(inst, threads=1)
    b = enumerate_optimal(inst, threads=2)
    assert a.best_seq == b.best_seq and a.best_objective == b.best_objective


def test_uncertified_instance_is_not_pruned():
    inst = Instance((D.Uniform(0, 1), D.Exponential(0.4), D.Normal(2, 0.1)), 1.0)
    rep = enumerate_optimal(inst, grid_step=0.05, offgrid="phase")
    assert not rep.pruning_used
    assert rep.sequences_evaluated == 6


def test_cap_refusal_and_force():
    inst = _exp(12)
    with pytest.raises(CapExceededError):
        enumerate_optimal(inst)
    small = _exp(6)
    with pytest.raises(CapExceededError):
        enumerate_optimal(small, cap=4)
    assert enumerate_optimal(small, cap=4, force=True).sequences_evaluated == 120


def test_optimized_schedule_rule():
    inst = _exp(4, 0.5)
    rep = enumerate_optimal(inst, ScheduleRule("opt-continuous"))
    assert rep.ratio >= 1.0
    assert math.isfinite(rep.best_objective)


def test_rule_validation():
    with pytest.raises(ValueError):
        ScheduleRule("bogus")


def test_vshaped():
    inst = _exp(6)
    cands = list(vshaped_candidates(inst))
    assert len(cands) == 2 ** 5
    rep = vshaped_best(inst)
    full = enumerate_optimal(inst)
    assert rep.best_objective == pytest.approx(full.best_objective, abs=1e-14)
