import math

import numpy as np
import pytest

from svfbench import dist as D
from svfbench.lindley import (DiscreteEvaluator, Instance, evaluate_exact_discrete,
                              evaluate_exact_expmix, evaluate_mc, exact_evaluator, run,
                              session_identity_residual)


def _brute_force(instance, seq, x):
    """Enumerate all atom combinations of the first n-1 patients."""
    import itertools
    supp = [instance.patients[j].atoms() for j in seq[:-1]]
    ew = np.zeros(instance.n)
    ei = np.zeros(instance.n)
    for combo in itertools.product(*[range(len(v)) for v, _ in supp]):
        prob = math.prod(supp[i][1][c] for i, c in enumerate(combo))
        w = 0.0
        for i, (j, c) in enumerate(zip(seq, combo), start=1):
            v = w + supp[i - 1][0][c] - x[j]
            w = max(v, 0.0)
            ew[i] += prob * w
            ei[i] += prob * max(-v, 0.0)
    return ew, ei


def test_instance_validation():
    with pytest.raises(ValueError):
        Instance((D.Exponential(1),), 0.0)
    with pytest.raises(ValueError):
        Instance((), 0.5)
    inst = Instance((D.Exponential(1), D.Exponential(2)), 0.5)
    assert inst.n == 2
    np.testing.assert_allclose(inst.means, [1, 0.5])
    assert inst.with_omega(1.0).omega == 1.0


def test_deterministic_mean_based_is_zero():
    inst = Instance((D.PointMass(3), D.PointMass(5), D.PointMass(2)), 0.5)
    cb = evaluate_exact_discrete(inst, (0, 1, 2), inst.means, 1.0)
    assert cb.objective == 0.0
    assert cb.total_wait == 0.0 and cb.total_idle == 0.0


def test_discrete_matches_brute_force():
    inst = Instance((D.TwoPoint(0, 3, 0.4), D.ThreePointSymmetric(2, 0.5), D.TwoPoint(1, 2, 0.5)), 0.5)
    inst2 = Instance((D.TwoPoint(0, 3, 0.4),
                      D.Discrete(D.GridPMF.from_atoms([0, 2, 4], [0.25, 0.5, 0.25], 1.0)),
                      D.TwoPoint(1, 2, 0.5)), 0.5)
    x = np.array([1.0, 2.0, 1.0])
    seq = (2, 0, 1)
    cb = evaluate_exact_discrete(inst2, seq, x, 1.0)
    ew, ei = _brute_force(inst2, seq, x)
    np.testing.assert_allclose(cb.ew, ew, atol=1e-14)
    np.testing.assert_allclose(cb.ei, ei, atol=1e-14)
    assert inst.n == 3


def test_offgrid_modes():
    inst = Instance((D.TwoPoint(0, 2, 0.5), D.TwoPoint(0, 2, 0.5)), 0.5)
    with pytest.raises(ValueError):
        evaluate_exact_discrete(inst, (0, 1), [0.5, 1.0], 1.0)
    phased = evaluate_exact_discrete(inst, (0, 1), [0.5, 1.0], 1.0, offgrid="phase")
    fine = evaluate_exact_discrete(inst, (0, 1), [0.5, 1.0], 0.5)
    assert phased.objective == pytest.approx(fine.objective, abs=1e-14)


def test_expmix_matches_fine_grid():
    rates = [2.0, 1.0, 3.0]
    inst = Instance(tuple(D.Exponential(r) for r in rates), 0.5)
    x = np.array([0.6, 1.1, 0.4])
    a = evaluate_exact_expmix(rates, (2, 0, 1), x, 0.5)
    b = evaluate_exact_discrete(inst, (2, 0, 1), x, 0.002)
    assert a.objective == pytest.approx(b.objective, abs=2e-3)


def test_exact_evaluator_choice():
    inst = Instance((D.Exponential(1), D.Exponential(2)), 1.0)
    assert type(exact_evaluator(inst)).__name__ == "ExpMixEvaluator"
    assert isinstance(exact_evaluator(inst, 0.1), DiscreteEvaluator)
    with pytest.raises(ValueError):
        exact_evaluator(Instance((D.Normal(1, 1),), 1.0))


def test_session_identity():
    inst = Instance((D.Exponential(1), D.Exponential(0.5), D.Exponential(2)), 0.3)
    x = np.array([1.0, 2.5, 0.2])
    cb = run(exact_evaluator(inst), (0, 2, 1), x, 0.3)
    assert abs(session_identity_residual(cb, inst, (0, 2, 1), x)) < 1e-12
    # mean-based: total idle equals the last waiting time
    mb = run(exact_evaluator(inst), (0, 2, 1), inst.means, 0.3)
    assert mb.total_idle == pytest.approx(mb.ew[-1], abs=1e-12)


def test_mc_is_reproducible_and_close():
    inst = Instance((D.Exponential(1), D.Exponential(2), D.Exponential(0.5)), 0.5)
    x = inst.means
    a, ea = evaluate_mc(inst, (0, 1, 2), x, samples=50_000, seed=7)
    b, _ = evaluate_mc(inst, (0, 1, 2), x, samples=50_000, seed=7)
    assert a == b
    ex = run(exact_evaluator(inst), (0, 1, 2), x, 0.5)
    assert abs(a.objective - ex.objective) < 4 * ea.objective


def test_bad_sequence_and_schedule():
    inst = Instance((D.Exponential(1), D.Exponential(2)), 0.5)
    with pytest.raises(ValueError):
        evaluate_exact_expmix([1, 2], (0, 0), [1, 1], 0.5)
    with pytest.raises(ValueError):
        evaluate_exact_expmix([1, 2], (0, 1), [1, -1], 0.5)
    with pytest.raises(ValueError):
        evaluate_mc(inst, (0, 1), [1, 1], samples=0)


def test_csv_output():
    inst = Instance((D.Exponential(1), D.Exponential(2)), 0.5)
    text = run(exact_evaluator(inst), (0, 1), inst.means, 0.5).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "slot,EW,EI"
    assert lines[3] == "totalWait,totalIdle,objective"
    assert math.isfinite(float(lines[4].split(",")[2]))
