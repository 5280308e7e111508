import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from svfbench import dist as D
from svfbench.lindley import DiscreteEvaluator, ExpMixEvaluator, Instance, run, session_identity_residual
from svfbench.pmf import GridPMF
from svfbench.sequence import svf

probs = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4)


@st.composite
def discrete_instances(draw):
    n = draw(st.integers(2, 5))
    pats = []
    for _ in range(n):
        p = np.array(draw(probs))
        offset = draw(st.integers(0, 3))
        pats.append(D.Discrete(GridPMF(1.0, offset, p / p.sum())))
    omega = draw(st.floats(0.05, 1.0))
    return Instance(tuple(pats), omega)


@st.composite
def exp_instances(draw):
    rates = draw(st.lists(st.floats(0.2, 5.0), min_size=2, max_size=6))
    return Instance(tuple(D.Exponential(r) for r in rates), draw(st.floats(0.05, 1.0)))


@settings(max_examples=60, deadline=None)
@given(discrete_instances(), st.data())
def test_identity_discrete(inst, data):
    seq = tuple(data.draw(st.permutations(range(inst.n))))
    x = np.array(data.draw(st.lists(st.integers(0, 6), min_size=inst.n, max_size=inst.n)), float)
    cb = run(DiscreteEvaluator(inst, 1.0), seq, x, inst.omega)
    assert abs(session_identity_residual(cb, inst, seq, x)) <= 1e-9
    assert all(w >= 0 for w in cb.ew) and all(i >= 0 for i in cb.ei)


@settings(max_examples=60, deadline=None)
@given(exp_instances(), st.data())
def test_identity_exponential(inst, data):
    seq = tuple(data.draw(st.permutations(range(inst.n))))
    x = np.array(data.draw(st.lists(st.floats(0, 3), min_size=inst.n, max_size=inst.n)))
    cb = run(ExpMixEvaluator.from_instance(inst), seq, x, inst.omega)
    assert abs(session_identity_residual(cb, inst, seq, x)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(exp_instances())
def test_mean_based_waiting_nondecreasing(inst):
    seq = svf(inst)
    ew = run(ExpMixEvaluator.from_instance(inst), seq, inst.means, inst.omega).ew
    assert all(b >= a - 1e-12 for a, b in zip(ew, ew[1:]))


@settings(max_examples=40, deadline=None)
@given(discrete_instances(), st.integers(1, 4))
def test_shift_invariance(inst, c):
    seq = svf(inst)
    x = np.ceil(inst.means)
    base = run(DiscreteEvaluator(inst, 1.0), seq, x, inst.omega).objective
    sh = Instance(tuple(D.Shifted(d, c) for d in inst.patients), inst.omega)
    moved = run(DiscreteEvaluator(sh, 1.0), seq, x + c, inst.omega).objective
    assert moved == base


@settings(max_examples=40, deadline=None)
@given(discrete_instances())
def test_longer_slots_reduce_waiting(inst):
    seq = svf(inst)
    x = np.ceil(inst.means)
    a = run(DiscreteEvaluator(inst, 1.0), seq, x, inst.omega)
    b = run(DiscreteEvaluator(inst, 1.0), seq, x + 1, inst.omega)
    assert b.total_wait <= a.total_wait + 1e-12
    assert b.total_idle >= a.total_idle - 1e-12
