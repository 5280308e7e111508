import math

import numpy as np
import pytest

from svfbench import bounds as B
from svfbench import dist as D
from svfbench.lindley import Instance


def test_k_constants_half():
    assert B.k_constant(D.Normal(0, 1), 0.5).value == pytest.approx(math.sqrt(2 * math.pi), abs=1e-9)
    assert B.k_constant(D.Uniform(0, 1), 0.5).value == pytest.approx(4 / 3 * math.sqrt(3), abs=1e-9)
    assert B.k_constant(D.Exponential(1), 0.5).value == pytest.approx(2 / math.log(2), abs=1e-9)
    assert B.k_constant(D.Laplace(0, 1), 0.5).value == pytest.approx(2 * math.sqrt(2), abs=1e-9)


@pytest.mark.parametrize("omega", [0.1, 0.5, 0.9])
def test_pareto_closed_form_matches_quadrature(omega):
    d = D.ParetoII(0, 1, 4.0)
    a = B.k_constant(d, omega, "closed-form").value
    b = B.k_constant(d, omega, "quadrature").value
    assert a == pytest.approx(b, rel=1e-9)
    assert a >= 2


def test_k_two_point_uses_atoms():
    r = B.k_constant(D.TwoPoint(0, 1, 0.5), 0.5, "quadrature")
    assert math.isfinite(r.value)


def test_envelope():
    assert B.theorem12_envelope(Instance((D.Normal(0, 1), D.Normal(1, 2)), 1.0)).value == 2
    assert B.theorem12_envelope(Instance((D.Exponential(1), D.Exponential(2)), 1.0)).value == 4
    assert B.theorem12_envelope(Instance((D.Uniform(0, 1), D.Exponential(0.1)), 1.0)).value == math.inf


def test_normal_bounds():
    assert B.normal_f(0.0) == pytest.approx(2 / (1 + 1))
    assert B.normal_ratio_limit() == pytest.approx(4 * (math.sqrt(2) - 1))
    up, lo = B.symmetric_walk_bounds([1.0, 2.0, 3.0])
    assert all(u >= lo_ for u, lo_ in zip(up, lo))
    with pytest.raises(ValueError):
        B.normal_f(-1.0)


def test_asymmetry_split_symmetric_and_not():
    s = B.asymmetry_split(D.Normal(0, 1))
    assert s.p == pytest.approx(0.0, abs=1e-12)
    t = B.asymmetry_split(D.Exponential(1.0))
    assert 0 < t.p < 1


def test_asymmetry_split_atomic():
    # centered atoms -0.2 and 0.8 have no mirror images: the law is fully asymmetric
    assert B.asymmetry_split(D.TwoPoint(0, 1, 0.2)).p == pytest.approx(1.0)
    assert B.asymmetry_split(D.TwoPoint(0, 1, 0.5)).p == pytest.approx(0.0, abs=1e-12)


def test_theorem5_symmetric_is_two():
    inst = Instance((D.Normal(5, 1), D.Normal(5, 2), D.Normal(3, 3)), 0.5)
    r = B.theorem5_bound(inst, samples=1000)
    assert r.value == 2.0


def test_theorem5_requires_dilation():
    inst = Instance((D.Uniform(0, 1), D.Exponential(0.1)), 0.5)
    with pytest.raises(ValueError):
        B.theorem5_bound(inst, samples=1000)


def test_kingman():
    assert B.kingman(-0.5, 1.0) == 1.0
    with pytest.raises(ValueError):
        B.kingman(0.1, 1.0)


def test_theorem9_needs_lognormal():
    with pytest.raises(TypeError):
        B.theorem9_bound(Instance((D.Exponential(1), D.Exponential(2)), 0.5), 0.5)


def test_report_row():
    row = B.BoundReport("x", 1.5, ("a", "b"), "closed-form").row()
    assert row == {"name": "x", "value": 1.5, "stderr": "", "method": "closed-form", "assumptions": "a; b"}


def test_asymptotic_constant():
    assert B.asymptotic_constant() == pytest.approx(np.sqrt(2 / np.pi))
