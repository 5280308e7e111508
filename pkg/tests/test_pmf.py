import numpy as np
import pytest

from svfbench.pmf import GridPMF, clip_negatives, convolve, convolve_probs


def test_point_and_moments():
    p = GridPMF.point(3, 0.5)
    assert p.mean() == 1.5
    assert p.var() == 0.0
    assert p.total == 1.0


def test_from_atoms_on_grid():
    p = GridPMF.from_atoms([0.0, 1.0, 3.0], [0.2, 0.5, 0.3], 1.0)
    assert p.offset == 0
    np.testing.assert_allclose(p.probs, [0.2, 0.5, 0.0, 0.3])
    assert p.mean() == pytest.approx(1.4)


def test_from_atoms_off_grid_raises():
    with pytest.raises(ValueError):
        GridPMF.from_atoms([0.3], [1.0], 1.0)


def test_cdf_right_continuous():
    p = GridPMF.from_atoms([0.0, 2.0], [0.25, 0.75], 1.0)
    assert p.cdf(-0.1) == 0.0
    assert p.cdf(0.0) == 0.25
    assert p.cdf(1.9) == 0.25
    assert p.cdf(2.0) == 1.0


@pytest.mark.parametrize("na,nb", [(3, 4), (50, 60), (3000, 3000)])
def test_convolve_paths_agree(na, nb):
    rng = np.random.default_rng(na)
    a = rng.random(na)
    b = rng.random(nb)
    a /= a.sum()
    b /= b.sum()
    np.testing.assert_allclose(convolve_probs(a, b), np.convolve(a, b), atol=1e-14)


def test_convolve_moments_add():
    a = GridPMF.from_atoms([0, 1, 2], [0.3, 0.3, 0.4], 1.0)
    b = GridPMF.from_atoms([-1, 4], [0.5, 0.5], 1.0)
    c = convolve(a, b)
    assert c.total == pytest.approx(1.0)
    assert c.mean() == pytest.approx(a.mean() + b.mean())
    assert c.var() == pytest.approx(a.var() + b.var())


def test_convolve_step_mismatch():
    with pytest.raises(ValueError):
        convolve(GridPMF.point(0, 1.0), GridPMF.point(0, 0.5))


def test_clip_negatives_small_and_large():
    p = np.array([0.5, -1e-17, 0.5])
    out = clip_negatives(p)
    assert out.min() >= 0
    assert out.sum() == pytest.approx(1.0)
    with pytest.raises(FloatingPointError):
        clip_negatives(np.array([0.5, -1e-3, 0.5]))


def test_symmetry_and_negation():
    p = GridPMF.from_atoms([-1, 0, 1], [0.25, 0.5, 0.25], 1.0)
    assert p.is_symmetric()
    q = GridPMF.from_atoms([0, 1, 3], [0.2, 0.5, 0.3], 1.0)
    assert q.negated().mean() == pytest.approx(-q.mean())
    assert not q.is_symmetric()


def test_equality_and_hash():
    a = GridPMF.from_atoms([0, 1], [0.5, 0.5], 1.0)
    b = GridPMF.from_atoms([0, 1], [0.5, 0.5], 1.0)
    assert a == b and hash(a) == hash(b)
