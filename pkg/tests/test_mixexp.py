import math

import numpy as np
import pytest
from scipy import integrate

from svfbench.mixexp import MixExpLaw, add_exponential, lindley_step, shift_clip


def _mc_lindley(rates, xs, samples=400_000, seed=0):
    rng = np.random.default_rng(seed)
    w = np.zeros(samples)
    ews, eis = [], []
    for lam, x in zip(rates, xs):
        v = w + rng.exponential(1 / lam, samples) - x
        w = np.maximum(v, 0.0)
        ews.append(w.mean())
        eis.append(np.maximum(-v, 0).mean())
    return ews, eis


def test_zero_law():
    z = MixExpLaw.zero()
    assert z.mass() == 1.0
    assert z.mean() == 0.0
    assert z.sf(0.5) == 0.0


def test_single_step_closed_form():
    # W' = (B - x)^+ with B ~ Exp(lam): P(W' > t) = exp(-lam (t + x))
    lam, x = 2.0, 0.7
    law, ei = lindley_step(MixExpLaw.zero(), lam, x)
    assert law.atom == pytest.approx(1 - math.exp(-lam * x))
    assert law.mean() == pytest.approx(math.exp(-lam * x) / lam)
    assert ei == pytest.approx(x - 1 / lam + math.exp(-lam * x) / lam)


def test_duplicate_rates_exact():
    law = MixExpLaw.zero()
    for x in (0.0, 0.0):
        law, _ = lindley_step(law, 1.0, x)
    # with zero slots W_3 = B1 + B2 ~ Gamma(2, 1)
    assert law.mean() == pytest.approx(2.0)
    assert law.sf(1.0) == pytest.approx(2 * math.exp(-1.0))
    law.check()


def test_against_simulation():
    rates, xs = [3.0, 1.0, 1.0, 2.0, 0.5], [0.4, 1.0, 0.8, 0.6, 1.5]
    law = MixExpLaw.zero()
    ews, eis = [], []
    for lam, x in zip(rates, xs):
        law, ei = lindley_step(law, lam, x)
        ews.append(law.mean())
        eis.append(ei)
    mw, mi = _mc_lindley(rates, xs)
    np.testing.assert_allclose(ews, mw, atol=6e-3)
    np.testing.assert_allclose(eis, mi, atol=6e-3)


def test_pdf_integrates_to_continuous_mass():
    law = MixExpLaw.zero()
    for lam, x in [(2.0, 0.3), (1.0, 0.2), (1.0, 0.5)]:
        law, _ = lindley_step(law, lam, x)
    total, _ = integrate.quad(law.pdf, 0, np.inf)
    assert total + law.atom == pytest.approx(1.0, abs=1e-9)
    assert law.cdf(0.0) == pytest.approx(law.atom)


def test_add_then_clip_at_zero_is_convolution_mean():
    law = MixExpLaw.zero()
    law, _ = lindley_step(law, 1.0, 0.0)
    parts = add_exponential(law, 2.0)
    out = shift_clip(parts, 0.0)
    assert out.mean() == pytest.approx(1.5)
