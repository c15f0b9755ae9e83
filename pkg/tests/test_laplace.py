import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hbmgreen.errors import DomainMismatch, InversionUnstable, QuadratureNonConvergent
from hbmgreen.laplace import (Decay, InversionConfig, TabulatedDensity, TransformSpec, forward, invert,
                              stehfest, stehfest_weights, talbot, talbot_with_error)


def first_passage(t, c=1.0):
    """Brownian first-passage density to a level at distance c."""
    return c / np.sqrt(2 * np.pi * t ** 3) * np.exp(-c * c / (2 * t))


def first_passage_transform(s, c=1.0):
    return np.exp(-c * np.sqrt(2 * s))


def test_talbot_exponential():
    t = np.array([0.1, 1.0, 10.0])
    assert np.allclose(talbot(lambda s: 1.0 / (s + 2.0), t), np.exp(-2.0 * t), rtol=1e-10)


def test_talbot_first_passage_density():
    t = np.geomspace(0.05, 50.0, 12)
    f, err = talbot_with_error(first_passage_transform, t, 32)
    exact = first_passage(t)
    assert np.allclose(f, exact, rtol=1e-9)
    # the order-change estimate bounds the true error above the roundoff floor (F is O(1))
    assert np.all(np.abs(f - exact) <= err + 1e-11)


def test_stehfest_weights_sum_to_zero():
    # sum V_k = 0 for every even N (the inversion of 1/s is exact)
    for N in (8, 12, 16):
        assert sum(stehfest_weights(N)) == 0


def test_stehfest_smooth_function():
    assert stehfest(lambda s: 1.0 / (s + 1.0) ** 2, 1.5, 16) == pytest.approx(1.5 * math.exp(-1.5), rel=1e-5)


def test_invert_reports_method_and_error():
    spec = TransformSpec(lambda s: 1.0 / (s + 1.0))
    res = invert(spec, 2.0)
    assert res.value == pytest.approx(math.exp(-2.0), rel=1e-10)
    assert res.method.startswith("inversion:talbot")
    real = invert(spec, 2.0, InversionConfig.real_node())
    assert real.value == pytest.approx(math.exp(-2.0), rel=1e-4)
    assert real.method.startswith("inversion:stehfest")


def test_real_only_transform_refuses_contour():
    with pytest.raises(DomainMismatch):
        invert(TransformSpec(lambda s: 1.0 / s, complex_capable=False), 1.0)


def test_unstable_inversion_is_flagged():
    # a discontinuous original (unit step at t = 1) defeats a low-order contour
    spec = TransformSpec(lambda s: np.exp(-s) / s)
    with pytest.raises(InversionUnstable):
        invert(spec, 1.0, InversionConfig(order=8, target_rel_err=1e-8))


def test_config_validation():
    with pytest.raises(ValueError):
        InversionConfig(method="nope")
    with pytest.raises(ValueError):
        InversionConfig.real_node(order=13)
    with pytest.raises(ValueError):
        InversionConfig(target_rel_err=0.5)


def test_forward_power_tail():
    # int_0^inf e^{-st} (1 + t)^{-2} dt at s = 0 is 1
    res = forward(lambda t: (1.0 + t) ** -2.0, 0.0, Decay(power=-2.0))
    assert res.value == pytest.approx(1.0, rel=1e-8)


def test_forward_first_passage():
    for s in (0.01, 0.5, 3.0):
        res = forward(first_passage, s, Decay(power=-1.5, head_power=None), target=1e-11)
        assert res.value == pytest.approx(math.exp(-math.sqrt(2 * s)), rel=1e-9)


def test_forward_rejects_nonintegrable_tail():
    with pytest.raises(QuadratureNonConvergent):
        forward(lambda t: 1.0 / (1.0 + t), 0.0, Decay(power=-1.0))


def test_tabulated_density_round_trip():
    tab = TabulatedDensity.from_transform(first_passage_transform, 0.02, 1e4, M=32,
                                          singular_c=0.5, tail_power=-1.5)
    t = np.geomspace(0.03, 1e6, 40)
    assert np.allclose(tab(t), first_passage(t), rtol=1e-6)
    assert tab(np.array([1e-3]))[0] == 0.0


@given(st.floats(0.05, 20.0), st.floats(0.1, 5.0))
def test_contour_error_is_absolute_at_unit_scale(rate, t):
    # the fixed contour resolves exp(-rate t) to ~1e-10 of the O(1) scale of F
    got = talbot(lambda s: 1.0 / (s + rate), np.array([t]))[0]
    assert abs(got - math.exp(-rate * t)) < 1e-10


@given(st.floats(0.05, 20.0), st.floats(0.0, 10.0))
def test_forward_exponential(rate, s):
    res = forward(lambda t: np.exp(-rate * t), s, scale=1.0 / rate)
    assert res.value == pytest.approx(1.0 / (s + rate), rel=1e-8)
