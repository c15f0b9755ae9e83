import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sc

from hbmgreen import specfun as sf
from hbmgreen.errors import (ArgumentOrderViolated, ExponentOutOfRange, NonPositiveArgument,
                             OrderOutOfRange)

# (order, z, exp(-z) I, exp(z) K) at 30 digits (mpmath)
IVE_KVE = [
    (0, 0.001, 0.99900074958351555937, 7.0307160023782514978),
    (0.5, 0.1, 0.22868316607552338863, 3.9633272976060109033),
    (1, 1.0, 0.20791041534970844887, 1.6361534862632582465),
    (2.5, 7.0, 0.09539504324515043153, 0.70572856881753291855),
    (10, 3.0, 9.6907508846041240258e-7, 49402.796804251239444),
    (0, 50.0, 0.05656162664745419253, 0.17680715585742933811),
    (3.3, 120.0, 0.034832611461613658759, 0.11957553087649471487),
    (40, 25.0, 4.9550180326076737722e-14, 213915362812.95315567),
    (150, 80.0, 1.8327137996858190176e-53, 1.604815941211673932e+50),
    (0.25, 1000.0, 0.012616845975937635407, 0.039629559386605639105),
]

# (order, alpha, beta, S) at 30 digits (mpmath)
BRACKET = [
    (0.5, 2.0, 1.0, 0.83099273328405698213),
    (1.0, 1.5, 1.4999, 0.000066668889148154386567),
    (2.2, 30.0, 1.0, 1519310550369.3215193),
    (3.0, 5.0, 4.0, 0.2810737240508133067),
]


@pytest.mark.parametrize("order,z,i_ref,k_ref", IVE_KVE)
def test_scaled_bessel_matches_reference(order, z, i_ref, k_ref):
    assert sf.ive(order, z) == pytest.approx(i_ref, rel=1e-12)
    assert sf.kve(order, z) == pytest.approx(k_ref, rel=1e-12)


@pytest.mark.parametrize("order,z,i_ref,k_ref", IVE_KVE)
def test_scalar_entry_points_report_honest_error(order, z, i_ref, k_ref):
    i = sf.bessel_i(order, z, scaled=True)
    k = sf.bessel_k(order, z, scaled=True)
    assert abs(i.value - i_ref) <= max(i.abs_err, 1e-15 * i_ref) * 10
    assert abs(k.value - k_ref) <= max(k.abs_err, 1e-15 * k_ref) * 10


def test_unscaled_switches_to_scaled_beyond_branch_point():
    z = 2.0 * sf.switch_point(1.0)
    v = sf.bessel_i(1.0, z)
    assert v.scaled
    assert v.unscaled(z, "i") == pytest.approx(float(sc.iv(1.0, z)), rel=1e-12)
    small = sf.bessel_i(1.0, 0.5)
    assert not small.scaled
    assert small.value == pytest.approx(float(sc.iv(1.0, 0.5)), rel=1e-13)


def test_arrays_broadcast():
    z = np.geomspace(1e-3, 1e3, 50)
    assert np.allclose(sf.ive(2.0, z), sc.ive(2.0, z), rtol=1e-12, atol=0)
    assert np.allclose(sf.kve(2.0, z), sc.kve(2.0, z), rtol=1e-12, atol=0)
    assert sf.ive(np.array([[0.5, 1.5]]), np.array([[1.0], [2.0]])).shape == (2, 2)


def test_negative_order():
    # I_{-v} = I_v + (2/pi) sin(pi v) K_v ; K_{-v} = K_v
    assert sf.iv(-0.5, 1.3) == pytest.approx(float(sc.iv(-0.5, 1.3)), rel=1e-13)
    assert sf.iv(-2.0, 1.3) == pytest.approx(float(sc.iv(2.0, 1.3)), rel=1e-13)
    assert sf.kv(-1.7, 0.9) == pytest.approx(float(sc.kv(1.7, 0.9)), rel=1e-13)


@pytest.mark.parametrize("order,z,exc", [
    (1.0, 0.0, NonPositiveArgument),
    (1.0, -2.0, NonPositiveArgument),
    (250.0, 1.0, OrderOutOfRange),
    (float("nan"), 1.0, OrderOutOfRange),
])
def test_domain_errors(order, z, exc):
    with pytest.raises(exc):
        sf.bessel_i(order, z)
    with pytest.raises(exc):
        sf.bessel_k(order, z)


@pytest.mark.parametrize("order,alpha,beta,ref", BRACKET)
def test_bracket_matches_reference(order, alpha, beta, ref):
    s = sf.bracket_s(order, alpha, beta)
    value = s.value * math.exp(alpha - beta) if s.scaled else s.value
    assert value == pytest.approx(ref, rel=1e-10)


def test_bracket_edge_cases():
    assert sf.bracket_s(1.0, 2.0, 2.0).value == 0.0
    with pytest.raises(ArgumentOrderViolated):
        sf.bracket_s(1.0, 1.0, 2.0)


def test_incomplete_gamma():
    assert sf.incomplete_gamma("lower", 1.0, 2.0).value == pytest.approx(1.0 - 3.0 * math.exp(-2.0), rel=1e-14)
    assert sf.incomplete_gamma("upper", 0.0, 3.0).value == pytest.approx(math.exp(-3.0), rel=1e-14)
    # alpha = -1: exponential integral
    assert sf.incomplete_gamma("upper", -1.0, 0.5).value == pytest.approx(float(sc.exp1(0.5)), rel=1e-14)
    # alpha = -2.5 by the downward recurrence
    ref = float(sc.gammaincc(0.5, 0.7) * sc.gamma(0.5))
    ref = (ref - 0.7 ** -0.5 * math.exp(-0.7)) / -0.5
    ref = (ref - 0.7 ** -1.5 * math.exp(-0.7)) / -1.5
    assert sf.incomplete_gamma("upper", -2.5, 0.7).value == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ExponentOutOfRange):
        sf.incomplete_gamma("lower", -1.0, 1.0)
    with pytest.raises(NonPositiveArgument):
        sf.incomplete_gamma("upper", 1.0, 0.0)


def test_asymptotic_forms():
    assert sf.iv(1.5, 1e-4) / sf.i_small_argument(1.5, 1e-4) == pytest.approx(1.0, abs=1e-8)
    assert sf.ive(2.0, 1e6) / sf.i_large_argument_scaled(1e6) == pytest.approx(1.0, abs=1e-5)


# ----------------------------------------------------------- properties
orders = st.floats(0.0, 60.0)
args = st.floats(1e-3, 500.0)


@given(orders, args)
def test_wronskian(order, z):
    # I_v K_{v+1} + I_{v+1} K_v = 1/z, in scaled form
    w = sf.ive(order, z) * sf.kve(order + 1.0, z) + sf.ive(order + 1.0, z) * sf.kve(order, z)
    assert w * z == pytest.approx(1.0, rel=1e-11)


@given(orders, args)
def test_k_recurrence(order, z):
    # K_{v+1} = K_{v-1} + (2v/z) K_v
    lhs = sf.kve(order + 1.0, z)
    rhs = sf.kve(abs(order - 1.0), z) + 2.0 * order / z * sf.kve(order, z)
    assert lhs == pytest.approx(rhs, rel=1e-11)


@given(st.floats(0.0, 30.0), st.floats(1e-2, 100.0))
def test_monotone_in_order(order, z):
    # I_v decreases and K_v increases in v >= 0
    assert sf.ive(order + 0.5, z) <= sf.ive(order, z) * (1 + 1e-13)
    assert sf.kve(order + 0.5, z) >= sf.kve(order, z) * (1 - 1e-13)


@given(st.floats(-0.9, 5.0), st.floats(1e-3, 50.0))
def test_gamma_comparators_are_two_sided(alpha, b):
    lo = sf.incomplete_gamma("lower", alpha, b).value / sf.lower_gamma_comparator(alpha, b)
    up = sf.incomplete_gamma("upper", alpha, b).value / sf.upper_gamma_comparator(alpha, b)
    assert 1e-3 < lo < 1e3
    assert 1e-3 < up < 1e3
