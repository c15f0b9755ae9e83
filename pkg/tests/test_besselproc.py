import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sc

from hbmgreen import besselproc as bp
from hbmgreen.errors import BarrierNotUnit, BelowBarrier, DomainError
from hbmgreen.laplace import log_panels
from hbmgreen.types import BesselIndex, KernelQuery, KernelValue


def gauss_panels(edges, order=40):
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = np.asarray(edges[:-1]), np.asarray(edges[1:])
    nodes = (0.5 * (lo + hi)[:, None] + 0.5 * (hi - lo)[:, None] * x[None, :]).ravel()
    weights = (0.5 * (hi - lo)[:, None] * w[None, :]).ravel()
    return nodes, weights


@pytest.mark.parametrize("nu,t,x", [(0.5, 1.0, 1.0), (1.3, 0.4, 2.0), (3.0, 5.0, 0.7)])
def test_free_mass_is_survival_of_zero(nu, t, x):
    # BES^(-nu) is absorbed at 0: total mass = P(T_0 > t) = P(nu, x^2/2t)
    y, w = log_panels(1e-8, 1e3, 0.1)
    mass = np.sum(w * bp.free_lebesgue(nu, t, x, y))
    assert mass == pytest.approx(sc.gammainc(nu, x * x / (2 * t)), rel=1e-10)


def test_killed_half_is_reflected_gaussian():
    for t in (0.05, 1.0, 10.0):
        for x, y in ((1.2, 1.5), (3.0, 1.1), (2.0, 2.0)):
            q = KernelQuery(t, x, y, 1.0, measure="lebesgue")
            exact = (math.exp(-(x - y) ** 2 / (2 * t)) - math.exp(-(x + y - 2) ** 2 / (2 * t))) / math.sqrt(2 * math.pi * t)
            assert bp.killed_density(0.5, q).value == pytest.approx(exact, rel=1e-8)


def test_chapman_kolmogorov():
    nu, a, x, y, s, t = 1.0, 1.0, 1.6, 2.2, 0.25, 0.5
    z, w = gauss_panels([1, 1.1, 1.3, 1.6, 2, 2.5, 3.2, 4, 5.5, 8, 13.0])
    p1 = np.array([bp.killed_lebesgue(nu, np.array([s]), x, zi, a)[0][0] for zi in z])
    p2 = np.array([bp.killed_lebesgue(nu, np.array([t]), zi, y, a)[0][0] for zi in z])
    lhs = np.sum(w * p1 * p2)
    rhs = bp.killed_density(nu, KernelQuery(s + t, x, y, a, measure="lebesgue")).value
    assert lhs == pytest.approx(rhs, rel=1e-8)


def test_survival_half_is_erf():
    t = np.geomspace(0.01, 100.0, 9)
    assert np.allclose(bp.survival(0.5, 2.0, 1.0, t), bp.erfc_survival_half(2.0, 1.0, t), rtol=1e-10, atol=1e-12)


def test_survival_is_mass_of_killed_kernel():
    nu, a, x, t = 1.5, 1.0, 1.8, 0.7
    y, w = gauss_panels(np.concatenate([np.linspace(1.0, 3.0, 9), [4.0, 6.0, 10.0]]))
    mass = np.sum(w * np.array([bp.killed_lebesgue(nu, np.array([t]), x, yi, a)[0][0] for yi in y]))
    assert mass == pytest.approx(bp.survival(nu, x, a, t)[0], rel=1e-8)


def test_hitting_density_integrates_to_one_minus_survival():
    nu, x, a, t = 1.0, 2.0, 1.0, 3.0
    s, w = log_panels(1e-3, t, 0.05)
    mass = sum(wi * bp.hitting_density(nu, x, a, si).value for si, wi in zip(s, w))
    assert mass == pytest.approx(1.0 - bp.survival(nu, x, a, t)[0], rel=1e-8)


def test_measure_conversion_round_trip():
    q = KernelQuery(0.8, 1.5, 2.5, 1.0)
    speed = bp.killed_density(1.2, q)
    leb = bp.killed_density(1.2, KernelQuery(0.8, 1.5, 2.5, 1.0, measure="lebesgue"))
    assert speed.measure == "speed" and leb.measure == "lebesgue"
    assert speed.to("lebesgue").value == pytest.approx(leb.value, rel=1e-14)
    assert leb.to("speed").to("lebesgue").value == pytest.approx(leb.value, rel=1e-14)
    with pytest.raises(ValueError):
        KernelValue(1.0, "speed", nu=1.0, y=2.0).to("counting")


def test_comparator_needs_unit_barrier():
    with pytest.raises(BarrierNotUnit):
        bp.killed_density_comparator(1.0, KernelQuery(1.0, 3.0, 3.0, 2.0))
    q = KernelQuery(0.3, 1.2, 1.7, 1.0)
    scalar = bp.killed_density_comparator(1.0, q).value
    assert bp.comparator_values(1.0, 0.3, 1.2, 1.7) == pytest.approx(scalar, rel=1e-15)


def test_domain_errors():
    with pytest.raises(DomainError):
        BesselIndex(0.0)
    with pytest.raises(BelowBarrier):
        KernelQuery(1.0, 0.5, 2.0, 1.0)
    with pytest.raises(DomainError):
        KernelQuery(0.0, 2.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        bp.killed_density(1.0, KernelQuery(1.0, 2.0, 2.0, 0.0))
    assert BesselIndex(0.5).dimension == 1.0


def test_absolute_continuity_weight_is_trivial_for_equal_indices():
    assert np.all(bp.ac_log_weight(1.3, 1.3, 2.0, np.array([1.5, 4.0]), np.array([0.2, 3.0])) == 0.0)


# ----------------------------------------------------------- properties
@given(st.floats(0.1, 3.0), st.floats(0.02, 20.0), st.floats(1.02, 5.0), st.floats(1.02, 5.0))
def test_killed_below_free(nu, t, x, y):
    q = KernelQuery(t, x, y, 1.0)
    killed = bp.killed_density(nu, q)
    free = bp.free_density(nu, q)
    assert 0.0 <= killed.value <= free.value * (1 + 1e-12)


@given(st.floats(0.1, 3.0), st.floats(0.02, 20.0), st.floats(1.02, 5.0), st.floats(1.02, 5.0))
def test_speed_density_is_symmetric(nu, t, x, y):
    # the kernel is symmetric with respect to its speed measure
    pxy = bp.killed_density(nu, KernelQuery(t, x, y, 1.0)).value
    pyx = bp.killed_density(nu, KernelQuery(t, y, x, 1.0)).value
    assert pxy == pytest.approx(pyx, rel=1e-9, abs=1e-300)
