import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special as sc

from hbmgreen import functionals as fn
from hbmgreen.errors import DomainError
from hbmgreen.laplace import Decay, forward, log_panels
from hbmgreen.types import DriftParams, FunctionalState

# (r, t, theta(r, t)) from the real-line integral representation at 30 digits
THETA = [
    (1.0, 1.0, 0.739076531303231917),
    (0.5, 2.0, 0.22126643512441946),
    (5.0, 2.0, 0.00435926213315906398),
    (3.0, 0.5, 5.88750301157887666),
]

# (x, a, s, q) for nu = 3/2, inverted at 30 digits from (1 + xw)/(1 + aw) e^{-(x-a)w}
HITTING_32 = [
    (2.0, 1.0, 0.05, 0.00316266708864001802),
    (2.0, 1.0, 0.5, 0.681813577777941993),
    (2.0, 1.0, 5.0, 0.0238512160480344475),
    (1.1, 1.0, 0.01, 26.3898775459224578),
    (3.0, 0.5, 2.0, 0.200832129630516363),
    (1.5, 1.0, 100.0, 9.01353821683008955e-6),
]


def first_passage(x, a, s):
    return (x - a) / np.sqrt(2 * np.pi * s ** 3) * np.exp(-(x - a) ** 2 / (2 * s))


def reflected_kernel(x, y, a, u):
    """Brownian kernel killed at a, divided by y^2 (the nu = 1/2 killed Q)."""
    g = np.exp(-(x - y) ** 2 / (2 * u)) - np.exp(-(x + y - 2 * a) ** 2 / (2 * u))
    return g / np.sqrt(2 * np.pi * u) / y ** 2


@pytest.mark.parametrize("r,t,ref", THETA)
def test_theta_matches_reference(r, t, ref):
    res = fn.hartman_watson_theta(r, t)
    assert res.value == pytest.approx(ref, rel=1e-7)
    assert abs(res.value - ref) <= res.abs_err + 1e-12 * ref


def test_theta_is_stable_for_large_r():
    # exp(-r) theta(r, 1) falls below roundoff by r ~ 15 and must stay there
    r = np.geomspace(15.0, 400.0, 40)
    v, cond = fn._theta_scaled(r, 1.0, with_error=True)
    assert np.all(np.abs(v) <= cond)


@pytest.mark.parametrize("mu,r", [(0.0, 0.5), (1.0, 5.0)])
def test_theta_laplace_transform(mu, r):
    res = fn.hartman_watson_laplace(r, mu * mu / 2, target=1e-8)
    assert res.value == pytest.approx(float(sc.iv(mu, r)), rel=1e-7)


@pytest.mark.parametrize("y", [-1.0, 0.0, 0.3, 0.7])
def test_joint_density_marginal_is_gaussian(y):
    # int (A_t, B_t) density du = density of B_t = N(x - mu t, t)
    mu, t, x = 1.0, 1.0, 0.3
    u, w = log_panels(1e-6, 1e5, 0.1)
    f = fn.joint_density((mu,), t, x, u, np.full_like(u, y))
    g = math.exp(-(y - x + mu * t) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)
    assert np.sum(w * f) == pytest.approx(g, rel=1e-10)
    assert np.all(f >= 0.0)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_joint_density_has_unit_mass(t):
    mu, x = 0.5, 0.0
    u, wu = log_panels(1e-6, 1e5, 0.1)
    y, wy = np.polynomial.legendre.leggauss(80)
    lo, hi = x - mu * t - 9 * math.sqrt(t), x - mu * t + 9 * math.sqrt(t)
    y, wy = 0.5 * (lo + hi) + 0.5 * (hi - lo) * y, 0.5 * (hi - lo) * wy
    f = fn.joint_density((mu,), t, x, u[:, None], y[None, :])
    assert wu @ f @ wy == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize("x,a,s,ref", HITTING_32)
def test_hitting_density_three_halves(x, a, s, ref):
    res = fn.q_hitting_density(DriftParams(1.5), x, a, s)
    assert res.value == pytest.approx(ref, rel=1e-10)
    assert fn.hitting_values(1.5, x, a, np.array([s]))[0] == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("s", [0.002, 0.01, 0.1, 1.0, 10.0, 1e3, 1e5])
def test_hitting_density_half_is_first_passage(s):
    x, a = 2.0, 1.0
    exact = first_passage(x, a, s)
    assert fn.q_hitting_density(DriftParams(0.5), x, a, s).value == pytest.approx(exact, rel=1e-9)
    assert fn.hitting_density_tabulated(0.5, x, a, np.array([s]))[0] == pytest.approx(exact, rel=1e-7)


def test_hitting_methods_by_depth():
    dp = DriftParams(1.0)
    assert fn.q_hitting_density(dp, 2.0, 1.0, 1.0).method == "quadrature:branch-cut"
    assert fn.q_hitting_density(dp, 2.0, 1.0, 0.05).method.startswith("inversion:talbot")
    assert fn.q_hitting_density(dp, 2.0, 1.0, 0.005).method == "asymptotic:head"


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.2, 4.0])
@pytest.mark.parametrize("x", [1.01, 2.0, 50.0])
def test_head_expansion_within_its_bound(nu, x):
    c = (x - 1.0) ** 2 / 2.0
    s = c / np.array([16.0, 32.0, 64.0])
    exact = fn.hitting_values(nu, x, 1.0, s)
    head = fn.hitting_head(nu, x, 1.0, s)
    # the contour reference itself is good to ~1e-10 at z = 64 (exact head at nu = 1/2)
    assert np.all(np.abs(head / exact - 1.0) <= fn.hitting_head_error(nu, x, 1.0, s) + 2e-10)


@pytest.mark.parametrize("nu", [0.3, 1.0, 2.5])
def test_branch_cut_and_contour_agree_at_the_switch(nu):
    x, a = 2.0, 1.0
    s = np.array([(x - a) ** 2 / (2.0 * fn.Z_SPECTRAL)])
    cut = fn.hitting_branch_cut(nu, x, a, s)[0]
    contour = fn.talbot(fn.hitting_transform(nu, x, a), s, 40)[0]
    assert cut == pytest.approx(contour, rel=1e-10)


def test_killed_half_is_reflection():
    u = np.geomspace(0.05, 20.0, 15)
    for x in (1.25, 1.7, 3.0):
        for y in (1.25, 2.2, 3.0):
            exact = reflected_kernel(x, y, 1.0, u)
            val, _ = fn.killed_q_nu(0.5, x, y, 1.0, u)
            assert np.allclose(val, exact, rtol=1e-8, atol=0)


def test_green_ab_laplace_identity():
    rng = np.random.default_rng(1)
    for _ in range(3):
        dp = DriftParams(rng.uniform(0, 2), rng.uniform(0, 2))
        a = rng.uniform(0.5, 2)
        x, y = a * rng.uniform(1.05, 4, 2)
        r = rng.uniform(0.2, 3)
        res = forward(lambda u: fn.green_ab_values(dp, x, a, y, u)[0], r * r / 2,
                      Decay(power=-1 - dp.nu), scale=x * y, target=1e-9)
        assert res.value == pytest.approx(fn.green_ab_laplace(dp, x, a, y, r), rel=1e-7)


@pytest.mark.parametrize("mu,lam,x,y,r", [(0.5, 0.0, 1.0, 2.0, 1.0), (1.0, 1.0, 3.0, 0.7, 0.4)])
def test_potential_laplace_identity(mu, lam, x, y, r):
    dp = DriftParams(mu, lam)
    res = forward(lambda u: fn.q_potential(dp, x, y, u).value, r * r / 2,
                  Decay(power=-1 - dp.nu), scale=x * y, target=1e-10)
    assert res.value == pytest.approx(fn.q_potential_laplace(dp, x, y, r), rel=1e-8)


def test_schrodinger_green_is_symmetric_product():
    g = fn.schrodinger_green(1.5, 2.0, 0.3, -0.2)
    ref = 2 * sc.iv(1.5, 2 * math.exp(-0.2)) * sc.kv(1.5, 2 * math.exp(0.3))
    assert g.value == pytest.approx(ref, rel=1e-13)
    assert fn.schrodinger_green(1.5, 2.0, -0.2, 0.3).value == g.value


def test_domain_errors():
    with pytest.raises(DomainError):
        fn.q_hitting_density(DriftParams(1.0), 1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        fn.joint_density((1.0,), 0.0, 0.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        fn.hartman_watson_theta(-1.0, 1.0)
    with pytest.raises(DomainError):
        fn.green_ab(DriftParams(1.0), FunctionalState(2.0, 1.0, 1.0), 0.5)
    with pytest.raises(DomainError):
        FunctionalState(1.0, 2.0, 1.0)


# ----------------------------------------------------------- properties
@given(st.floats(0.1, 3.0), st.floats(1.05, 5.0), st.floats(0.2, 4.0), st.floats(0.05, 50.0))
def test_hitting_scaling_law(nu, ratio, a, s):
    # q^{x,a}(s) = a^-2 q^{x/a,1}(s/a^2)
    lhs = fn.hitting_values(nu, ratio * a, a, np.array([s]))[0]
    rhs = fn.hitting_values(nu, ratio, 1.0, np.array([s / a ** 2]))[0] / a ** 2
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-300)


@given(st.floats(0.1, 3.0), st.floats(1.05, 4.0), st.floats(1.05, 4.0), st.floats(0.05, 30.0))
def test_killed_kernel_between_zero_and_free(nu, x, y, u):
    val, err = fn.killed_q_nu(nu, x, y, 1.0, np.array([u]))
    free = fn.q_nu(nu, x, y, u)
    assert -err[0] - 1e-12 * free <= val[0] <= free * (1 + 1e-12)


@given(st.floats(0.1, 2.0), st.floats(1.05, 4.0), st.floats(1.05, 4.0), st.floats(0.05, 30.0))
def test_killed_kernel_symmetry(nu, x, y, u):
    # G_nu(x, y; u) y^(1 + 2 nu) is symmetric in (x, y)
    gxy, _ = fn.killed_q_nu(nu, x, y, 1.0, np.array([u]))
    gyx, _ = fn.killed_q_nu(nu, y, x, 1.0, np.array([u]))
    assert gxy[0] * y ** (1 + 2 * nu) == pytest.approx(gyx[0] * x ** (1 + 2 * nu), rel=1e-9, abs=1e-300)
