"""Transition densities of the Bessel process BES^(-nu), free and killed at a level.

Kernel values are reported against the speed measure m(dy) = y^(1 - 2 nu) dy
unless a query asks for Lebesgue measure; ``KernelValue.to`` converts.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as sc

from . import functionals as fn
from .errors import BarrierNotUnit, DomainError, NegativeDensityBeyondTolerance
from .laplace import talbot
from .types import BesselIndex, DriftParams, EvalResult, KernelQuery, KernelValue


def _index(idx) -> BesselIndex:
    return idx if isinstance(idx, BesselIndex) else BesselIndex(float(idx))


def speed_density(nu: float, y):
    """m(y) = y^(1 - 2 nu)."""
    return np.asarray(y, float) ** (1.0 - 2.0 * nu)


def free_lebesgue(nu: float, t, x, y):
    """(y/t)(y/x)^(-nu) exp(-(x^2 + y^2)/2t) I_nu(xy/t), vectorised."""
    y = np.asarray(y, float)
    return y * y * fn.q_nu(nu, x, y, t)


def free_density(idx, q: KernelQuery) -> KernelValue:
    """Free transition density of BES^(-nu) (the level ``q.a`` is ignored)."""
    nu = _index(idx).nu
    val = float(free_lebesgue(nu, q.t, q.x, q.y))
    kv = KernelValue(val, "lebesgue", 1e-13 * val, nu, q.y)
    return kv.to(q.measure)


def hitting_density(idx, x: float, a: float, s: float) -> EvalResult:
    """Density of T_a for BES^(-nu) started at x > a.

    Through the Lamperti clock this is the density of A^(-nu) at the hitting
    time of a by exp(B^(-nu)).
    """
    return fn.q_hitting_density(DriftParams(_index(idx).nu), x, a, s)


def survival(idx, x: float, a: float, t) -> np.ndarray:
    """P_x(T_a > t) by inverting (1 - E_x exp(-p T_a)) / p."""
    nu = _index(idx).nu
    laplace_q = fn.hitting_transform(nu, x, a)
    t = np.atleast_1d(np.asarray(t, float))
    return talbot(lambda p: (1.0 - laplace_q(p)) / p, t, fn.HITTING_M)


def killed_lebesgue(nu: float, t, x: float, y: float, a: float, *, tabulated: bool = True,
                    tol: float = 1e-10):
    """Killed density against Lebesgue measure for an array of t; (values, abs_err).

    First-passage decomposition p_a = p - int_0^t f_{T_a}(s) p(t - s, a, y) ds.
    """
    val, err = fn.killed_q_nu(nu, x, y, a, t, tabulated=tabulated, tol=tol)
    return val * y * y, err * y * y


def killed_density(idx, q: KernelQuery, *, tabulated: bool = True) -> KernelValue:
    """Transition density of BES^(-nu) killed at the first hitting time of ``q.a``.

    ``tabulated`` selects the cached hitting-density table; otherwise the
    hitting density is inverted afresh at every quadrature node.
    """
    nu = _index(idx).nu
    if not q.a > 0.0:
        raise DomainError("the killed kernel needs a barrier a > 0")
    val, err = killed_lebesgue(nu, np.array([q.t]), q.x, q.y, q.a, tabulated=tabulated)
    v, e = float(val[0]), float(err[0])
    free = float(free_lebesgue(nu, q.t, q.x, q.y))
    e += 4e-13 * free
    if v < 0.0:
        if -v > e:
            raise NegativeDensityBeyondTolerance(
                f"killed density {v:.3g} below zero beyond error {e:.3g} at {q}")
        v = 0.0
    return KernelValue(v, "lebesgue", e, nu, q.y).to(q.measure)


def killed_density_comparator(idx, q: KernelQuery, *, gaussian_scaled: bool = False) -> EvalResult:
    """Sharp two-sided comparator for the killed kernel at barrier 1 (speed measure):

    (1 ^ (x-1)(y-1)/t) (1 ^ xy/t)^(nu - 1/2) (xy)^(nu - 1/2) t^(-1/2) exp(-(x-y)^2/2t)

    ``gaussian_scaled`` drops the factor exp(-(x-y)^2/2t).
    """
    nu = _index(idx).nu
    if q.a != 1.0:
        raise BarrierNotUnit(f"the comparator is stated at a = 1; rescale first (got a={q.a})")
    t, x, y = q.t, q.x, q.y
    val = (min(1.0, (x - 1.0) * (y - 1.0) / t) * min(1.0, x * y / t) ** (nu - 0.5)
           * (x * y) ** (nu - 0.5) / math.sqrt(t))
    if not gaussian_scaled:
        val *= math.exp(-((x - y) ** 2) / (2.0 * t))
    return EvalResult(val, 0.0, "closed-form")


def comparator_values(nu: float, t, x, y, *, gaussian_scaled: bool = False):
    """Vectorised ``killed_density_comparator`` (barrier 1)."""
    t, x, y = np.broadcast_arrays(*(np.asarray(v, float) for v in (t, x, y)))
    val = (np.minimum(1.0, (x - 1.0) * (y - 1.0) / t) * np.minimum(1.0, x * y / t) ** (nu - 0.5)
           * (x * y) ** (nu - 0.5) / np.sqrt(t))
    if not gaussian_scaled:
        val = val * np.exp(-((x - y) ** 2) / (2.0 * t))
    return val


def killed_density_grid(nu: float, a: float, t, x, y, *, tol: float = 1e-10,
                        gaussian_scaled: bool = False):
    """Speed-measure killed density on a grid; ``t``, ``x``, ``y`` are 1-d arrays.

    Returns an array of shape (len(t), len(x), len(y)).  With
    ``gaussian_scaled`` each value carries the factor exp((x-y)^2/2t).
    """
    t = np.asarray(t, float)
    out = np.empty((t.size, len(x), len(y)))
    for i, xi in enumerate(x):
        for j, yj in enumerate(y):
            val, _ = fn.killed_q_nu(nu, float(xi), float(yj), a, t, tol=tol, scaled=gaussian_scaled)
            out[:, i, j] = val * yj * yj / speed_density(nu, yj)
    return out


def ac_log_weight(nu_from: float, nu_to: float, x: float, r_t, clock) -> np.ndarray:
    """Log of the density of BES^(-nu_to) w.r.t. BES^(-nu_from) on a path before T_a.

    (R_t/x)^(nu_from - nu_to) exp(-(nu_to^2 - nu_from^2)/2 int_0^t ds/R_s^2)
    """
    return (nu_from - nu_to) * np.log(np.asarray(r_t) / x) - 0.5 * (nu_to ** 2 - nu_from ** 2) * np.asarray(clock)


def erfc_survival_half(x: float, a: float, t) -> np.ndarray:
    """P_x(T_a > t) for nu = 1/2 (Brownian motion): erf((x - a)/sqrt(2t))."""
    return sc.erf((x - a) / np.sqrt(2.0 * np.asarray(t, float)))
