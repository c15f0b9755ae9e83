"""Modified Bessel functions, the cross product S_nu and incomplete gamma functions.

Scalar entry points (``bessel_i``, ``bessel_k``, ``bracket_s``,
``incomplete_gamma``) validate their input and report an error estimate.
The array functions ``ive``/``kve``/``iv``/``kv`` are what the numerical
pipelines call; they dispatch to the numba or numpy kernels.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special as sc

from . import _accel
from . import _besselkern as bk
from .errors import ArgumentOrderViolated, ExponentOutOfRange, NonPositiveArgument, OrderOutOfRange
from .types import EvalResult, SpecialValue

MAX_ORDER = 200.0
EPS = np.finfo(float).eps


def _check(order, z):
    if not np.all(np.isfinite(order)) or np.any(np.abs(order) > MAX_ORDER):
        raise OrderOutOfRange(f"order must be finite with |order| <= {MAX_ORDER:g}, got {order}")
    if np.any(~(np.asarray(z) > 0.0)):
        raise NonPositiveArgument(f"argument must be positive, got {z}")


def switch_point(order: float) -> float:
    """Argument above which I switches from the power series to Hankel's expansion."""
    return bk.switch_point(float(order))


# ------------------------------------------------------------------ arrays
def _broadcast(order, z):
    nu, zz = np.broadcast_arrays(np.asarray(order, float), np.asarray(z, float))
    return nu.ravel().copy(), zz.ravel().copy(), zz.shape


def _ive_pos(nu, z):
    if _accel.USE_NUMBA:
        return bk.ive_loop(nu, z, np.empty_like(z))
    return bk.ive_numpy(nu, z)


def _kve_raw(nu, z):
    if _accel.USE_NUMBA:
        return bk.kve_loop(nu, z, np.empty_like(z))
    return bk.kve_numpy(nu, z)


def ive(order, z):
    """exp(-z) I_order(z), elementwise."""
    nu, zz, shape = _broadcast(order, z)
    _check(nu, zz)
    out = _ive_pos(np.abs(nu), zz)
    neg = (nu < 0) & (nu != np.round(nu))
    if neg.any():
        # I_{-v} = I_v + (2/pi) sin(pi v) K_v
        v = -nu[neg]
        with np.errstate(under="ignore"):
            out[neg] += (2.0 / np.pi) * np.sin(np.pi * v) * _kve_raw(v, zz[neg]) * np.exp(-2.0 * zz[neg])
    return out.reshape(shape) if shape else float(out[0])


def kve(order, z):
    """exp(z) K_order(z), elementwise."""
    nu, zz, shape = _broadcast(order, z)
    _check(nu, zz)
    out = _kve_raw(np.abs(nu), zz)
    return out.reshape(shape) if shape else float(out[0])


def iv(order, z):
    with np.errstate(over="ignore"):
        return ive(order, z) * np.exp(z)


def kv(order, z):
    with np.errstate(over="ignore", under="ignore"):
        return kve(order, z) * np.exp(-np.asarray(z, float))


# --------------------------------------------------------- complex helpers
def ive_complex_order(order, z, nterms: int = 90):
    """exp(-z) I_order(z) for complex ``order`` with Re(order) >= 0 and real z > 0.

    Plain power series; with Re(order) >= 0 the terms decrease monotonically
    in modulus once k > |z|/2, so no cancellation occurs.
    """
    order = np.asarray(order, complex)
    h = 0.5 * float(z)
    nterms = max(nterms, int(4 * h) + 40)
    k = np.arange(nterms, dtype=float)
    logfact = sc.gammaln(k + 1.0)
    coef = np.exp(2.0 * k * math.log(h) - logfact - float(z))
    terms = coef * sc.rgamma(k + order[..., None] + 1.0)
    return np.exp(order * math.log(h)) * terms.sum(axis=-1)


def kve_complex(order: float, w):
    """exp(w) K_order(w) for complex w with Re(w) >= 0 (AMOS, via scipy)."""
    return sc.kve(order, w)


def ive_complex(order: float, w):
    """exp(-|Re w|) I_order(w) for complex w (AMOS, via scipy)."""
    return sc.ive(order, w)


# ------------------------------------------------------------------ scalars
def bessel_i(order: float, z: float, scaled: bool | None = None) -> SpecialValue:
    """Modified Bessel function of the first kind.

    With ``scaled=None`` the value is returned unscaled up to the branch
    switch and as exp(-z) I(z) beyond it.
    """
    order = float(order)
    z = float(z)
    _check(order, z)
    if scaled is None:
        scaled = z > switch_point(order)
    nu = abs(order)
    val, nterms = bk.ive_scalar(nu, z)
    if order < 0 and order != round(order):
        val += (2.0 / math.pi) * math.sin(math.pi * nu) * bk.kve_scalar(nu, z)[0] * math.exp(-2.0 * z)
    err = abs(val) * (4.0 + nterms) * EPS * max(1.0, math.log(1.0 + z + nu))
    if not scaled:
        f = math.exp(z) if z < 700 else math.inf
        val, err = val * f, err * f
    return SpecialValue(float(val), bool(scaled), float(err))


def bessel_k(order: float, z: float, scaled: bool | None = None) -> SpecialValue:
    """Modified Bessel function of the third kind, K_{-v} = K_v exactly."""
    order = float(order)
    z = float(z)
    _check(order, z)
    if scaled is None:
        scaled = z > switch_point(order)
    val, nterms = bk.kve_scalar(abs(order), z)
    err = abs(val) * (8.0 + math.sqrt(nterms)) * EPS
    if not scaled:
        with np.errstate(under="ignore"):
            f = math.exp(-z)
        val, err = val * f, err * f
    return SpecialValue(float(val), bool(scaled), float(err))


def _bracket_scaled(nu, alpha, beta):
    """exp(beta - alpha) * S_nu(alpha, beta), arrays with alpha > beta > 0."""
    d = alpha - beta
    out = ive(nu, alpha) * kve(nu, beta) - kve(nu, alpha) * ive(nu, beta) * np.exp(-2.0 * d)
    # Taylor expansion about alpha = beta: S = h/b - h^2/(2 b^2) + h^3 (2 + b^2 + nu^2)/(6 b^3)
    small = d < 1e-4 * beta
    if np.any(small):
        h = d[small]
        b = beta[small]
        v = np.broadcast_to(nu, d.shape)[small]
        taylor = h / b - h * h / (2.0 * b * b) + h ** 3 * (2.0 + b * b + v * v) / (6.0 * b ** 3)
        out[small] = taylor * np.exp(-h)
    return out


def bracket_s(order: float, alpha: float, beta: float) -> SpecialValue:
    """S_nu(alpha, beta) = I(alpha) K(beta) - K(alpha) I(beta) for alpha >= beta > 0.

    Returned exponentially scaled (value * exp(alpha - beta) is S) when
    alpha - beta is large; ``alpha == beta`` gives exactly 0.
    """
    order, alpha, beta = float(order), float(alpha), float(beta)
    _check(order, min(alpha, beta))
    if beta > alpha:
        raise ArgumentOrderViolated(f"S_nu(alpha, beta) needs beta < alpha, got alpha={alpha}, beta={beta}")
    if alpha == beta:
        return SpecialValue(0.0, False, 0.0)
    val = float(_bracket_scaled(np.float64(order), np.array([alpha]), np.array([beta]))[0])
    d = alpha - beta
    scaled = d > 20.0
    cond = 1.0 if d >= 1e-4 * beta else 0.0
    err = abs(val) * 64.0 * EPS * (1.0 + cond * beta / d)
    if not scaled:
        f = math.exp(d)
        val, err = val * f, err * f
    return SpecialValue(float(val), scaled, float(err))


def bracket_s_array(order, alpha, beta):
    """Unscaled S_nu for arrays (callers keep alpha - beta moderate)."""
    alpha = np.asarray(alpha, float)
    beta = np.asarray(beta, float)
    return _bracket_scaled(order, alpha, beta) * np.exp(alpha - beta)


# --------------------------------------------------------- incomplete gamma
def _upper_gamma(a, x):
    """Gamma(a, x) for any real a and x > 0 (recurrence below a = 0)."""
    if a > 0:
        return sc.gammaincc(a, x) * sc.gamma(a)
    if a == 0:
        return sc.exp1(x)
    # Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a
    return (_upper_gamma(a + 1.0, x) - x ** a * math.exp(-x)) / a


def incomplete_gamma(kind: str, exponent: float, bound: float) -> EvalResult:
    """Incomplete gamma integrals in the s^alpha e^{-s} normalisation.

    ``lower``: int_0^b s^alpha e^{-s} ds   (alpha > -1)
    ``upper``: int_a^inf s^alpha e^{-s} ds (any real alpha)
    """
    alpha = float(exponent)
    b = float(bound)
    if not b > 0:
        raise NonPositiveArgument(f"bound must be positive, got {bound}")
    if kind == "lower":
        if not alpha > -1.0:
            raise ExponentOutOfRange(f"lower incomplete gamma needs exponent > -1, got {alpha}")
        val = float(sc.gammainc(alpha + 1.0, b) * sc.gamma(alpha + 1.0))
    elif kind == "upper":
        val = float(_upper_gamma(alpha + 1.0, b))
    else:
        raise ValueError(f"kind must be 'lower' or 'upper', got {kind!r}")
    return EvalResult(val, 1e-14 * max(abs(val), 1e-3), "closed-form")


def lower_gamma_comparator(exponent: float, bound: float) -> float:
    """(1 ^ b)^(alpha + 1), comparable to the lower incomplete gamma integral."""
    return min(1.0, bound) ** (exponent + 1.0)


def upper_gamma_comparator(exponent: float, bound: float) -> float:
    """(a + 1)^alpha e^{-a}, comparable to the upper incomplete gamma integral."""
    return (bound + 1.0) ** exponent * math.exp(-bound)


# -------------------------------------------------------------- asymptotics
def i_small_argument(order: float, z: float) -> float:
    """Leading behaviour (z/2)^v / Gamma(v + 1) as z -> 0+."""
    return (0.5 * z) ** order / math.gamma(order + 1.0)


def i_large_argument_scaled(z: float) -> float:
    """Leading behaviour of exp(-z) I_v(z) as z -> infinity: (2 pi z)^(-1/2)."""
    return 1.0 / math.sqrt(2.0 * math.pi * z)
