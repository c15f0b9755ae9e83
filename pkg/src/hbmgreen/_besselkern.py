"""Real-order, real-argument modified Bessel kernels (exponentially scaled).

Two interchangeable implementations of each kernel:

* ``*_loop``   scalar loops, compiled by numba when available;
* ``*_numpy``  vectorised numpy over arrays.

Algorithms (shared by both paths):

I_nu(z), nu >= 0
    z <= switch(nu): the defining power series, summed outward from its
    largest term so that neither under- nor overflow occurs.
    z >  switch(nu): Hankel's large-argument expansion, truncated at the
    smallest term.
    switch(nu) = max(20 + nu, nu**2 / 4).

K_nu(z)
    Trapezoidal rule on int_0^inf exp(-z cosh t) cosh(nu t) dt.  The
    integrand is even and analytic in |Im t| < pi/2, so the rule converges
    geometrically; the step follows the curvature at the peak
    t* = asinh(nu/z).
"""
import math

import numpy as np

from ._accel import njit

SWITCH_BASE = 20.0
_TINY = 1e-17
_LOG_CUT = 40.0


@njit
def switch_point(nu):
    nu = abs(nu)
    return max(SWITCH_BASE + nu, 0.25 * nu * nu)


# ---------------------------------------------------------------- loop path
@njit
def _ive_series_loop(nu, z):
    h = 0.5 * z
    h2 = h * h
    kstar = math.floor(0.5 * (-nu + math.sqrt(nu * nu + z * z)))
    if kstar < 0.0:
        kstar = 0.0
    logt = (2.0 * kstar + nu) * math.log(h) - math.lgamma(kstar + 1.0) - math.lgamma(kstar + nu + 1.0) - z
    s = 1.0
    t = 1.0
    k = kstar
    n = 1
    while True:
        k += 1.0
        t *= h2 / (k * (k + nu))
        s += t
        n += 1
        if t < _TINY * s:
            break
    t = 1.0
    k = kstar
    while k > 0.0:
        t *= k * (k + nu) / h2
        k -= 1.0
        s += t
        n += 1
        if t < _TINY * s:
            break
    return math.exp(logt) * s, n


@njit
def _ive_hankel_loop(nu, z):
    mu4 = 4.0 * nu * nu
    s = 1.0
    t = 1.0
    prev = 1.0
    n = 1
    for k in range(1, 400):
        t *= -(mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * k * z)
        at = abs(t)
        if at > prev and k > 1:
            break
        s += t
        n += 1
        prev = at
        if at < _TINY * abs(s):
            break
    return s / math.sqrt(2.0 * math.pi * z), n


@njit
def ive_scalar(nu, z):
    """exp(-z) I_nu(z) for nu >= 0, z > 0; also returns the term count."""
    if z > switch_point(nu):
        return _ive_hankel_loop(nu, z)
    return _ive_series_loop(nu, z)


@njit
def _kve_step(nu, curv):
    # Two aliasing limits for the trapezoidal step: the Gaussian width at the
    # peak, and |Gamma(nu + i w)| / Gamma(nu) at the first alias w = 2 pi / h.
    nue = max(nu, 1.0)
    w = 8.0 * math.pi
    lg = math.lgamma(nue)
    while 0.9189385332 + (nue - 0.5) * math.log(w) - 0.5 * math.pi * w - lg > -39.0:
        w *= 1.1
    return min(2.0 * math.pi / w, 0.6 / math.sqrt(curv))


@njit
def kve_scalar(nu, z):
    """exp(z) K_nu(z) for z > 0 (symmetric in nu)."""
    nu = abs(nu)
    tstar = math.asinh(nu / z)
    sh = math.sinh(0.5 * tstar)
    logpeak = -2.0 * z * sh * sh + nu * tstar
    h = _kve_step(nu, z * math.cosh(tstar))
    total = 0.0
    j = 0
    while True:
        t = j * h
        sh = math.sinh(0.5 * t)
        e = -2.0 * z * sh * sh + nu * t - logpeak
        g = math.exp(e) * 0.5 * (1.0 + math.exp(-2.0 * nu * t))
        total += 0.5 * g if j == 0 else g
        if t > tstar and e < -_LOG_CUT:
            break
        j += 1
    return h * total * math.exp(logpeak), j + 1


@njit
def ive_loop(nu, z, out):
    for i in range(z.size):
        out[i] = ive_scalar(nu[i], z[i])[0]
    return out


@njit
def kve_loop(nu, z, out):
    for i in range(z.size):
        out[i] = kve_scalar(nu[i], z[i])[0]
    return out


# --------------------------------------------------------------- numpy path
_CHUNK = 4096


def _ive_series_numpy(nu, z):
    h = 0.5 * z
    kstar = np.maximum(np.floor(0.5 * (-nu + np.sqrt(nu * nu + z * z))), 0.0)
    width = np.ceil(12.0 * np.sqrt(h + 1.0) + 25.0)
    w = int(width.max()) if width.size else 1
    offs = np.arange(-w, w + 1, dtype=float)
    out = np.empty_like(z)
    lh = np.log(h)
    from scipy.special import gammaln

    for lo in range(0, z.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        k = kstar[sl, None] + offs[None, :]
        valid = (k >= 0.0) & (np.abs(offs)[None, :] <= width[sl, None])
        kk = np.where(valid, k, 0.0)
        logt = (2.0 * kk + nu[sl, None]) * lh[sl, None] - gammaln(kk + 1.0) - gammaln(kk + nu[sl, None] + 1.0)
        logt = logt - z[sl, None]
        logt = np.where(valid, logt, -np.inf)
        peak = logt.max(axis=1, keepdims=True)
        out[sl] = np.exp(peak[:, 0]) * np.exp(logt - peak).sum(axis=1)
    return out


def _ive_hankel_numpy(nu, z, nterms=120):
    k = np.arange(1, nterms, dtype=float)
    mu4 = 4.0 * nu[:, None] * nu[:, None]
    ratios = -(mu4 - (2.0 * k[None, :] - 1.0) ** 2) / (8.0 * k[None, :] * z[:, None])
    terms = np.cumprod(ratios, axis=1)
    a = np.abs(terms)
    growing = np.zeros_like(a, dtype=bool)
    growing[:, 1:] = a[:, 1:] > a[:, :-1]
    keep = np.cumsum(growing, axis=1) == 0
    terms = np.where(keep, terms, 0.0)
    return (1.0 + terms.sum(axis=1)) / np.sqrt(2.0 * np.pi * z)


def ive_numpy(nu, z):
    nu = np.asarray(nu, float)
    z = np.asarray(z, float)
    sw = np.maximum(SWITCH_BASE + np.abs(nu), 0.25 * nu * nu)
    asym = z > sw
    out = np.empty_like(z)
    if asym.any():
        out[asym] = _ive_hankel_numpy(nu[asym], z[asym])
    if (~asym).any():
        out[~asym] = _ive_series_numpy(nu[~asym], z[~asym])
    return out


def _kve_step_numpy(nu, curv):
    from scipy.special import gammaln

    nue = np.maximum(nu, 1.0)
    lg = gammaln(nue)
    w = np.full_like(nue, 8.0 * np.pi)
    for _ in range(200):
        bad = 0.9189385332 + (nue - 0.5) * np.log(w) - 0.5 * np.pi * w - lg > -39.0
        if not bad.any():
            break
        w = np.where(bad, 1.1 * w, w)
    return np.minimum(2.0 * np.pi / w, 0.6 / np.sqrt(curv))


def kve_numpy(nu, z):
    nu = np.abs(np.asarray(nu, float))
    z = np.asarray(z, float)
    tstar = np.arcsinh(nu / z)
    logpeak = -2.0 * z * np.sinh(0.5 * tstar) ** 2 + nu * tstar
    curv = z * np.cosh(tstar)
    h = _kve_step_numpy(nu, curv)
    # last node: past the peak and _LOG_CUT e-folds below it (doubling search)
    d = 1.0 / np.sqrt(curv)
    for _ in range(80):
        t = tstar + d
        f = -2.0 * z * np.sinh(0.5 * t) ** 2 + nu * t - logpeak
        high = f > -_LOG_CUT
        if not high.any():
            break
        d = np.where(high, 2.0 * d, d)
    nodes = np.ceil((tstar + d) / h).astype(np.int64) + 1
    out = np.empty_like(z)
    for lo in range(0, z.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        jmax = int(nodes[sl].max()) if nodes[sl].size else 1
        j = np.arange(jmax + 1, dtype=float)
        t = h[sl, None] * j[None, :]
        e = -2.0 * z[sl, None] * np.sinh(0.5 * t) ** 2 + nu[sl, None] * t - logpeak[sl, None]
        with np.errstate(over="ignore", invalid="ignore"):
            g = np.exp(e) * 0.5 * (1.0 + np.exp(-2.0 * nu[sl, None] * t))
        g = np.where(np.isfinite(g), g, 0.0)
        g[:, 0] *= 0.5
        with np.errstate(over="ignore"):
            out[sl] = h[sl] * g.sum(axis=1) * np.exp(logpeak[sl])
    return out
