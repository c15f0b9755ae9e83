"""Exponential functionals of Brownian motion with drift.

Notation: B^(-mu) is Brownian motion with drift -mu, A_t = int_0^t exp(2 B_s) ds,
and nu = sqrt(2 lam + mu^2).  The objects below are functions of the
start x = exp(B_0), the target y and the clock value u = A.

* ``q_potential``       the lam-potential density Q of (A, exp B) in (u, y);
* ``q_hitting_density`` density of A at the first time exp(B) reaches a;
* ``green_ab``          Q killed at that hitting time;
* ``hartman_watson_theta`` / ``joint_density``: the law of (A_t, B_t).

Everything the killed objects need reduces to nu-only quantities, because
Q_mu^lam = (x/y)^(mu - nu) Q_nu and likewise for the killed kernel.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import special as sc
from scipy.optimize import minimize_scalar

from . import specfun
from .errors import ConvolutionGridTooCoarse, DomainError, InversionUnstable
from .laplace import TabulatedDensity, _talbot_nodes, talbot, talbot_with_error
from .types import DriftParams, EvalResult, FunctionalState

HITTING_M = 32
EPS = np.finfo(float).eps
_GLX, _GLW = np.polynomial.legendre.leggauss(16)
_THETA_BLOCK = 1 << 20
_THETA_CHUNK = 8


def _as_drift(dp) -> DriftParams:
    return dp if isinstance(dp, DriftParams) else DriftParams(*dp)


# ------------------------------------------------------------ Schroedinger
def schrodinger_green(alpha: float, lam: float, x: float, y: float) -> EvalResult:
    """Green function 2 I_alpha(lam e^x) K_alpha(lam e^y) of the Schroedinger
    operator with potential e^{2x}, symmetrised so that x <= y."""
    x, y = min(x, y), max(x, y)
    p, q = lam * math.exp(x), lam * math.exp(y)
    iv = specfun.bessel_i(alpha, p, scaled=True)
    kv = specfun.bessel_k(alpha, q, scaled=True)
    val = 2.0 * iv.value * kv.value * math.exp(p - q)
    err = abs(val) * (iv.abs_err / iv.value + kv.abs_err / kv.value)
    return EvalResult(val, err, "closed-form")


# ---------------------------------------------------------- Hartman-Watson
def _theta_scaled(r, t: float, M: int = 24, with_error: bool = False):
    """exp(-r) theta(r, t) for an array of r at one t (fixed Talbot).

    The transform exp(-r) I_{sqrt(2s)}(r) is summed as a power series in r
    with complex order; all growth of 1/Gamma along the contour is kept in
    logarithms.  With ``with_error`` also returns the roundoff bound
    eps * sum |terms|, which dominates for small t where the contour terms
    grow while theta itself is tiny.
    """
    r_in = np.atleast_1d(np.asarray(r, float))
    perm = np.argsort(r_in)
    r = r_in[perm]
    out = np.zeros_like(r)
    cond = np.zeros_like(r)
    # for r >> 1/t, exp(-r) theta(r, t) ~ exp(pi^2/2t - 2r): below exp(-800) past this cut
    n_live = int(np.searchsorted(r, 400.0 + math.pi ** 2 / (4.0 * t), side="right"))
    nodes, weights = _talbot_nodes(M)
    rt = 2.0 * M / (5.0 * t)
    s = rt * nodes
    order = np.sqrt(2.0 * s)
    order[0] = math.sqrt(2.0 * rt)
    lo = 0
    while lo < n_live:
        # the series needs about 2r terms; keep each block under _THETA_BLOCK entries
        hi = min(lo + 256, n_live)
        while hi - lo > 1 and (hi - lo) * (2.0 * r[hi - 1] + 40) > _THETA_BLOCK:
            hi = lo + (hi - lo) // 2
        rr = r[lo:hi]
        K = _THETA_CHUNK * int((2.0 * rr.max() + 40) // _THETA_CHUNK + 1)
        k = np.arange(K, dtype=float)
        lh = np.log(0.5 * rr)
        logc = 2.0 * k[None, :] * lh[:, None] - sc.gammaln(k + 1.0)[None, :] - rr[:, None]
        E = t * s[:, None] - sc.loggamma(k[None, :] + order[:, None] + 1.0)
        # rescale per chunk of k: the peaks in k of the coefficient (per r) and
        # of the contour factor (per node) can sit far apart, and one global
        # shift each would underflow the terms that matter
        logs = []
        for j in range(0, K, _THETA_CHUNK):
            cj, ej = logc[:, j:j + _THETA_CHUNK], E[:, j:j + _THETA_CHUNK]
            cmax = cj.max(axis=1)
            shift = ej.real.max(axis=1)
            part = np.exp(cj - cmax[:, None]) @ np.exp(ej - shift[:, None]).T
            with np.errstate(divide="ignore"):
                logs.append(np.log(part) + cmax[:, None] + shift[None, :])
        logs = np.array(logs)
        top = logs.real.max(axis=0)
        top = np.where(np.isfinite(top), top, 0.0)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            series = np.exp(logs - top[None]).sum(axis=0)
            logterm = np.log(series) + top + order[None, :] * lh[:, None]
            terms = np.exp(logterm) * weights[None, :]
        terms = np.where(np.isfinite(terms), terms, np.inf)
        out[lo:hi] = (rt / M) * terms.real.sum(axis=1)
        cond[lo:hi] = (rt / M) * 64.0 * EPS * np.abs(terms).sum(axis=1)
        lo = hi
    res, rcond = np.empty_like(out), np.empty_like(cond)
    res[perm], rcond[perm] = out, cond
    return (res, rcond) if with_error else res


def hartman_watson_theta(r: float, t: float, M: int = 24, target: float = 1e-6) -> EvalResult:
    """Hartman-Watson function theta(r, t): the inverse Laplace transform in
    the variable s of s -> I_{sqrt(2 s)}(r).

    Raises ``InversionUnstable`` when the error estimate exceeds ``target``
    relative to max(theta, exp(r)/sqrt(r + 1)), the scale of theta in t.
    """
    if not (r > 0 and t > 0):
        raise DomainError(f"need r > 0 and t > 0, got r={r}, t={t}")
    a, cond = _theta_scaled(np.array([r]), t, M, with_error=True)
    b = _theta_scaled(np.array([r]), t, M + 4)
    a, cond, b = float(a[0]), float(cond[0]), float(b[0])
    err = abs(a - b) + cond
    if not err <= target * max(abs(a), 1.0 / math.sqrt(r + 1.0)):
        raise InversionUnstable(f"theta({r}, {t}): contour error {err:.3g} against value {a:.3g} (scaled)")
    if a < 0.0 and -a <= err:
        a = 0.0
    scale = math.exp(r)
    return EvalResult(a * scale, err * scale, f"inversion:talbot(M={M})")


def theta_values(r, t: float, M: int = 24) -> np.ndarray:
    """theta(r, t) for an array of r (unchecked fast path)."""
    r = np.asarray(r, float)
    with np.errstate(over="ignore"):
        return _theta_scaled(r.ravel(), t, M).reshape(r.shape) * np.exp(r)


def theta_head_bound(r: float, t_cut: float) -> float:
    """Upper bound on int_0^t_cut theta(r, t) dt.

    For every s >= 0 the integral is at most exp(s t_cut) I_{sqrt(2s)}(r)
    because theta >= 0; the bound is minimised over s.
    """
    def log_bound(order):
        return 0.5 * order * order * t_cut + math.log(specfun.ive(order, r)) + r

    res = minimize_scalar(log_bound, bounds=(0.0, specfun.MAX_ORDER), method="bounded",
                          options={"xatol": 1e-6})
    return math.exp(min(res.fun, log_bound(0.0)))


def hartman_watson_laplace(r: float, s: float, target: float = 1e-9) -> EvalResult:
    """int_0^inf e^{-s t} theta(r, t) dt by quadrature of the inverted theta.

    The head below t_cut is dropped and charged through ``theta_head_bound``;
    t_cut is the largest power of two with a bound under target * I_0(r).
    """
    from .laplace import Decay, forward

    budget = 1e-2 * target * float(specfun.iv(0.0, r))
    t_cut = 1.0
    while theta_head_bound(r, t_cut) > budget:
        t_cut /= 2.0
        if t_cut < 1e-6:
            raise InversionUnstable(f"theta({r}, t) near t = 0 cannot be bounded")

    def f(t):
        return np.array([theta_values(np.array([r]), ti)[0] for ti in np.atleast_1d(t)])

    body = forward(f, s, Decay(power=-1.5, head_power=None), t_range=(t_cut, 1e6), target=target)
    return EvalResult(body.value, body.abs_err + theta_head_bound(r, t_cut), body.method)


def joint_density(dp, t: float, x: float, u, y) -> np.ndarray | float:
    """Joint density of (A_t, B_t) at (u, y) for B^(-mu) started at x.

    e^{-mu^2 t/2} e^{-mu (y - x)} exp(-(e^{2x} + e^{2y})/2u) theta(e^{x+y}/u, t) / u
    """
    dp = _as_drift(dp)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    u, y = np.broadcast_arrays(np.asarray(u, float), np.asarray(y, float))
    if np.any(u <= 0):
        raise DomainError("u must be positive")
    r = np.exp(x + y) / u
    gap = (np.exp(x) - np.exp(y)) ** 2 / (2.0 * u)
    # exp(-gap) underflows long before the series for theta gets costly;
    # values inside their own roundoff bound are unresolved and set to 0
    live = gap < 800.0
    th = np.zeros(r.shape)
    th_live, cond = _theta_scaled(r[live], t, with_error=True)
    th[live] = np.where(th_live > cond, th_live, 0.0)
    with np.errstate(under="ignore"):
        val = np.exp(-0.5 * dp.mu ** 2 * t - dp.mu * (y - x) - gap) * th / u
    return float(val) if val.ndim == 0 else val


# --------------------------------------------------------------- potential
def q_nu(nu: float, x, y, u):
    """Q_nu(x, y; u) = (1/y)(x/y)^nu exp(-(x^2 + y^2)/2u) I_nu(xy/u) / u (arrays)."""
    x, y, u = (np.asarray(v, float) for v in (x, y, u))
    with np.errstate(under="ignore"):
        return (x / y) ** nu / y * np.exp(-((x - y) ** 2) / (2.0 * u)) * specfun.ive(nu, x * y / u) / u


def q_potential(dp, x: float, y: float, u) -> EvalResult:
    """lam-potential density Q_mu^lam(x, y; u) = (x/y)^(mu - nu) Q_nu(x, y; u)."""
    dp = _as_drift(dp)
    if not (x > 0 and y > 0 and np.all(np.asarray(u) > 0)):
        raise DomainError(f"need x, y, u > 0, got x={x}, y={y}, u={u}")
    val = (x / y) ** (dp.mu - dp.nu) * q_nu(dp.nu, x, y, u)
    val = float(val) if np.ndim(val) == 0 else val
    return EvalResult(val, 1e-13 * np.abs(val), "closed-form")


def q_potential_laplace(dp, x: float, y: float, r: float) -> float:
    """int_0^inf e^{-r^2 u/2} Q_mu^lam(x, y; u) du = (2/y)(x/y)^mu I_nu(r x ^ y) K_nu(r x v y)."""
    dp = _as_drift(dp)
    lo, hi = min(x, y), max(x, y)
    return 2.0 / y * (x / y) ** dp.mu * specfun.ive(dp.nu, r * lo) * specfun.kve(dp.nu, r * hi) * math.exp(r * (lo - hi))


# ------------------------------------------------------------ hitting law
# z = (x - a)^2 / 2s measures how deep s sits in the exp(-z) head of q.
# For z >= Z_SPECTRAL the transform is inverted on the Talbot contour, whose
# order grows with z (large M resolves the head, small M the tail); up to
# Z_MAX that keeps about 1e-12 relative accuracy.  For z < Z_SPECTRAL the
# density is small against the O(1) transform values the contour sums, so it
# is computed from the integral along the branch cut instead.
Z_MAX = 64.0
Z_SPECTRAL = 2.0


def contour_order(z):
    return np.maximum(28, (16.0 + 0.6 * np.asarray(z)).astype(int))


def hitting_transform(nu: float, x: float, a: float):
    """p -> (x/a)^nu K_nu(x sqrt(2p)) / K_nu(a sqrt(2p)), for complex p."""

    def transform(p):
        w = np.sqrt(2.0 * p)
        return (x / a) ** nu * sc.kve(nu, x * w) / sc.kve(nu, a * w) * np.exp(-(x - a) * w)

    return transform


def hitting_branch_cut(nu: float, x: float, a: float, s, width: float = 0.25) -> np.ndarray:
    """q_nu^{x,a}(s) from the collapsed Bromwich contour:

    (x/a)^nu / pi int_0^inf exp(-s b^2/2) [J(ab) Y(xb) - J(xb) Y(ab)] / [J(ab)^2 + Y(ab)^2] b db

    with J, Y of order nu.  The transform has no poles, only the cut along
    the negative axis, so this is exact; the integrand is smooth and
    non-oscillatory once s exceeds (x - a)^2.  Panels are uniform in log b.
    """
    s = np.atleast_1d(np.asarray(s, float))
    b_lo = 1e-8 * math.sqrt(2.0 / s.max())
    b_hi = math.sqrt(2.0 * 45.0 / s.min())
    ell0, ell1 = math.log(b_lo), math.log(b_hi)
    n = max(1, math.ceil((ell1 - ell0) / width))
    edges = np.linspace(ell0, ell1, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    b = np.exp((mid[:, None] + half[:, None] * _GLX[None, :]).ravel())
    w = (half[:, None] * _GLW[None, :]).ravel() * b
    ja, ya = sc.jv(nu, a * b), sc.yv(nu, a * b)
    jx, yx = sc.jv(nu, x * b), sc.yv(nu, x * b)
    g = (ja * yx - jx * ya) / (ja * ja + ya * ya) * b * w
    out = np.empty(s.shape)
    for lo in range(0, s.size, 512):
        sl = slice(lo, lo + 512)
        with np.errstate(under="ignore"):
            out[sl] = np.exp(-0.5 * np.outer(s[sl], b * b)) @ g
    return (x / a) ** nu / math.pi * out


def hitting_head(nu: float, x: float, a: float, s):
    """Small-s expansion of q_nu^{x,a}(s):

    (x/a)^(nu - 1/2) (x - a) / sqrt(2 pi s^3) exp(-(x - a)^2/2s - (nu^2 - 1/4) s / 2xa)

    i.e. the Brownian first-passage density times the Girsanov weight of the
    straight path from x to a.  Exact for nu = 1/2; otherwise the relative
    error is O((s/xa)^2), bounded by ``hitting_head_error``.
    """
    s = np.asarray(s, float)
    with np.errstate(under="ignore", over="ignore"):
        return ((x / a) ** (nu - 0.5) * (x - a) / np.sqrt(2.0 * np.pi * s ** 3)
                * np.exp(-((x - a) ** 2) / (2.0 * s) - (nu * nu - 0.25) * s / (2.0 * x * a)))


def hitting_head_error(nu: float, x: float, a: float, s):
    """Relative error bound of ``hitting_head`` (zero for nu = 1/2).

    The first term is the square of the Girsanov correction; the second comes
    from the 1/w^2 term of the Hankel expansion of the K ratio and dominates
    when x is close to a.
    """
    s = np.asarray(s, float)
    c = (4.0 * nu * nu - 1.0) * (4.0 * nu * nu + 7.0) / 128.0
    return 1.25 * (abs(nu * nu - 0.25) * (s / (x * a)) ** 2
                   + 2.0 * abs(c) * s * s * (x + a) / ((x - a) * (x * a) ** 2))


def hitting_values(nu: float, x: float, a: float, s) -> np.ndarray:
    """q_nu^{x,a}(s): branch-cut integral for z < Z_SPECTRAL, contour
    inversion up to Z_MAX, the small-s expansion beyond."""
    s = np.asarray(s, float)
    z = (x - a) ** 2 / (2.0 * s)
    out = np.where(z > Z_MAX, hitting_head(nu, x, a, s), 0.0)
    tail = z < Z_SPECTRAL
    if tail.any():
        out[tail] = hitting_branch_cut(nu, x, a, s[tail])
    orders = contour_order(z)
    head = (z >= Z_SPECTRAL) & (z <= Z_MAX)
    transform = hitting_transform(nu, x, a)
    for M in np.unique(orders[head]):
        sel = (orders == M) & head
        out[sel] = talbot(transform, s[sel], int(M))
    return out


@lru_cache(maxsize=256)
def hitting_table(nu: float, ratio: float, per_decade: int = 200) -> TabulatedDensity:
    """q_nu^{ratio,1} tabulated on a log grid (barrier at 1).

    Other barriers follow from q^{x,a}(s) = a^-2 q^{x/a,1}(s/a^2).  The tail
    beyond the grid is the exact power s^(-1-nu).
    """
    c = 0.5 * (ratio - 1.0) ** 2
    lo = c / Z_MAX
    hi = 1e6 * max(ratio * ratio, 1.0)
    t = np.geomspace(lo, hi, int(math.ceil(per_decade * math.log10(hi / lo))) + 1)
    return TabulatedDensity(t, hitting_values(nu, ratio, 1.0, t), singular_c=c, tail_power=-1.0 - nu)


def q_hitting_density(dp, x: float, a: float, s: float) -> EvalResult:
    """Density of A^(-nu) at the first time exp(B^(-nu)) hits a, started at x > a.

    Inverts r^2/2 -> (x/a)^nu K_nu(r x)/K_nu(r a); clipped at 0 within the
    inversion error.  Deep in the head, where z = (x - a)^2/2s exceeds Z_MAX,
    the small-s expansion ``hitting_head`` is used.
    """
    dp = _as_drift(dp)
    if not (x > a > 0 and s > 0):
        raise DomainError(f"need x > a > 0 and s > 0, got x={x}, a={a}, s={s}")
    z = (x - a) ** 2 / (2.0 * s)
    if z > Z_MAX:
        val = float(hitting_head(dp.nu, x, a, s))
        err = val * (float(hitting_head_error(dp.nu, x, a, s)) + 1e-14)
        return EvalResult(val, err, "asymptotic:head")
    if z < Z_SPECTRAL:
        f = hitting_branch_cut(dp.nu, x, a, s)
        val = float(f[0])
        err = abs(val - float(hitting_branch_cut(dp.nu, x, a, s, width=0.125)[0])) + 1e-13 * abs(val)
        method = "quadrature:branch-cut"
    else:
        M = int(contour_order(z))
        f, err = talbot_with_error(hitting_transform(dp.nu, x, a), np.array([s]), M)
        val, err = float(f[0]), float(err[0])
        method = f"inversion:talbot(M={M})"
    if val < 0:
        if -val > err + 1e-300:
            raise InversionUnstable(f"negative hitting density {val:.3g} at s={s}")
        val = 0.0
    return EvalResult(val, err, method)


def hitting_density_tabulated(nu: float, x: float, a: float, s) -> np.ndarray:
    """q_nu^{x,a}(s) from the cached table, via the scaling law."""
    return np.exp(_log_hitting_tabulated(nu, x, a, s))


def _log_hitting_tabulated(nu, x, a, s):
    tab = hitting_table(float(nu), float(x / a))
    return tab.log(np.asarray(s, float) / (a * a)) - 2.0 * math.log(a)


def _log_hitting_direct(nu, x, a, s):
    v = hitting_values(nu, x, a, s)
    with np.errstate(divide="ignore"):
        return np.where(v > 0.0, np.log(np.maximum(v, 1e-300)), -np.inf)


# ----------------------------------------------------------- killed kernel
# integrand cut: this many e-folds below the peak of the convolution integrand
_CUT = 40.0
# exp(-2 (x-a)(y-a)/u) bounds the killing correction relative to Q_nu(x, y; u)
_KILL_NEGLIGIBLE = 34.0


def log_q_nu(nu: float, x, y, u):
    """log Q_nu(x, y; u)."""
    x, y, u = (np.asarray(v, float) for v in (x, y, u))
    with np.errstate(divide="ignore"):
        return (nu * np.log(x / y) - np.log(y) - (x - y) ** 2 / (2.0 * u)
                + np.log(specfun.ive(nu, x * y / u)) - np.log(u))


def _logit_rule(lo, hi, u, panels):
    """Nodes/weights for ds on [lo_i, hi_i] inside (0, u_i), uniform panels in
    xi = log(s / (u - s)), which grades geometrically toward both ends."""
    a = np.log(lo / (u - lo))
    b = np.log(hi / (u - hi))
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    frac = (mid[:, None] + half[:, None] * _GLX[None, :]).ravel()
    wfrac = (half[:, None] * _GLW[None, :]).ravel()
    xi = a[:, None] + (b - a)[:, None] * frac[None, :]
    e = np.exp(-np.abs(xi))
    # s = u / (1 + exp(-xi)), and v = u - s, both without cancellation
    s = np.where(xi >= 0, u[:, None] / (1.0 + e), u[:, None] * e / (1.0 + e))
    v = np.where(xi >= 0, u[:, None] * e / (1.0 + e), u[:, None] / (1.0 + e))
    w = wfrac[None, :] * (b - a)[:, None] * s * v / u[:, None]
    return s, v, w


def _convolution_scaled(nu, x, y, a, u, log_q, panels):
    """exp((x-y)^2/2u) int_0^u q(s) Q_nu(a, y; u - s) ds, for x <= y.

    The range is cut _CUT e-folds below the peak of the Gaussian factors
    exp(-A/s - B/(u-s)) at each end.
    """
    sA = abs(x - a) / math.sqrt(2.0)
    sB = abs(y - a) / math.sqrt(2.0)
    zA = sA * (sA + sB) / u
    zB = sB * (sA + sB) / u
    s_lo = sA * sA / (zA + _CUT)
    v_lo = sB * sB / (zB + _CUT)
    s, v, w = _logit_rule(s_lo, u - v_lo, u, panels)
    gap = ((x - y) ** 2 / (2.0 * u))[:, None]
    with np.errstate(under="ignore"):
        f = np.exp(log_q(s) + log_q_nu(nu, a, y, v) + gap)
    return (f * w).sum(axis=1)


def killed_q_nu(nu: float, x: float, y: float, a: float, u, *, tabulated: bool = True,
                tol: float = 1e-10, max_panels: int = 512, scaled: bool = False):
    """Killed potential density G_nu(x, y; u) for x, y > a and an array of u.

    G_nu = Q_nu(x, y; u) - int_0^u q_nu^{x,a}(s) Q_nu(a, y; u - s) ds, started
    from the point nearer the barrier (G_nu(x, y) y^(1+2nu) is symmetric).
    The panel count doubles until the convolution changes by less than
    ``tol`` times Q_nu(x, y; u).  With ``scaled`` the results carry the
    factor exp((x - y)^2 / 2u), which keeps far-apart points representable.
    Returns (value, abs_err); the value is not clipped.
    """
    u = np.atleast_1d(np.asarray(u, float))
    swap = 1.0
    if x > y:
        swap = (x / y) ** (1.0 + 2.0 * nu)
        x, y = y, x
    log_q = (lambda s: _log_hitting_tabulated(nu, x, a, s)) if tabulated else \
        (lambda s: _log_hitting_direct(nu, x, a, s))
    free = (x / y) ** nu / y * specfun.ive(nu, x * y / u) / u
    kill = 2.0 * (x - a) * (y - a) / u
    live = kill < _KILL_NEGLIGIBLE
    conv = np.zeros_like(u)
    err = free * np.exp(-np.minimum(kill, 700.0)) * (~live)
    if live.any():
        ul = u[live]
        sA = abs(x - a) / math.sqrt(2.0)
        sB = abs(y - a) / math.sqrt(2.0)
        zA, zB = sA * (sA + sB) / ul, sB * (sA + sB) / ul
        span = np.max(np.log1p(_CUT / zA) + np.log1p(_CUT / zB) + np.log(ul / (sA * sA)))
        panels = max(8, int(math.ceil(span / math.log(2.0))))
        prev = _convolution_scaled(nu, x, y, a, ul, log_q, panels)
        while True:
            panels *= 2
            cur = _convolution_scaled(nu, x, y, a, ul, log_q, panels)
            e = np.abs(cur - prev)
            if np.all(e <= tol * free[live]):
                break
            if panels >= max_panels:
                raise ConvolutionGridTooCoarse(
                    f"convolution did not settle: max relative change {np.max(e / free[live]):.3g}")
            prev = cur
        conv[live] = cur
        err[live] = e
    val = (free - conv) * swap
    err = err * swap
    if not scaled:
        with np.errstate(under="ignore"):
            g = np.exp(-((x - y) ** 2) / (2.0 * u))
        val, err = val * g, err * g
    return val, err


def green_ab(dp, st: FunctionalState, y: float, *, tabulated: bool = True) -> EvalResult:
    """Potential density of (A, exp B) killed when exp B reaches a.

    G_mu^lam(x, y; u) = (x/y)^(mu - nu) [Q_nu(x, y; u) - (Q_nu(a, y; .) * q_nu^x)(u)].
    Valid for all x, y > a; clipped at 0 within the error estimate.
    """
    dp = _as_drift(dp)
    if not y > st.a:
        raise DomainError(f"need y > a, got y={y}, a={st.a}")
    val, err = killed_q_nu(dp.nu, st.x, y, st.a, np.array([st.u]), tabulated=tabulated)
    f = (st.x / y) ** (dp.mu - dp.nu)
    v, e = float(val[0]) * f, float(err[0]) * f + 1e-13 * abs(float(val[0]) * f)
    return EvalResult(max(v, 0.0) if v > -e else v, e, "convolution")


def green_ab_values(dp, x: float, a: float, y: float, u, *, tabulated: bool = True):
    """Vectorised ``green_ab`` over u; returns (values, abs_err)."""
    dp = _as_drift(dp)
    val, err = killed_q_nu(dp.nu, x, y, a, u, tabulated=tabulated)
    f = (x / y) ** (dp.mu - dp.nu)
    return val * f, err * f


def green_ab_laplace(dp, x: float, a: float, y: float, r: float) -> float:
    """int_0^inf e^{-r^2 u/2} G_mu^lam(x, y; u) du
    = 2 (xy)^mu K_nu(r x v y) S_nu(r x ^ y, r a) / K_nu(r a) * y^(-2 mu - 1)."""
    dp = _as_drift(dp)
    lo, hi = min(x, y), max(x, y)
    nu = dp.nu
    s = specfun.bracket_s(nu, r * lo, r * a)
    s_val = s.value  # scaled by exp(-(r lo - r a)) when flagged
    log_s = math.log(s_val) + (r * (lo - a) if s.scaled else 0.0)
    k_ratio = specfun.kve(nu, r * hi) / specfun.kve(nu, r * a)
    return 2.0 * (x * y) ** dp.mu * k_ratio * math.exp(log_s - r * (hi - a)) * y ** (-2.0 * dp.mu - 1.0)
