"""Potential kernel and Green function of hyperbolic Brownian motion on a half-space.

Points live in the upper half-space model {x_n > 0}; the domain of the Green
function is the horocyclic half-space D = {x_n > a}.  Kernels are densities
against the hyperbolic volume dV = dx / x_n^n and only depend on the
horizontal positions through rho = |x~ - y~|.

With mu = (n-1)/2, nu = sqrt(2 lam + mu^2) and k(rho, w) = (2 pi w)^(-mu) exp(-rho^2/2w),

    U^lam(x, y) = x_n^(mu-nu) y_n^(mu+nu+1) int_0^inf k(rho, w) Q_nu(x_n, y_n; w) dw
    G^lam(x, y) = x_n^(mu-nu) y_n^(mu+nu+1) int_0^inf k(rho, w) G_nu(x_n, y_n; w) dw

where Q_nu / G_nu are the free / killed potential densities of the
exponential functional (``functionals.q_nu`` / ``functionals.killed_q_nu``).
The ``*_sweep`` functions evaluate many horizontal separations at one pair of
heights, which is how grid sweeps stay cheap.
"""
from __future__ import annotations

import math

import numpy as np

from . import functionals as fn
from .errors import (BelowBarrier, DiagonalSingularity, DimensionMismatch, DimensionTooLow,
                     DomainError, QuadratureNonConvergent)
from .laplace import _GL_W, _GL_X
from .types import EvalResult, HyperbolicPoint, ModelParams

VIA_FUNCTIONAL = "via-functional"
VIA_BESSEL = "via-bessel"
ROUTES = (VIA_FUNCTIONAL, VIA_BESSEL)

# e-folds below the peak at which the Gaussian head is dropped
_HEAD_CUT = 50.0
# e-folds of power-law decay kept before the tail is closed analytically
_TAIL_CUT = 40.0
_CHUNK = 96
# relative squared gaps below this are treated as the diagonal (the kernel
# factors overflow long before the value itself does)
_DIAGONAL = 1e-60


# ---------------------------------------------------------------- geometry
def _coords(p: HyperbolicPoint) -> np.ndarray:
    return np.asarray(p.coords(), float)


def _check_dims(x: HyperbolicPoint, y: HyperbolicPoint, params: ModelParams | None = None):
    if x.dim != y.dim:
        raise DimensionMismatch(f"points of dimension {x.dim} and {y.dim}")
    if params is not None and x.dim != params.n:
        raise DimensionMismatch(f"points of dimension {x.dim} for a model of dimension {params.n}")


def horizontal_gap(x: HyperbolicPoint, y: HyperbolicPoint) -> float:
    """|x~ - y~|."""
    return float(np.linalg.norm(np.asarray(x.tilde, float) - np.asarray(y.tilde, float)))


def hyperbolic_distance(x: HyperbolicPoint, y: HyperbolicPoint) -> float:
    """d(x, y) with cosh d = 1 + |x - y|^2 / (2 x_n y_n).

    Evaluated as 2 asinh(|x - y| / (2 sqrt(x_n y_n))), which keeps full
    relative accuracy for nearby points.
    """
    _check_dims(x, y)
    gap = float(np.linalg.norm(_coords(x) - _coords(y)))
    return 2.0 * math.asinh(gap / (2.0 * math.sqrt(x.height * y.height)))


def boundary_distance(p: ModelParams, x: HyperbolicPoint) -> float:
    """Hyperbolic distance from x to the horosphere {x_n = a}: ln(x_n / a)."""
    if x.height < p.a:
        raise BelowBarrier(f"height {x.height} below the barrier {p.a}")
    return math.log(x.height / p.a)


def rescale(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint, factor: float):
    """Apply the dilation z -> factor * z to the barrier and both points.

    Dilations are hyperbolic isometries, so every kernel here is unchanged.
    """
    if not factor > 0:
        raise DomainError(f"scale factor must be positive, got {factor}")
    return p.with_barrier(p.a * factor), x.scaled(factor), y.scaled(factor)


# ------------------------------------------------------------- quadrature
def _log_rule(lo: float, hi: float, breaks, width: float):
    """Gauss-Legendre nodes/weights for du on [lo, hi], panels uniform in log u
    with panel edges at every break point inside the range."""
    cuts = [math.log(lo)] + sorted(math.log(b) for b in breaks if lo < b < hi) + [math.log(hi)]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / width))
        edges = np.linspace(a, b, n + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        ell = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
        nodes.append(np.exp(ell))
        weights.append((half[:, None] * _GL_W[None, :]).ravel())
    u = np.concatenate(nodes)
    return u, np.concatenate(weights) * u


def _refined(integral, tol: float, width: float = 1.0, max_halvings: int = 4):
    """Run ``integral(width)`` at halving widths until successive results agree.

    ``integral`` returns an array; agreement is elementwise relative to ``tol``.
    Returns (value, abs_err).
    """
    prev = integral(width)
    for _ in range(max_halvings):
        width *= 0.5
        cur = integral(width)
        err = np.abs(cur - prev)
        if np.all(err <= tol * np.abs(cur)):
            return cur, err
        prev = cur
    raise QuadratureNonConvergent(
        f"log-panel quadrature did not settle: worst relative change {np.max(err / np.abs(cur)):.3g}")


def _gauss_log(mu: float, rho2, u):
    """log k(rho, u) = -mu log(2 pi u) - rho^2 / 2u, shape (len(rho2), len(u))."""
    return -mu * np.log(2.0 * np.pi * u)[None, :] - np.asarray(rho2)[:, None] / (2.0 * u[None, :])


def _range(dmin: float, scale: float, decay: float):
    lo = dmin / (2.0 * _HEAD_CUT)
    hi = scale * math.exp(_TAIL_CUT / decay)
    return lo, hi


# ---------------------------------------------------------------- U^lambda
def _free_core(nu, mu, x, y, rho, width, lo, hi, breaks):
    """int k(rho, u) Q_nu(x, y; u) du for each rho, plus the closed tail."""
    u, w = _log_rule(lo, hi, breaks, width)
    lq = fn.log_q_nu(nu, x, y, u)
    with np.errstate(under="ignore"):
        vals = np.exp(_gauss_log(mu, rho * rho, u) + lq[None, :]) @ w
    # beyond hi the integrand decays like u^-(mu + nu + 1)
    tail = np.exp(_gauss_log(mu, rho * rho, np.array([hi]))[:, 0] + fn.log_q_nu(nu, x, y, hi)) * hi / (mu + nu)
    return vals + tail


def potential_sweep(p: ModelParams, xn: float, yn: float, rho, *, tol: float = 1e-9):
    """U^lam at heights (xn, yn) for an array of horizontal gaps ``rho``.

    Returns (values, abs_err) arrays.
    """
    rho = np.atleast_1d(np.asarray(rho, float))
    d2 = rho * rho + (xn - yn) ** 2
    if np.any(d2 <= _DIAGONAL * xn * yn):
        raise DiagonalSingularity("U^lam is singular on the diagonal x = y (or numerically that close)")
    mu, nu = p.mu, p.nu
    lo, hi = _range(float(d2.min()), max(xn * yn, float(d2.max())), mu + nu)
    breaks = (0.5 * float(d2.min()), xn * yn)
    val, err = _refined(lambda h: _free_core(nu, mu, xn, yn, rho, h, lo, hi, breaks), tol)
    pref = xn ** (mu - nu) * yn ** (mu + nu + 1.0)
    return val * pref, err * pref


def potential_kernel(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint) -> EvalResult:
    """lam-potential kernel U^lam(x, y) of hyperbolic Brownian motion (no killing)."""
    _check_dims(x, y, p)
    val, err = potential_sweep(p, x.height, y.height, [horizontal_gap(x, y)])
    return EvalResult(float(val[0]), float(err[0]), "quadrature:log-gauss")


# ---------------------------------------------------------------- G^lambda
def _killed_scaled(nu, x, y, a, u):
    """exp((x-y)^2/2u) G_nu(x, y; u), evaluated in chunks of nearby u."""
    out = np.empty_like(u)
    err = np.empty_like(u)
    order = np.argsort(u)
    for i in range(0, u.size, _CHUNK):
        idx = order[i:i + _CHUNK]
        out[idx], err[idx] = fn.killed_q_nu(nu, x, y, a, u[idx], scaled=True)
    return out, err


def _functional_core(nu, mu, x, y, a, rho, width, lo, hi, breaks):
    u, w = _log_rule(lo, hi, breaks, width)
    g, g_err = _killed_scaled(nu, x, y, a, u)
    d2 = rho * rho + (x - y) ** 2
    with np.errstate(under="ignore"):
        kern = np.exp(-mu * np.log(2.0 * np.pi * u)[None, :] - d2[:, None] / (2.0 * u[None, :]))
    vals = kern @ (w * g)
    conv_err = kern @ (w * g_err)
    return vals, conv_err


def _bessel_core(nu, mu, x, y, a, rho, width, lo, hi, s_lo, s_hi, breaks):
    """Free part minus the first-passage correction, integrated in the order
    ds (hitting time) then dv (time after the hit)."""
    free = _free_core(nu, mu, x, y, rho, width, lo, hi, breaks)
    s, ws = _log_rule(s_lo, s_hi, (a * x, (x - a) ** 2), width)
    f = fn.hitting_values(nu, x, a, s)
    keep = f > 0.0
    s, ws, f = s[keep], ws[keep], f[keep]
    v_lo = (y - a) ** 2 / (2.0 * _HEAD_CUT)
    v, wv = _log_rule(v_lo, s_hi, (a * y, (y - a) ** 2), width)
    qv = np.exp(fn.log_q_nu(nu, a, y, v)) * wv
    corr = np.empty(rho.size)
    su = s[:, None] + v[None, :]
    lg = -mu * np.log(2.0 * np.pi * su)
    for j, r in enumerate(rho):
        with np.errstate(under="ignore"):
            g = np.exp(lg - r * r / (2.0 * su)) @ qv
        corr[j] = np.dot(f * ws, g)
    return free - corr


def green_sweep(p: ModelParams, xn: float, yn: float, rho, *, route: str = VIA_FUNCTIONAL,
                tol: float = 1e-8):
    """G^lam at heights (xn, yn) > a for an array of horizontal gaps ``rho``.

    Returns (values, abs_err) arrays; the error combines the quadrature
    refinement change with the convolution error of the killed density.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}, got {route!r}")
    a = p.a
    if not a > 0:
        raise DomainError("the Green function needs a barrier a > 0")
    if not (xn > a and yn > a):
        raise BelowBarrier(f"heights ({xn}, {yn}) must exceed the barrier {a}")
    rho = np.atleast_1d(np.asarray(rho, float))
    d2 = rho * rho + (xn - yn) ** 2
    if np.any(d2 <= _DIAGONAL * xn * yn):
        raise DiagonalSingularity("G^lam is singular on the diagonal x = y (or numerically that close)")
    mu, nu = p.mu, p.nu
    scale = max(xn * yn, float(d2.max()))
    lo, hi = _range(float(d2.min()), scale, mu + nu)
    breaks = (0.5 * float(d2.min()), (xn - a) * (yn - a), xn * yn)
    pref = xn ** (mu - nu) * yn ** (mu + nu + 1.0)
    if route == VIA_FUNCTIONAL:
        # the killed density decays one power faster than the free one
        lo, hi = _range(float(d2.min()), scale, mu + nu + 1.0)
        conv = {}

        def integral(h):
            conv[h] = _functional_core(nu, mu, xn, yn, a, rho, h, lo, hi, breaks)
            return conv[h][0]

        val, err = _refined(integral, tol)
        err = err + min(conv.items())[1][1]
    else:
        s_lo = (xn - a) ** 2 / (2.0 * fn.Z_MAX)
        s_hi = max(scale, xn * xn) * math.exp(_TAIL_CUT / (mu + nu))
        val, err = _refined(lambda h: _bessel_core(nu, mu, xn, yn, a, rho, h, lo, hi, s_lo, s_hi, breaks),
                            tol)
    # the convolution cancels against the free part, so relative accuracy is
    # bounded by the free-part accuracy times the cancellation ratio
    err = err + 1e-12 * np.abs(val)
    return val * pref, err * pref


def green_function(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint,
                   route: str = VIA_FUNCTIONAL) -> EvalResult:
    """lam-Green function G^lam(x, y) of the half-space {x_n > a}.

    ``via-functional`` integrates the killed exponential-functional density
    against the horizontal Gaussian; ``via-bessel`` integrates the killed
    Bessel kernel written as the free kernel minus its first-passage
    correction, with the hitting density inverted directly.
    """
    _check_dims(x, y, p)
    val, err = green_sweep(p, x.height, y.height, [horizontal_gap(x, y)], route=route)
    v, e = float(val[0]), float(err[0])
    if v < 0.0 and -v <= e:
        v = 0.0
    return EvalResult(v, e, f"quadrature:{route}")


# ------------------------------------------------------------- comparators
def _ratio_2xy(x: HyperbolicPoint, y: HyperbolicPoint) -> float:
    gap2 = float(np.sum((_coords(x) - _coords(y)) ** 2))
    if gap2 == 0.0:
        raise DiagonalSingularity("comparators are singular on the diagonal x = y")
    return 2.0 * x.height * y.height / gap2, gap2


def potential_comparator(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint) -> EvalResult:
    """Two-sided estimate of U^lam:

    n >= 3: (2 x_n y_n/|x-y|^2)^(mu-1/2) (1 ^ 2 x_n y_n/|x-y|^2)^(nu+1/2)
    n = 2:  (1 ^ 2 x_n y_n/|x-y|^2)^(nu+1/2)
    """
    _check_dims(x, y, p)
    r, _ = _ratio_2xy(x, y)
    val = min(1.0, r) ** (p.nu + 0.5)
    if p.n >= 3:
        val *= r ** (p.mu - 0.5)
    return EvalResult(val, 0.0, "closed-form")


def potential_comparator_values(p: ModelParams, xn, yn, rho) -> np.ndarray:
    """Vectorised ``potential_comparator`` in terms of heights and horizontal gap."""
    xn, yn, rho = np.broadcast_arrays(*(np.asarray(v, float) for v in (xn, yn, rho)))
    r = 2.0 * xn * yn / (rho * rho + (xn - yn) ** 2)
    val = np.minimum(1.0, r) ** (p.nu + 0.5)
    return val * r ** (p.mu - 0.5) if p.n >= 3 else val


def green_comparator(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint) -> EvalResult:
    """Two-sided estimate of G^lam for n >= 3:

    (2 x_n y_n/|x-y|^2)^(mu-1/2) (1 ^ 2(x_n-a)(y_n-a)/|x-y|^2) (1 ^ 2 x_n y_n/|x-y|^2)^(nu-1/2)
    """
    _check_dims(x, y, p)
    if p.n <= 2:
        raise DimensionTooLow("the Green function estimate needs n >= 3")
    if x.height < p.a or y.height < p.a:
        raise BelowBarrier(f"heights ({x.height}, {y.height}) below the barrier {p.a}")
    r, gap2 = _ratio_2xy(x, y)
    edge = min(1.0, 2.0 * (x.height - p.a) * (y.height - p.a) / gap2)
    val = r ** (p.mu - 0.5) * edge * min(1.0, r) ** (p.nu - 0.5)
    return EvalResult(val, 0.0, "closed-form")


def green_comparator_values(p: ModelParams, xn, yn, rho) -> np.ndarray:
    """Vectorised ``green_comparator`` in terms of heights and horizontal gap."""
    if p.n <= 2:
        raise DimensionTooLow("the Green function estimate needs n >= 3")
    xn, yn, rho = np.broadcast_arrays(*(np.asarray(v, float) for v in (xn, yn, rho)))
    gap2 = rho * rho + (xn - yn) ** 2
    r = 2.0 * xn * yn / gap2
    edge = np.minimum(1.0, 2.0 * (xn - p.a) * (yn - p.a) / gap2)
    return r ** (p.mu - 0.5) * edge * np.minimum(1.0, r) ** (p.nu - 0.5)


def green_comparator_distance(p: ModelParams, x: HyperbolicPoint, y: HyperbolicPoint) -> EvalResult:
    """The Green function estimate in terms of hyperbolic distances (lam > 0, n >= 3):

    sinh(d/2)^-(2mu-1) cosh(d)^-(nu+1/2) (1 ^ (1 ^ da(x))(1 ^ da(y)) / (1 ^ d^2))
    with d = d(x, y) and da the distance to the boundary of D.
    """
    _check_dims(x, y, p)
    if p.n <= 2:
        raise DimensionTooLow("the Green function estimate needs n >= 3")
    if not p.lam > 0:
        raise DomainError("the distance form of the estimate is stated for lam > 0 only")
    d = hyperbolic_distance(x, y)
    if d == 0.0:
        raise DiagonalSingularity("comparators are singular on the diagonal x = y")
    da, db = boundary_distance(p, x), boundary_distance(p, y)
    edge = min(1.0, min(1.0, da) * min(1.0, db) / min(1.0, d * d))
    val = math.sinh(0.5 * d) ** (1.0 - 2.0 * p.mu) * math.cosh(d) ** (-(p.nu + 0.5)) * edge
    return EvalResult(val, 0.0, "closed-form")


def green_box_integral(p: ModelParams, x: HyperbolicPoint, lo, hi, *, order: int = 4,
                       route: str = VIA_BESSEL) -> EvalResult:
    """int over the box [lo, hi] of G^lam(x, y) dV(y), by tensor Gauss-Legendre.

    The box must stay off x (the integrand is singular there) and above a.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    if lo.size != p.n or hi.size != p.n:
        raise DimensionMismatch(f"box of dimension {lo.size} for a model of dimension {p.n}")
    g, w = np.polynomial.legendre.leggauss(order)
    axes = [0.5 * (l + h) + 0.5 * (h - l) * g for l, h in zip(lo, hi)]
    wts = [0.5 * (h - l) * w for l, h in zip(lo, hi)]
    flat = np.stack(np.meshgrid(*axes[:-1], indexing="ij"), -1).reshape(-1, p.n - 1)
    flat_w = np.prod(np.stack(np.meshgrid(*wts[:-1], indexing="ij"), -1).reshape(-1, p.n - 1), axis=1)
    rho = np.linalg.norm(flat - np.asarray(x.tilde, float)[None, :], axis=1)
    total = err = 0.0
    for yn, wn in zip(axes[-1], wts[-1]):
        val, e = green_sweep(p, x.height, yn, rho, route=route)
        total += wn * yn ** (-p.n) * np.dot(flat_w, val)
        err += wn * yn ** (-p.n) * np.dot(flat_w, e)
    return EvalResult(float(total), float(err), f"cubature:gauss({order})")
