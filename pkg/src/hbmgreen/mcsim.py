"""Monte Carlo oracles for the analytic pipelines.

Simulated diffusions:

* ``simulate_bessel``          BES^(-nu) from its squared-Bessel SDE, killed at a;
* ``simulate_gbm_functional``  B^(-mu) with exact increments and the clock
                               A_t = int_0^t exp(2 B_s) ds;
* ``simulate_hbm``             hyperbolic Brownian motion (B~(A_t), exp B_t), killed
                               at height a, with occupation times of boxes.

Random numbers come from a counter-based SplitMix64 stream per path, keyed by
(seed, path_id): draw c of path p depends on nothing else, so results do not
depend on chunking or on the number of workers.  Normal deviates use the
Box-Muller cosine branch on two consecutive uniforms.

Killing inside a step is detected with the Brownian-bridge crossing
probability exp(-2 (X_k - a)(X_{k+1} - a) / (sigma^2 dt)).
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np
from scipy import stats

from . import _accel
from ._accel import njit
from .errors import DomainError, StepTooCoarse
from .types import (BesselIndex, DriftParams, HyperbolicPoint, MCEstimate, ModelParams,
                    PathFunctionalSample, SimConfig)

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SALT = np.uint64(0xD1B54A32D192ED03)
_S30, _S27, _S31, _S11 = (np.uint64(v) for v in (30, 27, 31, 11))
_TWO53 = 2.0 ** -53
_BLOCK = 4096


# ------------------------------------------------------------ loop kernels
@njit(nogil=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(nogil=True)
def _path_key(seed, path):
    return _mix(seed + _mix((np.uint64(path) + np.uint64(1)) * _GOLDEN))


@njit(nogil=True)
def _uniform(key, c):
    z = _mix(key + (np.uint64(c) + np.uint64(1)) * _GOLDEN)
    return (np.float64(z >> _S11) + 0.5) * _TWO53


@njit(nogil=True)
def _normal(key, c):
    u1 = _uniform(key, 2 * c)
    u2 = _uniform(key, 2 * c + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(nogil=True)
def _bessel_loop(nu, x0, a, dt, nsteps, seed, start, correction, hit, r_end, clock):
    delta = 2.0 - 2.0 * nu
    sdt = math.sqrt(dt)
    for i in range(hit.size):
        key = _path_key(seed, start + i)
        key2 = _mix(key ^ _SALT)
        z = x0 * x0
        r = x0
        c = 0.0
        h = np.nan
        for k in range(nsteps):
            zn = z + delta * dt + 2.0 * math.sqrt(z) * sdt * _normal(key, k)
            if zn < 0.0:
                zn = 0.0
            rn = math.sqrt(zn)
            if rn <= a:
                frac = (r - a) / (r - rn)
                h = (k + frac) * dt
                c += 0.5 * frac * dt * (1.0 / z + (1.0 / (a * a) if a > 0.0 else 1.0 / z))
                r = a
                break
            if correction and _uniform(key2, k) < math.exp(-2.0 * (r - a) * (rn - a) / dt):
                h = (k + 0.5) * dt
                c += 0.25 * dt * (1.0 / z + (1.0 / (a * a) if a > 0.0 else 1.0 / z))
                r = a
                break
            c += 0.5 * dt * (1.0 / z + 1.0 / zn)
            z = zn
            r = rn
        hit[i] = h
        r_end[i] = r
        clock[i] = c


@njit(nogil=True)
def _gbm_loop(mu, lx0, la, a2, dt, nsteps, a_cap, seed, start, correction, hit, b_end, a_end, t_end):
    sdt = math.sqrt(dt)
    for i in range(hit.size):
        key = _path_key(seed, start + i)
        key2 = _mix(key ^ _SALT)
        b = lx0
        e0 = math.exp(2.0 * b)
        acc = 0.0
        h = np.nan
        t = 0.0
        for k in range(nsteps):
            bn = b - mu * dt + sdt * _normal(key, k)
            if bn <= la:
                frac = (b - la) / (b - bn)
                acc += 0.5 * frac * dt * (e0 + a2)
                h = (k + frac) * dt
                t = h
                b = la
                break
            if correction and _uniform(key2, k) < math.exp(-2.0 * (b - la) * (bn - la) / dt):
                acc += 0.25 * dt * (e0 + a2)
                h = (k + 0.5) * dt
                t = h
                b = la
                break
            en = math.exp(2.0 * bn)
            acc += 0.5 * dt * (e0 + en)
            b = bn
            e0 = en
            t = (k + 1) * dt
            if acc >= a_cap:
                break
        hit[i] = h
        b_end[i] = b
        a_end[i] = acc
        t_end[i] = t


@njit(nogil=True)
def _hbm_loop(nu, lx0, la, a2, dt, nsteps, x0t, weight_power, lo, hi, seed, start, correction,
              tau, exit_t, occ, b_end):
    sdt = math.sqrt(dt)
    nh = x0t.size
    dims = nh + 1
    ncell = lo.shape[0]
    xt = np.empty(nh)
    for i in range(tau.size):
        key = _path_key(seed, start + i)
        key2 = _mix(key ^ _SALT)
        b = lx0
        e0 = math.exp(2.0 * b)
        for j in range(nh):
            xt[j] = x0t[j]
        h = np.nan
        for k in range(nsteps):
            xn = math.exp(b)
            wgt = math.exp(weight_power * (b - lx0)) * dt
            for c in range(ncell):
                inside = lo[c, nh] <= xn < hi[c, nh]
                for j in range(nh):
                    if not (lo[c, j] <= xt[j] < hi[c, j]):
                        inside = False
                if inside:
                    occ[i, c] += wgt
            bn = b - nu * dt + sdt * _normal(key, k * dims)
            if bn <= la:
                h = (k + (b - la) / (b - bn)) * dt
                b = la
                break
            if correction and _uniform(key2, k) < math.exp(-2.0 * (b - la) * (bn - la) / dt):
                h = (k + 0.5) * dt
                b = la
                break
            en = math.exp(2.0 * bn)
            sd = math.sqrt(0.5 * dt * (e0 + en))
            for j in range(nh):
                xt[j] += sd * _normal(key, k * dims + 1 + j)
            b = bn
            e0 = en
        tau[i] = h
        b_end[i] = b
        for j in range(nh):
            exit_t[i, j] = xt[j]


# ----------------------------------------------------------- numpy kernels
def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _keys_np(seed, start, count):
    paths = np.arange(start, start + count, dtype=np.uint64)
    return _mix_np(np.uint64(seed) + _mix_np((paths + np.uint64(1)) * _GOLDEN))


def _uniform_np(keys, c):
    z = _mix_np(keys + np.uint64(((c + 1) * int(_GOLDEN)) & _MASK))
    return ((z >> _S11).astype(np.float64) + 0.5) * _TWO53


def _normal_np(keys, c):
    u1 = _uniform_np(keys, 2 * c)
    u2 = _uniform_np(keys, 2 * c + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def _bessel_numpy(nu, x0, a, dt, nsteps, seed, start, correction, hit, r_end, clock):
    n = hit.size
    keys = _keys_np(seed, start, n)
    keys2 = _mix_np(keys ^ _SALT)
    delta = 2.0 - 2.0 * nu
    sdt = math.sqrt(dt)
    z = np.full(n, x0 * x0)
    r = np.full(n, x0)
    c = np.zeros(n)
    h = np.full(n, np.nan)
    alive = np.arange(n)
    inv_a2 = 1.0 / (a * a) if a > 0.0 else None
    for k in range(nsteps):
        if alive.size == 0:
            break
        za, ra = z[alive], r[alive]
        zn = np.maximum(za + delta * dt + 2.0 * np.sqrt(za) * sdt * _normal_np(keys[alive], k), 0.0)
        rn = np.sqrt(zn)
        edge = 1.0 / za if inv_a2 is None else inv_a2
        down = rn <= a
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (ra - a) / (ra - rn)
        if correction:
            with np.errstate(over="ignore"):
                bridge = (~down) & (_uniform_np(keys2[alive], k) < np.exp(-2.0 * (ra - a) * (rn - a) / dt))
        else:
            bridge = np.zeros_like(down)
        frac = np.where(down, frac, 0.5)
        gone = down | bridge
        with np.errstate(divide="ignore"):
            step = np.where(gone, 0.5 * frac * dt * (1.0 / za + edge), 0.5 * dt * (1.0 / za + 1.0 / zn))
        c[alive] += step
        idx = alive[gone]
        h[idx] = (k + frac[gone]) * dt
        r[idx] = a
        keep = ~gone
        z[alive[keep]] = zn[keep]
        r[alive[keep]] = rn[keep]
        alive = alive[keep]
    hit[:] = h
    r_end[:] = r
    clock[:] = c


def _gbm_numpy(mu, lx0, la, a2, dt, nsteps, a_cap, seed, start, correction, hit, b_end, a_end, t_end):
    n = hit.size
    keys = _keys_np(seed, start, n)
    keys2 = _mix_np(keys ^ _SALT)
    sdt = math.sqrt(dt)
    b = np.full(n, lx0)
    e0 = np.exp(2.0 * b)
    acc = np.zeros(n)
    h = np.full(n, np.nan)
    t = np.zeros(n)
    alive = np.arange(n)
    for k in range(nsteps):
        if alive.size == 0:
            break
        ba = b[alive]
        bn = ba - mu * dt + sdt * _normal_np(keys[alive], k)
        down = bn <= la
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (ba - la) / (ba - bn)
        if correction:
            with np.errstate(over="ignore", invalid="ignore"):
                bridge = (~down) & (_uniform_np(keys2[alive], k) < np.exp(-2.0 * (ba - la) * (bn - la) / dt))
        else:
            bridge = np.zeros_like(down)
        frac = np.where(down, frac, 0.5)
        gone = down | bridge
        en = np.exp(2.0 * bn)
        ea = e0[alive]
        acc[alive] += np.where(gone, 0.5 * frac * dt * (ea + a2), 0.5 * dt * (ea + en))
        idx = alive[gone]
        h[idx] = (k + frac[gone]) * dt
        t[idx] = h[idx]
        b[idx] = la
        keep = ~gone
        ak = alive[keep]
        b[ak] = bn[keep]
        e0[ak] = en[keep]
        t[ak] = (k + 1) * dt
        alive = ak[acc[ak] < a_cap]
    hit[:] = h
    b_end[:] = b
    a_end[:] = acc
    t_end[:] = t


def _hbm_numpy(nu, lx0, la, a2, dt, nsteps, x0t, weight_power, lo, hi, seed, start, correction,
               tau, exit_t, occ, b_end):
    n = tau.size
    nh = x0t.size
    dims = nh + 1
    keys = _keys_np(seed, start, n)
    keys2 = _mix_np(keys ^ _SALT)
    sdt = math.sqrt(dt)
    b = np.full(n, lx0)
    e0 = np.exp(2.0 * b)
    xt = np.tile(x0t, (n, 1))
    h = np.full(n, np.nan)
    alive = np.arange(n)
    for k in range(nsteps):
        if alive.size == 0:
            break
        ba = b[alive]
        xa = xt[alive]
        xn = np.exp(ba)
        wgt = np.exp(weight_power * (ba - lx0)) * dt
        for c in range(lo.shape[0]):
            inside = (lo[c, nh] <= xn) & (xn < hi[c, nh])
            inside &= np.all((lo[c, :nh] <= xa) & (xa < hi[c, :nh]), axis=1)
            occ[alive[inside], c] += wgt[inside]
        ka = keys[alive]
        bn = ba - nu * dt + sdt * _normal_np(ka, k * dims)
        down = bn <= la
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = (ba - la) / (ba - bn)
        if correction:
            with np.errstate(over="ignore", invalid="ignore"):
                bridge = (~down) & (_uniform_np(keys2[alive], k) < np.exp(-2.0 * (ba - la) * (bn - la) / dt))
        else:
            bridge = np.zeros_like(down)
        gone = down | bridge
        idx = alive[gone]
        h[idx] = (k + np.where(down, frac, 0.5)[gone]) * dt
        b[idx] = la
        keep = ~gone
        ak = alive[keep]
        en = np.exp(2.0 * bn[keep])
        sd = np.sqrt(0.5 * dt * (e0[ak] + en))
        for j in range(nh):
            xt[ak, j] += sd * _normal_np(ka[keep], k * dims + 1 + j)
        b[ak] = bn[keep]
        e0[ak] = en
        alive = ak
    tau[:] = h
    b_end[:] = b
    exit_t[:] = xt


# ------------------------------------------------------------------ driver
def _seed(cfg: SimConfig) -> np.uint64:
    return np.uint64(int(cfg.seed) & _MASK)


def _run_chunks(cfg: SimConfig, make_out: Callable, kernel: Callable):
    """Split the paths into blocks, run ``kernel(start, outputs)`` on each,
    and return the outputs in path order."""
    n = int(cfg.n_paths)
    starts = list(range(0, n, _BLOCK))
    outs = [make_out(min(_BLOCK, n - s)) for s in starts]
    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=int(cfg.workers)) as pool:
            list(pool.map(lambda so: kernel(*so), zip(starts, outs)))
    else:
        for s, o in zip(starts, outs):
            kernel(s, o)
    return [np.concatenate([o[i] for o in outs]) for i in range(len(outs[0]))]


@dataclass
class PathBatch:
    """End states of a batch of simulated paths, as parallel arrays.

    ``A`` is the clock (int ds / R_s^2 for Bessel paths, int exp(2B) for
    exponential functionals), ``B`` the log of the final space coordinate,
    ``t`` the running time at the end of the path and ``hit_time`` the
    killing time (nan for paths alive at the horizon).
    """

    path_id: np.ndarray
    t: np.ndarray
    A: np.ndarray
    B: np.ndarray
    hit_time: np.ndarray
    horizon: float
    extra: dict = field(default_factory=dict)

    @property
    def survived(self) -> np.ndarray:
        return np.isnan(self.hit_time)

    def __len__(self):
        return self.path_id.size

    def samples(self) -> Iterator[PathFunctionalSample]:
        for A, B, h in zip(self.A, self.B, self.hit_time):
            hit = None if math.isnan(h) else float(h)
            yield PathFunctionalSample(float(A), float(B), hit, hit is None)

    def to_csv(self, path) -> None:
        """Write one row per path: path_id, t, A, B, hit_time, survived."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "t", "A", "B", "hit_time", "survived"])
            for row in zip(self.path_id, self.t, self.A, self.B, self.hit_time, self.survived):
                pid, t, A, B, h, s = row
                w.writerow([int(pid), f"{t:.17g}", f"{A:.17g}", f"{B:.17g}",
                            "" if s else f"{h:.17g}", int(s)])


def _nsteps(cfg: SimConfig) -> int:
    return int(round(cfg.horizon / cfg.dt))


def _bias_check(run: Callable[[SimConfig], MCEstimate], cfg: SimConfig):
    """Re-run an estimator at dt/2; StepTooCoarse if it moves by more than two
    combined standard errors."""
    coarse, fine = run(cfg), run(cfg.halved())
    se = math.hypot(coarse.stderr, fine.stderr)
    if abs(coarse.value - fine.value) > 2.0 * se:
        raise StepTooCoarse(f"estimate moved from {coarse.value:.6g} to {fine.value:.6g} "
                            f"(combined standard error {se:.3g}) when dt was halved")
    return coarse, fine


def simulate_bessel(idx, x0: float, a: float, cfg: SimConfig, *, check_step: bool = False) -> PathBatch:
    """BES^(-nu) paths from x0, killed at the first passage below a >= 0.

    The squared process Z = R^2 follows dZ = (2 - 2 nu) dt + 2 sqrt(Z) dW by
    Euler steps, clamped at 0.  ``A`` records the Lamperti clock
    int_0^t ds / R_s^2 and ``B`` the value log R at the end of the path.
    """
    nu = idx.nu if isinstance(idx, BesselIndex) else float(idx)
    if not (x0 > a >= 0.0):
        raise DomainError(f"need x0 > a >= 0, got x0={x0}, a={a}")
    if check_step:
        _bias_check(lambda c: survival_estimate(simulate_bessel(nu, x0, a, c), c.horizon), cfg)
    nsteps, seed = _nsteps(cfg), _seed(cfg)
    loop = _accel.USE_NUMBA
    fn_ = _bessel_loop if loop else _bessel_numpy

    def kernel(start, out):
        fn_(nu, float(x0), float(a), cfg.dt, nsteps, seed, start, bool(cfg.crossing_correction), *out)

    hit, r_end, clock = _run_chunks(cfg, lambda m: (np.empty(m), np.empty(m), np.empty(m)), kernel)
    t = np.where(np.isnan(hit), nsteps * cfg.dt, hit)
    with np.errstate(divide="ignore"):
        logr = np.log(r_end)
    return PathBatch(np.arange(hit.size), t, clock, logr, hit, nsteps * cfg.dt, {"nu": nu})


def simulate_gbm_functional(dp, x0: float, a: float, cfg: SimConfig, *, clock_cap: float = math.inf,
                            check_step: bool = False) -> PathBatch:
    """Brownian motion B^(-mu) from log x0 with its clock A_t = int exp(2 B_s) ds.

    The path stops when exp(B) reaches a (a = 0 means never), at the horizon,
    or once A exceeds ``clock_cap``.  Increments of B are exact; A is
    accumulated by the trapezoidal rule.
    """
    mu = dp.mu if isinstance(dp, DriftParams) else float(dp)
    if not (x0 > a >= 0.0):
        raise DomainError(f"need x0 > a >= 0, got x0={x0}, a={a}")
    if check_step:
        _bias_check(lambda c: survival_estimate(
            simulate_gbm_functional(mu, x0, a, c, clock_cap=clock_cap), c.horizon), cfg)
    nsteps, seed = _nsteps(cfg), _seed(cfg)
    la = math.log(a) if a > 0.0 else -math.inf
    fn_ = _gbm_loop if _accel.USE_NUMBA else _gbm_numpy

    def kernel(start, out):
        fn_(mu, math.log(x0), la, a * a, cfg.dt, nsteps, float(clock_cap), seed, start,
            bool(cfg.crossing_correction), *out)

    hit, b_end, a_end, t_end = _run_chunks(cfg, lambda m: tuple(np.empty(m) for _ in range(4)), kernel)
    return PathBatch(np.arange(hit.size), t_end, a_end, b_end, hit, nsteps * cfg.dt, {"mu": mu})


# -------------------------------------------------------------- estimators
def _mean_estimate(values, seed) -> MCEstimate:
    values = np.asarray(values, float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return MCEstimate(float(values.mean()), se, n, int(seed))


def survival_estimate(batch: PathBatch, t: float, seed: int = 0) -> MCEstimate:
    """Fraction of paths alive at time t <= horizon."""
    if t > batch.horizon * (1.0 + 1e-12):
        raise DomainError(f"t={t} beyond the simulated horizon {batch.horizon}")
    alive = batch.survived | (batch.hit_time > t)
    return _mean_estimate(alive.astype(float), seed)


def histogram_estimate(values, edges, n_total: int, seed: int = 0):
    """Density estimates (value, stderr) per bin, normalised by the total path count."""
    edges = np.asarray(edges, float)
    counts, _ = np.histogram(np.asarray(values, float), edges)
    width = np.diff(edges)
    p = counts / n_total
    return [MCEstimate(float(pi / w), float(math.sqrt(pi * (1.0 - pi) / n_total) / w), n_total, seed)
            for pi, w in zip(p, width)]


@dataclass(frozen=True)
class LampertiReport:
    """Two-sample comparison of A at the hitting time against the Bessel hitting time."""

    statistic: float
    pvalue: float
    n_functional: int
    n_bessel: int
    nu_functional: float
    nu_bessel: float
    censored_fraction: float


def lamperti_check(dp, x0: float, a: float, cfg: SimConfig, *, bessel_nu: Optional[float] = None) -> LampertiReport:
    """Kolmogorov-Smirnov comparison of A_{tau_a} (drift -nu, nu = ``dp.nu``) with
    T_a of BES^(-nu).  Both samples are censored at ``cfg.horizon`` on the
    common clock.  ``bessel_nu`` overrides the Bessel index (a negative control).
    """
    dp = dp if isinstance(dp, DriftParams) else DriftParams(float(dp))
    nu = dp.nu
    nu_b = nu if bessel_nu is None else float(bessel_nu)
    horizon = cfg.horizon
    # B-time needed for A to reach the horizon while exp(B) stays above a
    gcfg = SimConfig(cfg.dt / (x0 * x0), cfg.n_paths, cfg.seed, horizon / (a * a),
                     cfg.crossing_correction, cfg.workers)
    g = simulate_gbm_functional(nu, x0, a, gcfg, clock_cap=horizon)
    bcfg = SimConfig(cfg.dt, cfg.n_paths, cfg.seed ^ 0x5DEECE66D, horizon, cfg.crossing_correction, cfg.workers)
    b = simulate_bessel(nu_b, x0, a, bcfg)
    ta = np.where(g.survived, horizon, np.minimum(g.A, horizon))
    tb = np.where(b.survived, horizon, np.minimum(b.hit_time, horizon))
    res = stats.ks_2samp(ta, tb)
    cens = 0.5 * (np.mean(ta >= horizon) + np.mean(tb >= horizon))
    return LampertiReport(float(res.statistic), float(res.pvalue), ta.size, tb.size, nu, nu_b, float(cens))


# --------------------------------------------------------------------- HBM
@dataclass(frozen=True)
class Cell:
    """Axis-aligned box [lo, hi) in half-space coordinates (x~..., x_n)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or any(h <= l for l, h in zip(self.lo, self.hi)):
            raise DomainError(f"malformed cell {self.lo} .. {self.hi}")

    @classmethod
    def around(cls, y: HyperbolicPoint, half_width: float) -> "Cell":
        c = y.coords()
        return cls(tuple(c - half_width), tuple(c + half_width))


@dataclass
class HBMBatch:
    """Exit statistics and weighted occupation times of simulated HBM paths.

    ``occupation[i, c]`` is int_0^tau (X_n/x_n)^(nu - mu) 1{X in cell c} dt
    for path i, whose mean is int_cell G^lam dV.
    """

    tau: np.ndarray
    exit_tilde: np.ndarray
    occupation: np.ndarray
    log_height: np.ndarray
    horizon: float
    seed: int

    @property
    def survived(self) -> np.ndarray:
        return np.isnan(self.tau)

    def occupation_estimate(self, cell_index: int = 0) -> MCEstimate:
        return _mean_estimate(self.occupation[:, cell_index], self.seed)


def simulate_hbm(p: ModelParams, x: HyperbolicPoint, cfg: SimConfig, cells=(), *,
                 check_step: bool = False) -> HBMBatch:
    """Hyperbolic Brownian motion from x, killed on reaching height p.a.

    The path is simulated with vertical drift -nu,
    X = (B~(A_t), exp(B_t^(-nu))), and occupation times carry the weight
    (X_n/x_n)^(nu - mu), which turns them into lam-discounted occupation times
    of the process with drift -mu.
    """
    if x.dim != p.n:
        raise DomainError(f"point of dimension {x.dim} for a model of dimension {p.n}")
    if not x.height > p.a:
        raise DomainError(f"start height {x.height} must exceed the barrier {p.a}")
    cells = [c if isinstance(c, Cell) else Cell(*c) for c in cells]
    if any(len(c.lo) != p.n for c in cells):
        raise DomainError("cell dimension does not match the model")
    if check_step:
        _bias_check(lambda c: simulate_hbm(p, x, c, cells).occupation_estimate(0)
                    if cells else survival_estimate(_as_batch(simulate_hbm(p, x, c)), c.horizon), cfg)
    lo = np.array([c.lo for c in cells], float).reshape(len(cells), p.n)
    hi = np.array([c.hi for c in cells], float).reshape(len(cells), p.n)
    nsteps, seed = _nsteps(cfg), _seed(cfg)
    la = math.log(p.a) if p.a > 0 else -math.inf
    x0t = np.array(x.tilde, float)
    fn_ = _hbm_loop if _accel.USE_NUMBA else _hbm_numpy
    nh = p.n - 1

    def kernel(start, out):
        fn_(p.nu, math.log(x.height), la, p.a * p.a, cfg.dt, nsteps, x0t, p.nu - p.mu, lo, hi, seed,
            start, bool(cfg.crossing_correction), *out)

    def make(m):
        return np.empty(m), np.empty((m, nh)), np.zeros((m, len(cells))), np.empty(m)

    tau, exit_t, occ, b_end = _run_chunks(cfg, make, kernel)
    return HBMBatch(tau, exit_t, occ, b_end, nsteps * cfg.dt, int(cfg.seed))


def _as_batch(h: HBMBatch) -> PathBatch:
    n = h.tau.size
    t = np.where(np.isnan(h.tau), h.horizon, h.tau)
    return PathBatch(np.arange(n), t, np.full(n, np.nan), h.log_height, h.tau, h.horizon)


def cell_volume(cell: Cell) -> float:
    """Hyperbolic volume int_cell dy / y_n^n of a box."""
    n = len(cell.lo)
    lo, hi = cell.lo[-1], cell.hi[-1]
    flat = float(np.prod(np.subtract(cell.hi[:-1], cell.lo[:-1])))
    return flat * (lo ** (1 - n) - hi ** (1 - n)) / (n - 1)
