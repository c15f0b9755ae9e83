"""Command-line driver.

    hbmgreen eval {green|potential|comparator|kernel}
    hbmgreen bounds {green|potential|kernel}
    hbmgreen simulate {bessel|gbm|hbm}
    hbmgreen verify {hw|green-laplace|qpotential-laplace|chapman|lamperti|reflection}

Settings come from flags or from a flat ``key=value`` file given with
``--config`` (flags win).  Records go to ``--out`` (default stdout) as CSV
with a header row or as newline-delimited JSON; every float is written with
17 significant digits.  ``bounds`` and ``verify`` also print a summary to
stderr.  The exit status is 0 iff every computation succeeded and every
check passed, 1 otherwise, and 2 for malformed input.

Record schemas (JSON keys; CSV flattens ``inputs`` into leading columns):

    eval      inputs, value, abs_err, method, wall_time
    bounds    inputs, value, comparator, ratio, abs_err, method, wall_time
    simulate  path_id, t, A, B, hit_time, survived   (bessel, gbm)
              path_id, tau, exit_tilde, log_height, occupation, survived   (hbm)
    verify    suite, case, error, tolerance, passed, wall_time
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import besselproc as bp
from . import functionals as fn
from . import hypgreen as hg
from . import mcsim, specfun
from .errors import DimensionTooLow, HbmError, SpecParseError, UnknownSuite
from .laplace import Decay, forward
from .types import DriftParams, HyperbolicPoint, KernelQuery, ModelParams, SimConfig

COMMANDS = {
    "eval": ("green", "potential", "comparator", "kernel"),
    "bounds": ("green", "potential", "kernel"),
    "simulate": ("bessel", "gbm", "hbm"),
    "verify": ("hw", "green-laplace", "qpotential-laplace", "chapman", "lamperti", "reflection"),
}
CONFIG_KEYS = ("n", "lambda", "a", "x", "y", "t", "nu", "grid", "paths", "dt", "seed",
               "horizon", "workers", "out", "format")
EVAL_FIELDS = ("value", "abs_err", "method", "wall_time")
BOUNDS_FIELDS = ("value", "comparator", "ratio", "abs_err", "method", "wall_time")
VERIFY_FIELDS = ("suite", "case", "error", "tolerance", "passed", "wall_time")
STABILITY_TOL = 0.1


# ------------------------------------------------------------------ output
def fmt(v) -> str:
    """A scalar as text: floats with 17 significant digits, nan/inf as words."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    if isinstance(v, (tuple, list)):
        return " ".join(fmt(u) for u in v)
    return str(v)


def to_json(v) -> str:
    """JSON text with floats at 17 significant digits; non-finite floats become null."""
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(u)}" for k, u in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(u) for u in v) + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}" if math.isfinite(v) else "null"
    if v is None:
        return "null"
    return json.dumps(str(v))


def _flatten(rec: dict) -> dict:
    out = {}
    for k, v in rec.items():
        if isinstance(v, dict):
            out.update(v)
        else:
            out[k] = v
    return out


class RecordWriter:
    """Writes records as CSV (header from the first record) or NDJSON."""

    def __init__(self, stream, fmt_name: str):
        self.stream = stream
        self.format = fmt_name
        self._csv = None

    def write(self, rec: dict):
        if self.format == "json":
            self.stream.write(to_json(rec) + "\n")
            return
        flat = _flatten(rec)
        if self._csv is None:
            self._csv = csv.writer(self.stream, lineterminator="\n")
            self._csv.writerow(list(flat))
        self._csv.writerow([fmt(v) for v in flat.values()])


# ------------------------------------------------------------------- specs
@dataclass(frozen=True)
class GridAxis:
    axis: str
    lo: float
    hi: float
    count: int
    spacing: str = "log"

    def __post_init__(self):
        if self.count < 2:
            raise SpecParseError(f"grid axis {self.axis!r} needs count >= 2")
        if self.spacing not in ("log", "linear"):
            raise SpecParseError(f"grid spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.spacing == "log" and not 0 < self.lo < self.hi:
            raise SpecParseError(f"log axis {self.axis!r} needs 0 < min < max")
        if not self.lo < self.hi:
            raise SpecParseError(f"grid axis {self.axis!r} needs min < max")

    def values(self, refine: int = 0) -> np.ndarray:
        count = (self.count - 1) * 2 ** refine + 1
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, count)
        return np.linspace(self.lo, self.hi, count)


@dataclass
class RunSpec:
    command: str
    target: str
    params: list
    x: Optional[tuple] = None
    y: Optional[tuple] = None
    t: Optional[float] = None
    nu: Optional[float] = None
    grid: dict = field(default_factory=dict)
    paths: int = 20000
    dt: float = 1e-3
    seed: int = 0
    horizon: Optional[float] = None
    workers: int = 1
    out: Optional[str] = None
    format: str = "json"


def parse_config(text: str) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecParseError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("_", "-")
        if key not in CONFIG_KEYS:
            raise SpecParseError(f"line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise SpecParseError(f"{what}: cannot read numbers from {text!r}") from None


def parse_grid(text: str) -> dict:
    """``axis:min:max:count[:log|linear]`` entries separated by ``;``."""
    axes = {}
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) not in (4, 5):
            raise SpecParseError(f"grid entry {part!r}: expected axis:min:max:count[:spacing]")
        try:
            ax = GridAxis(bits[0], float(bits[1]), float(bits[2]), int(bits[3]),
                          bits[4] if len(bits) == 5 else "log")
        except ValueError:
            raise SpecParseError(f"grid entry {part!r}: bad number") from None
        axes[ax.axis] = ax
    return axes


_GRID_AXES = {"green": ("height", "rho"), "potential": ("height", "rho"), "kernel": ("t", "x")}
_DEFAULT_GRID = {
    "green": {"height": GridAxis("height", 0.01, 100.0, 6), "rho": GridAxis("rho", 1e-3, 1e3, 8)},
    "potential": {"height": GridAxis("height", 0.01, 100.0, 6), "rho": GridAxis("rho", 1e-3, 1e3, 8)},
    "kernel": {"t": GridAxis("t", 0.05, 20.0, 6), "x": GridAxis("x", 0.05, 9.0, 6)},
}


def build_spec(args: argparse.Namespace, config: dict) -> RunSpec:
    """Merge config-file values under command-line flags and validate."""
    merged = dict(config)
    for key in CONFIG_KEYS:
        v = getattr(args, key.replace("-", "_"), None)
        if v is not None:
            merged[key] = v
    try:
        n = int(merged.get("n", 3))
        lams = _floats(str(merged.get("lambda", "0")), "--lambda")
        a = float(merged.get("a", 1.0))
        params = [ModelParams(n, lam, a) for lam in lams]
        spec = RunSpec(args.command, args.target, params)
        if "x" in merged:
            spec.x = _floats(str(merged["x"]), "--x")
        if "y" in merged:
            spec.y = _floats(str(merged["y"]), "--y")
        for key, conv in (("t", float), ("nu", float), ("paths", int), ("dt", float),
                          ("seed", int), ("horizon", float), ("workers", int)):
            if key in merged:
                setattr(spec, key, conv(merged[key]))
    except ValueError as exc:
        if isinstance(exc, HbmError):
            raise
        raise SpecParseError(str(exc)) from None
    spec.out = merged.get("out")
    spec.format = str(merged.get("format", "json"))
    if spec.format not in ("csv", "json"):
        raise SpecParseError(f"--format must be csv or json, got {spec.format!r}")
    if not params:
        raise SpecParseError("--lambda is empty")
    if "grid" in merged:
        spec.grid = parse_grid(str(merged["grid"]))
        allowed = _GRID_AXES.get(spec.target, ())
        bad = [k for k in spec.grid if k not in allowed]
        if bad:
            raise SpecParseError(f"grid axes {bad} not among {list(allowed)} for {spec.target}")
    return spec


# -------------------------------------------------------------------- eval
def _point(coords, what: str) -> HyperbolicPoint:
    if coords is None:
        raise SpecParseError(f"{what} is required")
    return HyperbolicPoint.from_coords(coords)


def _timed(f: Callable):
    t0 = time.perf_counter()
    res = f()
    return res, time.perf_counter() - t0


def run_eval(spec: RunSpec, writer: RecordWriter) -> bool:
    ok = True
    for p in spec.params:
        inputs = {"n": p.n, "lambda": p.lam, "a": p.a}
        if spec.target == "kernel":
            if spec.t is None:
                raise SpecParseError("eval kernel needs --t")
            nu = spec.nu if spec.nu is not None else p.nu
            x = (spec.x or (None,))[-1]
            y = (spec.y or (None,))[-1]
            if x is None or y is None:
                raise SpecParseError("eval kernel needs --x and --y")
            inputs.update({"nu": nu, "t": spec.t, "x": x, "y": y})
            q = KernelQuery(spec.t, x, y, p.a)
            kv, wall = _timed(lambda: bp.killed_density(nu, q))
            res_value, res_err, method = kv.value, kv.abs_err, "convolution:speed-measure"
        else:
            x, y = _point(spec.x, "--x"), _point(spec.y, "--y")
            inputs.update({"x": x.coords().tolist(), "y": y.coords().tolist()})
            f = {"green": hg.green_function, "potential": hg.potential_kernel,
                 "comparator": hg.green_comparator if p.n >= 3 else hg.potential_comparator}[spec.target]
            res, wall = _timed(lambda: f(p, x, y))
            res_value, res_err, method = res.value, res.abs_err, res.method
        ok &= bool(math.isfinite(res_value))
        writer.write({"inputs": inputs, "value": res_value, "abs_err": res_err,
                      "method": method, "wall_time": wall})
    return ok


# ------------------------------------------------------------------ bounds
def _pairs(heights: np.ndarray):
    return [(float(xn), float(yn)) for i, xn in enumerate(heights) for yn in heights[i:]]


def _bounds_rows(spec: RunSpec, p: ModelParams, refine: int) -> list:
    grid = {**_DEFAULT_GRID[spec.target], **spec.grid}
    if spec.target == "kernel":
        nu = spec.nu if spec.nu is not None else p.nu
        t = grid["t"].values(refine)
        x = p.a * (1.0 + grid["x"].values(refine))
        t0 = time.perf_counter()
        K = bp.killed_density_grid(nu, p.a, t / p.a ** 2, x / p.a, x / p.a, gaussian_scaled=True)
        C = bp.comparator_values(nu, t[:, None, None] / p.a ** 2, x[None, :, None] / p.a,
                                 x[None, None, :] / p.a, gaussian_scaled=True)
        wall = (time.perf_counter() - t0) / K.size
        rows = []
        for (i, j, k), v in np.ndenumerate(K):
            if k < j:
                continue
            rows.append(({"n": p.n, "lambda": p.lam, "a": p.a, "nu": nu, "t": t[i], "x": x[j], "y": x[k]},
                         v, C[i, j, k], 0.0, "convolution:gaussian-scaled", wall))
        return rows
    heights = p.a * (1.0 + grid["height"].values(refine)) if spec.target == "green" else \
        grid["height"].values(refine)
    rho = grid["rho"].values(refine)
    if spec.target == "green" and p.n <= 2:
        raise DimensionTooLow("bounds green needs n >= 3")

    def one(pair):
        xn, yn = pair
        t0 = time.perf_counter()
        if spec.target == "green":
            v, e = hg.green_sweep(p, xn, yn, rho, route=hg.VIA_BESSEL)
            c = hg.green_comparator_values(p, xn, yn, rho)
            method = f"quadrature:{hg.VIA_BESSEL}"
        else:
            v, e = hg.potential_sweep(p, xn, yn, rho)
            c = hg.potential_comparator_values(p, xn, yn, rho)
            method = "quadrature:log-gauss"
        wall = (time.perf_counter() - t0) / rho.size
        return [({"n": p.n, "lambda": p.lam, "a": p.a, "x_n": xn, "y_n": yn, "rho": r},
                 vi, ci, ei, method, wall) for r, vi, ci, ei in zip(rho, v, c, e)]

    pairs = _pairs(heights)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            chunks = list(pool.map(one, pairs))
    else:
        chunks = [one(pr) for pr in pairs]
    return [row for chunk in chunks for row in chunk]


def ratio_summary(base: np.ndarray, refined: np.ndarray) -> dict:
    """Empirical min, max and spread of a ratio, and whether min and max move
    by less than ``STABILITY_TOL`` when the grid is refined."""
    ok = bool(np.all(np.isfinite(base)) and np.all(base > 0) and np.all(np.isfinite(refined))
              and np.all(refined > 0))
    lo, hi = float(refined.min()), float(refined.max())
    shift_lo = abs(lo / base.min() - 1.0)
    shift_hi = abs(hi / base.max() - 1.0)
    return {"min": lo, "max": hi, "spread": hi / lo, "min_shift": float(shift_lo),
            "max_shift": float(shift_hi), "finite_positive": ok,
            "stable": bool(ok and max(shift_lo, shift_hi) < STABILITY_TOL), "points": int(refined.size)}


def run_bounds(spec: RunSpec, writer: RecordWriter, summary_stream) -> bool:
    ok = True
    for p in spec.params:
        base = _bounds_rows(spec, p, 0)
        fine = _bounds_rows(spec, p, 1)
        for inputs, v, c, e, method, wall in fine:
            writer.write({"inputs": inputs, "value": v, "comparator": c, "ratio": v / c,
                          "abs_err": e, "method": method, "wall_time": wall})
        ratios = [np.array([r[1] / r[2] for r in rows]) for rows in (base, fine)]
        summ = ratio_summary(*ratios)
        summary_stream.write(to_json({"target": spec.target, "n": p.n, "lambda": p.lam, "a": p.a,
                                      **summ}) + "\n")
        ok &= summ["finite_positive"]
    return ok


# ---------------------------------------------------------------- simulate
def run_simulate(spec: RunSpec, writer: RecordWriter) -> bool:
    p = spec.params[0]
    x = spec.x or (2.0 * p.a,)
    x0 = x[-1]
    horizon = spec.horizon if spec.horizon is not None else 10.0
    cfg = SimConfig(spec.dt, spec.paths, spec.seed, horizon, True, spec.workers)
    nu = spec.nu if spec.nu is not None else p.nu
    if spec.target in ("bessel", "gbm"):
        if spec.target == "bessel":
            batch = mcsim.simulate_bessel(nu, x0, p.a, cfg)
        else:
            batch = mcsim.simulate_gbm_functional(DriftParams(p.mu, p.lam), x0, p.a, cfg)
        for row in zip(batch.path_id, batch.t, batch.A, batch.B, batch.hit_time, batch.survived):
            pid, t, A, B, h, s = row
            writer.write({"path_id": int(pid), "t": t, "A": A, "B": B,
                          "hit_time": None if s else h, "survived": bool(s)})
        return True
    start = HyperbolicPoint.from_coords(x if len(x) == p.n else (0.0,) * (p.n - 1) + (x0,))
    cells = []
    if spec.y is not None:
        centre = HyperbolicPoint.from_coords(spec.y)
        cells.append(mcsim.Cell.around(centre, 0.05 * centre.height))
    batch = mcsim.simulate_hbm(p, start, cfg, cells)
    for i in range(batch.tau.size):
        s = bool(np.isnan(batch.tau[i]))
        writer.write({"path_id": i, "tau": None if s else batch.tau[i],
                      "exit_tilde": batch.exit_tilde[i].tolist(), "log_height": batch.log_height[i],
                      "occupation": batch.occupation[i].tolist(), "survived": s})
    return True


# ------------------------------------------------------------------ verify
def _check(suite, case, error, tol, t0):
    return {"suite": suite, "case": case, "error": float(error), "tolerance": tol,
            "passed": bool(error <= tol), "wall_time": time.perf_counter() - t0}


def suite_hw(spec: RunSpec):
    for mu in (0.0, 1.0):
        for r in (0.5, 5.0):
            t0 = time.perf_counter()
            ref = float(specfun.iv(mu, r))
            got = fn.hartman_watson_laplace(r, 0.5 * mu * mu, target=1e-8).value
            yield _check("hw", f"mu={mu:g} r={r:g}", abs(got / ref - 1.0), 1e-3, t0)


def suite_qpotential_laplace(spec: RunSpec):
    rng = np.random.default_rng(spec.seed)
    for _ in range(5):
        mu, lam = rng.uniform(0.0, 2.0, 2)
        x, y = rng.uniform(0.5, 3.0, 2)
        r = rng.uniform(0.3, 3.0)
        dp = DriftParams(mu, lam)
        t0 = time.perf_counter()
        got = forward(lambda u: fn.q_potential(dp, x, y, u).value, 0.5 * r * r,
                      Decay(power=-1.0 - dp.nu), scale=x * y, target=1e-10).value
        ref = fn.q_potential_laplace(dp, x, y, r)
        yield _check("qpotential-laplace", f"mu={mu:.4g} lam={lam:.4g} x={x:.4g} y={y:.4g} r={r:.4g}",
                     abs(got / ref - 1.0), 1e-6, t0)


def suite_green_laplace(spec: RunSpec):
    rng = np.random.default_rng(spec.seed)
    for _ in range(3):
        mu, lam = rng.uniform(0.0, 2.0, 2)
        a = rng.uniform(0.5, 2.0)
        x, y = a * rng.uniform(1.05, 4.0, 2)
        r = rng.uniform(0.2, 3.0)
        dp = DriftParams(mu, lam)
        t0 = time.perf_counter()
        got = forward(lambda u: fn.green_ab_values(dp, x, a, y, u)[0], 0.5 * r * r,
                      Decay(power=-1.0 - dp.nu), scale=x * y, target=1e-9).value
        ref = fn.green_ab_laplace(dp, x, a, y, r)
        yield _check("green-laplace", f"mu={mu:.4g} lam={lam:.4g} a={a:.4g} x={x:.4g} y={y:.4g} r={r:.4g}",
                     abs(got / ref - 1.0), 1e-4, t0)


def chapman_defect(nu: float, s: float, t: float, x: float, y: float, a: float = 1.0) -> float:
    """Relative defect of int p_a(s, x, z) p_a(t, z, y) m(dz) = p_a(s + t, x, y)."""
    gx, gw = np.polynomial.legendre.leggauss(40)
    edges = a * np.array([1.0, 1.1, 1.3, 1.6, 2.0, 2.5, 3.2, 4.0, 5.5, 8.0, 13.0, 20.0])
    z = np.concatenate([0.5 * (lo + hi) + 0.5 * (hi - lo) * gx for lo, hi in zip(edges[:-1], edges[1:])])
    w = np.concatenate([0.5 * (hi - lo) * gw for lo, hi in zip(edges[:-1], edges[1:])])
    left = np.array([bp.killed_lebesgue(nu, np.array([s]), x, zi, a)[0][0] for zi in z])
    # p_a(t, z, y) m(z) = p_a(t, y, z) m(y) by symmetry against m
    right = np.array([bp.killed_lebesgue(nu, np.array([t]), y, zi, a)[0][0] for zi in z])
    lhs = np.sum(w * left * right / bp.speed_density(nu, z))
    rhs = bp.killed_density(nu, KernelQuery(s + t, x, y, a)).value
    return abs(lhs / rhs - 1.0)


def suite_chapman(spec: RunSpec):
    for nu in (0.5, 1.0, 1.5):
        t0 = time.perf_counter()
        yield _check("chapman", f"nu={nu:g} s=0.25 t=0.5 x=1.6 y=2.2",
                     chapman_defect(nu, 0.25, 0.5, 1.6, 2.2), 1e-4, t0)


def suite_lamperti(spec: RunSpec):
    cfg = SimConfig(spec.dt, spec.paths, spec.seed, spec.horizon or 20.0, True, spec.workers)
    t0 = time.perf_counter()
    rep = mcsim.lamperti_check(DriftParams(1.0), 2.0, 1.0, cfg)
    rec = _check("lamperti", f"nu=1 x0=2 a=1 paths={spec.paths}", 0.0, 0.0, t0)
    rec.update(error=rep.pvalue, tolerance=0.01, passed=rep.pvalue > 0.01)
    yield rec
    t0 = time.perf_counter()
    ctl = mcsim.lamperti_check(DriftParams(1.0), 2.0, 1.0, cfg, bessel_nu=1.5)
    rec = _check("lamperti", f"control nu=1 against Bessel nu=1.5 paths={spec.paths}", 0.0, 0.0, t0)
    rec.update(error=ctl.pvalue, tolerance=0.01, passed=ctl.pvalue < 0.01)
    yield rec


def brownian_killed(t, x, y, a):
    """Lebesgue density of Brownian motion killed at a (reflection principle)."""
    return (np.exp(-((x - y) ** 2) / (2 * t)) - np.exp(-((x + y - 2 * a) ** 2) / (2 * t))) / np.sqrt(2 * np.pi * t)


def brownian_hitting(s, x, a):
    return (x - a) / np.sqrt(2 * np.pi * s ** 3) * np.exp(-((x - a) ** 2) / (2 * s))


def suite_reflection(spec: RunSpec):
    for t in (0.1, 1.0, 10.0):
        for x in (1.2, 2.0, 5.0):
            t0 = time.perf_counter()
            got = bp.hitting_density(0.5, x, 1.0, t).value
            yield _check("reflection", f"hitting s={t:g} x={x:g}",
                         abs(got / brownian_hitting(t, x, 1.0) - 1.0), 1e-5, t0)
            for y in (1.2, 3.0):
                t0 = time.perf_counter()
                got = bp.killed_density(0.5, KernelQuery(t, x, y, 1.0, "lebesgue")).value
                yield _check("reflection", f"killed t={t:g} x={x:g} y={y:g}",
                             abs(got / brownian_killed(t, x, y, 1.0) - 1.0), 1e-5, t0)


SUITES = {
    "hw": suite_hw,
    "green-laplace": suite_green_laplace,
    "qpotential-laplace": suite_qpotential_laplace,
    "chapman": suite_chapman,
    "lamperti": suite_lamperti,
    "reflection": suite_reflection,
}


def run_verify(spec: RunSpec, writer: RecordWriter, summary_stream) -> bool:
    if spec.target not in SUITES:
        raise UnknownSuite(f"unknown verification suite {spec.target!r}; choose from {sorted(SUITES)}")
    ok = True
    for rec in SUITES[spec.target](spec):
        writer.write(rec)
        ok &= rec["passed"]
        summary_stream.write(f"{'PASS' if rec['passed'] else 'FAIL'} {rec['suite']}: {rec['case']} "
                             f"(error {rec['error']:.3g}, tolerance {rec['tolerance']:g})\n")
    return ok


# -------------------------------------------------------------------- main
def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hbmgreen", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("target")
    ap.add_argument("--config", help="flat key=value file; flags override it")
    ap.add_argument("--n", help="dimension of the hyperbolic space")
    ap.add_argument("--lambda", dest="lambda_", metavar="LAMBDA",
                    help="spectral parameter; a comma list runs each value")
    ap.add_argument("--a", help="barrier height")
    ap.add_argument("--x", help="start point, comma-separated coordinates (height last)")
    ap.add_argument("--y", help="end point, comma-separated coordinates (height last)")
    ap.add_argument("--t", help="time for the killed Bessel kernel")
    ap.add_argument("--nu", help="Bessel index override")
    ap.add_argument("--grid", help="axis:min:max:count[:log|linear] entries joined by ';'")
    ap.add_argument("--paths", help="number of simulated paths")
    ap.add_argument("--dt", help="time step")
    ap.add_argument("--seed", help="random seed")
    ap.add_argument("--horizon", help="simulation horizon")
    ap.add_argument("--workers", help="worker threads")
    ap.add_argument("--out", help="output file (default stdout)")
    ap.add_argument("--format", help="csv or json (newline-delimited)")
    return ap


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.__dict__["lambda"] = args.lambda_
    try:
        config = {}
        if args.command not in COMMANDS:
            raise SpecParseError(f"unknown command {args.command!r}")
        if args.command != "verify" and args.target not in COMMANDS[args.command]:
            raise SpecParseError(f"{args.command} takes one of {COMMANDS[args.command]}, got {args.target!r}")
        if args.config:
            with open(args.config) as fh:
                config = parse_config(fh.read())
        spec = build_spec(args, config)
    except (SpecParseError, UnknownSuite, OSError) as exc:
        stderr.write(f"hbmgreen: {exc}\n")
        return 2
    except HbmError as exc:
        stderr.write(f"hbmgreen: {type(exc).__name__}: {exc}\n")
        return 1

    sink = open(spec.out, "w", newline="") if spec.out else None
    writer = RecordWriter(sink or stdout, spec.format)
    try:
        if spec.command == "eval":
            ok = run_eval(spec, writer)
        elif spec.command == "bounds":
            ok = run_bounds(spec, writer, stderr)
        elif spec.command == "simulate":
            ok = run_simulate(spec, writer)
        else:
            ok = run_verify(spec, writer, stderr)
    except (SpecParseError, UnknownSuite) as exc:
        stderr.write(f"hbmgreen: {exc}\n")
        return 2
    except HbmError as exc:
        stderr.write(f"hbmgreen: {type(exc).__name__}: {exc}\n")
        return 1
    finally:
        if sink:
            sink.close()
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
