"""Return map sampling, structural fits and the scalar displacement solver.

Near a hyperbolic polycycle the return map and return time behave like

    R(s) = A s**r (1 + remainder),    T(s) = T0_bar log s + T00 + remainder,

with remainders that vanish like a positive power of ``s``. The fits below
recover ``(A, r)``, the remainder exponent and ``(T0_bar, T00)`` from samples.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    DomainError,
    IllConditioned,
    InsufficientSamples,
    NoConvergence,
    NoCrossing,
    NumericalError,
    OutsideExistenceRegion,
    StepLimitExceeded,
)
from .family import ParametricFamily, PlanarField
from .flow import IntegratorConfig, flow_to_section
from .saddletools import PolycycleSkeleton

__all__ = [
    "ReturnSample",
    "PowerLawFit",
    "TimeFit",
    "ScalarDisplacementProblem",
    "FlatnessResult",
    "compensator",
    "return_map",
    "sample_return_map",
    "fit_power_law",
    "fit_return_time",
    "displacement",
    "solve_scalar_displacement",
    "flatness_probe",
    "samples_to_csv",
    "samples_from_csv",
    "log_grid",
    "count_sign_changes",
    "fit_summary",
]

SAMPLE_COLUMNS = ("s_in", "s_out", "time", "status")
MIN_SAMPLES = 8
MIN_DECADES = 2.0
_SLOPE_SLACK = 1e-6  # exact power laws sit on the boundary


@dataclass(frozen=True)
class ReturnSample:
    s_in: float
    s_out: float
    time: float
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class PowerLawFit:
    A_hat: float
    r_hat: float
    eps_hat: float  # nan when the remainder is below the noise floor
    residual_rms: float
    window: tuple[float, float]
    n_samples: int = 0
    remainder_coeff: float = math.nan

    @property
    def eps_determined(self) -> bool:
        return math.isfinite(self.eps_hat)


@dataclass(frozen=True)
class TimeFit:
    T0_bar: float
    T00_hat: float
    residual_rms: float
    window: tuple[float, float] = (math.nan, math.nan)


# compensator ---------------------------------------------------------------------


def compensator(s: float, alpha: float) -> float:
    """``(s**-alpha - 1)/alpha``, continued by ``-log s`` at ``alpha = 0``."""
    if not s > 0:
        raise DomainError(f"compensator needs s > 0, got {s}")
    ls = math.log(s)
    if alpha == 0.0:
        return -ls + 0.0
    t = -alpha * ls
    if abs(t) < 1e-4:
        # series of expm1(t)/t; also safe when alpha*log(s) is subnormal
        return -ls * (1 + t / 2 * (1 + t / 3 * (1 + t / 4))) + 0.0
    return math.expm1(t) / alpha + 0.0


# sampling ------------------------------------------------------------------------


def return_map(
    family: ParametricFamily | PlanarField,
    mu,
    skeleton: PolycycleSkeleton,
    s: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> tuple[float, float]:
    """One evaluation ``(R(s), T(s))`` around the skeleton."""
    fld = family if isinstance(family, PlanarField) else family.at(mu)
    value, total = s, 0.0
    for src, dst, linear in skeleton.legs():
        if linear is not None:
            value *= linear.gain
            total += linear.time
            continue
        ev = flow_to_section(fld, None, src.point(value), dst, cfg)
        value = ev.s_out
        total += ev.transit_time
    return value, total


def _status(exc: Exception) -> str:
    if isinstance(exc, NoCrossing):
        return "no_crossing"
    if isinstance(exc, StepLimitExceeded):
        return "step_limit"
    return "failed:" + type(exc).__name__


def _sample_one(args) -> ReturnSample:
    fld, skeleton, s, cfg = args
    try:
        s_out, t = return_map(fld, None, skeleton, s, cfg)
    except NumericalError as exc:
        return ReturnSample(s, math.nan, math.nan, _status(exc))
    if not (s_out > 0 and math.isfinite(t)):
        return ReturnSample(s, s_out, t, "nonpositive")
    if t > cfg.max_time:
        return ReturnSample(s, s_out, t, "max_time")
    return ReturnSample(s, s_out, t, "ok")


def sample_return_map(
    family: ParametricFamily | PlanarField,
    mu,
    skeleton: PolycycleSkeleton,
    s_grid: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    jobs: int = 1,
) -> list[ReturnSample]:
    """Return map and time at every grid point, in grid order.

    Failures are recorded in ``status`` instead of aborting the batch.
    """
    grid = [float(s) for s in s_grid]
    if not grid or any(not s > 0 for s in grid):
        raise DomainError("s_grid must be non-empty and positive")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise DomainError("s_grid must be sorted in strictly descending order")
    fld = family if isinstance(family, PlanarField) else family.at(mu)
    tasks = [(fld, skeleton, s, cfg) for s in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sample_one, tasks))
    return [_sample_one(t) for t in tasks]


def log_grid(s_min: float, s_max: float, n: int) -> list[float]:
    """``n`` log-uniform points from ``s_max`` down to ``s_min``."""
    if not 0 < s_min < s_max or n < 2:
        raise DomainError("log_grid needs 0 < s_min < s_max and n >= 2")
    lo, hi = math.log10(s_min), math.log10(s_max)
    return [10.0 ** (hi - (hi - lo) * k / (n - 1)) for k in range(n)]


# fits ------------------------------------------------------------------------------


def _valid(samples: Iterable[ReturnSample], need_time: bool = False) -> list[ReturnSample]:
    out = [
        x for x in samples
        if x.ok and x.s_in > 0 and x.s_out > 0 and (not need_time or math.isfinite(x.time))
    ]
    if len(out) < MIN_SAMPLES:
        raise InsufficientSamples(f"{len(out)} valid samples, need {MIN_SAMPLES}")
    lo = min(x.s_in for x in out)
    hi = max(x.s_in for x in out)
    if math.log10(hi / lo) < MIN_DECADES - 1e-9:
        raise IllConditioned(f"sampling window [{lo:.3g}, {hi:.3g}] spans under {MIN_DECADES:g} decades")
    return out


def fit_power_law(samples: Sequence[ReturnSample], noise_floor: float = 1e-10) -> PowerLawFit:
    """Fit ``log R = log A + r log s`` and estimate the remainder exponent.

    When the log-linear residuals exceed ``noise_floor`` the remainder is
    modelled jointly, ``log R = log A + r log s + log(1 + c s**eps)``, so
    that ``A`` and ``r`` are the ``s -> 0`` limits rather than window
    averages. Below the floor ``eps_hat`` is reported as nan.
    """
    pts = _valid(samples)
    ls = np.array([math.log(x.s_in) for x in pts])
    lr = np.array([math.log(x.s_out) for x in pts])
    window = (float(math.exp(ls.min())), float(math.exp(ls.max())))
    X = np.column_stack([np.ones_like(ls), ls])
    (logA, r), *_ = np.linalg.lstsq(X, lr, rcond=None)
    res = lr - (logA + r * ls)
    rms = float(np.sqrt(np.mean(res**2)))
    if rms <= noise_floor:
        return PowerLawFit(math.exp(logA), float(r), math.nan, rms, window, len(pts))

    # starting guess for the remainder from the secondary log|residual| fit
    mag = np.abs(res)
    keep = mag > 0
    eps0, logc0 = 0.5, math.log(max(float(mag.max()), 1e-300))
    if keep.sum() >= 3:
        slope, icept = np.polyfit(ls[keep], np.log(mag[keep]), 1)
        if slope > 1e-3:
            eps0, logc0 = float(slope), float(icept)
    sign0 = 1.0 if res[np.argmax(ls)] >= 0 else -1.0
    lmax = float(ls.max())

    # c s^eps written as c_top (s/s_max)^eps keeps the parameters O(1)
    def model(theta):
        la, rr, ct, ee = theta
        return la + rr * ls + np.log1p(ct * np.exp(ee * (ls - lmax)))

    def resid(theta):
        return model(theta) - lr

    c_top0 = sign0 * min(math.exp(logc0 + eps0 * lmax), 0.5)
    try:
        sol = least_squares(
            resid,
            x0=[logA, r, c_top0, eps0],
            bounds=([-np.inf, 0.0, -0.99, 1e-3], [np.inf, np.inf, np.inf, 20.0]),
            x_scale=[1.0, 0.1, max(abs(c_top0), 1e-8), 0.1],
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
        )
        ok = sol.success and np.all(np.isfinite(sol.x))
    except ValueError:
        ok = False
    if ok:
        la, rr, ct, ee = sol.x
        rms2 = float(np.sqrt(np.mean(sol.fun**2)))
        if rms2 < rms:
            c = ct * math.exp(-ee * lmax)
            return PowerLawFit(math.exp(la), float(rr), float(ee), rms2, window, len(pts), float(c))
    # joint fit unusable: keep the log-linear estimate, exponent from the secondary fit
    return PowerLawFit(math.exp(logA), float(r), eps0 if keep.sum() >= 3 else math.nan, rms, window, len(pts))


def fit_return_time(samples: Sequence[ReturnSample]) -> TimeFit:
    """Least-squares fit of ``T = T0_bar log s + T00``."""
    pts = _valid(samples, need_time=True)
    ls = np.array([math.log(x.s_in) for x in pts])
    t = np.array([x.time for x in pts])
    X = np.column_stack([ls, np.ones_like(ls)])
    (T0, T00), *_ = np.linalg.lstsq(X, t, rcond=None)
    res = t - (T0 * ls + T00)
    window = (float(math.exp(ls.min())), float(math.exp(ls.max())))
    return TimeFit(float(T0), float(T00), float(np.sqrt(np.mean(res**2))), window)


def displacement(samples: Sequence[ReturnSample], r: float) -> list[tuple[float, float]]:
    """Proportional displacement ``s**-r (R(s) - s)`` at each valid sample."""
    if not r > 0:
        raise DomainError("displacement needs r > 0")
    return [(x.s_in, x.s_in ** (-r) * (x.s_out - x.s_in)) for x in samples if x.ok]


def count_sign_changes(values: Sequence[float]) -> int:
    signs = [v > 0 for v in values if v != 0.0 and math.isfinite(v)]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


# scalar displacement ---------------------------------------------------------------


@dataclass(frozen=True)
class ScalarDisplacementProblem:
    """Zero of ``A - B s**-alpha + f(s)`` near ``s = c**(-1/alpha)``, ``c = A/B``."""

    alpha: float
    A: float
    B: float
    f: Callable[[float], float] | None = None

    def __post_init__(self):
        if not (self.A > 0 and self.B > 0):
            raise DomainError("A and B must be positive")
        if self.alpha == 0.0:
            raise DomainError("alpha must be nonzero")

    @property
    def c(self) -> float:
        return self.A / self.B

    def value(self, s: float) -> float:
        extra = self.f(s) if self.f is not None else 0.0
        return self.A - self.B * s ** (-self.alpha) + extra


def solve_scalar_displacement(
    problem: ScalarDisplacementProblem, max_iter: int = 30
) -> tuple[float, float]:
    """Newton on ``z`` in the ansatz ``s = c**(-1/alpha) (1 + z)``, seeded at ``z = 0``.

    Substituting the ansatz gives ``H(z) = A (1 - (1 + z)**-alpha) + f(s(z))``.
    Steps are halved while they increase ``|H|``.
    """
    a, A, B = problem.alpha, problem.A, problem.B
    if not a * (A - B) > 0:
        raise OutsideExistenceRegion(f"alpha*(A-B) = {a * (A - B):.3g} is not positive")
    s0 = math.exp(-math.log(problem.c) / a)
    if not 0 < s0 < math.inf:
        raise OutsideExistenceRegion(f"c**(-1/alpha) = {s0} is not a usable location")
    f = problem.f
    tol = 1e-12 * max(A, B)

    def H(z):
        s = s0 * (1 + z)
        extra = f(s) if f is not None else 0.0
        return -A * math.expm1(-a * math.log1p(z)) + extra

    def dH(z):
        d = A * a * (1 + z) ** (-a - 1)
        if f is not None:
            s = s0 * (1 + z)
            hs = 1e-6 * s
            d += s0 * (f(s + hs) - f(s - hs)) / (2 * hs)
        return d

    z = 0.0
    hz = H(z)
    for _ in range(max_iter):
        if abs(hz) <= tol:
            return s0 * (1 + z), z
        d = dH(z)
        if d == 0.0 or not math.isfinite(d):
            break
        step = -hz / d
        lam = 1.0
        while True:
            zn = z + lam * step
            if zn > -1.0:
                hn = H(zn)
                if math.isfinite(hn) and abs(hn) < abs(hz):
                    break
            lam *= 0.5
            if lam < 1e-12:
                raise NoConvergence("damped Newton stalled in the scalar displacement solve")
        z, hz = zn, hn
    if abs(hz) <= tol:
        return s0 * (1 + z), z
    raise NoConvergence(f"scalar displacement residual {abs(hz):.3g} after {max_iter} iterations")


# flatness ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlatnessResult:
    passes: bool
    C_hat: float
    slope: float

    def __iter__(self):
        return iter((self.passes, self.C_hat))


def flatness_probe(f_samples: Sequence[tuple[float, float]], L: float) -> FlatnessResult:
    """Order-0 check of ``|f(s)| <= C s**L`` on the sampled window.

    ``C_hat`` is the largest observed ``|f|/s**L``. On a finite window the
    bound always holds with that constant, so the verdict is about the
    trend: ``|f|/s**L`` must not grow as ``s -> 0``, i.e. the fitted exponent
    of ``|f|`` over the half of the window nearest 0 (in log scale) is at
    least ``L``. That exponent is reported as ``slope``.
    """
    pts = [(s, abs(v)) for s, v in f_samples if s > 0 and math.isfinite(v)]
    if len(pts) < 3:
        raise InsufficientSamples("flatness probe needs at least 3 samples")
    ls = np.array([math.log(s) for s, _ in pts])
    if (ls.max() - ls.min()) / math.log(10) < MIN_DECADES - 1e-9:
        raise InsufficientSamples("flatness probe needs samples spanning 2 decades")
    mag = np.array([v for _, v in pts])
    nz = mag > 0
    if not nz.any():
        return FlatnessResult(True, 0.0, math.inf)
    C_hat = float(math.exp((np.log(mag[nz]) - L * ls[nz]).max()))
    mid = 0.5 * (ls.max() + ls.min())
    near = nz & (ls <= mid)
    if near.sum() < 3:
        near = nz
    if near.sum() < 2:
        return FlatnessResult(True, C_hat, math.nan)
    slope = float(np.polyfit(ls[near], np.log(mag[near]), 1)[0])
    return FlatnessResult(bool(slope >= L - _SLOPE_SLACK), C_hat, slope)


# serialization ----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def samples_to_csv(samples: Sequence[ReturnSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_COLUMNS)
    for x in samples:
        w.writerow([_fmt(x.s_in), _fmt(x.s_out), _fmt(x.time), x.status])
    return buf.getvalue()


def samples_from_csv(text: str) -> list[ReturnSample]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != SAMPLE_COLUMNS:
        raise ValueError(f"expected header {','.join(SAMPLE_COLUMNS)}")
    return [ReturnSample(float(a), float(b), float(c), d) for a, b, c, d in rows[1:]]


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    return x


def fit_summary(power: PowerLawFit, time: TimeFit | None) -> dict:
    out = {
        "A_hat": power.A_hat,
        "r_hat": power.r_hat,
        "eps_hat": power.eps_hat,
        "residual_rms": power.residual_rms,
        "window": list(power.window),
        "n_samples": power.n_samples,
    }
    if time is not None:
        out.update(T0_bar=time.T0_bar, T00_hat=time.T00_hat, time_residual_rms=time.residual_rms)
    return _jsonable(out)


def to_json(obj) -> str:
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
