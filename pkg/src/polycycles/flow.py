"""Adaptive integration of family orbits across charts, with section events.

Orbits are integrated with a Dormand-Prince 5(4) pair and its quartic dense
output. The state carries the true time ``t`` as a third component:

* in the affine chart the independent variable *is* ``t``;
* in a projective chart the true-time field ``v**(-kappa) F(u, v)`` is stiff
  near ``v = 0``, so we integrate the polynomial field ``F`` in a local time
  ``sigma`` and recover ``t`` from ``dt/dsigma = |v|**kappa``.

Both choices parametrize the same orbit, so section crossings and transit
times do not depend on which chart carried a given arc.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Sequence

from scipy.optimize import brentq

from .errors import (
    BlowUp,
    ChartSingularity,
    ConfigError,
    NoCrossing,
    ProjectiveAtInfinity,
    SingularityReached,
    StepLimitExceeded,
    TangentialCrossing,
)
from .family import ChartKind, ParametricFamily, PlanarField, PlanePoint, to_chart

__all__ = [
    "Section",
    "IntegratorConfig",
    "CrossingEvent",
    "Trajectory",
    "integrate",
    "flow_to_section",
    "switch_chart_policy",
]

AFFINE = ChartKind.AFFINE
PY = ChartKind.PROJECTIVE_Y
PX = ChartKind.PROJECTIVE_X

_HYSTERESIS = 1.1
_TINY = 1e-300
_EVENT_TOL = 1e-12
_TRANSVERSAL_TOL = 1e-10
_RTOL = 4 * 2.220446049250313e-16

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# quartic continuous extension (Shampine), rows = stages, cols = theta^1..theta^4
_P = (
    (1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432),
    (0.0, 0.0, 0.0, 0.0),
    (0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799),
    (0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072),
    (0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632),
    (0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844),
    (0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423),
)


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings.

    ``abs_tol`` may be 0 for pure relative control, which is what passages
    that start exponentially close to an invariant line need.
    """

    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_steps: int = 200_000
    max_time: float = 1e4
    chart_switch_radius: float = 0.2
    allow_projective: bool = True

    def __post_init__(self):
        if not 1e-14 <= self.rel_tol <= 1e-2:
            raise ConfigError(f"rel_tol {self.rel_tol} outside [1e-14, 1e-2]")
        if not (self.abs_tol == 0.0 or 1e-300 <= self.abs_tol <= 1e-2):
            raise ConfigError(f"abs_tol {self.abs_tol} outside {{0}} U [1e-300, 1e-2]")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if not self.max_time > 0:
            raise ConfigError("max_time must be positive")
        if not self.chart_switch_radius > 0:
            raise ConfigError("chart_switch_radius must be positive")


@dataclass(frozen=True)
class Section:
    """Segment ``sigma(s) = base + s * direction`` in the chart of ``base``.

    ``orientation`` selects the sign of ``dg/dt`` accepted at a crossing,
    where ``g(p) = cross(direction, p - base)``; 0 accepts both.
    """

    base: PlanePoint
    direction: tuple[float, float]
    orientation: int = 0
    label: str = ""

    def __post_init__(self):
        dx, dy = (float(c) for c in self.direction)
        n = math.hypot(dx, dy)
        if not n > 0 or not math.isfinite(n):
            raise ConfigError("section direction must be a finite nonzero vector")
        object.__setattr__(self, "direction", (dx / n, dy / n))
        if self.orientation not in (-1, 0, 1):
            raise ConfigError("orientation must be -1, 0 or 1")

    @property
    def chart(self) -> ChartKind:
        return self.base.chart

    def point(self, s: float) -> PlanePoint:
        dx, dy = self.direction
        return PlanePoint(self.base.a + s * dx, self.base.b + s * dy, self.chart)

    def g(self, a: float, b: float) -> float:
        dx, dy = self.direction
        return dx * (b - self.base.b) - dy * (a - self.base.a)

    def coordinate(self, a: float, b: float) -> float:
        dx, dy = self.direction
        return dx * (a - self.base.a) + dy * (b - self.base.b)

    def cross(self, fa: float, fb: float) -> float:
        """Normalized ``|f x direction| / |f|`` for a chart-local velocity."""
        n = math.hypot(fa, fb)
        if n == 0.0:
            return 0.0
        dx, dy = self.direction
        return abs(fa * dy - fb * dx) / n


@dataclass(frozen=True)
class CrossingEvent:
    s_out: float
    transit_time: float
    step_count: int
    charts_visited: tuple[ChartKind, ...]
    point: PlanePoint
    g_residual: float = 0.0


def switch_chart_policy(
    state: PlanePoint, cfg: IntegratorConfig, current: ChartKind | None = None
) -> ChartKind:
    """Chart in which to continue from ``state``.

    Affine inside the disc of radius ``1/chart_switch_radius``, otherwise the
    projective chart of the dominant affine coordinate. Passing ``current``
    applies a 10% hysteresis band to both decisions.
    """
    R = 1.0 / cfg.chart_switch_radius
    a, b = state.a, state.b
    kind = state.chart
    # affine norm and ratio |x|/|y| without overflowing near v = 0
    if kind is AFFINE:
        norm = math.hypot(a, b)
        x_over_y = abs(a) / abs(b) if b != 0.0 else math.inf
    else:
        norm = math.hypot(1.0, a) / abs(b) if b != 0.0 else math.inf
        if kind is PY:
            x_over_y = abs(a)
        else:
            x_over_y = 1.0 / abs(a) if a != 0.0 else math.inf

    def dominant(prev: ChartKind | None) -> ChartKind:
        if prev is PY:
            return PX if x_over_y > _HYSTERESIS else PY
        if prev is PX:
            return PY if x_over_y * _HYSTERESIS < 1.0 else PX
        return PY if x_over_y <= 1.0 else PX

    if current is None:
        return AFFINE if norm < R else dominant(None)
    if current is AFFINE:
        return AFFINE if norm <= R * _HYSTERESIS else dominant(None)
    if norm < R / _HYSTERESIS:
        return AFFINE
    return dominant(current)


# stepping ------------------------------------------------------------------------


def _make_rhs(fld: PlanarField, kind: ChartKind):
    polys = fld._polys[kind]
    f1, f2 = polys.f1, polys.f2
    if kind is AFFINE or fld.kappa == 0:
        dt = 1.0 if kind is AFFINE else None

        def rhs(a, b):
            acc1 = 0.0
            for row in reversed(f1):
                inner = 0.0
                for c in reversed(row):
                    inner = inner * b + c
                acc1 = acc1 * a + inner
            acc2 = 0.0
            for row in reversed(f2):
                inner = 0.0
                for c in reversed(row):
                    inner = inner * b + c
                acc2 = acc2 * a + inner
            return acc1, acc2, 1.0

        return rhs
    k = fld.kappa
    odd = k % 2 == 1

    def rhs(a, b):
        acc1 = 0.0
        for row in reversed(f1):
            inner = 0.0
            for c in reversed(row):
                inner = inner * b + c
            acc1 = acc1 * a + inner
        acc2 = 0.0
        for row in reversed(f2):
            inner = 0.0
            for c in reversed(row):
                inner = inner * b + c
            acc2 = acc2 * a + inner
        if odd and b < 0.0:
            return -acc1, -acc2, -(b**k)
        return acc1, acc2, abs(b) ** k

    return rhs


@dataclass
class _Step:
    kind: ChartKind
    y0: tuple[float, float, float]
    h: float
    q: tuple  # dense coefficients per component, theta^1..theta^4
    y1: tuple[float, float, float]

    def at(self, theta: float) -> tuple[float, float, float]:
        h = self.h
        out = []
        for i in range(3):
            q1, q2, q3, q4 = self.q[i]
            out.append(self.y0[i] + h * theta * (q1 + theta * (q2 + theta * (q3 + theta * q4))))
        return tuple(out)


def _dense(K, y0, h, y1) -> tuple:
    q = []
    for i in range(3):
        row = [0.0, 0.0, 0.0, 0.0]
        for s in range(7):
            ks = K[s][i]
            if ks:
                Ps = _P[s]
                for j in range(4):
                    row[j] += ks * Ps[j]
        q.append(tuple(row))
    return tuple(q)


class _Integrator:
    """DOPRI5 driver for one orbit, switching charts between steps."""

    def __init__(self, fld: PlanarField, cfg: IntegratorConfig, record: bool):
        self.fld = fld
        self.cfg = cfg
        self.record = record
        self.steps: list[_Step] = []
        self.step_count = 0
        self.charts: list[ChartKind] = []
        self._rhs = {}

    def rhs(self, kind: ChartKind):
        if kind not in self._rhs:
            self._rhs[kind] = _make_rhs(self.fld, kind)
        return self._rhs[kind]

    def _scales(self, y, ynew):
        rtol, atol = self.cfg.rel_tol, self.cfg.abs_tol
        return (
            max(atol + rtol * max(abs(y[0]), abs(ynew[0])), _TINY),
            max(atol + rtol * max(abs(y[1]), abs(ynew[1])), _TINY),
            rtol * max(abs(y[2]), abs(ynew[2]), 1.0),
        )

    def _initial_step(self, rhs, y, f0) -> float:
        sc = self._scales(y, y)
        d0 = max(abs(y[0]) / sc[0], abs(y[1]) / sc[1])
        d1 = max(abs(f0[0]) / sc[0], abs(f0[1]) / sc[1])
        if d1 == 0.0:
            raise SingularityReached("velocity vanishes at the current point")
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        f1 = rhs(y[0] + h0 * f0[0], y[1] + h0 * f0[1])
        d2 = max(abs(f1[0] - f0[0]) / sc[0], abs(f1[1] - f0[1]) / sc[1]) / h0
        if max(d1, d2) <= 1e-15:
            h1 = max(1e-6, h0 * 1e-3)
        else:
            h1 = (0.01 / max(d1, d2)) ** 0.2
        return min(100.0 * h0, h1)

    def run(self, kind: ChartKind, a: float, b: float, t_limit: float, section: Section | None):
        """Integrate until ``t_limit`` (elapsed true time) or a section crossing.

        Returns ``(kind, state, hit)`` with ``hit`` True for a crossing.
        """
        cfg = self.cfg
        y = (a, b, 0.0)
        kind = self._choose(kind, y)
        y = self._state
        self.charts.append(kind)
        rhs = self.rhs(kind)
        f0 = rhs(y[0], y[1])
        if f0[0] == 0.0 and f0[1] == 0.0:
            raise SingularityReached("start point is an equilibrium")
        h = self._initial_step(rhs, y, f0)
        g_prev = self._section_g(section, kind, y)
        sigma = 0.0
        while True:
            if self.step_count >= cfg.max_steps:
                raise StepLimitExceeded(f"step limit {cfg.max_steps} reached at t={y[2]:.6g}")
            if kind is AFFINE:
                h = min(h, t_limit - y[2])
            # one attempted step
            while True:
                if h <= 0.0 or sigma + h == sigma:
                    raise SingularityReached(f"step size underflow at t={y[2]:.6g}")
                K = [f0]
                for s in range(1, 7):
                    coeffs = _A[s]
                    ya = y[0]
                    yb = y[1]
                    for j, c in enumerate(coeffs):
                        if c:
                            ya += h * c * K[j][0]
                            yb += h * c * K[j][1]
                    if s < 6:
                        K.append(rhs(ya, yb))
                    else:
                        yt = y[2] + h * sum(c * K[j][2] for j, c in enumerate(coeffs) if c)
                        ynew = (ya, yb, yt)
                        K.append(rhs(ya, yb))
                sc = self._scales(y, ynew)
                err = 0.0
                for i in range(3):
                    e = h * sum(_E[s] * K[s][i] for s in range(7)) / sc[i]
                    err = max(err, abs(e))
                if not math.isfinite(err):
                    h *= 0.2
                    continue
                if err <= 1.0:
                    break
                h *= max(0.2, 0.9 * err ** -0.2)
            self.step_count += 1
            sigma += h
            step = _Step(kind, y, h, _dense(K, y, h, ynew), ynew)
            if self.record:
                self.steps.append(step)
            f_new = K[6]
            h_next = h * (5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2)))

            # section crossing inside this step
            if section is not None:
                g_new = self._section_g(section, kind, ynew)
                if g_prev is not None and g_new is not None and _brackets(g_prev, g_new, section.orientation):
                    hit = self._locate(section, step, g_prev, g_new)
                    if hit is not None:
                        theta, yh = hit
                        if yh[2] <= t_limit:
                            self._truncate(step, theta)
                            self._state = yh
                            return kind, yh, True
                g_prev = g_new

            if ynew[2] >= t_limit:
                if kind is AFFINE:
                    yend = (ynew[0], ynew[1], t_limit)
                    self._state = yend
                    return kind, yend, False
                theta = brentq(lambda th: step.at(th)[2] - t_limit, 0.0, 1.0, xtol=1e-15, rtol=_RTOL)
                yend = step.at(theta)
                self._truncate(step, theta)
                yend = (yend[0], yend[1], t_limit)
                self._state = yend
                return kind, yend, False

            y = ynew
            new_kind = self._choose(kind, y)
            if new_kind is not kind:
                kind = new_kind
                y = self._state
                self.charts.append(kind)
                rhs = self.rhs(kind)
                f0 = rhs(y[0], y[1])
                h = self._initial_step(rhs, y, f0)
                sigma = 0.0
            else:
                f0 = f_new
                h = h_next

    def _choose(self, kind: ChartKind, y) -> ChartKind:
        """Apply the chart policy; leaves the converted state in ``self._state``."""
        p = PlanePoint(y[0], y[1], kind)
        if kind is not AFFINE and y[1] == 0.0:
            raise ProjectiveAtInfinity("orbit start lies on the line at infinity")
        target = switch_chart_policy(p, self.cfg, kind if self.charts else None)
        if target is not AFFINE and not self.cfg.allow_projective:
            if kind is AFFINE:
                raise BlowUp(f"state norm {math.hypot(y[0], y[1]):.6g} exceeds the affine chart")
            target = kind
        if target is kind:
            self._state = y
            return kind
        q = to_chart(p, target)
        self._state = (q.a, q.b, y[2])
        return target

    @staticmethod
    def _section_g(section: Section | None, kind: ChartKind, y) -> float | None:
        if section is None:
            return None
        if kind is section.chart:
            return section.g(y[0], y[1])
        try:
            q = to_chart(PlanePoint(y[0], y[1], kind), section.chart)
        except (ChartSingularity, ValueError):
            return None
        return section.g(q.a, q.b)

    def _locate(self, section: Section, step: _Step, g0: float, g1: float):
        def g_of(theta):
            y = step.at(theta)
            g = self._section_g(section, step.kind, y)
            return math.nan if g is None else g

        if g1 == 0.0:
            theta = 1.0
        else:
            try:
                theta = brentq(g_of, 0.0, 1.0, xtol=1e-16, rtol=_RTOL, maxiter=200)
            except (ValueError, RuntimeError):
                return None
        yh = step.at(theta)
        g = self._section_g(section, step.kind, yh)
        scale = 1.0 + math.hypot(section.base.a, section.base.b)
        if g is None or abs(g) > _EVENT_TOL * scale:
            # sign change came from a chart pole, not a genuine crossing
            return None
        return theta, yh

    def _truncate(self, step: _Step, theta: float):
        if self.record and self.steps and self.steps[-1] is step:
            y1 = step.at(theta)
            # rescale the dense polynomial to the sub-interval [0, theta]
            q = tuple(
                (c[0], c[1] * theta, c[2] * theta**2, c[3] * theta**3) for c in step.q
            )
            self.steps[-1] = _Step(step.kind, step.y0, step.h * theta, q, y1)


def _brackets(g0: float, g1: float, orientation: int) -> bool:
    if orientation > 0:
        return g0 < 0.0 <= g1
    if orientation < 0:
        return g0 > 0.0 >= g1
    return (g0 < 0.0 <= g1) or (g0 > 0.0 >= g1)


# public API ------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Computed orbit with dense output in true time.

    ``direction`` is +1 for forward and -1 for backward integration; the
    stored times are signed accordingly.
    """

    steps: list[_Step]
    direction: int
    step_count: int
    charts_visited: tuple[ChartKind, ...]
    final: PlanePoint
    t_final: float
    _t_ends: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._t_ends = [s.y1[2] for s in self.steps]

    @property
    def times(self) -> list[float]:
        return [0.0] + [self.direction * t for t in self._t_ends]

    @property
    def points(self) -> list[PlanePoint]:
        if not self.steps:
            return [self.final]
        first = self.steps[0]
        return [PlanePoint(first.y0[0], first.y0[1], first.kind)] + [
            PlanePoint(s.y1[0], s.y1[1], s.kind) for s in self.steps
        ]

    def at(self, t: float) -> PlanePoint:
        """Dense-output point at true time ``t`` (in the chart used there)."""
        e = self.direction * t
        if e < 0.0 or e > (self._t_ends[-1] if self.steps else 0.0) * (1 + 1e-15):
            raise ValueError(f"t={t} outside the computed interval")
        if not self.steps:
            return self.final
        i = min(bisect.bisect_left(self._t_ends, e), len(self.steps) - 1)
        step = self.steps[i]
        if step.kind is AFFINE:
            theta = (e - step.y0[2]) / step.h
        else:
            lo, hi = step.at(0.0)[2] - e, step.at(1.0)[2] - e
            theta = 0.0 if lo >= 0 else 1.0 if hi <= 0 else brentq(
                lambda th: step.at(th)[2] - e, 0.0, 1.0, xtol=1e-15, rtol=_RTOL
            )
        y = step.at(min(max(theta, 0.0), 1.0))
        return PlanePoint(y[0], y[1], step.kind)


def _field(family: ParametricFamily | PlanarField, mu, backward: bool) -> PlanarField:
    fld = family if isinstance(family, PlanarField) else family.at(mu)
    return fld.negated() if backward else fld


def integrate(
    family: ParametricFamily | PlanarField,
    mu,
    start: PlanePoint,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate from ``start`` over true time ``[0, t_end]``; negative ``t_end`` flows backward."""
    if not math.isfinite(t_end):
        raise ValueError("t_end must be finite")
    direction = -1 if t_end < 0 else 1
    fld = _field(family, mu, direction < 0)
    if t_end == 0.0:
        return Trajectory([], direction, 0, (start.chart,), start, 0.0)
    eng = _Integrator(fld, cfg, record=True)
    kind, y, _ = eng.run(start.chart, start.a, start.b, abs(t_end), None)
    return Trajectory(
        eng.steps, direction, eng.step_count, tuple(eng.charts),
        PlanePoint(y[0], y[1], kind), direction * y[2],
    )


def flow_to_section(
    family: ParametricFamily | PlanarField,
    mu,
    start: PlanePoint,
    section: Section,
    cfg: IntegratorConfig = IntegratorConfig(),
    backward: bool = False,
) -> CrossingEvent:
    """First crossing of ``section`` with the accepted orientation.

    ``transit_time`` is the elapsed true time (positive also for backward
    flow, where orientation refers to the reversed field).
    """
    fld = _field(family, mu, backward)
    _check_transversal(fld, section, section.base)
    eng = _Integrator(fld, cfg, record=False)
    try:
        kind, y, hit = eng.run(start.chart, start.a, start.b, cfg.max_time, section)
    except StepLimitExceeded as exc:
        raise NoCrossing(f"no crossing of section {section.label!r}: {exc}") from None
    if not hit:
        raise NoCrossing(
            f"no crossing of section {section.label!r} within max_time={cfg.max_time}"
        )
    p = PlanePoint(y[0], y[1], kind)
    q = to_chart(p, section.chart)
    _check_transversal(fld, section, q)
    return CrossingEvent(
        s_out=section.coordinate(q.a, q.b),
        transit_time=y[2],
        step_count=eng.step_count,
        charts_visited=tuple(eng.charts),
        point=q,
        g_residual=section.g(q.a, q.b),
    )


def _check_transversal(fld: PlanarField, section: Section, p: PlanePoint) -> None:
    # the polynomial chart field has the direction of the true one for v > 0
    fa, fb = fld.rescaled(section.chart, p.a, p.b)
    if section.cross(fa, fb) < _TRANSVERSAL_TOL:
        raise TangentialCrossing(
            f"field is tangent to section {section.label!r} at ({p.a:.6g}, {p.b:.6g})"
        )


def chain_sections(
    family: ParametricFamily | PlanarField,
    mu,
    s: float,
    sections: Sequence[Section],
    cfg: IntegratorConfig = IntegratorConfig(),
) -> tuple[float, float, int]:
    """Flow from ``sections[0].point(s)`` through each later section in turn.

    Returns the final section coordinate, the summed transit time and the
    total step count.
    """
    fld = _field(family, mu, False)
    p = sections[0].point(s)
    total, steps = 0.0, 0
    for sec in sections[1:]:
        ev = flow_to_section(fld, None, p, sec, cfg)
        total += ev.transit_time
        steps += ev.step_count
        p = ev.point
    return sec.coordinate(p.a, p.b), total, steps
