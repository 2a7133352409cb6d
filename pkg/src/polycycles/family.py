"""Parametric planar polynomial vector fields and their coordinate charts.

A :class:`ParametricFamily` stores ``dx/dt = P(x, y; mu)``, ``dy/dt = Q(x, y; mu)``
as coefficient tables. Substituting a parameter point gives a
:class:`PlanarField`, which holds dense coefficient grids for the affine chart
and for the two projective charts used near the line at infinity:

* ``PROJECTIVE_Y``: ``u = x/y, v = 1/y``
* ``PROJECTIVE_X``: ``u = y/x, v = 1/x``

In a projective chart the pushed-forward field is ``v**(-kappa) * F(u, v)``
with ``kappa = d - 1`` and ``F`` polynomial. ``F`` (the *desingularized*
field) is what saddle analysis at infinity works with; ``eval_field`` returns
the true-time velocity, so the factor is kept and ``v = 0`` is rejected.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ChartSingularity, ProjectiveAtInfinity, UnknownParameter
from .polyexpr import (
    DEFAULT_DEGREE_CAP,
    CoefficientExpr,
    CoeffTable,
    parse_tables,
    render_poly,
)

__all__ = [
    "ChartKind",
    "Chart",
    "ParamPoint",
    "PlanePoint",
    "ParametricFamily",
    "PlanarField",
    "eval_field",
    "jacobian",
    "to_chart",
    "parse_family",
    "serialize_family",
    "builtin_kolmogorov",
    "kolmogorov_as_printed",
]


class ChartKind(str, enum.Enum):
    AFFINE = "affine"
    PROJECTIVE_Y = "projective_y"
    PROJECTIVE_X = "projective_x"

    @classmethod
    def parse(cls, value: "str | ChartKind") -> "ChartKind":
        if isinstance(value, ChartKind):
            return value
        aliases = {"py": cls.PROJECTIVE_Y, "px": cls.PROJECTIVE_X}
        key = str(value).strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class Chart:
    kind: ChartKind
    time_factor_exponent: int = 0

    def __post_init__(self):
        if self.kind is ChartKind.AFFINE and self.time_factor_exponent != 0:
            raise ValueError("the affine chart has no time factor")
        if self.time_factor_exponent < 0:
            raise ValueError("time factor exponent must be non-negative")

    @classmethod
    def for_degree(cls, kind: "ChartKind | str", degree: int) -> "Chart":
        kind = ChartKind.parse(kind)
        return cls(kind, 0 if kind is ChartKind.AFFINE else degree - 1)


@dataclass(frozen=True)
class ParamPoint:
    """Parameter vector with named components."""

    names: tuple[str, ...]
    components: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "components", tuple(float(c) for c in self.components))
        if len(self.names) != len(self.components):
            raise ValueError("names and components differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate parameter names {self.names}")
        if not all(math.isfinite(c) for c in self.components):
            raise ValueError(f"non-finite parameter value in {self.components}")

    @classmethod
    def of(cls, **values: float) -> "ParamPoint":
        return cls(tuple(values), tuple(values.values()))

    def __getitem__(self, name: str) -> float:
        try:
            return self.components[self.names.index(name)]
        except ValueError:
            raise UnknownParameter(f"no parameter named {name!r}") from None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.components))

    def replace(self, **values: float) -> "ParamPoint":
        for name in values:
            if name not in self.names:
                raise UnknownParameter(f"no parameter named {name!r}")
        return ParamPoint(self.names, tuple(values.get(n, c) for n, c in zip(self.names, self.components)))

    def with_components(self, components: Sequence[float]) -> "ParamPoint":
        return ParamPoint(self.names, tuple(components))

    def __str__(self) -> str:
        inner = ", ".join(f"{n}={c:.12g}" for n, c in zip(self.names, self.components))
        return f"({inner})"


@dataclass(frozen=True)
class PlanePoint:
    """Two chart-local coordinates plus the chart they are expressed in."""

    a: float
    b: float
    chart: ChartKind = ChartKind.AFFINE

    def __post_init__(self):
        object.__setattr__(self, "chart", ChartKind.parse(self.chart))
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"non-finite coordinates ({self.a}, {self.b})")

    @property
    def coords(self) -> tuple[float, float]:
        return (self.a, self.b)


def to_chart(p: PlanePoint, target: "ChartKind | Chart | str") -> PlanePoint:
    """Express ``p`` in another chart; raises :class:`ChartSingularity` where undefined."""
    if isinstance(target, Chart):
        target = target.kind
    target = ChartKind.parse(target)
    src = p.chart
    a, b = p.a, p.b
    if src is target:
        return p
    AFF, PY, PX = ChartKind.AFFINE, ChartKind.PROJECTIVE_Y, ChartKind.PROJECTIVE_X
    if src is AFF:
        # (x, y) -> (x/y, 1/y) or (y/x, 1/x)
        den = b if target is PY else a
        if den == 0.0:
            raise ChartSingularity(f"({a}, {b}) has no {target.value} coordinates")
        num = a if target is PY else b
        return _chart_point(num / den, 1.0 / den, target, p)
    if target is AFF:
        if b == 0.0:
            raise ChartSingularity("point on the line at infinity has no affine coordinates")
        if src is PY:
            return _chart_point(a / b, 1.0 / b, AFF, p)
        return _chart_point(1.0 / b, a / b, AFF, p)
    # between the two projective charts: (u, v) -> (1/u, v/u)
    if a == 0.0:
        raise ChartSingularity(f"({a}, {b}) has no {target.value} coordinates")
    return _chart_point(1.0 / a, b / a, target, p)


def _chart_point(a: float, b: float, target: ChartKind, src: PlanePoint) -> PlanePoint:
    # a coordinate overflowing to inf means the point sits numerically on the chart's singular line
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ChartSingularity(f"{src.coords} overflows in {target.value} coordinates")
    return PlanePoint(a, b, target)


# numeric polynomial grids ----------------------------------------------------


def _trim(grid: list[list[float]]) -> tuple[tuple[float, ...], ...]:
    rows = [list(r) for r in grid]
    for r in rows:
        while r and r[-1] == 0.0:
            r.pop()
    while rows and not rows[-1]:
        rows.pop()
    return tuple(tuple(r) for r in rows)


def _horner(rows: tuple[tuple[float, ...], ...], a: float, b: float) -> float:
    acc = 0.0
    for row in reversed(rows):
        inner = 0.0
        for c in reversed(row):
            inner = inner * b + c
        acc = acc * a + inner
    return acc


def _d_da(grid: list[list[float]]) -> list[list[float]]:
    n = len(grid)
    return [[(i + 1) * grid[i + 1][j] for j in range(n)] for i in range(n - 1)] or [[0.0]]


def _d_db(grid: list[list[float]]) -> list[list[float]]:
    n = len(grid)
    return [[(j + 1) * grid[i][j + 1] for j in range(n - 1)] or [0.0] for i in range(n)]


@dataclass(frozen=True)
class _ChartPolys:
    """Polynomial components ``(F1, F2)`` of a chart-local field plus derivatives."""

    f1: tuple
    f2: tuple
    f1_a: tuple
    f1_b: tuple
    f2_a: tuple
    f2_b: tuple
    grids: tuple  # untrimmed (F1, F2) for symbolic checks

    @classmethod
    def build(cls, g1: list[list[float]], g2: list[list[float]]) -> "_ChartPolys":
        return cls(
            _trim(g1), _trim(g2),
            _trim(_d_da(g1)), _trim(_d_db(g1)),
            _trim(_d_da(g2)), _trim(_d_db(g2)),
            (g1, g2),
        )

    def value(self, a: float, b: float) -> tuple[float, float]:
        return _horner(self.f1, a, b), _horner(self.f2, a, b)

    def jac(self, a: float, b: float) -> tuple[tuple[float, float], tuple[float, float]]:
        return (
            (_horner(self.f1_a, a, b), _horner(self.f1_b, a, b)),
            (_horner(self.f2_a, a, b), _horner(self.f2_b, a, b)),
        )


class PlanarField:
    """A family member at a fixed parameter point, ready for fast evaluation.

    Attributes:
        degree: Total degree ``d`` of the family.
        P, Q: Affine coefficient grids, ``P[i][j]`` multiplies ``x**i * y**j``.
    """

    def __init__(self, P: list[list[float]], Q: list[list[float]], degree: int, sign: float = 1.0):
        self.degree = degree
        self.sign = sign
        self.P = [[sign * c for c in row] for row in P]
        self.Q = [[sign * c for c in row] for row in Q]
        d = degree
        n = d + 2
        self._polys: dict[ChartKind, _ChartPolys] = {
            ChartKind.AFFINE: _ChartPolys.build(
                [row + [0.0] for row in self.P] + [[0.0] * n],
                [row + [0.0] for row in self.Q] + [[0.0] * n],
            )
        }
        # projective charts: Pt(u, v) = v^d P(.), rescaled field (Pt - u Qt, -v Qt)
        for kind in (ChartKind.PROJECTIVE_Y, ChartKind.PROJECTIVE_X):
            first, second = (self.P, self.Q) if kind is ChartKind.PROJECTIVE_Y else (self.Q, self.P)
            At = [[0.0] * n for _ in range(n)]
            Bt = [[0.0] * n for _ in range(n)]
            for i in range(d + 1):
                for j in range(d + 1 - i):
                    # PY: x^i y^j -> u^i v^(d-i-j); PX: x^i y^j -> u^j v^(d-i-j)
                    ui = i if kind is ChartKind.PROJECTIVE_Y else j
                    At[ui][d - i - j] += first[i][j]
                    Bt[ui][d - i - j] += second[i][j]
            F1 = [[0.0] * n for _ in range(n)]
            F2 = [[0.0] * n for _ in range(n)]
            for i in range(n):
                for k in range(n):
                    F1[i][k] += At[i][k]
                    if i + 1 < n:
                        F1[i + 1][k] -= Bt[i][k]
                    if k + 1 < n:
                        F2[i][k + 1] -= Bt[i][k]
            self._polys[kind] = _ChartPolys.build(F1, F2)

    @property
    def kappa(self) -> int:
        return max(self.degree - 1, 0)

    def chart(self, kind: "ChartKind | str") -> Chart:
        return Chart.for_degree(kind, self.degree)

    def negated(self) -> "PlanarField":
        return PlanarField(self.P, self.Q, self.degree, -1.0)

    # -- desingularized (polynomial) chart field --------------------------------

    def rescaled(self, kind: ChartKind, a: float, b: float) -> tuple[float, float]:
        return self._polys[kind].value(a, b)

    def rescaled_jacobian(self, kind: ChartKind, a: float, b: float):
        return self._polys[kind].jac(a, b)

    def chart_grids(self, kind: ChartKind):
        return self._polys[kind].grids

    # -- true-time chart field -------------------------------------------------

    def velocity(self, kind: ChartKind, a: float, b: float) -> tuple[float, float]:
        f1, f2 = self._polys[kind].value(a, b)
        if kind is ChartKind.AFFINE or self.kappa == 0:
            return f1, f2
        if b == 0.0:
            raise ProjectiveAtInfinity("true-time field is undefined on v = 0")
        w = b ** (-self.kappa)
        return w * f1, w * f2

    def velocity_jacobian(self, kind: ChartKind, a: float, b: float):
        (j11, j12), (j21, j22) = self._polys[kind].jac(a, b)
        if kind is ChartKind.AFFINE or self.kappa == 0:
            return ((j11, j12), (j21, j22))
        if b == 0.0:
            raise ProjectiveAtInfinity("true-time field is undefined on v = 0")
        f1, f2 = self._polys[kind].value(a, b)
        k = self.kappa
        w = b ** (-k)
        return (
            (w * j11, w * (j12 - k * f1 / b)),
            (w * j21, w * (j22 - k * f2 / b)),
        )


# families ----------------------------------------------------------------------


@dataclass(frozen=True)
class ParametricFamily:
    """Planar polynomial family ``(P, Q)`` with coefficients polynomial in ``mu``."""

    name: str
    params: tuple[str, ...]
    px_coeffs: CoeffTable
    py_coeffs: CoeffTable
    degree: int = field(default=-1)

    def __post_init__(self):
        d = max((i + j for i, j in (*self.px_coeffs, *self.py_coeffs)), default=0)
        if self.degree == -1:
            object.__setattr__(self, "degree", max(d, 1))
        elif self.degree < max(d, 1):
            raise ValueError(f"declared degree {self.degree} below monomial degree {d}")

    def param_point(self, values: "ParamPoint | Mapping[str, float] | Sequence[float]") -> ParamPoint:
        """Coerce ``values`` to a :class:`ParamPoint` matching this family's names."""
        if isinstance(values, ParamPoint):
            if tuple(values.names) != self.params:
                if set(values.names) == set(self.params):
                    return ParamPoint(self.params, tuple(values[n] for n in self.params))
                raise UnknownParameter(
                    f"parameter names {values.names} do not match family {self.params}"
                )
            return values
        if isinstance(values, Mapping):
            if set(values) != set(self.params):
                raise UnknownParameter(
                    f"parameter names {sorted(values)} do not match family {self.params}"
                )
            return ParamPoint(self.params, tuple(float(values[n]) for n in self.params))
        values = tuple(float(v) for v in values)
        if len(values) != len(self.params):
            raise UnknownParameter(f"expected {len(self.params)} parameter values, got {len(values)}")
        return ParamPoint(self.params, values)

    def _grid(self, table: CoeffTable, mu: tuple[float, ...]) -> list[list[float]]:
        d = self.degree
        grid = [[0.0] * (d + 1) for _ in range(d + 1)]
        for (i, j), coeff in table.items():
            grid[i][j] = coeff.evaluate(mu)
        return grid

    def at(self, mu) -> PlanarField:
        values = self.param_point(mu).components
        return PlanarField(self._grid(self.px_coeffs, values), self._grid(self.py_coeffs, values), self.degree)

    def chart(self, kind: "ChartKind | str") -> Chart:
        return Chart.for_degree(kind, self.degree)

    def coefficient(self, component: str, i: int, j: int) -> CoefficientExpr | None:
        table = self.px_coeffs if component == "x" else self.py_coeffs
        return table.get((i, j))


def _check_chart(chart: "Chart | ChartKind | str", p: PlanePoint) -> ChartKind:
    kind = chart.kind if isinstance(chart, Chart) else ChartKind.parse(chart)
    if p.chart is not kind:
        raise ValueError(f"point is expressed in {p.chart.value}, expected {kind.value}")
    return kind


def eval_field(family: ParametricFamily, chart, mu, p: PlanePoint) -> tuple[float, float]:
    """True-time velocity of the family at ``p`` in the given chart."""
    kind = _check_chart(chart, p)
    return family.at(mu).velocity(kind, p.a, p.b)


def jacobian(family: ParametricFamily, chart, mu, p: PlanePoint):
    """Analytic 2x2 Jacobian of the true-time chart-local field."""
    kind = _check_chart(chart, p)
    return family.at(mu).velocity_jacobian(kind, p.a, p.b)


def parse_family(text: str, name: str = "custom", degree_cap: int = DEFAULT_DEGREE_CAP) -> ParametricFamily:
    params, px, py = parse_tables(text, degree_cap)
    return ParametricFamily(name, params, px, py)


def serialize_family(family: ParametricFamily) -> str:
    return (
        f"x' = {render_poly(family.px_coeffs, family.params)};\n"
        f"y' = {render_poly(family.py_coeffs, family.params)};\n"
        f"params {', '.join(family.params)}\n"
    )


KOLMOGOROV_TEXT = (
    "x' = x*(1 + x + x^2 + a*x*y + p*y^2);\n"
    "y' = y*(-1 - y + q*x^2 + a*x*y - y^2);\n"
    "params a, p, q\n"
)

# Typeset variant with q*y^2 in the second equation; at a = 0 its y-equation
# decouples from x, so it cannot carry the center-type polycycle.
KOLMOGOROV_PRINTED_TEXT = (
    "x' = x*(1 + x + x^2 + a*x*y + p*y^2);\n"
    "y' = y*(-1 - y + q*y^2 + a*x*y - y^2);\n"
    "params a, p, q\n"
)


def builtin_kolmogorov() -> ParametricFamily:
    """Kolmogorov benchmark with parameters ``(a, p, q)``.

    For ``p < -1, q > 1`` the boundary of the first quadrant (both axes plus the
    arc of the line at infinity) is a persistent polycycle through the origin
    and the two infinite saddles at the ends of the axes. Its graphic number is
    ``(-1 - p)/(q - 1)``. At ``(0, p0, -p0)`` the field is reversible under
    ``(x, y, t) -> (y, x, -t)`` and the polycycle is of center type.
    """
    return parse_family(KOLMOGOROV_TEXT, name="kolmogorov")


def kolmogorov_as_printed() -> ParametricFamily:
    return parse_family(KOLMOGOROV_PRINTED_TEXT, name="kolmogorov-printed")
