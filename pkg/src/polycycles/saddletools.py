"""Saddle refinement, hyperbolicity ratios and polycycle skeletons.

Saddles at infinity live on ``v = 0`` of a projective chart, where the
true-time field is undefined. All local analysis therefore uses the
polynomial chart field ``F`` (which is the affine field itself in the affine
chart). Multiplying a field by a positive function does not change its
hyperbolicity ratios, so nothing is lost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import ConfigError, NoConvergence, NotASaddle, SingularJacobian
from .family import ChartKind, ParametricFamily, PlanarField, PlanePoint
from .flow import Section

__all__ = [
    "SaddleSeed",
    "SaddleData",
    "GraphicNumber",
    "Connection",
    "LinearLeg",
    "PolycycleSkeleton",
    "Advisory",
    "find_equilibrium",
    "saddle_data",
    "graphic_number",
    "check_invariance",
    "no_bifurcation_guard",
]

_CLASSIFY_TOL = 1e-9
_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class SaddleSeed:
    location: PlanePoint
    label: str

    @property
    def chart(self) -> ChartKind:
        return self.location.chart


@dataclass(frozen=True)
class SaddleData:
    location: PlanePoint
    unstable_eig: float
    stable_eig: float
    unstable_dir: tuple[float, float]
    stable_dir: tuple[float, float]
    ratio: float
    label: str = ""

    @property
    def chart(self) -> ChartKind:
        return self.location.chart


@dataclass(frozen=True)
class GraphicNumber:
    value: float
    factors: tuple[float, ...]
    labels: tuple[str, ...] = ()
    saddles: tuple[SaddleData, ...] = ()


@dataclass(frozen=True)
class Connection:
    """Separatrix connection from saddle ``source`` to saddle ``target``.

    ``carrier`` names the invariant curve holding it (``x-axis``,
    ``y-axis``, ``line-at-infinity`` or free text).
    """

    source: str
    target: str
    carrier: str = ""


@dataclass(frozen=True)
class LinearLeg:
    """Closed-form regular transition ``s -> gain * s`` taking ``time``."""

    gain: float
    time: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ConfigError("linear leg gain must be positive")


@dataclass(frozen=True)
class PolycycleSkeleton:
    """User-declared layout of a polycycle.

    ``sections[0]`` carries the return map. Leg ``i`` goes from
    ``sections[i]`` to ``sections[(i + 1) % m]`` by integrating the flow,
    unless ``linear_legs`` holds a closed-form replacement for it. A skeleton
    with no saddles and one section is a plain Poincare map.
    """

    saddles: tuple[SaddleSeed, ...]
    sections: tuple[Section, ...]
    connections: tuple[Connection, ...] = ()
    linear_legs: Mapping[int, LinearLeg] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "saddles", tuple(self.saddles))
        object.__setattr__(self, "sections", tuple(self.sections))
        object.__setattr__(self, "connections", tuple(self.connections))
        object.__setattr__(self, "linear_legs", dict(self.linear_legs))
        if not self.sections:
            raise ConfigError("a skeleton needs at least one section")
        labels = [s.label for s in self.saddles]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate saddle labels in {labels}")
        for c in self.connections:
            for name in (c.source, c.target):
                if name not in labels:
                    raise ConfigError(f"connection refers to unknown saddle label {name!r}")
        for k in self.linear_legs:
            if not 0 <= k < len(self.sections):
                raise ConfigError(f"linear leg index {k} out of range")

    @property
    def has_finite_saddle(self) -> bool:
        return any(s.chart is ChartKind.AFFINE for s in self.saddles)

    def legs(self) -> list[tuple[Section, Section, LinearLeg | None]]:
        m = len(self.sections)
        return [
            (self.sections[i], self.sections[(i + 1) % m], self.linear_legs.get(i))
            for i in range(m)
        ]

    def saddle(self, label: str) -> SaddleSeed:
        for s in self.saddles:
            if s.label == label:
                return s
        raise ConfigError(f"unknown saddle label {label!r}")


def _field(family: ParametricFamily | PlanarField, mu) -> PlanarField:
    return family if isinstance(family, PlanarField) else family.at(mu)


def find_equilibrium(
    family: ParametricFamily | PlanarField,
    mu,
    seed: SaddleSeed | PlanePoint,
    tol: float = _RESIDUAL_TOL,
    max_iter: int = 50,
    trust_radius: float = 0.5,
) -> PlanePoint:
    """Newton refinement of a zero of the chart-local polynomial field.

    Steps longer than ``trust_radius`` are shortened, so a seed far from
    every zero runs out of iterations instead of jumping to a remote one.
    """
    p = seed.location if isinstance(seed, SaddleSeed) else seed
    fld = _field(family, mu)
    kind = p.chart
    a, b = p.a, p.b
    for _ in range(max_iter + 1):
        f1, f2 = fld.rescaled(kind, a, b)
        scale = 1.0 + abs(a) + abs(b)
        if math.hypot(f1, f2) <= tol * scale:
            return PlanePoint(a, b, kind)
        (j11, j12), (j21, j22) = fld.rescaled_jacobian(kind, a, b)
        det = j11 * j22 - j12 * j21
        jn = max(abs(j11), abs(j12), abs(j21), abs(j22))
        if jn == 0.0 or abs(det) <= 1e-14 * jn * jn:
            raise SingularJacobian(f"singular Jacobian at ({a:.6g}, {b:.6g})")
        da = (j22 * f1 - j12 * f2) / det
        db = (-j21 * f1 + j11 * f2) / det
        step = math.hypot(da, db)
        if step > trust_radius:
            da *= trust_radius / step
            db *= trust_radius / step
        a -= da
        b -= db
        if not (math.isfinite(a) and math.isfinite(b)):
            break
    raise NoConvergence(f"Newton did not converge from seed ({p.a}, {p.b}) in {max_iter} iterations")


def _eigvec(j11, j12, j21, j22, lam) -> tuple[float, float]:
    c1 = (j12, lam - j11)
    c2 = (lam - j22, j21)
    v = c1 if math.hypot(*c1) >= math.hypot(*c2) else c2
    n = math.hypot(*v)
    if n == 0.0:
        # J = lam * I on this eigenspace; any vector works, pick a coordinate axis
        return (1.0, 0.0)
    return (v[0] / n, v[1] / n)


def saddle_data(
    family: ParametricFamily | PlanarField,
    mu,
    location: PlanePoint,
    label: str = "",
) -> SaddleData:
    fld = _field(family, mu)
    (j11, j12), (j21, j22) = fld.rescaled_jacobian(location.chart, location.a, location.b)
    tr = j11 + j22
    det = j11 * j22 - j12 * j21
    disc = 0.25 * tr * tr - det
    rho = max(abs(j11), abs(j12), abs(j21), abs(j22), 1e-300)
    if disc < 0.0:
        if math.sqrt(-disc) > _CLASSIFY_TOL * rho:
            raise NotASaddle(f"complex eigenvalues at {label or location}")
        disc = 0.0
    root = math.sqrt(disc)
    # avoid cancellation in the smaller-magnitude eigenvalue
    big = 0.5 * tr + math.copysign(root, tr) if tr != 0.0 else root
    small = det / big if big != 0.0 else -big
    lu, ls = max(big, small), min(big, small)
    if not (lu > _CLASSIFY_TOL * rho and ls < -_CLASSIFY_TOL * rho):
        raise NotASaddle(f"eigenvalues ({lu:.6g}, {ls:.6g}) at {label or location} are not of saddle type")
    return SaddleData(
        location=location,
        unstable_eig=lu,
        stable_eig=ls,
        unstable_dir=_eigvec(j11, j12, j21, j22, lu),
        stable_dir=_eigvec(j11, j12, j21, j22, ls),
        ratio=-ls / lu,
        label=label,
    )


def graphic_number(
    family: ParametricFamily | PlanarField, mu, skeleton: PolycycleSkeleton | Sequence[SaddleSeed]
) -> GraphicNumber:
    seeds = skeleton.saddles if isinstance(skeleton, PolycycleSkeleton) else tuple(skeleton)
    if not seeds:
        raise ConfigError("graphic number needs at least one saddle")
    fld = _field(family, mu)
    data = []
    for seed in seeds:
        loc = find_equilibrium(fld, None, seed)
        data.append(saddle_data(fld, None, loc, seed.label))
    # sorted product: bit-identical under any relabeling of the skeleton
    value = math.prod(sorted(d.ratio for d in data))
    return GraphicNumber(value, tuple(d.ratio for d in data), tuple(d.label for d in data), tuple(data))


def _v_divides(grid) -> bool:
    return all(row[0] == 0.0 for row in grid)


def _strip_common_v(g1, g2):
    while any(any(r) for r in g1) or any(any(r) for r in g2):
        if not (_v_divides(g1) and _v_divides(g2)):
            break
        g1 = [row[1:] + [0.0] for row in g1]
        g2 = [row[1:] + [0.0] for row in g2]
    return g1, g2


def check_invariance(family: ParametricFamily | PlanarField, mu, line: str) -> bool:
    """Exact divisibility test for invariance of an axis or of the line at infinity."""
    fld = _field(family, mu)
    key = line.strip().lower().replace("_", "-")
    if key in ("x-axis", "x"):
        # Q(x, 0) == 0: no pure-x monomials in Q
        return all(row[0] == 0.0 for row in fld.Q)
    if key in ("y-axis", "y"):
        return all(c == 0.0 for c in fld.P[0])
    if key in ("line-at-infinity", "infinity", "inf"):
        for kind in (ChartKind.PROJECTIVE_Y, ChartKind.PROJECTIVE_X):
            g1, g2 = (list(map(list, g)) for g in fld.chart_grids(kind))
            g1, g2 = _strip_common_v(g1, g2)
            if not _v_divides(g2):
                return False
        return True
    raise ConfigError(f"unknown line {line!r}; expected x-axis, y-axis or line-at-infinity")


@dataclass(frozen=True)
class Advisory:
    message: str
    r: float
    threshold: float


def no_bifurcation_guard(graphic: GraphicNumber | float, threshold: float = 1e-3) -> Advisory | None:
    """Advisory when ``|r - 1| > threshold``; the boundary itself is silent."""
    r = graphic.value if isinstance(graphic, GraphicNumber) else float(graphic)
    # relative slack so that decimal inputs such as 0.999 sit on the boundary
    if abs(r - 1.0) > threshold * (1.0 + 1e-12):
        return Advisory(
            f"graphic number r={r:.12g} differs from 1 by more than {threshold:g}: "
            "no limit cycle bifurcates from the polycycle, cycle searches near s=0 will fail",
            r,
            threshold,
        )
    return None
