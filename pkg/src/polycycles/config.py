"""Run configuration files (TOML) for the command line front-end."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .asymptotics import TauSpec
from .errors import ConfigError
from .family import (
    ChartKind,
    ParametricFamily,
    ParamPoint,
    PlanePoint,
    builtin_kolmogorov,
    kolmogorov_as_printed,
    parse_family,
)
from .flow import IntegratorConfig, Section
from .models import ClosedFormModel
from .returnmap import log_grid
from .saddletools import Connection, LinearLeg, PolycycleSkeleton, SaddleSeed

__all__ = ["RunConfig", "load_config", "parse_config"]

BUILTINS = {
    "kolmogorov": builtin_kolmogorov,
    "kolmogorov-printed": kolmogorov_as_printed,
}


@dataclass
class RunConfig:
    """Parsed configuration; command blocks are kept as raw tables."""

    source: str
    family: ParametricFamily | None
    model: ClosedFormModel | None
    mu: ParamPoint
    integrator: IntegratorConfig
    skeleton: PolycycleSkeleton | None
    fit_grid: tuple[float, ...]
    fit_noise_floor: float
    blocks: dict[str, Mapping[str, Any]] = field(default_factory=dict)

    @property
    def offline(self) -> bool:
        return self.model is not None

    @property
    def params(self) -> tuple[str, ...]:
        return self.model.params if self.model is not None else self.family.params

    def block(self, name: str) -> Mapping[str, Any]:
        return self.blocks.get(name, {})

    def point(self, values: Mapping[str, float] | None, base: ParamPoint | None = None) -> ParamPoint:
        """Parameter point from a table; names missing from it keep ``base`` values."""
        base = base or self.mu
        values = dict(values or {})
        unknown = set(values) - set(self.params)
        if unknown:
            raise ConfigError(f"unknown parameter name(s) {sorted(unknown)}")
        return ParamPoint(self.params, tuple(float(values.get(n, c)) for n, c in zip(self.params, base.components)))


def _get(table: Mapping, key: str, kind, where: str, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"missing key {key!r} in [{where}]")
        return default
    value = table[key]
    try:
        if kind is float:
            return float(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is str:
            if not isinstance(value, str):
                raise ValueError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] {key} = {value!r} is not a valid {kind.__name__}") from None
    return value


def _pair(value, where: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a pair of numbers") from None
    return a, b


def _chart(value, where: str) -> ChartKind:
    try:
        return ChartKind.parse(value)
    except ValueError:
        raise ConfigError(f"{where}: unknown chart {value!r}") from None


def _skeleton(table: Mapping) -> PolycycleSkeleton:
    saddles = []
    for k, s in enumerate(table.get("saddles", [])):
        where = f"skeleton.saddles[{k}]"
        chart = _chart(s.get("chart", "affine"), where)
        saddles.append(SaddleSeed(PlanePoint(_get(s, "x", float, where), _get(s, "y", float, where), chart),
                                  _get(s, "label", str, where)))
    sections = []
    for k, s in enumerate(table.get("sections", [])):
        where = f"skeleton.sections[{k}]"
        chart = _chart(s.get("chart", "affine"), where)
        base = _pair(_get(s, "base", list, where), where + ".base")
        sections.append(Section(
            PlanePoint(base[0], base[1], chart),
            _pair(_get(s, "direction", list, where), where + ".direction"),
            _get(s, "orientation", int, where, 0),
            _get(s, "label", str, where, f"section{k}"),
        ))
    connections = []
    for k, c in enumerate(table.get("connections", [])):
        where = f"skeleton.connections[{k}]"
        connections.append(Connection(_get(c, "from", str, where), _get(c, "to", str, where),
                                      _get(c, "carrier", str, where, "")))
    legs = {}
    for k, leg in enumerate(table.get("linear_legs", [])):
        where = f"skeleton.linear_legs[{k}]"
        legs[_get(leg, "index", int, where)] = LinearLeg(_get(leg, "gain", float, where),
                                                       _get(leg, "time", float, where, 0.0))
    return PolycycleSkeleton(tuple(saddles), tuple(sections), tuple(connections), legs)


def _offline_model(table: Mapping) -> ClosedFormModel:
    where = "offline"
    params = tuple(table.get("params", ["r"]))
    n = len(params)
    vec = lambda key, default: tuple(float(x) for x in table.get(key, default))
    return ClosedFormModel(
        params=params,
        mu_ref=vec("mu_ref", [1.0] * n),
        A0=_get(table, "A0", float, where),
        r0=_get(table, "r0", float, where, 1.0),
        T0_bar=_get(table, "T0_bar", float, where),
        T00=_get(table, "T00", float, where, 0.0),
        grad_A=vec("grad_A", [0.0] * n),
        grad_r=vec("grad_r", [1.0] + [0.0] * (n - 1)),
    )


def fit_grid_from(table: Mapping, where: str = "fit") -> tuple[float, ...]:
    s_min = _get(table, "s_min", float, where, 1e-6)
    s_max = _get(table, "s_max", float, where, 1e-3)
    n = _get(table, "n", int, where, 24)
    if not 0 < s_min < s_max:
        raise ConfigError(f"[{where}] needs 0 < s_min < s_max")
    return tuple(log_grid(s_min, s_max, n))


def tau_from(table: Mapping, where: str) -> TauSpec:
    return TauSpec.parse(_get(table, "tau", str, where))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    fam_t = raw.get("family", {})
    family = model = None
    kind = fam_t.get("kind", "builtin" if "builtin" in fam_t else "text" if "text" in fam_t else None)
    if kind == "builtin":
        name = _get(fam_t, "builtin", str, "family")
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin family {name!r}; known: {sorted(BUILTINS)}")
        family = BUILTINS[name]()
    elif kind == "text":
        family = parse_family(_get(fam_t, "text", str, "family"), name=fam_t.get("name", "custom"))
    elif kind == "offline":
        model = _offline_model(raw.get("offline", {}))
    else:
        raise ConfigError("[family] needs builtin = ..., text = ... or kind = 'offline'")

    params = model.params if model is not None else family.params
    values = raw.get("params", {})
    unknown = set(values) - set(params)
    if unknown:
        raise ConfigError(f"unknown parameter name(s) {sorted(unknown)} in [params]")
    if model is not None:
        defaults = dict(zip(params, model.mu_ref))
    else:
        defaults = {}
    missing = [n for n in params if n not in values and n not in defaults]
    if missing:
        raise ConfigError(f"[params] is missing value(s) for {missing}")
    mu = ParamPoint(params, tuple(float(values.get(n, defaults.get(n, math.nan))) for n in params))

    integ = raw.get("integrator", {})
    allowed = set(IntegratorConfig.__dataclass_fields__)
    extra = set(integ) - allowed
    if extra:
        raise ConfigError(f"unknown [integrator] key(s) {sorted(extra)}")
    cfg = IntegratorConfig(**integ)

    skeleton = _skeleton(raw["skeleton"]) if "skeleton" in raw else None
    fit = raw.get("fit", {})
    blocks = {k: v for k, v in raw.items() if k not in ("family", "params", "integrator", "skeleton", "fit", "offline")}
    return RunConfig(
        source=source,
        family=family,
        model=model,
        mu=mu,
        integrator=cfg,
        skeleton=skeleton,
        fit_grid=fit_grid_from(fit),
        fit_noise_floor=_get(fit, "noise_floor", float, "fit", 1e-10),
        blocks=blocks,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")  # OSError propagates as an I/O failure
    return parse_config(text, str(path))


def shipped_config(name: str) -> Path:
    """Path of a configuration file installed with the package."""
    return Path(__file__).with_name("configs") / name
