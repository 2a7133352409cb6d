"""Uniform access to return maps: integrated families or closed-form models.

The asymptotics code only needs a few questions answered at a parameter
point: the graphic number, ``(R(s), T(s))`` at a single ``s``, and a batch of
samples. :class:`DynamicalModel` answers them by integration around a
skeleton; :class:`ClosedFormModel` and :class:`DulacChain` answer them
exactly, which separates the asymptotic logic from integration error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, DomainError
from .family import ParametricFamily, ParamPoint
from .flow import IntegratorConfig
from .returnmap import ReturnSample, return_map, sample_return_map
from .saddletools import PolycycleSkeleton, graphic_number

__all__ = ["DynamicalModel", "ClosedFormModel", "DulacChain", "as_model"]


class DynamicalModel:
    """Return map of a family around a polycycle skeleton."""

    def __init__(
        self,
        family: ParametricFamily,
        skeleton: PolycycleSkeleton,
        cfg: IntegratorConfig = IntegratorConfig(),
        jobs: int = 1,
    ):
        self.family = family
        self.skeleton = skeleton
        self.cfg = cfg
        self.jobs = jobs

    @property
    def params(self) -> tuple[str, ...]:
        return self.family.params

    def point(self, mu) -> ParamPoint:
        return self.family.param_point(mu)

    def graphic(self, mu) -> float:
        return graphic_number(self.family, self.point(mu), self.skeleton).value

    def evaluate(self, mu, s: float) -> tuple[float, float]:
        return return_map(self.family, self.point(mu), self.skeleton, s, self.cfg)

    def samples(self, mu, grid: Sequence[float]) -> list[ReturnSample]:
        return sample_return_map(self.family, self.point(mu), self.skeleton, grid, self.cfg, self.jobs)


@dataclass(frozen=True)
class ClosedFormModel:
    """``R(s) = A s**r`` and ``T(s) = T0_bar log s + T00`` with ``A, r`` affine in ``mu``.

    ``A(mu) = A0 + sum gA_i (mu_i - mu_ref_i)`` and likewise for ``r``.
    """

    params: tuple[str, ...]
    mu_ref: tuple[float, ...]
    A0: float
    r0: float
    T0_bar: float
    T00: float = 0.0
    grad_A: tuple[float, ...] = ()
    grad_r: tuple[float, ...] = ()

    def __post_init__(self):
        n = len(self.params)
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "mu_ref", tuple(float(x) for x in self.mu_ref))
        object.__setattr__(self, "grad_A", tuple(self.grad_A) or (0.0,) * n)
        object.__setattr__(self, "grad_r", tuple(self.grad_r) or (0.0,) * n)
        if not (len(self.mu_ref) == len(self.grad_A) == len(self.grad_r) == n):
            raise ConfigError("closed-form model vectors must match the parameter count")

    @classmethod
    def constant(cls, A: float, r: float, T0_bar: float, T00: float = 0.0) -> "ClosedFormModel":
        """Model with a single parameter that is ``r`` itself; ``A`` is fixed."""
        return cls(("r",), (r,), A, r, T0_bar, T00, (0.0,), (1.0,))

    def point(self, mu) -> ParamPoint:
        if isinstance(mu, ParamPoint):
            return mu
        if isinstance(mu, dict):
            return ParamPoint(self.params, tuple(float(mu[n]) for n in self.params))
        return ParamPoint(self.params, tuple(mu))

    def _affine(self, mu, base: float, grad) -> float:
        comps = self.point(mu).components
        return base + sum(g * (m - m0) for g, m, m0 in zip(grad, comps, self.mu_ref))

    def A(self, mu) -> float:
        return self._affine(mu, self.A0, self.grad_A)

    def graphic(self, mu) -> float:
        return self._affine(mu, self.r0, self.grad_r)

    def evaluate(self, mu, s: float) -> tuple[float, float]:
        if not s > 0:
            raise DomainError("s must be positive")
        A, r = self.A(mu), self.graphic(mu)
        if not A > 0:
            raise DomainError(f"A(mu) = {A} is not positive")
        # exp/log form keeps s**r representable for very small s
        return math.exp(math.log(A) + r * math.log(s)), self.T0_bar * math.log(s) + self.T00

    def samples(self, mu, grid: Sequence[float]) -> list[ReturnSample]:
        out = []
        for s in grid:
            R, T = self.evaluate(mu, s)
            out.append(ReturnSample(s, R, T, "ok"))
        return out


@dataclass(frozen=True)
class DulacChain:
    """Composition of power maps ``D_i(s) = Delta_i s**lambda_i``.

    Each factor may also carry a time law ``T_i(s) = tau_i log s`` evaluated
    at its own entry coordinate.
    """

    deltas: tuple[float, ...]
    lambdas: tuple[float, ...]
    time_coeffs: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.deltas) != len(self.lambdas) or not self.deltas:
            raise ConfigError("deltas and lambdas must be non-empty and equally long")
        if self.time_coeffs and len(self.time_coeffs) != len(self.deltas):
            raise ConfigError("time_coeffs must match the chain length")

    @property
    def exponent(self) -> float:
        return math.prod(self.lambdas)

    @property
    def coefficient(self) -> float:
        """``A`` of the composite, folded left to right: ``A <- Delta_i A**lambda_i``."""
        A = 1.0
        for d, lam in zip(self.deltas, self.lambdas):
            A = d * A**lam
        return A

    def graphic(self, mu=None) -> float:
        return self.exponent

    def evaluate(self, mu, s: float) -> tuple[float, float]:
        x, t = s, 0.0
        coeffs = self.time_coeffs or (0.0,) * len(self.deltas)
        for d, lam, tc in zip(self.deltas, self.lambdas, coeffs):
            t += tc * math.log(x)
            x = math.exp(math.log(d) + lam * math.log(x))
        return x, t

    def samples(self, mu, grid: Sequence[float]) -> list[ReturnSample]:
        return [ReturnSample(s, *self.evaluate(mu, s), "ok") for s in grid]


def as_model(family, skeleton: PolycycleSkeleton | None = None, cfg: IntegratorConfig | None = None, jobs: int = 1):
    """Wrap a family and skeleton; closed-form models pass through unchanged."""
    if isinstance(family, (DynamicalModel, ClosedFormModel, DulacChain)):
        return family
    if isinstance(family, ParametricFamily):
        if skeleton is None:
            raise ConfigError("integrated return maps need a skeleton")
        return DynamicalModel(family, skeleton, cfg or IntegratorConfig(), jobs)
    raise TypeError(f"cannot build a return-map model from {type(family).__name__}")
