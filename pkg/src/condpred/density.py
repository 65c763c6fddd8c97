"""Support descriptors and evaluable conditional densities over the second coordinate."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from condpred.errors import SupportMismatchError


@dataclass(frozen=True)
class Support:
    """Either a (possibly unbounded) interval with Lebesgue measure or a finite
    set of points with counting measure."""

    kind: str
    lower: float = -np.inf
    upper: float = np.inf
    points: tuple = ()

    def __post_init__(self):
        if self.kind not in ("continuous", "discrete"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if self.kind == "discrete" and not self.points:
            raise ValueError("discrete support needs at least one point")
        if self.kind == "continuous" and not self.lower < self.upper:
            raise ValueError("continuous support needs lower < upper")

    @classmethod
    def interval(cls, lower=-np.inf, upper=np.inf):
        return cls("continuous", float(lower), float(upper))

    @classmethod
    def finite(cls, points):
        return cls("discrete", points=tuple(float(p) for p in points))

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_discrete:
            return np.isin(x, np.asarray(self.points))
        return (x >= self.lower) & (x <= self.upper)


@dataclass(frozen=True)
class ConditionalDensityEstimate:
    """A density (or probability function) t -> f(t | x1) over Omega_2.

    ``center`` and ``scale`` locate the bulk of the mass; L1 quadrature uses them
    to map unbounded supports onto a finite interval. ``provenance`` records
    where the estimate came from (source, model, n, x1).
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    support: Support
    provenance: dict = field(default_factory=dict)
    center: float = 0.0
    scale: float = 1.0

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.asarray(self.evaluator(np.atleast_1d(arr)), dtype=float)
        if arr.ndim == 0:
            return float(out.reshape(-1)[0])
        return out.reshape(arr.shape)

    def probabilities(self) -> np.ndarray:
        if not self.support.is_discrete:
            raise SupportMismatchError("probabilities() needs a discrete support")
        return self(np.asarray(self.support.points))

    def total_mass(self, abstol: float = 1e-9) -> float:
        if self.support.is_discrete:
            return math.fsum(self.probabilities())
        from condpred.quadrature import integrate

        value, _ = integrate(
            self.evaluator, self.support.lower, self.support.upper,
            center=self.center, scale=self.scale, abstol=abstol,
        )
        return value
