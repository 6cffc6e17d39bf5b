"""
Uncertainty representations, sampling and propagation

Sampling uses numpy's default generator (PCG64) seeded with the caller's
integer seed; identical (representation, n, seed) give identical samples.
"""

import logging
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator
from scipy.stats import truncnorm

from src.errors import DivisionByZeroInterval, EvalError, UnboundIdentifier, Unsupported
from src.expressions import (
    Add,
    Div,
    Expr,
    Mul,
    Neg,
    Num,
    Sub,
    Var,
    evaluate_array,
    format_expression,
    identifiers,
)

logger = logging.getLogger(__name__)

DEFAULT_NORMAL_K = 4.0


class _Repr(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Point(_Repr):
    type: Literal["point"] = "point"
    value: float


class Interval(_Repr):
    """Closed interval [lo, hi]; also the value type of interval propagation"""

    type: Literal["interval"] = "interval"
    lo: float
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval lower bound {self.lo} exceeds upper bound {self.hi}")
        return self

    @classmethod
    def of(cls, lo: float, hi: float) -> "Interval":
        return cls(lo=lo, hi=hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def encloses(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(lo=self.lo + other.lo, hi=self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(lo=self.lo - other.hi, hi=self.hi - other.lo)

    def __neg__(self) -> "Interval":
        return Interval(lo=-self.hi, hi=-self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        corners = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ]
        return Interval(lo=min(corners), hi=max(corners))

    def __truediv__(self, other: "Interval") -> "Interval":
        if other.lo <= 0.0 <= other.hi:
            raise DivisionByZeroInterval(f"divisor interval [{other.lo}, {other.hi}] contains zero")
        corners = [
            self.lo / other.lo,
            self.lo / other.hi,
            self.hi / other.lo,
            self.hi / other.hi,
        ]
        return Interval(lo=min(corners), hi=max(corners))


class Uniform(_Repr):
    type: Literal["uniform"] = "uniform"
    lo: float
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo <= self.hi:
            raise ValueError("uniform lo must not exceed hi")
        return self


class Normal(_Repr):
    type: Literal["normal"] = "normal"
    mean: float
    std: float = Field(gt=0)


class Triangular(_Repr):
    type: Literal["triangular"] = "triangular"
    lo: float
    mode: float
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.lo <= self.mode <= self.hi:
            raise ValueError("triangular requires lo <= mode <= hi")
        return self


class Empirical(_Repr):
    """Empirical distribution; samples are kept sorted ascending"""

    type: Literal["empirical"] = "empirical"
    samples: tuple[float, ...] = Field(min_length=1)

    @field_validator("samples")
    @classmethod
    def _sorted(cls, samples: tuple[float, ...]) -> tuple[float, ...]:
        return tuple(sorted(samples))


class PBox(_Repr):
    """Probability box bounded by two empirical CDFs (storage and bounds only)"""

    type: Literal["pbox"] = "pbox"
    lower: Empirical
    upper: Empirical

    @model_validator(mode="after")
    def _bounded(self):
        lower = np.asarray(self.lower.samples)
        upper = np.asarray(self.upper.samples)
        points = np.union1d(lower, upper)
        cdf_lower = np.searchsorted(lower, points, side="right") / lower.size
        cdf_upper = np.searchsorted(upper, points, side="right") / upper.size
        if np.any(cdf_lower > cdf_upper):
            raise ValueError("p-box lower CDF must not exceed the upper CDF")
        return self


class ExternalTag(_Repr):
    """Out-of-scope representation (Dempster-Shafer, possibility, fuzzy) kept as metadata"""

    type: Literal["external"] = "external"
    name: str = Field(min_length=1)


UncertaintyRepr = Annotated[
    Point | Interval | Uniform | Normal | Triangular | Empirical | PBox | ExternalTag,
    Field(discriminator="type"),
]
REPR_ADAPTER = TypeAdapter(UncertaintyRepr)

# Representations acceptable for aleatory (intrinsically random) parameters
DISTRIBUTION_TYPES = (Uniform, Normal, Triangular, Empirical, PBox)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample set produced by measurement or Monte-Carlo propagation"""

    samples: tuple[float, ...]
    provenance: str = ""
    excluded: int = 0

    def __post_init__(self):
        if not self.samples:
            raise ValueError("empirical distribution needs at least one sample")

    @classmethod
    def from_values(cls, values, provenance: str = "", excluded: int = 0):
        ordered = np.sort(np.asarray(values, dtype=float))
        return cls(tuple(ordered.tolist()), provenance, excluded)

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def min(self) -> float:
        return self.samples[0]

    @property
    def max(self) -> float:
        return self.samples[-1]

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def std(self) -> float:
        return float(np.std(self.samples))

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    def as_repr(self) -> Empirical:
        return Empirical(samples=self.samples)


def describe(repr_: UncertaintyRepr) -> str:
    """Short human-readable form used in reports and CLI output"""
    match repr_:
        case Point(value=v):
            return f"point({v:g})"
        case Interval(lo=lo, hi=hi):
            return f"interval[{lo:g}, {hi:g}]"
        case Uniform(lo=lo, hi=hi):
            return f"uniform({lo:g}, {hi:g})"
        case Normal(mean=m, std=s):
            return f"normal(mean={m:g}, std={s:g})"
        case Triangular(lo=lo, mode=mode, hi=hi):
            return f"triangular({lo:g}, {mode:g}, {hi:g})"
        case Empirical(samples=s):
            return f"empirical(n={len(s)}, [{s[0]:g}, {s[-1]:g}])"
        case PBox(lower=lower, upper=upper):
            return f"pbox(lower n={len(lower.samples)}, upper n={len(upper.samples)})"
        case ExternalTag(name=name):
            return f"external({name})"
    raise TypeError(f"not a representation: {repr_!r}")


def support_bounds(repr_: UncertaintyRepr, k: float = DEFAULT_NORMAL_K) -> Interval:
    """
    Finite interval covering the representation's support

    Args:
        repr_: Any representation except ExternalTag
        k: Normal truncation in standard deviations

    Returns:
        Interval: [v, v] for points, [mean - k*std, mean + k*std] for normals,
        sample min/max for empirical forms, the envelope of both CDFs for p-boxes
    """
    match repr_:
        case Point(value=v):
            return Interval(lo=v, hi=v)
        case Interval():
            return repr_
        case Uniform(lo=lo, hi=hi) | Triangular(lo=lo, hi=hi):
            return Interval(lo=lo, hi=hi)
        case Normal(mean=m, std=s):
            return Interval(lo=m - k * s, hi=m + k * s)
        case Empirical(samples=s):
            return Interval(lo=s[0], hi=s[-1])
        case PBox(lower=lower, upper=upper):
            return Interval(
                lo=min(lower.samples[0], upper.samples[0]),
                hi=max(lower.samples[-1], upper.samples[-1]),
            )
        case ExternalTag(name=name):
            raise Unsupported(f"no support bounds for external representation {name!r}")
    raise TypeError(f"not a representation: {repr_!r}")


def _draw(repr_: UncertaintyRepr, n: int, seed: int, k: float) -> np.ndarray:
    if n < 1:
        raise ValueError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    match repr_:
        case Point(value=v):
            return np.full(n, v)
        case Interval(lo=lo, hi=hi) | Uniform(lo=lo, hi=hi):
            return rng.uniform(lo, hi, n)
        case Normal(mean=m, std=s):
            values = truncnorm.rvs(-k, k, loc=m, scale=s, size=n, random_state=rng)
            return np.clip(values, m - k * s, m + k * s)
        case Triangular(lo=lo, mode=mode, hi=hi):
            if lo == hi:
                return np.full(n, lo)
            return rng.triangular(lo, mode, hi, n)
        case Empirical(samples=s):
            return rng.choice(np.asarray(s), size=n, replace=True)
        case PBox() | ExternalTag():
            raise Unsupported(f"cannot sample a {repr_.type} representation")
    raise TypeError(f"not a representation: {repr_!r}")


def sample(
    repr_: UncertaintyRepr, n: int, seed: int, k: float = DEFAULT_NORMAL_K
) -> list[float]:
    """
    Draw n values from a representation

    Args:
        repr_: Representation to sample (not PBox or ExternalTag)
        n: Number of values, at least 1
        seed: Integer seed for numpy's PCG64 generator
        k: Normal truncation in standard deviations

    Returns:
        list: n values, all inside support_bounds(repr_, k)
    """
    return _draw(repr_, n, seed, k).tolist()


def propagate_interval(expr: Expr, env: Mapping[str, Interval]) -> Interval:
    """Naive interval arithmetic; repeated variables may overestimate the range"""
    match expr:
        case Num(value):
            return Interval(lo=value, hi=value)
        case Var(name):
            if name not in env:
                raise UnboundIdentifier(name)
            return env[name]
        case Neg(operand):
            return -propagate_interval(operand, env)
        case Add(left, right):
            return propagate_interval(left, env) + propagate_interval(right, env)
        case Sub(left, right):
            return propagate_interval(left, env) - propagate_interval(right, env)
        case Mul(left, right):
            return propagate_interval(left, env) * propagate_interval(right, env)
        case Div(left, right):
            return propagate_interval(left, env) / propagate_interval(right, env)
    raise TypeError(f"not an expression: {expr!r}")


def propagate_monte_carlo(
    expr: Expr,
    env: Mapping[str, UncertaintyRepr],
    n: int,
    seed: int,
    k: float = DEFAULT_NORMAL_K,
) -> EmpiricalDistribution:
    """
    Propagate independent input representations by sampling

    Each identifier gets its own stream, derived from seed with
    numpy.random.SeedSequence in sorted-name order. Samples whose divisor
    evaluates to exactly zero are excluded and counted.

    Returns:
        EmpiricalDistribution: sorted results with the excluded count
    """
    names = sorted(identifiers(expr))
    for name in names:
        if name not in env:
            raise UnboundIdentifier(name)
    children = np.random.SeedSequence(seed).spawn(len(names))
    draws = {
        name: _draw(env[name], n, int(child.generate_state(1)[0]), k)
        for name, child in zip(names, children)
    }
    values, valid = evaluate_array(expr, draws, n)
    excluded = int(n - np.count_nonzero(valid))
    if excluded:
        logger.info("excluded %d of %d samples (division by zero)", excluded, n)
    kept = values[valid]
    if kept.size == 0:
        raise EvalError(f"all {excluded} Monte-Carlo samples hit a division by zero")
    return EmpiricalDistribution.from_values(
        kept, provenance=f"monte-carlo n={n} seed={seed}: {format_expression(expr)}", excluded=excluded
    )
