"""Genomes, populations, optimal sets and the objective-difference distance."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

import numpy as np

from .codec import register
from .errors import AnalysisError, ConfigurationError
from .rng import check_seed, stream


@dataclass(frozen=True)
class BitString:
    bits: tuple[int, ...]
    strategy: tuple[float, ...] = ()

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    @classmethod
    def parse(cls, text: str) -> "BitString":
        if any(c not in "01" for c in text):
            raise ConfigurationError(f"not a bit string: {text!r}")
        return cls(tuple(int(c) for c in text))


@dataclass(frozen=True)
class RealVector:
    values: tuple[float, ...]
    strategy: tuple[float, ...] = ()


@dataclass(frozen=True)
class Permutation:
    order: tuple[int, ...]
    strategy: tuple[float, ...] = ()


Genome = Union[BitString, RealVector, Permutation]


@register("bitstring")
@dataclass(frozen=True)
class BitStringRep:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"bit string length must be positive, got {self.n}")

    def sample(self, gen: np.random.Generator) -> BitString:
        return BitString(tuple(int(b) for b in gen.integers(0, 2, self.n)))

    def validate(self, g: Genome) -> None:
        if not isinstance(g, BitString) or len(g.bits) != self.n or any(b not in (0, 1) for b in g.bits):
            raise ConfigurationError(f"expected a {self.n}-bit string, got {g!r}")

    def to_json(self, g: BitString):
        return str(g)

    def from_json(self, value) -> BitString:
        g = BitString.parse(value)
        self.validate(g)
        return g


@register("real_vector")
@dataclass(frozen=True)
class RealVectorRep:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ConfigurationError("real vector bounds must be nonempty and of equal length")
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ConfigurationError(f"bound {i} is not finite")
            if a > b:
                raise ConfigurationError(f"bound {i}: lo={a} > hi={b}")

    @property
    def d(self) -> int:
        return len(self.lo)

    def sample(self, gen: np.random.Generator) -> RealVector:
        return RealVector(tuple(float(v) for v in gen.uniform(self.lo, self.hi)))

    def clamp(self, values) -> tuple[float, ...]:
        return tuple(float(min(max(v, a), b)) for v, a, b in zip(values, self.lo, self.hi))

    def validate(self, g: Genome) -> None:
        if not isinstance(g, RealVector) or len(g.values) != self.d:
            raise ConfigurationError(f"expected a {self.d}-dimensional real vector, got {g!r}")
        for v, a, b in zip(g.values, self.lo, self.hi):
            if not a <= v <= b:
                raise ConfigurationError(f"value {v} outside [{a}, {b}]")

    def to_json(self, g: RealVector):
        return list(g.values)

    def from_json(self, value) -> RealVector:
        g = RealVector(tuple(float(v) for v in value))
        self.validate(g)
        return g


@register("permutation")
@dataclass(frozen=True)
class PermutationRep:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"permutation length must be positive, got {self.n}")

    def sample(self, gen: np.random.Generator) -> Permutation:
        return Permutation(tuple(int(i) for i in gen.permutation(self.n)))

    def validate(self, g: Genome) -> None:
        if not isinstance(g, Permutation) or sorted(g.order) != list(range(self.n)):
            raise ConfigurationError(f"expected a permutation of 0..{self.n - 1}, got {g!r}")

    def to_json(self, g: Permutation):
        return list(g.order)

    def from_json(self, value) -> Permutation:
        g = Permutation(tuple(int(v) for v in value))
        self.validate(g)
        return g


Representation = Union[BitStringRep, RealVectorRep, PermutationRep]


def genome_to_json(g: Genome):
    """Bit strings as "0101", vectors and permutations as plain lists."""
    if isinstance(g, BitString):
        value = str(g)
    elif isinstance(g, RealVector):
        value = list(g.values)
    else:
        value = list(g.order)
    if g.strategy:
        return {"genome": value, "strategy": list(g.strategy)}
    return value


def genome_from_json(rep: Representation, value) -> Genome:
    strategy = ()
    if isinstance(value, dict):
        strategy = tuple(float(s) for s in value["strategy"])
        value = value["genome"]
    g = rep.from_json(value)
    return with_strategy(g, strategy) if strategy else g


def with_strategy(g: Genome, strategy: tuple[float, ...]) -> Genome:
    if isinstance(g, BitString):
        return BitString(g.bits, strategy)
    if isinstance(g, RealVector):
        return RealVector(g.values, strategy)
    return Permutation(g.order, strategy)


@dataclass(frozen=True)
class Population:
    """Generation ``generation`` of an evolving population.

    ``fitness`` is filled once the members have been evaluated; a population
    carrying its fitness values is the weighted form ``(x, f(x))``.
    """

    members: tuple[Genome, ...]
    generation: int = 0
    fitness: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.generation < 0:
            raise ConfigurationError("generation must be nonnegative")
        if self.fitness is not None and len(self.fitness) != len(self.members):
            raise ConfigurationError("fitness values do not align with members")

    def __len__(self) -> int:
        return len(self.members)

    def validate(self, rep: Representation) -> None:
        for g in self.members:
            rep.validate(g)

    def weighted(self) -> tuple[tuple[Genome, float], ...]:
        if self.fitness is None:
            raise AnalysisError("population has not been evaluated")
        return tuple(zip(self.members, self.fitness))


def init_population(rep: Representation, size: int, seed: int, strategy: tuple[float, ...] = ()) -> Population:
    """Generation-0 population; member ``i`` is drawn from its own stream."""
    if not isinstance(size, int) or size < 1:
        raise ConfigurationError(f"population size must be a positive integer, got {size!r}")
    check_seed(seed)
    members = []
    for i in range(size):
        g = rep.sample(stream(seed, "init", 0, i))
        members.append(with_strategy(g, strategy) if strategy else g)
    return Population(tuple(members), 0)


Objective = Callable[[Genome], float]


def _value(f, x: Genome) -> float:
    evaluate = getattr(f, "evaluate", None)
    return evaluate(x) if evaluate is not None else f(x)


def distance(x: Genome, y: Genome, f, exact: bool = False) -> float | Fraction:
    """Objective-difference pseudometric ``|f(x) - f(y)|``.

    Float subtraction rounds, so for real-valued objectives the triangle
    inequality can miss by an ulp. ``exact=True`` returns the difference of
    the two float values as a ``Fraction``, for which the axioms hold exactly.
    """
    if exact:
        return abs(Fraction(_value(f, x)) - Fraction(_value(f, y)))
    return abs(_value(f, x) - _value(f, y))


@dataclass(frozen=True)
class OptimalSet:
    optimum_value: float | None
    optima: tuple[Genome, ...] = ()
    provenance: str = "declared"
    space_size: int | None = None

    def __post_init__(self):
        if self.provenance not in ("declared", "brute-force"):
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")
        if self.provenance == "brute-force" and self.space_size is None:
            raise ConfigurationError("brute-force optimal sets must record the searched space size")
        if self.optimum_value is not None and self.optimum_value < 0:
            raise ConfigurationError("optimum value must be nonnegative")

    def verify(self, f) -> bool:
        return all(_value(f, y) == self.optimum_value for y in self.optima)

    def to_json(self, rep: Representation | None = None) -> dict:
        return {
            "optimum_value": self.optimum_value,
            "optima": [genome_to_json(g) for g in self.optima],
            "provenance": self.provenance,
            "space_size": self.space_size,
        }


def value_distance_to_set(value: float, target: OptimalSet, f=None) -> float:
    if target.optimum_value is not None:
        return abs(value - target.optimum_value)
    if not target.optima:
        raise AnalysisError("target has neither an optimum value nor listed optima")
    if f is None:
        raise AnalysisError("an objective is required to measure distance to listed optima")
    return min(abs(value - _value(f, y)) for y in target.optima)


def distance_to_set(x: Genome, target: OptimalSet, f) -> float:
    """``D(x, Y)``: distance from ``x`` to the nearest optimum in objective value."""
    if target.optimum_value is None and not target.optima:
        raise AnalysisError("target has neither an optimum value nor listed optima")
    return value_distance_to_set(_value(f, x), target, f)
