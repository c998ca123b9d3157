"""Problem fitness (f3), search cost (f2) and their aggregation (f1).

All objectives are minimized and take values in the nonnegative reals.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .codec import register
from .errors import ConfigurationError, EvaluationError, OracleRefused
from .space import (
    BitString,
    BitStringRep,
    Genome,
    OptimalSet,
    Permutation,
    PermutationRep,
    Population,
    RealVector,
    RealVectorRep,
)

MAX_BITS = 24
MAX_PERMUTATION = 9
REAL_TOLERANCE = 1e-9


@register("onemax_min")
@dataclass(frozen=True)
class OneMaxMin:
    """Number of zero bits; the all-ones string is the unique optimum."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("OneMaxMin needs n >= 1")

    integer_valued = True

    def representation(self) -> BitStringRep:
        return BitStringRep(self.n)

    def evaluate(self, x: Genome) -> float:
        if not isinstance(x, BitString) or len(x.bits) != self.n:
            raise EvaluationError(f"OneMaxMin({self.n}) cannot evaluate {x!r}")
        return float(self.n - sum(x.bits))


@register("sphere")
@dataclass(frozen=True)
class Sphere:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        RealVectorRep(self.lo, self.hi)

    integer_valued = False

    def representation(self) -> RealVectorRep:
        return RealVectorRep(self.lo, self.hi)

    def evaluate(self, x: Genome) -> float:
        if not isinstance(x, RealVector) or len(x.values) != len(self.lo):
            raise EvaluationError(f"Sphere(d={len(self.lo)}) cannot evaluate {x!r}")
        total = 0.0
        for v in x.values:
            total += v * v
        return total

    def declared_optimum(self) -> OptimalSet:
        """The box-constrained minimizer clamps the origin into the bounds."""
        best = RealVector(tuple(min(max(0.0, a), b) for a, b in zip(self.lo, self.hi)))
        return OptimalSet(self.evaluate(best), (best,), "declared")


@register("tsp_tour")
@dataclass(frozen=True)
class TspTour:
    """Closed tour length over a symmetric distance matrix."""

    matrix: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        n = len(self.matrix)
        if n < 1 or any(len(row) != n for row in self.matrix):
            raise ConfigurationError("TSP matrix must be square and nonempty")
        for i in range(n):
            if self.matrix[i][i] != 0:
                raise ConfigurationError(f"TSP matrix diagonal entry {i} is nonzero")
            for j in range(n):
                if self.matrix[i][j] < 0 or not math.isfinite(self.matrix[i][j]):
                    raise ConfigurationError(f"TSP matrix entry ({i},{j}) is negative or not finite")
                if self.matrix[i][j] != self.matrix[j][i]:
                    raise ConfigurationError(f"TSP matrix is not symmetric at ({i},{j})")

    @property
    def n(self) -> int:
        return len(self.matrix)

    @property
    def integer_valued(self) -> bool:
        return all(float(v).is_integer() for row in self.matrix for v in row)

    @classmethod
    def from_csv(cls, path) -> "TspTour":
        with open(path, newline="") as fh:
            rows = [tuple(float(v) for v in row) for row in csv.reader(fh) if row]
        return cls(tuple(rows))

    def representation(self) -> PermutationRep:
        return PermutationRep(self.n)

    def evaluate(self, x: Genome) -> float:
        if not isinstance(x, Permutation) or len(x.order) != self.n:
            raise EvaluationError(f"TspTour(n={self.n}) cannot evaluate {x!r}")
        order = x.order
        total = 0.0
        for i in range(self.n):
            total += self.matrix[order[i]][order[(i + 1) % self.n]]
        return float(total)


@register("knapsack_penalty")
@dataclass(frozen=True)
class KnapsackPenalty:
    """Shifted negative packed value plus a linear overweight penalty.

    ``f(x) = sum(values) - value(x) + penalty * max(0, weight(x) - capacity)``
    """

    weights: tuple[float, ...]
    values: tuple[float, ...]
    capacity: float
    penalty: float

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.values):
            raise ConfigurationError("knapsack weights and values must be nonempty and aligned")
        if any(w < 0 for w in self.weights) or any(v < 0 for v in self.values):
            raise ConfigurationError("knapsack weights and values must be nonnegative")
        if self.capacity < 0 or self.penalty < 0:
            raise ConfigurationError("knapsack capacity and penalty must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def shift(self) -> float:
        total = 0.0
        for v in self.values:
            total += v
        return total

    @property
    def integer_valued(self) -> bool:
        numbers = (*self.weights, *self.values, self.capacity, self.penalty)
        return all(float(v).is_integer() for v in numbers)

    def representation(self) -> BitStringRep:
        return BitStringRep(self.n)

    def evaluate(self, x: Genome) -> float:
        if not isinstance(x, BitString) or len(x.bits) != self.n:
            raise EvaluationError(f"KnapsackPenalty({self.n} items) cannot evaluate {x!r}")
        weight = 0.0
        value = 0.0
        for b, w, v in zip(x.bits, self.weights, self.values):
            if b:
                weight += w
                value += v
        return (self.shift - value) + self.penalty * max(0.0, weight - self.capacity)


ObjectiveSpec = Union[OneMaxMin, Sphere, TspTour, KnapsackPenalty]


def evaluate(spec: ObjectiveSpec, x: Genome) -> float:
    return spec.evaluate(x)


def attains(spec: ObjectiveSpec, value: float, optimum: float) -> bool:
    """Exact match for integer-valued objectives, 1e-9 otherwise."""
    if spec.integer_valued:
        return value == optimum
    return abs(value - optimum) <= REAL_TOLERANCE


def best_of_population(spec: ObjectiveSpec, pop: Population) -> tuple[Genome, float]:
    """Minimal-fitness member; the lowest index wins ties."""
    from .errors import AnalysisError

    if not pop.members:
        raise AnalysisError("empty population")
    values = pop.fitness if pop.fitness is not None else [spec.evaluate(g) for g in pop.members]
    best = min(range(len(values)), key=lambda i: (values[i], i))
    return pop.members[best], values[best]


@dataclass(frozen=True)
class SearchCost:
    evaluations: int = 0
    generations: int = 0
    variations: int = 0

    def __add__(self, other: "SearchCost") -> "SearchCost":
        return SearchCost(
            self.evaluations + other.evaluations,
            self.generations + other.generations,
            self.variations + other.variations,
        )


def search_cost_value(cost: SearchCost, normalizer: float = 1.0) -> float:
    if not normalizer > 0:
        raise ConfigurationError("normalizer must be positive")
    return cost.evaluations / normalizer


@register("weighted_sum")
@dataclass(frozen=True)
class WeightedSum:
    w2: float = 0.0
    w3: float = 1.0

    def __post_init__(self):
        if self.w2 < 0 or self.w3 < 0:
            raise ConfigurationError("aggregation weights must be nonnegative")


@register("product")
@dataclass(frozen=True)
class Product:
    pass


@register("pareto")
@dataclass(frozen=True)
class Pareto:
    pass


AggregatorSpec = Union[WeightedSum, Product, Pareto]


def aggregate(agg: AggregatorSpec, f2_value: float, f3_value: float):
    if f2_value < 0 or f3_value < 0:
        raise ConfigurationError("aggregated objectives must be nonnegative")
    if isinstance(agg, WeightedSum):
        return agg.w2 * f2_value + agg.w3 * f3_value
    if isinstance(agg, Product):
        return (1.0 + f2_value) * (1.0 + f3_value) - 1.0
    if isinstance(agg, Pareto):
        return (f2_value, f3_value)
    raise ConfigurationError(f"unknown aggregator {agg!r}")


def canonical_tours(n: int):
    """Each undirected closed tour once: city 0 first, second city < last city."""
    if n <= 2:
        yield tuple(range(n))
        return
    for rest in itertools.permutations(range(1, n)):
        if rest[0] < rest[-1]:
            yield (0, *rest)


def _bit_rows(start: int, stop: int, n: int) -> np.ndarray:
    ks = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((ks[:, None] >> shifts) & 1).astype(np.int8)


def _screen_bits(spec, n: int) -> list[BitString]:
    """Vectorized pass that keeps near-minimal candidates for exact rescoring."""
    total = 1 << n
    chunk = 1 << 16
    best = math.inf
    keep: list[tuple[float, int]] = []
    if isinstance(spec, KnapsackPenalty):
        w = np.asarray(spec.weights, dtype=float)
        v = np.asarray(spec.values, dtype=float)
        slack = 1e-9 * max(1.0, spec.shift + spec.penalty * float(w.sum()))
    else:
        slack = 0.5
    for start in range(0, total, chunk):
        rows = _bit_rows(start, min(total, start + chunk), n)
        if isinstance(spec, OneMaxMin):
            vals = (n - rows.sum(axis=1)).astype(float)
        else:
            vals = spec.shift - rows @ v + spec.penalty * np.maximum(0.0, rows @ w - spec.capacity)
        best = min(best, float(vals.min()))
        idx = np.nonzero(vals <= best + slack)[0]
        keep = [(x, k) for x, k in keep if x <= best + slack]
        keep.extend((float(vals[i]), start + int(i)) for i in idx)
    keep = [(x, k) for x, k in keep if x <= best + slack]
    return [BitString(tuple(int(c) for c in format(k, f"0{n}b"))) for _, k in keep]


def brute_force_optimum(spec: ObjectiveSpec, max_bits: int = MAX_BITS, max_permutation: int = MAX_PERMUTATION) -> OptimalSet:
    """Exhaustively enumerate the space and return the minimum with every argmin.

    Bit-string spaces are limited to ``max_bits`` (at most 24) bits and tours to
    ``max_permutation`` (at most 9) cities. Larger spaces, and continuous ones,
    raise :class:`OracleRefused`; declare their optimum instead.
    """
    max_bits = min(max_bits, MAX_BITS)
    max_permutation = min(max_permutation, MAX_PERMUTATION)
    if isinstance(spec, Sphere):
        raise OracleRefused("continuous Sphere space is not enumerable; use Sphere.declared_optimum()")
    if isinstance(spec, (OneMaxMin, KnapsackPenalty)):
        n = spec.n
        if n > max_bits:
            raise OracleRefused(f"bit string length {n} exceeds the enumeration bound of {max_bits} bits")
        candidates = _screen_bits(spec, n)
        space = 1 << n
    elif isinstance(spec, TspTour):
        n = spec.n
        if n > max_permutation:
            raise OracleRefused(f"tour of {n} cities exceeds the enumeration bound of {max_permutation} cities")
        candidates = [Permutation(t) for t in canonical_tours(n)]
        space = len(candidates)
    else:
        raise ConfigurationError(f"unknown objective {spec!r}")
    scored = [(spec.evaluate(g), g) for g in candidates]
    best = min(v for v, _ in scored)
    optima = tuple(g for v, g in scored if v == best)
    return OptimalSet(best, optima, "brute-force", space)
