"""Variation and selection operators, elitism and self-adaptive strategy parameters."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .codec import register
from .errors import ConfigurationError, EngineError
from .rng import Streams
from .space import (
    BitString,
    Genome,
    Permutation,
    Population,
    RealVector,
    RealVectorRep,
    with_strategy,
)


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ConfigurationError(f"rate must lie in [0, 1], got {rate}")


@register("bit_flip")
@dataclass(frozen=True)
class BitFlip:
    rate: float

    def __post_init__(self):
        _check_rate(self.rate)


@register("one_point_crossover")
@dataclass(frozen=True)
class OnePointCrossover:
    """Adjacent pairs (0,1), (2,3), ... recombine; every child then gets BitFlip(rate)."""

    rate: float

    def __post_init__(self):
        _check_rate(self.rate)


@register("gaussian_mutation")
@dataclass(frozen=True)
class GaussianMutation:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")


@register("swap_mutation")
@dataclass(frozen=True)
class SwapMutation:
    rate: float

    def __post_init__(self):
        _check_rate(self.rate)


VariationSpec = Union[BitFlip, OnePointCrossover, GaussianMutation, SwapMutation]


@register("truncation")
@dataclass(frozen=True)
class Truncation:
    keep_fraction: float
    elitism: bool = False

    def __post_init__(self):
        if not 0.0 < self.keep_fraction <= 1.0:
            raise ConfigurationError(f"keep_fraction must lie in (0, 1], got {self.keep_fraction}")


@register("tournament")
@dataclass(frozen=True)
class Tournament:
    k: int
    elitism: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError(f"tournament size must be >= 1, got {self.k}")


@register("proportional")
@dataclass(frozen=True)
class Proportional:
    """Rank-proportional sampling; weight of a member is ``N - rank``."""

    elitism: bool = False


SelectionSpec = Union[Truncation, Tournament, Proportional]


@register("self_adaptation")
@dataclass(frozen=True)
class SelfAdaptation:
    """Per-genome strategy parameter (mutation rate or sigma) evolved log-normally."""

    enabled: bool = False
    initial: float = 0.1
    rate_min: float = 0.001
    rate_max: float = 0.5
    meta_sigma: float = 0.2

    def __post_init__(self):
        if not 0 < self.rate_min <= self.rate_max:
            raise ConfigurationError("strategy bounds must satisfy 0 < rate_min <= rate_max")
        if not self.rate_min <= self.initial <= self.rate_max:
            raise ConfigurationError("initial strategy parameter lies outside its bounds")
        if self.meta_sigma < 0:
            raise ConfigurationError("meta_sigma must be nonnegative")


def _param(g: Genome, default: float) -> float:
    # a genome carrying a strategy parameter overrides the operator's own setting
    return g.strategy[0] if g.strategy else default


def _flip(bits: tuple[int, ...], rate: float, gen: np.random.Generator) -> tuple[int, ...]:
    mask = gen.random(len(bits)) < rate
    return tuple(b ^ 1 if m else b for b, m in zip(bits, mask))


def _swap(order: tuple[int, ...], rate: float, gen: np.random.Generator) -> tuple[int, ...]:
    n = len(order)
    out = list(order)
    if n < 2:
        return order
    for j in range(n):
        if gen.random() < rate:
            k = int(gen.integers(n - 1))
            if k >= j:
                k += 1
            out[j], out[k] = out[k], out[j]
    return tuple(out)


def _require(pop: Population, kind: type, op) -> None:
    for g in pop.members:
        if not isinstance(g, kind):
            raise ConfigurationError(f"{type(op).__name__} cannot vary {type(g).__name__} genomes")


def vary(spec: VariationSpec, pop: Population, streams: Streams, bounds: RealVectorRep | None = None) -> Population:
    """Apply the variation operator to every member.

    Member ``i`` (or crossover pair starting at ``i``) draws from stream
    ``("vary", i)``. Output has the same size and generation as the input and
    carries no fitness values.
    """
    members = pop.members
    out: list[Genome] = []
    if isinstance(spec, BitFlip):
        _require(pop, BitString, spec)
        for i, g in enumerate(members):
            out.append(BitString(_flip(g.bits, _param(g, spec.rate), streams.get("vary", i)), g.strategy))
    elif isinstance(spec, OnePointCrossover):
        _require(pop, BitString, spec)
        for i in range(0, len(members) - 1, 2):
            a, b = members[i], members[i + 1]
            gen = streams.get("vary", i)
            n = len(a.bits)
            cut = int(gen.integers(1, n)) if n > 1 else 0
            for child, parent in ((a.bits[:cut] + b.bits[cut:], a), (b.bits[:cut] + a.bits[cut:], b)):
                out.append(BitString(_flip(child, _param(parent, spec.rate), gen), parent.strategy))
        if len(members) % 2:
            g = members[-1]
            gen = streams.get("vary", len(members) - 1)
            out.append(BitString(_flip(g.bits, _param(g, spec.rate), gen), g.strategy))
    elif isinstance(spec, GaussianMutation):
        _require(pop, RealVector, spec)
        if bounds is None:
            raise ConfigurationError("GaussianMutation needs the real-vector bounds for clamping")
        for i, g in enumerate(members):
            gen = streams.get("vary", i)
            step = _param(g, spec.sigma) * gen.standard_normal(len(g.values))
            out.append(RealVector(bounds.clamp(np.asarray(g.values) + step), g.strategy))
    elif isinstance(spec, SwapMutation):
        _require(pop, Permutation, spec)
        for i, g in enumerate(members):
            out.append(Permutation(_swap(g.order, _param(g, spec.rate), streams.get("vary", i)), g.strategy))
    else:
        raise ConfigurationError(f"unknown variation operator {spec!r}")
    return Population(tuple(out), pop.generation)


def _ranked(fitnesses: Sequence[float]) -> list[int]:
    return sorted(range(len(fitnesses)), key=lambda i: (fitnesses[i], i))


def rank_weights(fitnesses: Sequence[float]) -> np.ndarray:
    """``N - rank`` with tied members sharing their average rank."""
    n = len(fitnesses)
    order = _ranked(fitnesses)
    ranks = np.empty(n)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and fitnesses[order[j + 1]] == fitnesses[order[i]]:
            j += 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = (i + j) / 2.0
        i = j + 1
    return n - ranks


def select(
    spec: SelectionSpec,
    pop: Population,
    fitnesses: Sequence[float],
    streams: Streams,
    size: int | None = None,
    incumbent: tuple[Genome, float] | None = None,
) -> Population:
    """Select ``size`` members (default: population size) under minimization.

    With elitism the incumbent best (by default the best input member, lowest
    index on ties) replaces the worst output member when it is absent.
    The returned population carries the fitness of every member.
    """
    n = len(pop.members)
    if len(fitnesses) != n:
        raise EngineError(f"{n} members but {len(fitnesses)} fitness values")
    if n == 0:
        raise EngineError("cannot select from an empty population")
    size = n if size is None else size
    if size < 1:
        raise ConfigurationError("selection size must be positive")
    if isinstance(spec, Truncation):
        keep = max(1, min(n, math.ceil(spec.keep_fraction * n - 1e-9)))
        best = _ranked(fitnesses)[:keep]
        chosen = [best[j % keep] for j in range(size)]
    elif isinstance(spec, Tournament):
        gen = streams.get("select")
        k = min(spec.k, n)
        chosen = []
        for _ in range(size):
            entrants = gen.choice(n, size=k, replace=False)
            chosen.append(int(min(entrants, key=lambda i: (fitnesses[i], i))))
    elif isinstance(spec, Proportional):
        gen = streams.get("select")
        w = rank_weights(fitnesses)
        chosen = [int(i) for i in gen.choice(n, size=size, p=w / w.sum())]
    else:
        raise ConfigurationError(f"unknown selection operator {spec!r}")
    members = [pop.members[i] for i in chosen]
    values = [float(fitnesses[i]) for i in chosen]
    if spec.elitism:
        if incumbent is None:
            b = _ranked(fitnesses)[0]
            incumbent = (pop.members[b], float(fitnesses[b]))
        genome, value = incumbent
        if genome not in members:
            worst = max(range(size), key=lambda j: (values[j], j))
            members[worst] = genome
            values[worst] = value
    return Population(tuple(members), pop.generation, tuple(values))


def apply_self_adaptation(ext: SelfAdaptation, pop: Population, streams: Streams) -> Population:
    """Log-normal perturbation of each member's strategy parameter, clamped to bounds.

    Object-level genes are left untouched. Members without a strategy
    parameter start from ``ext.initial``.
    """
    out = []
    for i, g in enumerate(pop.members):
        p = g.strategy[0] if g.strategy else ext.initial
        if ext.meta_sigma > 0:
            p = p * math.exp(ext.meta_sigma * float(streams.get("adapt", i).standard_normal()))
        p = min(max(p, ext.rate_min), ext.rate_max)
        out.append(with_strategy(g, (p,)))
    return Population(tuple(out), pop.generation, pop.fitness)


def bitflip_outcome_distribution(x: BitString, rate: float) -> dict[tuple[int, ...], float]:
    """Exact one-step outcome law of BitFlip by enumerating all flip masks."""
    n = len(x.bits)
    dist: dict[tuple[int, ...], float] = {}
    for mask in itertools.product((0, 1), repeat=n):
        p = 1.0
        for m in mask:
            p *= rate if m else 1.0 - rate
        y = tuple(b ^ m for b, m in zip(x.bits, mask))
        dist[y] = dist.get(y, 0.0) + p
    return dist


def bitflip_transition_probability(x: BitString, y: BitString, rate: float) -> float:
    """Closed form ``rate**h * (1 - rate)**(n - h)`` with ``h`` the Hamming distance."""
    h = sum(a != b for a, b in zip(x.bits, y.bits))
    return rate**h * (1.0 - rate) ** (len(x.bits) - h)
