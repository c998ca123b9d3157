"""Parallel machines: sub-machines reading the whole generation, joint fitness,
and per-generation cooperation/competition labels."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

from .codec import register
from .engine import (
    AlgorithmSpec,
    GenerationRecord,
    Monitor,
    RunTrace,
    TerminationCondition,
    evaluate_population,
    propose,
)
from .errors import AnalysisError, ConfigurationError, EngineError
from .objectives import SearchCost
from .rng import Streams
from .space import Population

POLICIES = ("free", "cooperative-only", "competitive-only")

COOPERATES = "Cooperates"
COMPETES = "Competes"
POP_COOPERATES = "PopulationCooperates"
POP_COMPETES = "PopulationCompetes"
NEUTRAL = "Neutral"


@register("sum")
@dataclass(frozen=True)
class SumCombiner:
    def __call__(self, values: Sequence[float]) -> float:
        return math.fsum(values)


@register("min")
@dataclass(frozen=True)
class MinCombiner:
    def __call__(self, values: Sequence[float]) -> float:
        return min(values)


@register("weighted_combiner")
@dataclass(frozen=True)
class WeightedCombiner:
    weights: tuple[float, ...]

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ConfigurationError("combiner weights must be nonnegative")

    def __call__(self, values: Sequence[float]) -> float:
        if len(values) != len(self.weights):
            raise ConfigurationError(f"{len(self.weights)} weights for {len(values)} components")
        return math.fsum(w * v for w, v in zip(self.weights, values))


Combiner = Union[SumCombiner, MinCombiner, WeightedCombiner]


@register("submachine")
@dataclass(frozen=True)
class Submachine:
    """One component machine; its algorithm's objective is its component fitness."""

    spec: AlgorithmSpec
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ConfigurationError("subgeneration size must be >= 1")


@register("parallel")
@dataclass(frozen=True)
class ParallelSpec:
    submachines: tuple[Submachine, ...]
    combiner: Combiner = MinCombiner()
    policy: str = "free"

    def __post_init__(self):
        if not self.submachines:
            raise ConfigurationError("a parallel machine needs at least one submachine")
        if self.policy not in POLICIES:
            raise ConfigurationError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        reps = {m.spec.representation for m in self.submachines}
        if len(reps) != 1:
            raise ConfigurationError("all submachines must share one genome representation")
        if isinstance(self.combiner, WeightedCombiner) and len(self.combiner.weights) != len(self.submachines):
            raise ConfigurationError("combiner needs one weight per submachine")

    @property
    def population_size(self) -> int:
        return sum(m.size for m in self.submachines)

    @property
    def representation(self):
        return self.submachines[0].spec.representation

    @property
    def bounds(self) -> list[tuple[int, int]]:
        out, start = [], 0
        for m in self.submachines:
            out.append((start, start + m.size))
            start += m.size
        return out

    def with_seed(self, seed: int) -> "ParallelSpec":
        return replace(self, submachines=tuple(replace(m, spec=m.spec.with_seed(seed)) for m in self.submachines))

    def with_policy(self, policy: str) -> "ParallelSpec":
        return replace(self, policy=policy)


@dataclass(frozen=True)
class InteractionLabel:
    population: str
    individuals: tuple[tuple[int, str], ...] = ()


def _shared_objective(pspec: ParallelSpec) -> bool:
    first = pspec.submachines[0].spec.objective
    return all(m.spec.objective == first for m in pspec.submachines)


def evaluate_whole(pspec: ParallelSpec, whole: Population) -> Population:
    """Score each member by the objective of the submachine whose slice holds it."""
    if len(whole) != pspec.population_size:
        raise EngineError(f"population of {len(whole)} does not match subgeneration sizes {pspec.population_size}")
    values = []
    for m, (a, b) in zip(pspec.submachines, pspec.bounds):
        values.extend(m.spec.objective.evaluate(g) for g in whole.members[a:b])
    return Population(whole.members, whole.generation, tuple(values))


def parallel_step(pspec: ParallelSpec, whole: Population) -> tuple[Population, list[SearchCost]]:
    """Every submachine reads all of ``X[t]`` and emits its own subgeneration.

    Submachine ``i`` draws from lane ``i`` of its master seed; the next
    generation is the concatenation of the subgenerations in index order.
    """
    if whole.fitness is None:
        whole = evaluate_whole(pspec, whole)
    shared = _shared_objective(pspec)
    members, values, costs = [], [], []
    for i, m in enumerate(pspec.submachines):
        view, cost = whole, SearchCost()
        if not shared:
            view = evaluate_population(m.spec.objective, Population(whole.members, whole.generation))
            cost = SearchCost(evaluations=len(view))
        sub, delta = propose(m.spec, view, Streams(m.spec.master_seed, whole.generation, lane=i), size=m.size)
        if len(sub) != m.size:
            raise EngineError(f"submachine {i} emitted {len(sub)} members, expected {m.size}")
        members.extend(sub.members)
        values.extend(sub.fitness)
        costs.append(cost + delta)
    if len(members) != pspec.population_size:
        raise EngineError("subgeneration sizes do not add up to the population size")
    return Population(tuple(members), whole.generation + 1, tuple(values)), costs


def joint_fitness(pspec: ParallelSpec, whole: Population) -> tuple[float, tuple[float, ...]]:
    """Best value within each subgeneration, combined into the whole-population fitness."""
    if whole.fitness is None:
        whole = evaluate_whole(pspec, whole)
    comps = tuple(min(whole.fitness[a:b]) for a, b in pspec.bounds)
    return pspec.combiner(comps), comps


def classify_interaction(prev: tuple[float, Sequence[float]], nxt: tuple[float, Sequence[float]]) -> InteractionLabel:
    """Label the transition between two generations.

    The population cooperates when whole fitness strictly decreases, competes
    when it strictly increases, and is Neutral otherwise. Component ``j`` is
    labelled only when it alone changed (every other component exactly equal).
    """
    f_prev, c_prev = prev
    f_next, c_next = nxt
    if len(c_prev) != len(c_next):
        raise AnalysisError("component lists differ in length")
    if f_next < f_prev:
        population, individual = POP_COOPERATES, COOPERATES
    elif f_next > f_prev:
        population, individual = POP_COMPETES, COMPETES
    else:
        return InteractionLabel(NEUTRAL)
    changed = [j for j in range(len(c_prev)) if c_prev[j] != c_next[j]]
    individuals = ((changed[0], individual),) if len(changed) == 1 else ()
    return InteractionLabel(population, individuals)


def _accept(policy: str, f_prev: float, f_next: float) -> bool:
    if policy == "cooperative-only":
        return f_next <= f_prev
    if policy == "competitive-only":
        return f_next > f_prev
    return True


def _record(pspec, t, pop, cost, joint, label, accepted, weighted) -> GenerationRecord:
    f3, comps = joint
    k = min(range(len(comps)), key=lambda j: (comps[j], j))
    a, b = pspec.bounds[k]
    vals = pop.fitness
    best = min(range(a, b), key=lambda i: (vals[i], i))
    return GenerationRecord(
        t=t,
        best_genome=pop.members[best],
        best_f3=f3,
        mean_f3=math.fsum(vals) / len(vals),
        cost=cost,
        pairs=pop.weighted() if weighted else None,
        f3_whole=f3,
        f3_components=comps,
        population_label=label.population if label else None,
        individual_labels=label.individuals if label else None,
        accepted=accepted,
    )


def run_parallel(
    pspec: ParallelSpec,
    x0: Population,
    term: Sequence[TerminationCondition],
    policy: str | None = None,
    weighted: bool = False,
) -> RunTrace:
    """Run the parallel machine under an acceptance policy.

    ``free`` accepts every proposed generation. ``cooperative-only`` keeps a
    proposal only if whole fitness does not increase; ``competitive-only`` only
    if it strictly increases. A rejected proposal leaves ``X[t+1] = X[t]`` and
    the record's ``accepted`` flag is False. Termination conditions observe the
    whole-population fitness.
    """
    policy = pspec.policy if policy is None else policy
    if policy not in POLICIES:
        raise ConfigurationError(f"policy must be one of {POLICIES}, got {policy!r}")
    window = pspec.submachines[0].spec.inductive_window
    monitor = Monitor(term, window)
    x0.validate(pspec.representation)
    pop = evaluate_whole(pspec, Population(x0.members, x0.generation))
    cost = SearchCost(evaluations=len(pop))
    joint = joint_fitness(pspec, pop)
    t = pop.generation
    rec = _record(pspec, t, pop, cost, joint, None, True, weighted)
    records = [replace(rec, inductive_flag=monitor.observe(t, rec.best_genome, rec.best_f3))]
    while (reason := monitor.halt(t)) is None:
        proposal, costs = parallel_step(pspec, pop)
        for c in costs:
            cost = cost + c
        cost = replace(cost, generations=cost.generations - len(costs) + 1)
        new_joint = joint_fitness(pspec, proposal)
        accepted = _accept(policy, joint[0], new_joint[0])
        if not accepted:
            proposal, new_joint = Population(pop.members, proposal.generation, pop.fitness), joint
        label = classify_interaction(joint, new_joint)
        pop, joint, t = proposal, new_joint, proposal.generation
        rec = _record(pspec, t, pop, cost, joint, label, accepted, weighted)
        records.append(replace(rec, inductive_flag=monitor.observe(t, rec.best_genome, rec.best_f3)))
    return RunTrace(replace(pspec, policy=policy), monitor.term, tuple(records), reason, pop, monitor.result)
