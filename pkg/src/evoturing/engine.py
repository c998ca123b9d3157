"""Evolutionary machine runner.

A run iterates ``X[t+1] = s(v(X[t]))`` until the first termination condition
triggers, storing every generation with its fitness (the weighted trace).
:func:`run_universal` interprets a serialized algorithm description and must
reproduce :func:`run` exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Union

from . import codec
from .codec import register
from .errors import ConfigurationError
from .objectives import (
    AggregatorSpec,
    ObjectiveSpec,
    SearchCost,
    WeightedSum,
    aggregate,
    best_of_population,
    search_cost_value,
)
from .operators import (
    BitFlip,
    GaussianMutation,
    OnePointCrossover,
    SelectionSpec,
    SelfAdaptation,
    SwapMutation,
    VariationSpec,
    apply_self_adaptation,
    select,
    vary,
)
from .rng import ALGORITHM, Streams, check_seed
from .space import (
    BitStringRep,
    Genome,
    PermutationRep,
    Population,
    RealVectorRep,
    Representation,
    genome_to_json,
    init_population,
)

SCHEMA_VERSION = 1
DEFAULT_INDUCTIVE_WINDOW = 50

_COMPATIBLE = {
    BitFlip: BitStringRep,
    OnePointCrossover: BitStringRep,
    GaussianMutation: RealVectorRep,
    SwapMutation: PermutationRep,
}


@register("algorithm")
@dataclass(frozen=True)
class AlgorithmSpec:
    """Complete description of one evolutionary algorithm, seed included."""

    representation: Representation
    population_size: int
    variation: VariationSpec
    selection: SelectionSpec
    objective: ObjectiveSpec
    aggregator: AggregatorSpec = WeightedSum()
    self_adaptation: SelfAdaptation = SelfAdaptation()
    inductive_window: int | None = DEFAULT_INDUCTIVE_WINDOW
    master_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.population_size, int) or self.population_size < 1:
            raise ConfigurationError("population_size must be a positive integer")
        check_seed(self.master_seed)
        if self.inductive_window is not None and self.inductive_window < 1:
            raise ConfigurationError("inductive_window must be >= 1 when set")
        expected = _COMPATIBLE.get(type(self.variation))
        if expected is None or not isinstance(self.representation, expected):
            raise ConfigurationError(
                f"{type(self.variation).__name__} is incompatible with {type(self.representation).__name__}"
            )
        if self.objective.representation() != self.representation:
            raise ConfigurationError(f"objective {type(self.objective).__name__} expects {self.objective.representation()!r}")

    def with_seed(self, seed: int) -> "AlgorithmSpec":
        return replace(self, master_seed=seed)

    def encode(self) -> str:
        return codec.dumps(self)


def decode_spec(encoded: str | bytes) -> AlgorithmSpec:
    return codec.loads(encoded, AlgorithmSpec)


@register("max_generations")
@dataclass(frozen=True)
class MaxGenerations:
    limit: int

    def __post_init__(self):
        if self.limit < 0:
            raise ConfigurationError("MaxGenerations limit must be nonnegative")


@register("optimum_reached")
@dataclass(frozen=True)
class OptimumReached:
    """Halts ``linger`` generations after best-f3 first comes within ``tolerance`` of ``target``."""

    target: float = 0.0
    tolerance: float = 0.0
    linger: int = 0

    def __post_init__(self):
        if self.tolerance < 0 or self.linger < 0:
            raise ConfigurationError("tolerance and linger must be nonnegative")


@register("stagnation")
@dataclass(frozen=True)
class Stagnation:
    window: int
    min_improvement: float = 0.0

    def __post_init__(self):
        if self.window < 1:
            raise ConfigurationError("stagnation window must be >= 1")


@register("horizon")
@dataclass(frozen=True)
class Horizon:
    """Safety budget in generations; ``open`` marks a bound not fixed in advance."""

    budget: int
    open: bool = False

    def __post_init__(self):
        if self.budget < 0:
            raise ConfigurationError("horizon budget must be nonnegative")


TerminationCondition = Union[MaxGenerations, OptimumReached, Stagnation, Horizon]


def check_termination(term: Sequence[TerminationCondition]) -> tuple[TerminationCondition, ...]:
    term = tuple(term)
    if not any(isinstance(c, (MaxGenerations, Horizon)) for c in term):
        raise ConfigurationError("termination needs a finite bound (MaxGenerations or Horizon)")
    return term


@dataclass(frozen=True)
class InductiveResult:
    genome: Genome
    value: float
    t0: int
    emitted_at: int


@dataclass(frozen=True)
class GenerationRecord:
    t: int
    best_genome: Genome
    best_f3: float
    mean_f3: float
    cost: SearchCost
    inductive_flag: bool = False
    pairs: tuple[tuple[Genome, float], ...] | None = None
    # parallel machines only
    f3_whole: float | None = None
    f3_components: tuple[float, ...] | None = None
    population_label: str | None = None
    individual_labels: tuple[tuple[int, str], ...] | None = None
    accepted: bool | None = None

    @property
    def weighted(self) -> bool:
        return self.pairs is not None


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class RunTrace:
    spec: object
    term: tuple[TerminationCondition, ...]
    records: tuple[GenerationRecord, ...]
    halt_reason: str
    final_population: Population
    inductive_result: InductiveResult | None = None

    @property
    def best_values(self) -> list[float]:
        return [r.best_f3 for r in self.records]

    @property
    def parallel(self) -> bool:
        return self.records[0].f3_whole is not None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["t", "best_f3", "mean_f3", "evaluations", "inductive_flag"]
        p = len(self.records[0].f3_components) if self.parallel else 0
        if self.parallel:
            header += ["f3_whole", *(f"f3_comp_{i + 1}" for i in range(p)), "population_label", "individual_labels", "accepted"]
        w.writerow(header)
        for r in self.records:
            row = [r.t, _fmt(r.best_f3), _fmt(r.mean_f3), r.cost.evaluations, int(r.inductive_flag)]
            if self.parallel:
                labels = ";".join(f"{j}:{lab}" for j, lab in (r.individual_labels or ()))
                row += [_fmt(r.f3_whole), *(_fmt(c) for c in r.f3_components), r.population_label or "", labels, int(bool(r.accepted))]
            w.writerow(row)
        return buf.getvalue()

    def summary(self) -> dict:
        last = self.records[-1]
        spec = self.spec
        out = {
            "schema_version": SCHEMA_VERSION,
            "rng": ALGORITHM,
            "halt_reason": self.halt_reason,
            "generations": last.t,
            "evaluations": last.cost.evaluations,
            "best_f3": last.best_f3,
            "best_genome": genome_to_json(last.best_genome),
            "computation_class": classify_computation(spec, self.term).value,
            "inductive_result": None,
            "spec": codec.encode(spec),
            "termination": codec.encode(list(self.term)),
        }
        if isinstance(spec, AlgorithmSpec):
            total = aggregate(spec.aggregator, search_cost_value(last.cost, spec.population_size), last.best_f3)
            out["aggregate_objective"] = list(total) if isinstance(total, tuple) else total
        if self.inductive_result is not None:
            ir = self.inductive_result
            out["inductive_result"] = {
                "genome": genome_to_json(ir.genome),
                "value": ir.value,
                "t0": ir.t0,
                "emitted_at": ir.emitted_at,
            }
        return out

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True, indent=2, allow_nan=False) + "\n"


class Monitor:
    """Tracks best-f3 history for termination checks and inductive-result emission."""

    def __init__(self, term: Sequence[TerminationCondition], window: int | None):
        self.term = check_termination(term)
        self.window = window
        self.values: list[float] = []
        self.genomes: list[Genome] = []
        self.start = 0
        self.segment_start = 0
        self.first_hit: dict[int, int] = {}
        self.result: InductiveResult | None = None

    def observe(self, t: int, genome: Genome, value: float) -> bool:
        if not self.values:
            self.start = self.segment_start = t
        elif value != self.values[-1]:
            self.segment_start = t
        self.values.append(value)
        self.genomes.append(genome)
        for i, c in enumerate(self.term):
            if isinstance(c, OptimumReached) and i not in self.first_hit and abs(value - c.target) <= c.tolerance:
                self.first_hit[i] = t
        if self.window is not None and t - self.segment_start == self.window:
            t0 = self.segment_start
            self.result = InductiveResult(self.genomes[t0 - self.start], self.values[t0 - self.start], t0, t)
            return True
        return False

    def halt(self, t: int) -> str | None:
        for i, c in enumerate(self.term):
            if isinstance(c, MaxGenerations) and t >= c.limit:
                return "MaxGenerations"
            if isinstance(c, Horizon) and t >= c.budget:
                return "Horizon"
            if isinstance(c, OptimumReached) and i in self.first_hit and t >= self.first_hit[i] + c.linger:
                return "OptimumReached"
            if isinstance(c, Stagnation) and len(self.values) > c.window:
                if self.values[-1 - c.window] - self.values[-1] <= c.min_improvement:
                    return "Stagnation"
        return None


def evaluate_population(objective: ObjectiveSpec, pop: Population) -> Population:
    return Population(pop.members, pop.generation, tuple(objective.evaluate(g) for g in pop.members))


def initial_population(spec: AlgorithmSpec, seed: int | None = None) -> Population:
    """Generation-0 population for ``spec``, seeded by its master seed unless overridden."""
    ext = spec.self_adaptation
    strategy = (ext.initial,) if ext.enabled else ()
    seed = spec.master_seed if seed is None else seed
    return init_population(spec.representation, spec.population_size, seed, strategy)


def propose(
    spec: AlgorithmSpec,
    pop: Population,
    streams: Streams,
    size: int | None = None,
) -> tuple[Population, SearchCost]:
    """One machine transition reading ``pop`` (already evaluated) and emitting ``size`` members."""
    work = pop
    if spec.self_adaptation.enabled:
        work = apply_self_adaptation(spec.self_adaptation, pop, streams)
    bounds = spec.representation if isinstance(spec.representation, RealVectorRep) else None
    varied = vary(spec.variation, work, streams, bounds)
    fitness = [spec.objective.evaluate(g) for g in varied.members]
    incumbent = best_of_population(spec.objective, pop) if spec.selection.elitism else None
    chosen = select(spec.selection, varied, fitness, streams, size=size, incumbent=incumbent)
    n = len(varied.members)
    return chosen, SearchCost(evaluations=n, generations=1, variations=n)


def step(spec: AlgorithmSpec, pop: Population, streams: Streams | None = None) -> tuple[Population, SearchCost]:
    """``X[t+1] = s(v(X[t]))``; returns the next generation with fitness and the cost increment."""
    cost = SearchCost()
    if pop.fitness is None:
        pop = evaluate_population(spec.objective, pop)
        cost = SearchCost(evaluations=len(pop))
    if streams is None:
        streams = Streams(spec.master_seed, pop.generation)
    nxt, delta = propose(spec, pop, streams)
    return Population(nxt.members, pop.generation + 1, nxt.fitness), cost + delta


def _record(t: int, pop: Population, cost: SearchCost, flag: bool, weighted: bool) -> GenerationRecord:
    values = pop.fitness
    b = min(range(len(values)), key=lambda i: (values[i], i))
    return GenerationRecord(
        t=t,
        best_genome=pop.members[b],
        best_f3=values[b],
        mean_f3=math.fsum(values) / len(values),
        cost=cost,
        inductive_flag=flag,
        pairs=pop.weighted() if weighted else None,
    )


def run(
    spec: AlgorithmSpec,
    x0: Population,
    term: Sequence[TerminationCondition],
    weighted: bool = False,
) -> RunTrace:
    """Iterate :func:`step` from ``x0`` until the first termination condition triggers.

    Parameters
    ----------
    spec : AlgorithmSpec
        The algorithm, including its master seed.
    x0 : Population
        Start population; it is (re)evaluated and counted as the first cost.
    term : sequence of TerminationCondition
        Checked in order after every generation; the first to trigger wins.
        At least one of MaxGenerations or Horizon is required.
    weighted : bool
        Keep every generation's ``(genome, fitness)`` pairs in the trace.
    """
    monitor = Monitor(term, spec.inductive_window)
    x0.validate(spec.representation)
    pop = evaluate_population(spec.objective, Population(x0.members, x0.generation))
    cost = SearchCost(evaluations=len(pop))
    records = []
    t = pop.generation
    rec = _record(t, pop, cost, False, weighted)
    records.append(replace(rec, inductive_flag=monitor.observe(t, rec.best_genome, rec.best_f3)))
    while (reason := monitor.halt(t)) is None:
        pop, delta = step(spec, pop)
        cost = cost + delta
        t = pop.generation
        rec = _record(t, pop, cost, False, weighted)
        records.append(replace(rec, inductive_flag=monitor.observe(t, rec.best_genome, rec.best_f3)))
    return RunTrace(spec, monitor.term, tuple(records), reason, pop, monitor.result)


def run_universal(encoded: str | bytes, x0: Population, term: Sequence[TerminationCondition], weighted: bool = False) -> RunTrace:
    """Decode an algorithm description and run it.

    A malformed description raises :class:`DecodeError` before anything runs.
    """
    spec = decode_spec(encoded)
    return run(spec, x0, term, weighted)


def detect_inductive_result(values: Sequence[float], window: int, genomes: Sequence[Genome] | None = None, start: int = 0):
    """Latest stabilization of best-f3 lasting ``window`` generations.

    Returns an :class:`InductiveResult` for the last constant stretch
    ``[t0, t0 + window]`` of ``values`` (generation ``start`` first), or None.
    Emission does not imply halting; a later improvement supersedes it.
    """
    if window < 1:
        raise ConfigurationError("window must be >= 1")
    found = None
    seg = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] != values[seg]:
            if i - 1 - seg >= window:
                found = seg
            seg = i
    if found is None:
        return None
    genome = genomes[found] if genomes is not None else None
    return InductiveResult(genome, values[found], start + found, start + found + window)


class ComputationClass(str, Enum):
    BOUNDED_RECURSIVE = "1a"
    BOUNDED_INDUCTIVE = "1b"
    BOUNDED_LIMIT = "1c"
    UNBOUNDED_RECURSIVE = "2a"
    UNBOUNDED_INDUCTIVE = "2b"
    UNBOUNDED_LIMIT = "2c"
    META = "3-meta"


def classify_computation(spec, term: Sequence[TerminationCondition]) -> ComputationClass:
    """Map a configuration onto the bounded/unbounded/infinite computation classes.

    Self-adaptive strategy evolution stands in for the infinite class. Otherwise
    the first non-Horizon condition is the primary criterion and an ``open``
    Horizon marks the run as unbounded:

    - MaxGenerations or Stagnation primary: recursive result (1a / 2a)
    - OptimumReached with elitism and an inductive window: limit result (1c / 2c)
    - OptimumReached otherwise: inductive result (1b / 2b)
    """
    specs = [spec] if isinstance(spec, AlgorithmSpec) else [m.spec for m in spec.submachines]
    if any(s.self_adaptation.enabled for s in specs):
        return ComputationClass.META
    term = tuple(term)
    unbounded = any(isinstance(c, Horizon) and c.open for c in term)
    primary = next((c for c in term if not isinstance(c, Horizon)), None)
    if isinstance(primary, OptimumReached):
        limit = all(s.selection.elitism for s in specs) and all(s.inductive_window is not None for s in specs)
        if limit:
            return ComputationClass.UNBOUNDED_LIMIT if unbounded else ComputationClass.BOUNDED_LIMIT
        return ComputationClass.UNBOUNDED_INDUCTIVE if unbounded else ComputationClass.BOUNDED_INDUCTIVE
    return ComputationClass.UNBOUNDED_RECURSIVE if unbounded else ComputationClass.BOUNDED_RECURSIVE
