"""Convergence verdicts and rates over traces, and the theorem harness.

Every verdict is an empirical statement over the finite horizon of the
observed trace(s); none claims asymptotic behaviour beyond it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

from . import codec
from .engine import (
    AlgorithmSpec,
    Horizon,
    OptimumReached,
    RunTrace,
    initial_population,
    run,
)
from .errors import AnalysisError, ConfigurationError, OracleRefused
from .objectives import Sphere, attains, brute_force_optimum, search_cost_value
from .operators import BitFlip, OnePointCrossover, SwapMutation, bitflip_outcome_distribution, bitflip_transition_probability
from .petm import ParallelSpec, run_parallel
from .rng import stream
from .space import BitString, OptimalSet, Population, value_distance_to_set

SCOPE = "empirical over finite horizon"


def _objective(trace: RunTrace):
    spec = trace.spec
    return spec.objective if isinstance(spec, AlgorithmSpec) else spec.submachines[0].spec.objective


def trace_distances(trace: RunTrace, target: OptimalSet) -> list[float]:
    """``D(t)`` between the generation's best (whole-population fitness for parallel runs) and the optimum."""
    f = _objective(trace)
    return [value_distance_to_set(r.best_f3, target, f) for r in trace.records]


def convergence_rate(trace: RunTrace, target: OptimalSet, t: int) -> float:
    """One-step drift ``D(t) - D(t+1)``; positive means moving toward the optimum."""
    if not 0 <= t < len(trace.records) - 1:
        raise AnalysisError(f"t={t} outside 0..{len(trace.records) - 2}")
    f = _objective(trace)
    d0 = value_distance_to_set(trace.records[t].best_f3, target, f)
    d1 = value_distance_to_set(trace.records[t + 1].best_f3, target, f)
    return d0 - d1


def expected_distances(traces: Sequence[RunTrace], target: OptimalSet) -> list[float]:
    """Mean distance over runs; a run that halted early holds its final distance."""
    curves = [trace_distances(tr, target) for tr in traces]
    if not curves:
        raise AnalysisError("no traces")
    horizon = max(len(c) for c in curves)
    padded = [c + [c[-1]] * (horizon - len(c)) for c in curves]
    return [math.fsum(col) / len(col) for col in zip(*padded)]


def hold_time(distances: Sequence[float], bound: float) -> int | None:
    """First ``t`` from which every observed distance is ``<= bound``."""
    tau = None
    for t in range(len(distances) - 1, -1, -1):
        if distances[t] <= bound:
            tau = t
        else:
            break
    return tau


@dataclass(frozen=True)
class ConvergenceVerdict:
    kind: str
    horizon: int
    tau: int | None = None
    r: float | None = None
    eps_taus: tuple[tuple[float, int], ...] = ()
    scope: str = SCOPE

    def to_json(self) -> dict:
        out = asdict(self)
        out["eps_taus"] = [list(p) for p in self.eps_taus]
        return out


def convergence_verdict(
    source,
    target: OptimalSet | None = None,
    r: float | None = None,
    eps_grid: Sequence[float] | None = None,
) -> ConvergenceVerdict:
    """Classify a distance history as convergent, convergent with error ``r``,
    asymptotically convergent on ``eps_grid``, or divergent (checked in that order).

    ``source`` is a trace, a list of traces (their expected distance is used)
    or a precomputed distance sequence.
    """
    if isinstance(source, RunTrace):
        d = trace_distances(source, target)
    elif source and isinstance(source[0], RunTrace):
        d = expected_distances(source, target)
    else:
        d = [float(v) for v in source]
    if not d:
        raise AnalysisError("empty distance history")
    horizon = len(d) - 1
    tau = hold_time(d, 0.0)
    if tau is not None:
        return ConvergenceVerdict("convergent", horizon, tau)
    if r is not None:
        if r < 0:
            raise AnalysisError("error bound r must be nonnegative")
        tau = hold_time(d, r)
        if tau is not None:
            return ConvergenceVerdict("convergent_with_error", horizon, tau, r=r)
    if eps_grid:
        taus = [(float(e), hold_time(d, e)) for e in sorted(eps_grid, reverse=True)]
        if all(t is not None for _, t in taus):
            return ConvergenceVerdict("asymptotic_evidence", horizon, eps_taus=tuple(taus))
    return ConvergenceVerdict("divergent", horizon)


def first_hit(trace: RunTrace, target: OptimalSet) -> int | None:
    """Index of the first record whose best value attains the optimum."""
    f = _objective(trace)
    for i, rec in enumerate(trace.records):
        if attains(f, rec.best_f3, target.optimum_value):
            return i
    return None


def maintained_after_hit(trace: RunTrace, target: OptimalSet) -> bool | None:
    """None when never hit; otherwise whether every later record stays optimal."""
    h = first_hit(trace, target)
    if h is None:
        return None
    f = _objective(trace)
    return all(attains(f, r.best_f3, target.optimum_value) for r in trace.records[h:])


def found_then_lost(trace: RunTrace, target: OptimalSet) -> bool:
    return maintained_after_hit(trace, target) is False


def resolve_target(objective) -> OptimalSet:
    if isinstance(objective, Sphere):
        return objective.declared_optimum()
    return brute_force_optimum(objective)


def non_optimal_population(rep, size: int, seed: int, objective, target: OptimalSet, max_draws: int = 100_000) -> Population:
    """Draw initial members from the init streams, skipping optimal ones."""
    members = []
    i = 0
    while len(members) < size:
        if i >= max_draws:
            raise AnalysisError("could not draw enough non-optimal members")
        g = rep.sample(stream(seed, "init", 0, i))
        if not attains(objective, objective.evaluate(g), target.optimum_value):
            members.append(g)
        i += 1
    return Population(tuple(members), 0)


@dataclass
class TheoremReport:
    theorem: str
    configuration: dict
    seeds: list[int]
    runs: int
    successes: int
    hitting: int
    maintained: int
    verdict: str
    threshold: float | None = None
    controls: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    pilot: bool = False

    @property
    def hit_rate(self) -> float:
        return self.hitting / self.runs if self.runs else 0.0

    @property
    def maintenance_rate(self) -> float:
        return self.maintained / self.hitting if self.hitting else 1.0

    def to_json(self) -> dict:
        out = asdict(self)
        out["hit_rate"] = self.hit_rate
        out["maintenance_rate"] = self.maintenance_rate
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _zero_rate(variation):
    if isinstance(variation, (BitFlip, OnePointCrossover, SwapMutation)):
        return type(variation)(0.0)
    raise ConfigurationError(f"{type(variation).__name__} has no zero-rate form")


def _term(target: OptimalSet, horizon: int, linger: int):
    return [OptimumReached(target.optimum_value, 0.0, linger), Horizon(horizon)]


def check_transition_formula(n_max: int = 3, rates: Sequence[float] = (0.05, 0.25, 0.5, 0.9)) -> float:
    """Largest gap between enumerated BitFlip outcome probabilities and the product formula."""
    worst = 0.0
    for n in range(1, n_max + 1):
        for rate in rates:
            for k in range(1 << n):
                x = BitString(tuple(int(c) for c in format(k, f"0{n}b")))
                dist = bitflip_outcome_distribution(x, rate)
                for m in range(1 << n):
                    y = BitString(tuple(int(c) for c in format(m, f"0{n}b")))
                    p = dist.get(y.bits, 0.0)
                    if not p > 0:
                        return math.inf
                    worst = max(worst, abs(p - bitflip_transition_probability(x, y, rate)))
    return worst


def check_theorem_6_2_6_3(
    problem,
    ea: AlgorithmSpec,
    seeds: Sequence[int],
    horizon: int,
    target: OptimalSet | None = None,
    control: AlgorithmSpec | None = None,
    linger: int = 100,
    threshold: float | None = None,
    control_horizon: int | None = None,
) -> tuple[TheoremReport, TheoremReport]:
    """Empirical check of the elitist optimality and completeness results.

    Returns ``(optimality, completeness)`` reports. The optimality report runs
    ``ea`` on every seed until ``linger`` generations after the first hit (or
    the horizon) and counts maintenance; its control drops elitism (or uses
    ``control``) and counts found-then-lost seeds. The completeness report
    pins a zero-rate control started from one repeated non-optimal genome,
    which must never hit, and the exact one-step transition law of BitFlip.
    """
    if ea.objective != problem:
        raise ConfigurationError("the algorithm must optimize the given problem")
    if not ea.selection.elitism:
        raise ConfigurationError("the optimality check needs an elitist algorithm")
    rate = getattr(ea.variation, "rate", None)
    if rate is not None and not 0.0 < rate < 1.0:
        raise ConfigurationError("mutation rate must lie strictly inside (0, 1)")
    if target is None:
        target = resolve_target(problem)
    if target.optimum_value is None:
        raise OracleRefused("optimality check needs a known optimum value")
    seeds = list(seeds)
    control = control or replace(ea, selection=replace(ea.selection, elitism=False))
    control_horizon = control_horizon or horizon

    hitting = maintained = 0
    finals = []
    for s in seeds:
        spec = ea.with_seed(s)
        tr = run(spec, initial_population(spec), _term(target, horizon, linger))
        kept = maintained_after_hit(tr, target)
        hitting += kept is not None
        maintained += bool(kept)
        finals.append(tr)
    lost = []
    for s in seeds:
        spec = control.with_seed(s)
        tr = run(spec, initial_population(spec), _term(target, control_horizon, linger))
        if found_then_lost(tr, target):
            lost.append(s)
    expected = convergence_verdict(finals, target)
    ok = maintained == hitting and bool(lost) and (threshold is None or hitting / len(seeds) >= threshold)
    config = {"algorithm": codec.encode(ea), "control": codec.encode(control), "horizon": horizon, "linger": linger,
              "optimum_value": target.optimum_value}
    optimality = TheoremReport(
        "6.2-optimality", config, seeds, len(seeds), hitting, hitting, maintained,
        "pass" if ok else "fail", threshold,
        controls={"no_elitism_found_then_lost": lost},
        checks={"expected_distance_verdict": expected.to_json()},
    )

    stuck_hits = 0
    zero = replace(ea, variation=_zero_rate(ea.variation))
    for s in seeds:
        start = non_optimal_population(ea.representation, 1, s, problem, target)
        x0 = Population(start.members * ea.population_size, 0)
        tr = run(zero.with_seed(s), x0, _term(target, min(horizon, 200), 0))
        stuck_hits += first_hit(tr, target) is not None
    formula_gap = check_transition_formula() if isinstance(ea.variation, BitFlip) else None
    ok = stuck_hits == 0 and hitting > 0 and (formula_gap is None or formula_gap <= 1e-12)
    completeness = TheoremReport(
        "6.3-completeness", config, seeds, len(seeds), hitting, hitting, maintained,
        "pass" if ok else "fail", threshold,
        controls={"zero_rate_hits": stuck_hits},
        checks={"transition_formula_max_gap": formula_gap},
    )
    return optimality, completeness


def check_theorem_7_1_7_2(
    pspec: ParallelSpec,
    seeds: Sequence[int],
    horizon: int,
    target: OptimalSet | None = None,
    linger: int = 100,
    threshold: float | None = None,
    competitive_horizon: int | None = None,
) -> tuple[TheoremReport, TheoremReport]:
    """Cooperative versus competitive acceptance from non-optimal starts.

    Returns ``(cooperative, competitive)`` reports; the free policy's hit rate
    is recorded as a control on the cooperative report.
    """
    objective = pspec.submachines[0].spec.objective
    if target is None:
        target = resolve_target(objective)
    if target.optimum_value is None:
        raise OracleRefused("cooperation check needs a known optimum value")
    seeds = list(seeds)
    competitive_horizon = competitive_horizon or horizon

    def sweep(policy: str, hz: int):
        hits = kept = 0
        monotone = 0
        for s in seeds:
            p = pspec.with_seed(s)
            x0 = non_optimal_population(p.representation, p.population_size, s, objective, target)
            tr = run_parallel(p, x0, _term(target, hz, linger), policy=policy)
            m = maintained_after_hit(tr, target)
            hits += m is not None
            kept += bool(m)
            d = trace_distances(tr, target)
            f = [r.f3_whole for r in tr.records]
            if policy == "cooperative-only":
                monotone += all(b <= a for a, b in zip(f, f[1:]))
            else:
                monotone += all(b >= a for a, b in zip(d, d[1:]))
        return hits, kept, monotone

    config = {"parallel": codec.encode(pspec), "horizon": horizon, "competitive_horizon": competitive_horizon,
              "linger": linger, "optimum_value": target.optimum_value}
    hits, kept, mono = sweep("cooperative-only", horizon)
    free_hits, _, _ = sweep("free", horizon)
    ok = mono == len(seeds) and kept == hits and (threshold is None or hits / len(seeds) >= threshold)
    cooperative = TheoremReport(
        "7.1-cooperative", config, seeds, len(seeds), hits, hits, kept, "pass" if ok else "fail", threshold,
        controls={"free_policy_hit_rate": free_hits / len(seeds)},
        checks={"nonincreasing_whole_fitness": mono},
    )
    c_hits, c_kept, c_mono = sweep("competitive-only", competitive_horizon)
    ok = c_hits == 0 and c_mono == len(seeds)
    competitive = TheoremReport(
        "7.2-competitive", config, seeds, len(seeds), c_hits, c_hits, c_kept, "pass" if ok else "fail", 0.0,
        checks={"nondecreasing_distance": c_mono},
    )
    return cooperative, competitive


def compare_search_optimality(
    specs: Sequence[AlgorithmSpec],
    seeds: Sequence[int],
    horizon: int,
    target: OptimalSet | None = None,
    normalizer: float = 1.0,
) -> dict:
    """Among a finite set of algorithms, the one with least mean search cost at first hit.

    Runs that never hit are charged their full cost. Only a comparative
    ranking is reported; no absolute best algorithm is claimed.
    """
    if not specs:
        raise AnalysisError("no algorithms to compare")
    problem = specs[0].objective
    if any(s.objective != problem for s in specs):
        raise AnalysisError("algorithms must share one problem")
    target = target or resolve_target(problem)
    table = []
    for spec in specs:
        costs, hits = [], 0
        for s in seeds:
            sp = spec.with_seed(s)
            tr = run(sp, initial_population(sp), _term(target, horizon, 0))
            h = first_hit(tr, target)
            hits += h is not None
            rec = tr.records[h if h is not None else -1]
            costs.append(search_cost_value(rec.cost, normalizer))
        table.append({"algorithm": codec.encode(spec), "mean_f2": math.fsum(costs) / len(costs), "hits": hits})
    best = min(range(len(table)), key=lambda i: (table[i]["mean_f2"], i))
    return {"search_optimal_index": best, "table": table, "scope": SCOPE}
