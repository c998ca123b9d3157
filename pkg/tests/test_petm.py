from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoturing.engine import AlgorithmSpec, Horizon, MaxGenerations, initial_population, propose, run, step
from evoturing.errors import AnalysisError, ConfigurationError, EngineError
from evoturing.objectives import OneMaxMin, best_of_population
from evoturing.operators import BitFlip, SwapMutation, Tournament, Truncation
from evoturing.petm import (
    MinCombiner,
    ParallelSpec,
    Submachine,
    SumCombiner,
    WeightedCombiner,
    classify_interaction,
    evaluate_whole,
    joint_fitness,
    parallel_step,
    run_parallel,
)
from evoturing.rng import Streams
from evoturing.space import BitStringRep, PermutationRep, Population, init_population

from .conftest import TSP4


def two_machines(sizes=(3, 5), seed=0):
    a = AlgorithmSpec(BitStringRep(8), sizes[0], BitFlip(0.1), Tournament(2, True), OneMaxMin(8), master_seed=seed)
    b = AlgorithmSpec(BitStringRep(8), sizes[1], BitFlip(0.3), Tournament(3, True), OneMaxMin(8), master_seed=seed)
    return ParallelSpec((Submachine(a, sizes[0]), Submachine(b, sizes[1])))


def test_single_submachine_step_equals_engine_step(onemax_spec):
    pspec = ParallelSpec((Submachine(onemax_spec, onemax_spec.population_size),))
    x0 = initial_population(onemax_spec)
    par, _ = parallel_step(pspec, x0)
    seq, _ = step(onemax_spec, x0)
    assert par.members == seq.members and par.fitness == seq.fitness


def test_single_submachine_run_equals_run(onemax_spec):
    pspec = ParallelSpec((Submachine(onemax_spec, onemax_spec.population_size),), MinCombiner())
    x0 = initial_population(onemax_spec)
    a = run(onemax_spec, x0, [MaxGenerations(40)])
    b = run_parallel(pspec, x0, [MaxGenerations(40)])
    assert len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert (ra.t, ra.best_genome, ra.best_f3, ra.mean_f3, ra.cost, ra.inductive_flag) == (
            rb.t, rb.best_genome, rb.best_f3, rb.mean_f3, rb.cost, rb.inductive_flag)


def test_concatenation_order():
    pspec = two_machines()
    whole = init_population(pspec.representation, 8, 11)
    out, costs = parallel_step(pspec, whole)
    assert len(out) == 8 and out.generation == 1 and len(costs) == 2
    for i, (m, (a, b)) in enumerate(zip(pspec.submachines, pspec.bounds)):
        sub, _ = propose(m.spec, evaluate_whole(pspec, whole), Streams(m.spec.master_seed, 0, lane=i), size=m.size)
        assert out.members[a:b] == sub.members
    assert pspec.bounds == [(0, 3), (3, 8)]


def test_rate_zero_truncation_takes_best_of_whole():
    spec = AlgorithmSpec(BitStringRep(10), 4, BitFlip(0.0), Truncation(0.125), OneMaxMin(10))
    other = AlgorithmSpec(BitStringRep(10), 12, BitFlip(0.5), Tournament(2), OneMaxMin(10))
    pspec = ParallelSpec((Submachine(spec, 4), Submachine(other, 12)))
    whole = evaluate_whole(pspec, init_population(pspec.representation, 16, 5))
    out, _ = parallel_step(pspec, whole)
    order = sorted(range(16), key=lambda i: (whole.fitness[i], i))
    keep = order[:2]  # ceil(0.125 * 16) survivors, cycled
    expected = [whole.members[keep[i % 2]] for i in range(4)]
    assert list(out.members[:4]) == expected


def test_size_mismatch_raises():
    pspec = two_machines()
    with pytest.raises(EngineError):
        evaluate_whole(pspec, init_population(pspec.representation, 7, 0))


def test_mixed_representations_rejected(tsp_spec, onemax_spec):
    with pytest.raises(ConfigurationError):
        ParallelSpec((Submachine(tsp_spec, 2), Submachine(onemax_spec, 2)))


def test_joint_fitness_examples():
    spec = AlgorithmSpec(BitStringRep(8), 2, BitFlip(0.1), Tournament(2), OneMaxMin(8))
    pspec = ParallelSpec(tuple(Submachine(spec, 2) for _ in range(3)), MinCombiner())
    pop = Population(init_population(spec.representation, 6, 0).members, 0, (4.0, 2.0, 5.0, 6.0, 3.0, 8.0))
    assert joint_fitness(pspec, pop) == (2.0, (2.0, 5.0, 3.0))
    assert joint_fitness(replace(pspec, combiner=SumCombiner()), pop) == (10.0, (2.0, 5.0, 3.0))
    assert joint_fitness(replace(pspec, combiner=WeightedCombiner((1.0, 0.0, 2.0))), pop)[0] == 8.0


def test_joint_fitness_single_component_is_best_of_population(onemax_spec):
    pspec = ParallelSpec((Submachine(onemax_spec, 20),))
    pop = initial_population(onemax_spec)
    assert joint_fitness(pspec, pop)[0] == best_of_population(onemax_spec.objective, pop)[1]


def test_classify_examples():
    lab = classify_interaction((5.0, (5.0, 7.0)), (3.0, (3.0, 7.0)))
    assert lab.population == "PopulationCooperates" and lab.individuals == ((0, "Cooperates"),)
    lab = classify_interaction((3.0, (3.0, 9.0)), (5.0, (5.0, 8.0)))
    assert lab.population == "PopulationCompetes" and lab.individuals == ()
    lab = classify_interaction((4.0, (4.0, 6.0)), (4.0, (4.0, 5.0)))
    assert lab.population == "Neutral" and lab.individuals == ()
    with pytest.raises(AnalysisError):
        classify_interaction((1.0, (1.0,)), (1.0, (1.0, 2.0)))


vals = st.integers(0, 6).map(float)


@given(st.lists(st.tuples(vals, vals), min_size=1, max_size=4))
def test_classify_antisymmetric(pairs):
    prev = tuple(a for a, _ in pairs)
    nxt = tuple(b for _, b in pairs)
    fwd = classify_interaction((min(prev), prev), (min(nxt), nxt))
    back = classify_interaction((min(nxt), nxt), (min(prev), prev))
    swap = {"PopulationCooperates": "PopulationCompetes", "PopulationCompetes": "PopulationCooperates", "Neutral": "Neutral",
            "Cooperates": "Competes", "Competes": "Cooperates"}
    assert back.population == swap[fwd.population]
    assert back.individuals == tuple((j, swap[k]) for j, k in fwd.individuals)
    changed = [j for j in range(len(prev)) if prev[j] != nxt[j]]
    if fwd.individuals:
        assert len(changed) == 1 and fwd.individuals[0][0] == changed[0]


def tsp_parallel(seed):
    a = AlgorithmSpec(PermutationRep(4), 4, SwapMutation(0.25), Tournament(2, True), TSP4, master_seed=seed)
    b = replace(a, variation=SwapMutation(0.5))
    return ParallelSpec((Submachine(a, 4), Submachine(b, 4)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["cooperative-only", "competitive-only", "free"]))
def test_policy_monotonicity(seed, policy):
    pspec = tsp_parallel(seed)
    x0 = init_population(pspec.representation, 8, seed)
    tr = run_parallel(pspec, x0, [Horizon(60)], policy=policy)
    f = [r.f3_whole for r in tr.records]
    assert all(r.best_f3 == r.f3_whole for r in tr.records)
    assert len(tr.final_population) == 8
    if policy == "cooperative-only":
        assert all(b <= a for a, b in zip(f, f[1:]))
    elif policy == "competitive-only":
        assert all(b >= a for a, b in zip(f, f[1:]))
        assert all(r.population_label in ("PopulationCompetes", "Neutral") for r in tr.records[1:])
    for prev, r in zip(tr.records, tr.records[1:]):
        if not r.accepted:
            assert r.f3_whole == prev.f3_whole and r.population_label == "Neutral"


def test_parallel_csv_columns():
    pspec = tsp_parallel(1)
    tr = run_parallel(pspec, init_population(pspec.representation, 8, 1), [MaxGenerations(3)], policy="cooperative-only")
    header = tr.to_csv().split("\n")[0].split(",")
    for col in ("f3_whole", "f3_comp_1", "f3_comp_2", "population_label", "individual_labels", "accepted"):
        assert col in header
    assert tr.summary()["computation_class"] == "1a"


def test_unknown_policy():
    with pytest.raises(ConfigurationError):
        tsp_parallel(0).with_policy("mutual")
    with pytest.raises(ConfigurationError):
        run_parallel(tsp_parallel(0), init_population(PermutationRep(4), 8, 0), [MaxGenerations(1)], policy="x")
