import json
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evoturing import codec
from evoturing.engine import (
    AlgorithmSpec,
    ComputationClass,
    Horizon,
    MaxGenerations,
    OptimumReached,
    Stagnation,
    classify_computation,
    decode_spec,
    detect_inductive_result,
    initial_population,
    run,
    run_universal,
    step,
)
from evoturing.errors import ConfigurationError, DecodeError
from evoturing.objectives import KnapsackPenalty, OneMaxMin, Sphere, best_of_population
from evoturing.operators import BitFlip, GaussianMutation, Proportional, SelfAdaptation, Tournament, Truncation
from evoturing.space import BitStringRep, RealVectorRep

PILOTS = json.loads((Path(__file__).parent / "fixtures" / "pilots.json").read_text())


def test_step_deterministic(onemax_spec):
    x0 = initial_population(onemax_spec)
    assert step(onemax_spec, x0) == step(onemax_spec, x0)


def test_step_preserves_size_and_increments_generation(onemax_spec):
    x0 = initial_population(onemax_spec)
    x1, cost = step(onemax_spec, x0)
    assert len(x1) == len(x0) and x1.generation == 1
    # unevaluated input: 20 initial + 20 varied evaluations
    assert cost.evaluations == 40 and cost.generations == 1 and cost.variations == 20


def test_step_rejects_incompatible_spec():
    with pytest.raises(ConfigurationError):
        AlgorithmSpec(BitStringRep(4), 5, GaussianMutation(1.0), Tournament(2), OneMaxMin(4))
    with pytest.raises(ConfigurationError):
        AlgorithmSpec(BitStringRep(4), 5, BitFlip(0.1), Tournament(2), OneMaxMin(5))


specs = st.builds(
    lambda sel, rate, seed, n: AlgorithmSpec(BitStringRep(n), 10, BitFlip(rate), sel, OneMaxMin(n), master_seed=seed),
    st.sampled_from([Tournament(2, True), Truncation(0.3, True), Proportional(True), Tournament(5, True)]),
    st.floats(0.01, 0.99),
    st.integers(0, 2**63),
    st.integers(3, 16),
)


@settings(max_examples=1000, deadline=None)
@given(specs, st.integers(0, 50))
def test_elitist_step_never_worsens_best(spec, gen):
    x0 = replace(initial_population(spec), generation=gen)
    x1, _ = step(spec, x0)
    before = best_of_population(spec.objective, x0)[1]
    after = best_of_population(spec.objective, x1)[1]
    assert after <= before


def test_max_generations_zero(onemax_spec):
    tr = run(onemax_spec, initial_population(onemax_spec), [MaxGenerations(0)])
    assert [r.t for r in tr.records] == [0]
    assert tr.halt_reason == "MaxGenerations"


def test_optimum_reached_pilot(onemax_spec):
    pilot = PILOTS["run_onemax10_elitist"]
    hits = 0
    for s in range(100):
        spec = onemax_spec.with_seed(s)
        tr = run(spec, initial_population(spec), [OptimumReached(0.0), Horizon(5000)])
        hits += tr.halt_reason == "OptimumReached" and tr.records[-1].best_f3 == 0
    assert hits >= pilot["threshold_hits"]
    assert hits == pilot["observed_hits"]


def test_stagnation_halts_after_constant_window():
    spec = AlgorithmSpec(BitStringRep(8), 6, BitFlip(0.0), Truncation(1.0, True), OneMaxMin(8))
    tr = run(spec, initial_population(spec), [Stagnation(50, 0.0), Horizon(1000)])
    assert tr.halt_reason == "Stagnation"
    assert tr.records[-1].t == 50
    assert len({r.best_f3 for r in tr.records}) == 1


def test_missing_finite_bound(onemax_spec):
    with pytest.raises(ConfigurationError):
        run(onemax_spec, initial_population(onemax_spec), [OptimumReached(0.0)])


@pytest.mark.parametrize("budget", [0, 1, 7, 40])
def test_horizon_safety(budget):
    spec = AlgorithmSpec(BitStringRep(30), 4, BitFlip(0.01), Tournament(2), OneMaxMin(30))
    tr = run(spec, initial_population(spec), [Stagnation(1000), Horizon(budget)])
    assert tr.records[-1].t == budget and tr.halt_reason == "Horizon"


def test_first_triggered_condition_wins(onemax_spec):
    tr = run(onemax_spec, initial_population(onemax_spec), [Horizon(3), MaxGenerations(3)])
    assert tr.halt_reason == "Horizon"


def test_trace_completeness(onemax_spec):
    tr = run(onemax_spec, initial_population(onemax_spec), [MaxGenerations(25)])
    assert [r.t for r in tr.records] == list(range(26))
    for r in tr.records:
        assert r.cost.evaluations == onemax_spec.population_size * (r.t + 1)
        assert r.cost.generations == r.t
    evals = [r.cost.evaluations for r in tr.records]
    assert evals == sorted(evals)


def test_weighted_trace_pairs(onemax_spec):
    tr = run(onemax_spec, initial_population(onemax_spec), [MaxGenerations(3)], weighted=True)
    for r in tr.records:
        assert r.weighted
        assert all(onemax_spec.objective.evaluate(g) == v for g, v in r.pairs)


def test_universal_runner_matches(onemax_spec):
    x0 = initial_population(onemax_spec)
    term = [MaxGenerations(30)]
    a = run(onemax_spec, x0, term)
    b = run_universal(onemax_spec.encode(), x0, term)
    assert a == b
    assert a.to_csv() == b.to_csv() and a.summary_json() == b.summary_json()


def test_universal_rejects_tampered_encoding(onemax_spec):
    raw = json.loads(onemax_spec.encode())
    raw["surprise"] = 1
    with pytest.raises(DecodeError):
        run_universal(json.dumps(raw), initial_population(onemax_spec), [MaxGenerations(1)])
    raw = json.loads(onemax_spec.encode())
    raw["variation"]["kind"] = "teleport"
    with pytest.raises(DecodeError):
        run_universal(json.dumps(raw), initial_population(onemax_spec), [MaxGenerations(1)])
    with pytest.raises(DecodeError):
        run_universal("{not json", initial_population(onemax_spec), [MaxGenerations(1)])


def test_universal_key_order_irrelevant(onemax_spec):
    raw = json.loads(onemax_spec.encode())

    def reverse(v):
        if isinstance(v, dict):
            return {k: reverse(v[k]) for k in reversed(list(v))}
        if isinstance(v, list):
            return [reverse(x) for x in v]
        return v

    permuted = json.dumps(reverse(raw), indent=3)
    assert permuted != onemax_spec.encode()
    x0 = initial_population(onemax_spec)
    assert run_universal(permuted, x0, [MaxGenerations(10)]) == run_universal(onemax_spec.encode(), x0, [MaxGenerations(10)])


def test_spec_roundtrip_coerces_numbers():
    spec = AlgorithmSpec(BitStringRep(5), 4, BitFlip(0.0), Tournament(2), KnapsackPenalty((1, 2, 3, 4, 5), (5, 4, 3, 2, 1), 6, 2))
    back = decode_spec(spec.encode())
    assert back == spec and back.encode() == spec.encode()
    assert decode_spec(spec.encode().replace('"rate":0.0', '"rate":0')) == spec


def test_detect_inductive_examples():
    r = detect_inductive_result([3.0] * 6, 5)
    assert (r.t0, r.emitted_at) == (0, 5)
    assert detect_inductive_result([float(10 - t) for t in range(10)], 1) is None
    values = [float(100 - t) for t in range(17)] + [83.0] * 20
    r = detect_inductive_result(values, 10)
    assert (r.t0, r.emitted_at) == (17, 27)
    assert detect_inductive_result([3.0] * 5, 5) is None


def test_run_emits_inductive_result_without_halting():
    spec = AlgorithmSpec(BitStringRep(8), 6, BitFlip(0.0), Truncation(1.0, True), OneMaxMin(8), inductive_window=5)
    tr = run(spec, initial_population(spec), [MaxGenerations(20)])
    assert tr.records[-1].t == 20
    assert [r.t for r in tr.records if r.inductive_flag] == [5]
    assert (tr.inductive_result.t0, tr.inductive_result.emitted_at) == (0, 5)


def test_run_inductive_matches_detector_and_improves(onemax_spec):
    spec = replace(onemax_spec, inductive_window=3, variation=BitFlip(0.05))
    for s in range(10):
        sp = spec.with_seed(s)
        tr = run(sp, initial_population(sp), [MaxGenerations(80)])
        vals = tr.best_values
        det = detect_inductive_result(vals, 3, [r.best_genome for r in tr.records])
        assert (det is None) == (tr.inductive_result is None)
        if det is not None:
            assert det == tr.inductive_result
        emitted = [r.best_f3 for r in tr.records if r.inductive_flag]
        assert emitted == sorted(emitted, reverse=True)
        for r in tr.records:
            if r.inductive_flag:
                assert all(later.best_f3 <= r.best_f3 for later in tr.records[r.t:])


def test_self_adaptive_run_keeps_strategy_in_bounds():
    ext = SelfAdaptation(True, 0.1, 0.02, 0.3, 0.3)
    spec = AlgorithmSpec(BitStringRep(12), 10, BitFlip(0.1), Tournament(2, True), OneMaxMin(12), self_adaptation=ext)
    tr = run(spec, initial_population(spec), [MaxGenerations(30)], weighted=True)
    for r in tr.records:
        for g, _ in r.pairs:
            assert len(g.strategy) == 1 and 0.02 <= g.strategy[0] <= 0.3
    assert classify_computation(spec, [Horizon(30)]) == ComputationClass.META


def test_real_vector_run():
    spec = AlgorithmSpec(
        RealVectorRep((-5.0,) * 3, (5.0,) * 3), 10, GaussianMutation(0.5), Tournament(2, True), Sphere((-5.0,) * 3, (5.0,) * 3)
    )
    tr = run(spec, initial_population(spec), [MaxGenerations(60)])
    assert tr.records[-1].best_f3 < tr.records[0].best_f3


def test_csv_and_summary_format(onemax_spec):
    tr = run(onemax_spec, initial_population(onemax_spec), [MaxGenerations(2)])
    lines = tr.to_csv().split("\n")
    assert lines[0] == "t,best_f3,mean_f3,evaluations,inductive_flag"
    assert lines[1].startswith("0,") and lines[-1] == ""
    s = tr.summary()
    assert s["halt_reason"] == "MaxGenerations" and s["computation_class"] == "1a"
    assert codec.decode(s["spec"], AlgorithmSpec) == onemax_spec


def test_classifier_examples(onemax_spec):
    assert classify_computation(onemax_spec, [MaxGenerations(100)]) == ComputationClass.BOUNDED_RECURSIVE
    assert classify_computation(onemax_spec, [Stagnation(20), Horizon(10_000, open=True)]) == ComputationClass.UNBOUNDED_RECURSIVE
    assert classify_computation(onemax_spec, [OptimumReached(0.0), Horizon(10_000, open=True)]) == ComputationClass.UNBOUNDED_LIMIT
