import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evoturing.analysis import (
    check_transition_formula,
    compare_search_optimality,
    convergence_rate,
    convergence_verdict,
    expected_distances,
    first_hit,
    maintained_after_hit,
    non_optimal_population,
    resolve_target,
    trace_distances,
)
from evoturing.engine import AlgorithmSpec, MaxGenerations, initial_population, run
from evoturing.errors import AnalysisError
from evoturing.objectives import OneMaxMin, Sphere, attains
from evoturing.operators import BitFlip, GaussianMutation, Tournament
from evoturing.space import BitStringRep, OptimalSet, RealVectorRep


def onemax_trace(seed=0, gens=40, elitism=True):
    spec = AlgorithmSpec(BitStringRep(10), 10, BitFlip(0.1), Tournament(2, elitism), OneMaxMin(10), master_seed=seed)
    return run(spec, initial_population(spec), [MaxGenerations(gens)])


def test_rate_examples():
    tr = onemax_trace()
    target = OptimalSet(0.0)
    d = trace_distances(tr, target)
    for t in range(len(d) - 1):
        assert convergence_rate(tr, target, t) == d[t] - d[t + 1]
    crafted = replace(tr, records=tuple(replace(r, best_f3=v) for r, v in zip(tr.records, (5.0, 3.0, 3.0))))
    assert convergence_rate(crafted, target, 0) == 2.0
    assert convergence_rate(crafted, target, 1) == 0.0
    with pytest.raises(AnalysisError):
        convergence_rate(tr, target, len(d) - 1)
    with pytest.raises(AnalysisError):
        convergence_rate(tr, target, -1)


@pytest.mark.parametrize("seed", range(5))
def test_telescoping(seed):
    for elitism in (True, False):
        tr = onemax_trace(seed, 60, elitism)
        target = resolve_target(tr.spec.objective)
        d = trace_distances(tr, target)
        total = math.fsum(convergence_rate(tr, target, t) for t in range(len(d) - 1))
        assert abs(total - (d[0] - d[-1])) <= 1e-12


def test_telescoping_real_valued():
    rep = RealVectorRep((-3.0,) * 4, (3.0,) * 4)
    spec = AlgorithmSpec(rep, 8, GaussianMutation(0.3), Tournament(2, True), Sphere(rep.lo, rep.hi))
    tr = run(spec, initial_population(spec), [MaxGenerations(50)])
    target = resolve_target(spec.objective)
    d = trace_distances(tr, target)
    total = math.fsum(convergence_rate(tr, target, t) for t in range(len(d) - 1))
    assert abs(total - (d[0] - d[-1])) <= 1e-12


def test_verdict_examples():
    d = [float(20 - t) for t in range(12)] + [0.0] * 89
    v = convergence_verdict(d)
    assert (v.kind, v.tau, v.horizon) == ("convergent", 12, 100)
    d = [10.0 / (t + 1) for t in range(1001)]
    v = convergence_verdict(d, eps_grid=[1.0, 0.1, 0.05])
    assert v.kind == "asymptotic_evidence"
    assert dict(v.eps_taus) == {1.0: 9, 0.1: 99, 0.05: 199}
    v = convergence_verdict([5.0] * 50, r=6.0)
    assert (v.kind, v.tau, v.r) == ("convergent_with_error", 0, 6.0)
    assert convergence_verdict([5.0] * 50, r=4.0).kind == "divergent"
    assert convergence_verdict([0.0, 1.0]).kind == "divergent"
    assert convergence_verdict([3.0, 0.0, 1.0, 0.0]).tau == 3


def test_verdict_independent_oracle_for_eps():
    # smallest t with 10/(t+1) <= eps is ceil(10/eps) - 1
    for eps in (2.0, 0.5, 0.3, 0.07):
        t = convergence_verdict([10.0 / (t + 1) for t in range(2000)], eps_grid=[eps]).eps_taus[0][1]
        assert t == math.ceil(10.0 / eps) - 1


@given(st.lists(st.integers(0, 4).map(float), min_size=1, max_size=40), st.floats(0, 10), st.lists(st.floats(0.01, 5), max_size=4))
def test_verdict_monotonicity(d, r, grid):
    v = convergence_verdict(d)
    if v.kind == "convergent":
        vr = convergence_verdict(d, r=r)
        assert vr.kind == "convergent" and vr.tau == v.tau
        tau = v.tau
        assert all(x == 0 for x in d[tau:])
        for eps in grid:
            assert all(x <= eps for x in d[tau:])
    else:
        w = convergence_verdict(d, r=r)
        if w.kind == "convergent_with_error":
            assert all(x <= r for x in d[w.tau:])
            assert w.tau == 0 or d[w.tau - 1] > r


def test_verdict_pure_reanalysis():
    tr = onemax_trace(3)
    target = resolve_target(tr.spec.objective)
    a = convergence_verdict(tr, target, r=1.0, eps_grid=[2.0, 1.0])
    b = convergence_verdict(tr, target, r=1.0, eps_grid=[2.0, 1.0])
    assert a == b and a.to_json() == b.to_json()
    assert a.scope.startswith("empirical")


def test_expected_distance_pads_halted_runs():
    a, b = onemax_trace(0, 5), onemax_trace(1, 9)
    target = OptimalSet(0.0)
    exp = expected_distances([a, b], target)
    da, db = trace_distances(a, target), trace_distances(b, target)
    assert len(exp) == 10
    assert exp[-1] == (da[-1] + db[-1]) / 2
    assert convergence_verdict([a, b], target).horizon == 9
    with pytest.raises(AnalysisError):
        expected_distances([], target)


def test_elitist_maintenance_on_traces():
    target = OptimalSet(0.0)
    for s in range(10):
        tr = onemax_trace(s, 150)
        h = first_hit(tr, target)
        if h is not None:
            assert maintained_after_hit(tr, target)
            assert all(r.best_f3 == 0 for r in tr.records[h:])


def test_non_optimal_population_and_transition_formula(tsp4):
    target = resolve_target(tsp4)
    pop = non_optimal_population(tsp4.representation(), 8, 0, tsp4, target)
    assert len(pop) == 8
    assert not any(attains(tsp4, tsp4.evaluate(g), target.optimum_value) for g in pop.members)
    assert check_transition_formula() <= 1e-12


def test_compare_search_optimality():
    fast = AlgorithmSpec(BitStringRep(8), 10, BitFlip(0.125), Tournament(2, True), OneMaxMin(8))
    slow = AlgorithmSpec(BitStringRep(8), 10, BitFlip(0.01), Tournament(2, True), OneMaxMin(8))
    out = compare_search_optimality([slow, fast], range(5), 300)
    assert out["search_optimal_index"] == 1
    assert out["table"][1]["mean_f2"] < out["table"][0]["mean_f2"]
