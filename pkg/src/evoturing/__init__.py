"""Evolutionary Turing machine engine with convergence, cooperation and competition analysis."""

from .engine import (
    AlgorithmSpec,
    ComputationClass,
    Horizon,
    MaxGenerations,
    OptimumReached,
    RunTrace,
    Stagnation,
    classify_computation,
    detect_inductive_result,
    initial_population,
    run,
    run_universal,
    step,
)
from .objectives import (
    KnapsackPenalty,
    OneMaxMin,
    Pareto,
    Product,
    SearchCost,
    Sphere,
    TspTour,
    WeightedSum,
    aggregate,
    best_of_population,
    brute_force_optimum,
    evaluate,
    search_cost_value,
)
from .operators import (
    BitFlip,
    GaussianMutation,
    OnePointCrossover,
    Proportional,
    SelfAdaptation,
    SwapMutation,
    Tournament,
    Truncation,
    apply_self_adaptation,
    select,
    vary,
)
from .petm import (
    MinCombiner,
    ParallelSpec,
    Submachine,
    SumCombiner,
    WeightedCombiner,
    classify_interaction,
    joint_fitness,
    parallel_step,
    run_parallel,
)
from .rng import Streams
from .space import (
    BitString,
    BitStringRep,
    OptimalSet,
    Permutation,
    PermutationRep,
    Population,
    RealVector,
    RealVectorRep,
    distance,
    distance_to_set,
    init_population,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmSpec",
    "BitFlip",
    "BitString",
    "BitStringRep",
    "ComputationClass",
    "GaussianMutation",
    "Horizon",
    "KnapsackPenalty",
    "MaxGenerations",
    "MinCombiner",
    "OneMaxMin",
    "OnePointCrossover",
    "OptimalSet",
    "OptimumReached",
    "ParallelSpec",
    "Pareto",
    "Permutation",
    "PermutationRep",
    "Population",
    "Product",
    "Proportional",
    "RealVector",
    "RealVectorRep",
    "RunTrace",
    "SearchCost",
    "SelfAdaptation",
    "Sphere",
    "Stagnation",
    "Streams",
    "Submachine",
    "SumCombiner",
    "SwapMutation",
    "Tournament",
    "Truncation",
    "TspTour",
    "WeightedCombiner",
    "WeightedSum",
    "aggregate",
    "apply_self_adaptation",
    "best_of_population",
    "brute_force_optimum",
    "classify_computation",
    "classify_interaction",
    "detect_inductive_result",
    "distance",
    "distance_to_set",
    "evaluate",
    "init_population",
    "initial_population",
    "joint_fitness",
    "parallel_step",
    "run",
    "run_parallel",
    "run_universal",
    "search_cost_value",
    "select",
    "step",
    "vary",
]
