"""Experiment runner: one JSON config per invocation.

Exit codes: 0 success, 1 theorem threshold violated, 2 configuration error,
3 runtime or oracle error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import jsonschema

from . import codec
from .analysis import (
    check_theorem_6_2_6_3,
    check_theorem_7_1_7_2,
    convergence_verdict,
    resolve_target,
)
from .codec import register
from .engine import AlgorithmSpec, TerminationCondition, check_termination, initial_population, run
from .errors import ConfigurationError, DecodeError, EvoTuringError, OracleRefused
from .objectives import ObjectiveSpec, brute_force_optimum
from .petm import ParallelSpec, run_parallel
from .space import OptimalSet, init_population

EXIT_OK, EXIT_THRESHOLD, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
MODES = ("run", "parallel-run", "oracle", "analyze", "theorem-check")


@register("oracle_target")
@dataclass(frozen=True)
class OracleTarget:
    """Optimum obtained from the brute-force oracle (declared analytically for Sphere)."""


@register("declared_target")
@dataclass(frozen=True)
class DeclaredTarget:
    optimum_value: float


@register("experiment")
@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    algorithm: AlgorithmSpec | None = None
    parallel: ParallelSpec | None = None
    objective: ObjectiveSpec | None = None
    control: AlgorithmSpec | None = None
    termination: tuple[TerminationCondition, ...] = ()
    seeds: tuple[int, ...] = ()
    seed_range: tuple[int, int] | None = None
    target: OracleTarget | DeclaredTarget | None = None
    theorem: str | None = None
    horizon: int = 5000
    competitive_horizon: int | None = None
    control_horizon: int | None = None
    linger: int = 100
    fixtures: str | None = None
    traces: tuple[str, ...] = ()
    error_bound: float | None = None
    eps_grid: tuple[float, ...] = ()
    schema_version: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")

    def seed_list(self) -> list[int]:
        seeds = list(self.seeds)
        if self.seed_range is not None:
            lo, hi = self.seed_range
            seeds.extend(range(lo, hi + 1))
        return seeds or [0]


def load_schema() -> dict:
    return json.loads(resources.files("evoturing").joinpath("data/experiment.schema.json").read_text())


def _line_of(text: str, token: str | None) -> int:
    if token:
        needle = f'"{token}"'
        for i, line in enumerate(text.splitlines(), 1):
            if needle in line:
                return i
    return 1


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Strictly parse a config; errors are reported as ``source:line: message``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        keys = [p for p in exc.absolute_path if isinstance(p, str)]
        token = keys[-1] if keys else None
        m = re.search(r"\('([^']+)' was unexpected\)", exc.message)
        if m:
            token = m.group(1)
        raise ConfigurationError(f"{source}:{_line_of(text, token)}: {exc.message}") from exc
    raw = dict(raw, kind="experiment")
    try:
        return codec.decode(raw, ExperimentConfig)
    except DecodeError as exc:
        msg = str(exc)
        m = re.search(r"field\(s\) ([\w, ]+) for", msg) or re.search(r"field '(\w+)'", msg)
        token = m.group(1).split(",")[0].strip() if m else msg.split(":")[0].rsplit(".", 1)[-1].split("[")[0]
        raise ConfigurationError(f"{source}:{_line_of(text, token)}: {msg}") from exc


def parse_seeds(text: str) -> list[int]:
    """``"0..4"`` (inclusive) or ``"0,3,7"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad --seeds value {text!r}") from exc


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _target(cfg: ExperimentConfig, objective) -> OptimalSet | None:
    if cfg.target is None:
        return None
    if isinstance(cfg.target, DeclaredTarget):
        return OptimalSet(cfg.target.optimum_value)
    return resolve_target(objective)


def _run_one(args):
    kind, spec, term, seed = args
    if kind == "run":
        s = spec.with_seed(seed)
        return run(s, initial_population(s), term)
    p = spec.with_seed(seed)
    sub = p.submachines[0].spec
    strategy = (sub.self_adaptation.initial,) if sub.self_adaptation.enabled else ()
    return run_parallel(p, init_population(p.representation, p.population_size, seed, strategy), term)


def _map(fn, items):
    items = list(items)
    workers = min(len(items), os.cpu_count() or 1)
    if workers <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_run(cfg: ExperimentConfig, out: Path) -> int:
    parallel = cfg.mode == "parallel-run"
    spec = cfg.parallel if parallel else cfg.algorithm
    if spec is None:
        raise ConfigurationError(f"mode {cfg.mode!r} needs {'parallel' if parallel else 'algorithm'}")
    term = check_termination(cfg.termination)
    objective = spec.submachines[0].spec.objective if parallel else spec.objective
    target = _target(cfg, objective)
    seeds = cfg.seed_list()
    traces = _map(_run_one, [("parallel" if parallel else "run", spec, term, s) for s in seeds])
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for s, tr in zip(seeds, traces):
        _write(out / f"trace_seed{s}.csv", tr.to_csv())
        entry = {"seed": s, **tr.summary()}
        del entry["spec"], entry["termination"]
        if target is not None:
            entry["verdict"] = convergence_verdict(tr, target, cfg.error_bound, cfg.eps_grid or None).to_json()
        runs.append(entry)
    summary = {
        "schema_version": 1,
        "mode": cfg.mode,
        "spec": codec.encode(spec),
        "termination": codec.encode(list(term)),
        "target": None if target is None else target.to_json(),
        "runs": runs,
    }
    _write(out / "summary.json", _dump(summary))
    return EXIT_OK


def cmd_oracle(cfg: ExperimentConfig, out: Path) -> int:
    objective = cfg.objective or (cfg.algorithm.objective if cfg.algorithm else None)
    if objective is None:
        raise ConfigurationError("oracle mode needs an objective or an algorithm")
    opt = brute_force_optimum(objective)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "oracle.json", _dump({"schema_version": 1, "objective": codec.encode(objective), **opt.to_json()}))
    return EXIT_OK


def _read_best(path: Path) -> list[float]:
    with open(path, newline="") as fh:
        return [float(row["best_f3"]) for row in csv.DictReader(fh)]


def cmd_analyze(cfg: ExperimentConfig, out: Path, base: Path) -> int:
    if not cfg.traces:
        raise ConfigurationError("analyze mode needs at least one trace path")
    objective = cfg.objective or (cfg.algorithm.objective if cfg.algorithm else None)
    if isinstance(cfg.target, DeclaredTarget):
        optimum = cfg.target.optimum_value
    elif objective is not None:
        optimum = resolve_target(objective).optimum_value
    else:
        raise ConfigurationError("analyze mode needs a declared target or an objective")
    results = []
    for name in cfg.traces:
        d = [abs(v - optimum) for v in _read_best(base / name)]
        rates = [a - b for a, b in zip(d, d[1:])]
        verdict = convergence_verdict(d, None, cfg.error_bound, cfg.eps_grid or None)
        results.append({"trace": name, "verdict": verdict.to_json(), "rates": rates, "distance": d})
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "analysis.json", _dump({"schema_version": 1, "optimum_value": optimum, "results": results}))
    return EXIT_OK


def cmd_theorem_check(cfg: ExperimentConfig, out: Path, base: Path, pilot: bool) -> int:
    fixtures_path = base / (cfg.fixtures or "fixtures.json")
    fixtures = None
    if not pilot and fixtures_path.exists():
        fixtures = json.loads(fixtures_path.read_text())
    pilot = fixtures is None
    seeds = cfg.seed_list()
    if cfg.theorem == "6.2-6.3":
        if cfg.algorithm is None:
            raise ConfigurationError("theorem 6.2-6.3 needs an algorithm")
        threshold = None if pilot else fixtures["6.2-optimality"]["threshold"]
        reports = check_theorem_6_2_6_3(
            cfg.algorithm.objective, cfg.algorithm, seeds, cfg.horizon, _target(cfg, cfg.algorithm.objective),
            cfg.control, cfg.linger, threshold, cfg.control_horizon,
        )
    elif cfg.theorem == "7.1-7.2":
        if cfg.parallel is None:
            raise ConfigurationError("theorem 7.1-7.2 needs a parallel spec")
        threshold = None if pilot else fixtures["7.1-cooperative"]["threshold"]
        objective = cfg.parallel.submachines[0].spec.objective
        reports = check_theorem_7_1_7_2(
            cfg.parallel, seeds, cfg.horizon, _target(cfg, objective), cfg.linger, threshold, cfg.competitive_horizon,
        )
    else:
        raise ConfigurationError("theorem must be '6.2-6.3' or '7.1-7.2'")
    out.mkdir(parents=True, exist_ok=True)
    for r in reports:
        r.pilot = pilot
    if pilot:
        frozen = {r.theorem: {"threshold": r.hit_rate, "pilot_hit_rate": r.hit_rate, "seeds": r.seeds} for r in reports}
        _write(fixtures_path, _dump({"schema_version": 1, **frozen}))
    _write(out / "theorem_report.json", _dump({"schema_version": 1, "reports": [r.to_json() for r in reports]}))
    if pilot:
        return EXIT_OK
    return EXIT_OK if all(r.verdict == "pass" for r in reports) else EXIT_THRESHOLD


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="evoturing", description=__doc__.splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("config", type=Path)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--seeds", help="override seeds: '0..4' (inclusive) or '0,1,7'")
    parser.add_argument("--pilot", action="store_true", help="theorem-check: ignore fixtures and freeze new ones")
    args = parser.parse_args(argv)
    try:
        text = args.config.read_text()
        cfg = parse_config(text, str(args.config))
        if cfg.mode != args.mode:
            raise ConfigurationError(f"{args.config}:{_line_of(text, 'mode')}: config mode {cfg.mode!r} != {args.mode!r}")
        if args.seeds:
            cfg = replace(cfg, seeds=tuple(parse_seeds(args.seeds)), seed_range=None)
        base = args.config.parent
        if cfg.mode in ("run", "parallel-run"):
            return cmd_run(cfg, args.out)
        if cfg.mode == "oracle":
            return cmd_oracle(cfg, args.out)
        if cfg.mode == "analyze":
            return cmd_analyze(cfg, args.out, base)
        return cmd_theorem_check(cfg, args.out, base, args.pilot)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if not args.config.exists() else EXIT_RUNTIME
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OracleRefused as exc:
        print(f"oracle refused: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EvoTuringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
