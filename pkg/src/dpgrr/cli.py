"""Experiment runner CLI: validate a config, precompute oracles, run algorithms.

Subcommands
    run       execute every configured algorithm/seed, write CSV metrics
              and a manifest into the output directory
    validate  check the mixing matrices, connectivity windows, and step
              bounds; exit 0 only if everything passes
    oracle    solve the centralized problem to high accuracy and record
              the certified optimal value in the fixtures store
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import sys
from pathlib import Path

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    LibsvmSpec,
    build_problem,
    canonical_dict,
    config_hash,
    load_config,
    problem_hash,
)
from .engine import (
    ProblemBundle,
    RunConfig,
    RunTrace,
    StepBoundViolation,
    run,
    step_scale_bound,
)
from .netgraph import validate_schedule
from .objectives import gradient_bound, lipschitz_constant
from .reference import fixture_x_star, load_fixtures, solve_centralized, store_fixture

CSV_HEADER = "epoch,F_bar,F_hat,subopt,D,max_consensus_dist,sigma_star_sq,V_t"

ORACLE_TOL = 1e-10


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def write_metrics_csv(path: Path, trace: RunTrace) -> None:
    lines = [CSV_HEADER]
    for row in trace.rows:
        lines.append(
            ",".join(
                [
                    str(row.epoch),
                    _fmt(row.f_bar),
                    _fmt(row.f_hat),
                    _fmt(row.suboptimality),
                    _fmt(row.disagreement),
                    _fmt(row.max_consensus_dist),
                    _fmt(row.sigma_star_sq),
                    _fmt(row.forward_deviation),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def _csv_name(algo: str, seed: int, multi_seed: bool) -> str:
    base = algo.replace("-", "_")
    return f"{base}_seed{seed}_metrics.csv" if multi_seed else f"{base}_metrics.csv"


def _step_bound_failures(cfg: ExperimentConfig, problem: ProblemBundle) -> list[str]:
    lipschitz = lipschitz_constant(problem.datasets, problem.kind)
    bound = step_scale_bound(lipschitz, problem.n)
    failures = []
    for algo in cfg.algorithms:
        if algo.step.rule == "sqrt_horizon" and algo.step.scale is not None:
            if algo.step.scale > bound * (1.0 + 1e-12):
                failures.append(
                    f"step-size bound: {algo.name} scale {algo.step.scale:g} "
                    f"exceeds {bound:g}"
                )
    return failures


def _validate(cfg: ExperimentConfig, problem: ProblemBundle, out) -> str | None:
    """Print validation results; return the first violated assumption, if any."""
    report = validate_schedule(problem.schedule)
    print(report.render(), file=out)
    first = report.first_failure()
    step_failures = _step_bound_failures(cfg, problem)
    lipschitz = lipschitz_constant(problem.datasets, problem.kind)
    print(
        f"step-size bound for sqrt rule: scale <= "
        f"{step_scale_bound(lipschitz, problem.n):.6g}",
        file=out,
    )
    for failure in step_failures:
        print(failure, file=out)
    if first is None and step_failures:
        first = step_failures[0]
    return first


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg)
    first = _validate(cfg, problem, sys.stdout)
    if first is not None:
        print(f"FAIL: {first}", file=sys.stderr)
        return 1
    print("PASS")
    return 0


def _resolve_f_star(cfg: ExperimentConfig, problem: ProblemBundle, need_x_star: bool):
    """Optimal value from the fixtures store, else computed on the fly."""
    key = problem_hash(cfg)
    fixtures_path = cfg.fixtures_path()
    fixtures = load_fixtures(fixtures_path)
    entry = fixtures.get(key)
    if entry is not None:
        x_star = fixture_x_star(fixtures_path, entry) if need_x_star else None
        return entry["f_star"], x_star, f"fixture:{key[:16]}"
    solution = solve_centralized(
        problem.datasets, problem.regularizer, problem.kind, tol=ORACLE_TOL
    )
    if not solution.converged:
        print(
            f"warning: oracle did not reach tol {ORACLE_TOL:g} "
            f"(mapping norm {solution.mapping_norm:g}); using best value",
            file=sys.stderr,
        )
    return solution.f_star, solution.x_star, f"computed(tol={ORACLE_TOL:g})"


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seeds=(args.seed,))
    out_dir = Path(args.output) if args.output else Path(cfg.output_dir)

    problem, part = build_problem(cfg)
    if part is not None and part.dropped:
        print(
            f"note: dropped {part.dropped} of {part.m * part.n + part.dropped} "
            f"samples to give every agent exactly {part.n}",
            file=sys.stderr,
        )
    first = _validate(cfg, problem, io.StringIO() if args.quiet else sys.stdout)
    if first is not None:
        print(f"FAIL: {first}", file=sys.stderr)
        return 1

    f_star, x_star, f_star_source = _resolve_f_star(
        cfg, problem, need_x_star=cfg.diagnostics.record_sigma_star
    )
    problem = ProblemBundle(
        datasets=problem.datasets,
        dim=problem.dim,
        kind=problem.kind,
        regularizer=problem.regularizer,
        schedule=problem.schedule,
        f_star=f_star,
        x_star=x_star,
    )

    out_dir.mkdir(parents=True, exist_ok=True)
    multi_seed = len(cfg.seeds) > 1
    files = {}
    try:
        for algo in cfg.algorithms:
            for seed in cfg.seeds:
                run_cfg = RunConfig(
                    algorithm=algo.name,
                    horizon=cfg.horizon,
                    step=algo.step,
                    steps_mode=cfg.graph.steps_mode,
                    seed=seed,
                    cadence=cfg.snapshot_cadence,
                    record_v=cfg.diagnostics.record_v,
                    record_sigma_star=cfg.diagnostics.record_sigma_star,
                    enforce_step_bound=cfg.enforce_step_bound,
                    x0=cfg.x0,
                )
                trace = run(run_cfg, problem)
                name = _csv_name(algo.name, seed, multi_seed)
                write_metrics_csv(out_dir / name, trace)
                files[f"{algo.name}/seed{seed}"] = name
                if not args.quiet:
                    final = trace.rows[-1]
                    sub = "" if final.suboptimality is None else f" subopt={final.suboptimality:.6g}"
                    print(f"{algo.name} seed={seed}: {len(trace.rows)} rows{sub}")
    except (StepBoundViolation, FloatingPointError, ValueError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    manifest = {
        "version": __version__,
        "config_hash": config_hash(cfg),
        "problem_hash": problem_hash(cfg),
        "config": canonical_dict(cfg),
        "L": lipschitz_constant(problem.datasets, problem.kind),
        "G_f": gradient_bound(
            problem.datasets, problem.kind, cfg.least_squares_radius
        ),
        "G_phi": problem.regularizer.subgradient_bound(problem.dim),
        "F_star": f_star,
        "F_star_source": f_star_source,
        "dropped_samples": 0 if part is None else part.dropped,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return 0


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    problem, _ = build_problem(cfg)
    key = problem_hash(cfg)
    fixtures_path = cfg.fixtures_path()
    existing = load_fixtures(fixtures_path).get(key)
    if existing is not None and existing["tol"] <= args.tol:
        if (fixtures_path.parent / existing["x_star_file"]).exists():
            print(f"fixture {key[:16]} already solved at tol {existing['tol']:g}")
            return 0
    solution = solve_centralized(
        problem.datasets, problem.regularizer, problem.kind, tol=args.tol
    )
    print(
        f"F* = {solution.f_star!r} (mapping norm {solution.mapping_norm:.3g}, "
        f"{solution.iterations} iterations)"
    )
    if not solution.converged:
        print(
            f"warning: tolerance {args.tol:g} not reached; best-effort value "
            "NOT stored",
            file=sys.stderr,
        )
        return 1
    store_fixture(fixtures_path, key, solution, args.tol)
    print(f"stored fixture {key[:16]} in {fixtures_path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dpgrr",
        description="Distributed proximal-gradient experiments over time-varying networks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run all configured algorithms and seeds")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--output", help="override the config's output directory")
    p_run.add_argument("--seed", type=int, help="run a single seed instead")
    p_run.add_argument("-q", "--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check network and step-size assumptions")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=cmd_validate)

    p_orc = sub.add_parser("oracle", help="precompute the certified optimal value")
    p_orc.add_argument("--config", required=True)
    p_orc.add_argument("--tol", type=float, default=ORACLE_TOL)
    p_orc.set_defaults(func=cmd_oracle)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
