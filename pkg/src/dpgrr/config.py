"""Experiment configuration: YAML schema, canonical hashing, problem assembly.

A config file fully determines a reproducible experiment.  The canonical
hash covers exactly the semantic fields (with defaults materialized), so
reformatting or reordering a file never changes the hash while any
meaningful edit does.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .dataio import parse_libsvm, partition, synthesize_classification, Partition
from .engine import ProblemBundle, StepRule
from .netgraph import GraphSchedule, StepsMode, metropolis_weights
from .objectives import SmoothLossKind
from .proxops import RegKind, Regularizer

__all__ = [
    "ConfigError",
    "SyntheticSpec",
    "LibsvmSpec",
    "GraphSpec",
    "AlgoSpec",
    "Diagnostics",
    "ExperimentConfig",
    "load_config",
    "canonical_dict",
    "config_hash",
    "problem_hash",
    "build_schedule",
    "build_problem",
]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    m: int
    n: int
    d: int
    seed: int
    separation: float = 5.0


@dataclass(frozen=True)
class LibsvmSpec:
    path: str
    m: int
    strategy: str = "round_robin"
    shuffle_seed: int | None = None


@dataclass(frozen=True)
class GraphSpec:
    slots: tuple[tuple[tuple[int, int], ...], ...]
    eta: float
    window: int
    steps_mode: StepsMode


@dataclass(frozen=True)
class AlgoSpec:
    name: str
    step: StepRule


@dataclass(frozen=True)
class Diagnostics:
    record_v: bool = False
    record_sigma_star: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: SyntheticSpec | LibsvmSpec
    loss: SmoothLossKind
    regularizer: Regularizer
    graph: GraphSpec
    algorithms: tuple[AlgoSpec, ...]
    horizon: int
    seeds: tuple[int, ...]
    output_dir: str
    snapshot_cadence: int | None = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    enforce_step_bound: bool = True
    least_squares_radius: float = 10.0
    x0: float = 0.0
    fixtures: str = "fixtures/oracle.json"
    base_dir: Path = Path(".")

    @property
    def m(self) -> int:
        return self.dataset.m

    def fixtures_path(self) -> Path:
        return self.base_dir / self.fixtures


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _parse_steps_mode(raw, where: str) -> StepsMode:
    if raw == "growing" or raw is None:
        return StepsMode.growing()
    if isinstance(raw, dict) and set(raw) == {"fixed"}:
        return StepsMode.fixed(int(raw["fixed"]))
    raise ConfigError(f"{where}: steps_mode must be 'growing' or {{fixed: K}}")


def _parse_step(raw: dict, where: str) -> StepRule:
    rule = _require(raw, "rule", where)
    try:
        if rule == "constant":
            return StepRule.constant(float(_require(raw, "gamma", where)))
        if rule == "sqrt_horizon":
            scale = raw.get("scale")
            return StepRule.sqrt_horizon(None if scale is None else float(scale))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown step rule {rule!r}")


def _parse_regularizer(raw: dict) -> Regularizer:
    kind = _require(raw, "kind", "regularizer")
    try:
        kind = RegKind(kind)
    except ValueError:
        raise ConfigError(f"regularizer: unknown kind {kind!r}") from None
    lam = float(raw.get("lam", 0.0))
    if kind is not RegKind.ZERO and "lam" not in raw:
        raise ConfigError("regularizer: non-zero kinds need 'lam'")
    return Regularizer(kind, lam)


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    with path.open() as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    ds_raw = _require(raw, "dataset", str(path))
    if not isinstance(ds_raw, dict):
        raise ConfigError("dataset: must be a mapping")
    if "synthetic" in ds_raw and "libsvm" in ds_raw:
        raise ConfigError("dataset: give either 'synthetic' or 'libsvm', not both")
    if "synthetic" in ds_raw:
        s = ds_raw["synthetic"]
        sep = s.get("separation", 5.0)
        dataset = SyntheticSpec(
            m=int(_require(s, "m", "dataset.synthetic")),
            n=int(_require(s, "n", "dataset.synthetic")),
            d=int(_require(s, "d", "dataset.synthetic")),
            seed=int(_require(s, "seed", "dataset.synthetic")),
            separation=math.inf if sep in ("inf", ".inf") else float(sep),
        )
    elif "libsvm" in ds_raw:
        s = ds_raw["libsvm"]
        shuffle = s.get("shuffle_seed")
        dataset = LibsvmSpec(
            path=str(_require(s, "path", "dataset.libsvm")),
            m=int(_require(s, "m", "dataset.libsvm")),
            strategy=str(s.get("strategy", "round_robin")),
            shuffle_seed=None if shuffle is None else int(shuffle),
        )
    else:
        raise ConfigError("dataset: need a 'synthetic' or 'libsvm' entry")

    loss_raw = _require(raw, "loss", str(path))
    try:
        loss = SmoothLossKind(loss_raw)
    except ValueError:
        raise ConfigError(f"unknown loss {loss_raw!r}") from None

    graph_raw = _require(raw, "graph", str(path))
    slots_raw = _require(graph_raw, "slots", "graph")
    if not slots_raw:
        raise ConfigError("graph: need at least one slot")
    slots = tuple(
        tuple((int(i), int(j)) for i, j in slot) for slot in slots_raw
    )
    graph = GraphSpec(
        slots=slots,
        eta=float(_require(graph_raw, "eta", "graph")),
        window=int(_require(graph_raw, "B", "graph")),
        steps_mode=_parse_steps_mode(graph_raw.get("steps_mode"), "graph"),
    )

    algos_raw = _require(raw, "algorithms", str(path))
    if not algos_raw:
        raise ConfigError("need at least one algorithm")
    algorithms = tuple(
        AlgoSpec(
            name=str(_require(a, "name", "algorithms")).lower(),
            step=_parse_step(_require(a, "step", "algorithms"), "algorithms.step"),
        )
        for a in algos_raw
    )

    seeds_raw = raw.get("seeds", [0])
    seeds = tuple(int(s) for s in seeds_raw)
    if not seeds:
        raise ConfigError("seeds must be nonempty")

    diag_raw = raw.get("diagnostics", {}) or {}
    cadence = raw.get("snapshot_cadence")

    cfg = ExperimentConfig(
        dataset=dataset,
        loss=loss,
        regularizer=_parse_regularizer(_require(raw, "regularizer", str(path))),
        graph=graph,
        algorithms=algorithms,
        horizon=int(_require(raw, "T", str(path))),
        seeds=seeds,
        output_dir=str(raw.get("output_dir", "out")),
        snapshot_cadence=None if cadence is None else int(cadence),
        diagnostics=Diagnostics(
            record_v=bool(diag_raw.get("record_v", False)),
            record_sigma_star=bool(diag_raw.get("record_sigma_star", False)),
        ),
        enforce_step_bound=bool(raw.get("enforce_step_bound", True)),
        least_squares_radius=float(raw.get("least_squares_radius", 10.0)),
        x0=float(raw.get("x0", 0.0)),
        fixtures=str(raw.get("fixtures", "fixtures/oracle.json")),
        base_dir=path.resolve().parent,
    )
    if cfg.horizon < 0:
        raise ConfigError("T must be >= 0")
    return cfg


def _dataset_dict(cfg: ExperimentConfig) -> dict:
    if isinstance(cfg.dataset, SyntheticSpec):
        d = cfg.dataset
        return {
            "synthetic": {
                "m": d.m, "n": d.n, "d": d.d, "seed": d.seed,
                "separation": "inf" if d.separation == math.inf else d.separation,
            }
        }
    d = cfg.dataset
    return {
        "libsvm": {
            "path": d.path, "m": d.m, "strategy": d.strategy,
            "shuffle_seed": d.shuffle_seed,
        }
    }


def _problem_dict(cfg: ExperimentConfig) -> dict:
    return {
        "dataset": _dataset_dict(cfg),
        "loss": cfg.loss.value,
        "regularizer": {"kind": cfg.regularizer.kind.value, "lam": cfg.regularizer.lam},
    }


def canonical_dict(cfg: ExperimentConfig) -> dict:
    """Every semantic field with defaults materialized; paths excluded."""
    mode = cfg.graph.steps_mode
    return {
        **_problem_dict(cfg),
        "graph": {
            "slots": [[list(e) for e in slot] for slot in cfg.graph.slots],
            "eta": cfg.graph.eta,
            "B": cfg.graph.window,
            "steps_mode": mode.kind if mode.kind == "growing" else {"fixed": mode.k},
        },
        "algorithms": [
            {
                "name": a.name,
                "step": {"rule": a.step.rule, "gamma": a.step.gamma,
                         "scale": a.step.scale},
            }
            for a in cfg.algorithms
        ],
        "T": cfg.horizon,
        "seeds": list(cfg.seeds),
        "snapshot_cadence": cfg.snapshot_cadence,
        "diagnostics": {
            "record_v": cfg.diagnostics.record_v,
            "record_sigma_star": cfg.diagnostics.record_sigma_star,
        },
        "enforce_step_bound": cfg.enforce_step_bound,
        "least_squares_radius": cfg.least_squares_radius,
        "x0": cfg.x0,
    }


def _digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def config_hash(cfg: ExperimentConfig) -> str:
    return _digest(canonical_dict(cfg))


def problem_hash(cfg: ExperimentConfig) -> str:
    """Hash of the fields that determine the optimal value (data + objective)."""
    return _digest(_problem_dict(cfg))


def build_schedule(graph: GraphSpec, m: int) -> GraphSchedule:
    matrices = tuple(
        metropolis_weights(slot, m, graph.eta) for slot in graph.slots
    )
    return GraphSchedule(matrices, graph.window)


def build_problem(
    cfg: ExperimentConfig,
) -> tuple[ProblemBundle, Partition | None]:
    """Materialize datasets and schedule; fixture fields are left unset."""
    part = None
    if isinstance(cfg.dataset, SyntheticSpec):
        d = cfg.dataset
        datasets = synthesize_classification(d.m, d.n, d.d, d.separation, d.seed)
        if cfg.loss is not SmoothLossKind.LOGISTIC:
            raise ConfigError("synthetic datasets carry +-1 labels; use logistic loss")
    else:
        src = cfg.base_dir / cfg.dataset.path
        try:
            with open(src) as fh:
                samples, dim = parse_libsvm(
                    fh, classification=cfg.loss is SmoothLossKind.LOGISTIC
                )
        except OSError as exc:
            raise ConfigError(f"cannot read dataset {src}: {exc}") from None
        datasets, part = partition(
            samples, dim, cfg.dataset.m, cfg.dataset.strategy, cfg.dataset.shuffle_seed
        )
    schedule = build_schedule(cfg.graph, cfg.m)
    bundle = ProblemBundle(
        datasets=tuple(datasets),
        dim=datasets[0].dim,
        kind=cfg.loss,
        regularizer=cfg.regularizer,
        schedule=schedule,
    )
    return bundle, part
