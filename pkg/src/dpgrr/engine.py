"""Synchronous epoch engine for the distributed proximal-gradient algorithms.

One epoch of the proximal algorithms has three barrier-separated phases:

  1. every agent takes n local stochastic gradient steps following its
     epoch index sequence,
  2. all agents' phase-1 outputs are mixed through the epoch's consensus
     weights (a product of schedule matrices),
  3. every agent applies the proximal map of the shared penalty.

The three samplers (reshuffling / with-replacement / fixed-order) share
this single code path and differ only in the index sequence they draw.
The subgradient baseline replaces the whole epoch body: one single-matrix
mixing step followed by one full local subgradient step with a decaying
step size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import metrics as metrics_mod
from . import objectives
from .netgraph import GraphSchedule, StepsMode, ScheduleCursor
from .objectives import LocalDataset, SmoothLossKind, sample_value_grad
from .proxops import NonPositiveStep, Regularizer, prox, subgradient
from .sampling import Mode, SamplingSchedule, epoch_indices

__all__ = [
    "ALGORITHMS",
    "NonFiniteIterate",
    "StepBoundViolation",
    "step_scale_bound",
    "StepRule",
    "AgentState",
    "ProblemBundle",
    "RunConfig",
    "RunTrace",
    "run_epoch_dpgrr",
    "run_epoch_dgm",
    "run",
    "default_cadence",
]

ALGORITHMS = ("dpg-rr", "dpg-sg", "dpg-ig", "dgm")

_SAMPLER_FOR = {"dpg-rr": Mode.RR, "dpg-sg": Mode.SG, "dpg-ig": Mode.IG}


class NonFiniteIterate(FloatingPointError):
    """An iterate left the representable range; carries run context."""

    def __init__(self, agent: int, epoch: int, inner_step: int | None, phase: str):
        self.agent = agent
        self.epoch = epoch
        self.inner_step = inner_step
        self.phase = phase
        where = f"agent {agent}, epoch {epoch}, phase {phase}"
        if inner_step is not None:
            where += f", inner step {inner_step}"
        super().__init__(f"non-finite iterate at {where}")


class StepBoundViolation(ValueError):
    """The 1/sqrt(T) rule's scale exceeds its admissible bound."""


def step_scale_bound(lipschitz: float, n: int) -> float:
    """Largest admissible scale M of the gamma = M / sqrt(T) rule."""
    return math.sqrt(6.0) / (6.0 * lipschitz * n)


@dataclass(frozen=True)
class StepRule:
    """Either a constant step size or gamma = scale / sqrt(T)."""

    rule: str  # "constant" | "sqrt_horizon"
    gamma: float | None = None
    scale: float | None = None

    def __post_init__(self) -> None:
        if self.rule not in ("constant", "sqrt_horizon"):
            raise ValueError(f"unknown step rule {self.rule!r}")
        if self.rule == "constant" and (self.gamma is None or self.gamma <= 0.0):
            raise ValueError("constant rule needs gamma > 0")
        if self.rule == "sqrt_horizon" and self.scale is not None and self.scale <= 0:
            raise ValueError("sqrt_horizon scale must be > 0")

    @classmethod
    def constant(cls, gamma: float) -> "StepRule":
        return cls("constant", gamma=float(gamma))

    @classmethod
    def sqrt_horizon(cls, scale: float | None = None) -> "StepRule":
        return cls("sqrt_horizon", scale=None if scale is None else float(scale))

    def resolve(
        self, lipschitz: float, n: int, horizon: int, enforce_bound: bool = True
    ) -> float:
        """Concrete step size for a run of ``horizon`` epochs."""
        if self.rule == "constant":
            return self.gamma
        if horizon < 1:
            raise ValueError("sqrt_horizon rule needs horizon >= 1")
        bound = step_scale_bound(lipschitz, n)
        scale = bound if self.scale is None else self.scale
        if scale > bound * (1.0 + 1e-12):
            msg = f"step scale {scale:g} exceeds admissible bound {bound:g}"
            if enforce_bound:
                raise StepBoundViolation(msg)
            warnings.warn(msg, stacklevel=2)
        return scale / math.sqrt(horizon)


@dataclass
class AgentState:
    """One agent's current iterate, inner-loop iterate, and mixed estimate."""

    x: np.ndarray
    x_inner: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class ProblemBundle:
    """Everything a run needs besides the algorithm configuration."""

    datasets: tuple[LocalDataset, ...]
    dim: int
    kind: SmoothLossKind
    regularizer: Regularizer
    schedule: GraphSchedule
    f_star: float | None = None
    x_star: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(self.datasets))
        if not self.datasets:
            raise ValueError("problem needs at least one agent")
        n = self.datasets[0].n
        if any(ds.n != n for ds in self.datasets):
            raise ValueError("all agents must hold equally many samples")
        if self.schedule.m != len(self.datasets):
            raise ValueError(
                f"schedule is over {self.schedule.m} agents, data over {len(self.datasets)}"
            )

    @property
    def m(self) -> int:
        return len(self.datasets)

    @property
    def n(self) -> int:
        return self.datasets[0].n


@dataclass(frozen=True)
class RunConfig:
    """Algorithm selection and run-shaping knobs.

    ``cadence=None`` records every epoch up to 2000 epochs and about 2000
    evenly spaced rows beyond that.  ``share_agent_streams`` keys every
    agent's sampler identically (diagnostic use: symmetry tests).
    """

    algorithm: str
    horizon: int
    step: StepRule
    steps_mode: StepsMode = field(default_factory=StepsMode.growing)
    seed: int = 0
    cadence: int | None = None
    store_snapshots: bool = False
    record_v: bool = False
    record_sigma_star: bool = False
    enforce_step_bound: bool = True
    x0: float = 0.0
    share_agent_streams: bool = False

    def __post_init__(self) -> None:
        if self.algorithm.lower() not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.cadence is not None and self.cadence < 1:
            raise ValueError("cadence must be >= 1")


@dataclass
class RunTrace:
    """Recorded rows plus the per-record average and running-average iterates."""

    rows: list[metrics_mod.EpochMetrics]
    x_bar: dict[int, np.ndarray]
    x_hat: dict[int, np.ndarray]
    snapshots: dict[int, np.ndarray]
    gamma: float | None
    x_final: np.ndarray


def default_cadence(horizon: int) -> int:
    return 1 if horizon <= 2000 else math.ceil(horizon / 2000)


def _check_finite(vec: np.ndarray, agent: int, epoch: int, inner: int | None, phase: str):
    if not np.all(np.isfinite(vec)):
        raise NonFiniteIterate(agent, epoch, inner, phase)


def run_epoch_dpgrr(
    states: list[AgentState],
    datasets: tuple[LocalDataset, ...],
    kind: SmoothLossKind,
    reg: Regularizer,
    gamma: float,
    cursor: ScheduleCursor,
    samplers: list[SamplingSchedule],
    t: int,
    record_inner: bool = False,
) -> np.ndarray | None:
    """Advance all agents by one proximal epoch; returns inner averages if recorded.

    Phase 2 reads every agent's phase-1 output, so states are only
    published between phases; agents never see each other's mid-phase
    values, exactly as a barrier-synchronized parallel execution would.
    """
    if not gamma > 0.0:
        raise NonPositiveStep(f"epoch needs gamma > 0, got {gamma}")
    m = len(states)
    n = datasets[0].n
    dim = states[0].x.size
    inner_sum = np.zeros((n, dim)) if record_inner else None
    for j, (state, ds, sampler) in enumerate(zip(states, datasets, samplers)):
        x = state.x.copy()
        for i, sample_idx in enumerate(epoch_indices(sampler, t)):
            if record_inner:
                inner_sum[i] += x
            _, grad = sample_value_grad(kind, ds.samples[sample_idx], x)
            x -= gamma * grad
            _check_finite(x, j, t, i, "inner")
        state.x_inner = x
    weights = cursor.weights_for_epoch(t).weights
    mixed = weights @ np.stack([s.x_inner for s in states])
    for j, state in enumerate(states):
        _check_finite(mixed[j], j, t, None, "mix")
        state.v = mixed[j]
        state.x = prox(reg, gamma, mixed[j])
        _check_finite(state.x, j, t, None, "prox")
    return inner_sum / m if record_inner else None


def run_epoch_dgm(
    states: list[AgentState],
    datasets: tuple[LocalDataset, ...],
    kind: SmoothLossKind,
    reg: Regularizer,
    gamma_t: float,
    matrix,
    t: int,
) -> None:
    """One epoch of the subgradient baseline: mix once, then one local step.

    Each agent combines neighbors through the single matrix at the current
    communication step, then descends the sum of its local gradients plus
    one penalty subgradient with the (externally decayed) step gamma_t.
    """
    if not gamma_t > 0.0:
        raise NonPositiveStep(f"epoch needs gamma > 0, got {gamma_t}")
    weights = matrix.weights
    mixed = weights @ np.stack([s.x for s in states])
    for j, (state, ds) in enumerate(zip(states, datasets)):
        v = mixed[j]
        _check_finite(v, j, t, None, "mix")
        grad = subgradient(reg, v)
        for sample in ds.samples:
            grad = grad + sample_value_grad(kind, sample, v)[1]
        state.v = v
        state.x = v - gamma_t * grad
        _check_finite(state.x, j, t, None, "step")


def run(config: RunConfig, problem: ProblemBundle) -> RunTrace:
    """Execute the configured algorithm for ``config.horizon`` epochs.

    Fully deterministic given the seed: sampler streams are pre-keyed by
    (seed, agent, epoch) and every reduction has a fixed order, so serial
    and agent-parallel executions agree bit for bit.
    """
    algo = config.algorithm.lower()
    horizon = config.horizon
    m, n, dim = problem.m, problem.n, problem.dim
    lipschitz = objectives.lipschitz_constant(problem.datasets, problem.kind)
    gamma = None
    if horizon > 0:
        gamma = config.step.resolve(lipschitz, n, horizon, config.enforce_step_bound)
    if algo == "dgm" and config.step.rule != "constant":
        raise ValueError("the subgradient baseline decays its own step; use a constant rule")

    x0 = np.full(dim, float(config.x0))
    states = [AgentState(x0.copy(), x0.copy(), x0.copy()) for _ in range(m)]

    sigma_star = None
    if config.record_sigma_star:
        if problem.x_star is None:
            raise ValueError("sigma_star recording needs the reference solution point")
        sigma_star = metrics_mod.shuffling_variance(
            problem.datasets, problem.kind, problem.x_star
        )

    cadence = config.cadence if config.cadence is not None else default_cadence(horizon)
    designated = problem.schedule.matrix(0)  # fixed matrix keeps rows comparable
    cursor = ScheduleCursor(problem.schedule, config.steps_mode)
    samplers = None
    if algo != "dgm":
        mode = _SAMPLER_FOR[algo]
        samplers = [
            SamplingSchedule(
                mode, n, config.seed, 0 if config.share_agent_streams else j
            )
            for j in range(m)
        ]

    trace = RunTrace(rows=[], x_bar={}, x_hat={}, snapshots={}, gamma=gamma,
                     x_final=np.stack([s.x for s in states]))

    def record(epoch: int, stacked: np.ndarray, x_bar: np.ndarray,
               x_hat: np.ndarray | None, v_value: float | None) -> None:
        f_bar = objectives.full_objective(
            problem.datasets, problem.regularizer, problem.kind, x_bar
        )
        f_hat = None
        subopt = None
        if x_hat is not None:
            f_hat = objectives.full_objective(
                problem.datasets, problem.regularizer, problem.kind, x_hat
            )
            if problem.f_star is not None:
                subopt = f_hat - problem.f_star
        trace.rows.append(
            metrics_mod.EpochMetrics(
                epoch=epoch,
                f_bar=f_bar,
                f_hat=f_hat,
                suboptimality=subopt,
                disagreement=metrics_mod.consensus_quantity(stacked, designated),
                max_consensus_dist=float(
                    np.linalg.norm(stacked - x_bar[None, :], axis=1).max()
                ),
                sigma_star_sq=sigma_star,
                forward_deviation=v_value,
            )
        )
        trace.x_bar[epoch] = x_bar.copy()
        if x_hat is not None:
            trace.x_hat[epoch] = x_hat.copy()
        if config.store_snapshots:
            trace.snapshots[epoch] = stacked.copy()

    stacked = np.stack([s.x for s in states])
    record(0, stacked, stacked.mean(axis=0), None, None)

    x_hat_sum = np.zeros(dim)
    for t in range(horizon):
        if algo == "dgm":
            gamma_t = gamma / math.sqrt(t + 1.0)
            run_epoch_dgm(
                states, problem.datasets, problem.kind, problem.regularizer,
                gamma_t, problem.schedule.matrix(t), t,
            )
            inner_avgs = None
        else:
            inner_avgs = run_epoch_dpgrr(
                states, problem.datasets, problem.kind, problem.regularizer,
                gamma, cursor, samplers, t, record_inner=config.record_v,
            )
        stacked = np.stack([s.x for s in states])
        x_bar = stacked.mean(axis=0)
        x_hat_sum += x_bar
        epoch = t + 1
        if epoch % cadence == 0 or epoch == horizon:
            v_value = None
            if config.record_v and inner_avgs is not None:
                v_value = metrics_mod.forward_deviation(inner_avgs, x_bar)
            record(epoch, stacked, x_bar, x_hat_sum / epoch, v_value)

    trace.x_final = np.stack([s.x for s in states])
    return trace
