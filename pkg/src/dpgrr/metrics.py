"""Measured quantities: disagreement energy, suboptimality, shuffling variance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netgraph import MixingMatrix
from .objectives import LocalDataset, SmoothLossKind, DimensionMismatch, sample_value_grad

__all__ = [
    "MissingInnerTrace",
    "EpochMetrics",
    "consensus_quantity",
    "shuffling_variance",
    "forward_deviation",
]


class MissingInnerTrace(RuntimeError):
    """Inner-iterate averages were not recorded for this epoch."""


@dataclass(frozen=True)
class EpochMetrics:
    """One recorded row of a run.

    ``f_hat`` and ``suboptimality`` concern the running average of
    iterates, which starts at epoch 1, so they are None on the initial
    row.  ``forward_deviation`` of the epoch that produced this row and
    ``sigma_star_sq`` are diagnostics and None unless enabled.
    """

    epoch: int
    f_bar: float
    f_hat: float | None
    suboptimality: float | None
    disagreement: float
    max_consensus_dist: float
    sigma_star_sq: float | None = None
    forward_deviation: float | None = None


def consensus_quantity(xs, matrix: MixingMatrix | np.ndarray) -> float:
    """Weighted disagreement ``sum_i <x_i, sum_j a_ij (x_i - x_j)>``.

    Equals the Laplacian quadratic form of the weighted graph, hence zero
    exactly when all agents agree (for a connected weight support).
    Evaluated through the symmetric rearrangement
    ``(1/2) sum_ij a_ij ||x_i - x_j||^2`` (identical for the symmetric
    weights required here), which stays accurate near consensus where the
    inner-product form cancels catastrophically.
    """
    weights = matrix.weights if isinstance(matrix, MixingMatrix) else np.asarray(matrix)
    stacked = np.stack([np.asarray(x, dtype=float) for x in xs])
    if weights.shape[0] != weights.shape[1] or weights.shape[0] != stacked.shape[0]:
        raise DimensionMismatch(
            f"{stacked.shape[0]} vectors vs {weights.shape[0]}x{weights.shape[1]} weights"
        )
    diff = stacked[:, None, :] - stacked[None, :, :]
    return 0.5 * float(np.sum(weights * np.sum(diff * diff, axis=2)))


def shuffling_variance(
    datasets: tuple[LocalDataset, ...], kind: SmoothLossKind, x_star: np.ndarray
) -> float:
    """Population variance of agent-averaged per-index gradients at ``x_star``.

    For each local index i the gradients of the i-th sample of every agent
    are averaged; the result is the variance of those n averages.
    Invariant to reordering samples within agents only in the sense that
    the value is a symmetric function of the per-index averages.
    """
    datasets = tuple(datasets)
    n = datasets[0].n
    if any(ds.n != n for ds in datasets):
        raise ValueError("agents must hold equally many samples")
    x_star = np.asarray(x_star, dtype=float)
    m = len(datasets)
    per_index = np.empty((n, x_star.size))
    for i in range(n):
        g = np.zeros(x_star.size)
        for ds in datasets:
            g += sample_value_grad(kind, ds.samples[i], x_star)[1]
        per_index[i] = g / m
    centered = per_index - per_index.mean(axis=0)
    return float(np.mean(np.sum(centered * centered, axis=1)))


def forward_deviation(inner_averages, x_bar_next: np.ndarray) -> float:
    """Sum of squared distances from each inner-iterate average to the next iterate.

    ``inner_averages`` holds the network averages of the n inner iterates
    of one epoch (the pre-step points); recording them is opt-in, so a
    missing trace raises rather than silently returning garbage.
    """
    if inner_averages is None:
        raise MissingInnerTrace("run with inner-average recording enabled")
    inner = np.asarray(inner_averages, dtype=float)
    diff = inner - np.asarray(x_bar_next, dtype=float)[None, :]
    return float(np.sum(diff * diff))
