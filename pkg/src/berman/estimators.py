"""Monte Carlo estimators of the Berman function and Pickands constant.

Both work from per-trajectory statistics:

* direct: ``1{eps > x} / eps`` with ``eps`` the sojourn of ``Y = R Z`` above one;
* spectral: ``exp(u*) / S`` with ``u*`` the extremal level at which the
  sojourn of ``W`` just exceeds ``x`` and ``S`` the pathwise mass of ``Z``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import BoundSet, bounds_sandwich
from .paths import GridSpec, PathBatch
from .sojourn import log_pathwise_masses, min_count_exceeding, sojourn_times, sorted_levels

DIRECT = "direct"
SPECTRAL = "spectral"
Z95 = 1.96


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width95: float
    n: int
    estimator: str
    x: float
    delta: float
    config_hash: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def mean_ci(samples):
    """Sample mean and 95% CLT half-width ``1.96 s / sqrt(N)`` (row-wise for 2-D input)."""
    arr = np.asarray(samples, dtype=float)
    s = np.atleast_2d(arr)
    n = s.shape[1]
    if n < 2:
        raise ValueError("need at least two trajectories for a confidence interval")
    # np.sum is pairwise on contiguous rows: deterministic for a fixed array
    mean = s.sum(axis=1) / n
    sd = np.sqrt(((s - mean[:, None]) ** 2).sum(axis=1) / (n - 1))
    hw = Z95 * sd / math.sqrt(n)
    if arr.ndim == 1:
        return float(mean[0]), float(hw[0])
    return mean, hw


def direct_statistics(eps: np.ndarray, x_grid) -> np.ndarray:
    """Matrix ``[x, trajectory]`` of ``1{eps > x} / eps``."""
    eps = np.asarray(eps, dtype=float)
    x = np.asarray(x_grid, dtype=float)[:, None]
    return np.where(eps[None, :] > x, 1.0 / eps[None, :], 0.0)


def spectral_statistics(levels: np.ndarray, log_mass: np.ndarray, x_grid, mesh_mass: float, window_measure: float) -> np.ndarray:
    """Matrix ``[x, trajectory]`` of ``exp(u*(x)) / S``.

    ``levels`` holds each trajectory's mesh values sorted in decreasing
    order (possibly truncated to the columns the largest ``x`` needs).
    """
    out = np.empty((len(x_grid), levels.shape[0]))
    for i, x in enumerate(x_grid):
        if x < 0:
            raise ValueError("x must be non-negative")
        if x >= window_measure:
            raise ValueError(f"x={x} is not below the window measure {window_measure}")
        k = min_count_exceeding(float(x), mesh_mass)
        if k > levels.shape[1]:
            raise ValueError(f"x={x} needs {k} stored levels, only {levels.shape[1]} kept; raise max_x")
        out[i] = np.exp(levels[:, k - 1] - log_mass)
    return out


def _estimates(stats, x_grid, kind, delta, config_hash):
    mean, hw = mean_ci(stats)
    n = stats.shape[1]
    return [
        Estimate(float(m), float(h), n, kind, float(x), float(delta), config_hash)
        for m, h, x in zip(mean, hw, x_grid)
    ]


def _grid(batch: PathBatch, delta: float | None) -> GridSpec:
    return batch.grid if delta is None else batch.grid.with_delta(delta)


def estimate_berman_direct(batch: PathBatch, exp_draws, x_grid, delta: float | None = None, config_hash: str = "") -> list[Estimate]:
    """Mean of ``1{eps_delta(Y) > x} / eps_delta(Y)`` with one ``E`` per path shared over ``x_grid``."""
    exp_draws = np.asarray(exp_draws, dtype=float)
    if exp_draws.shape != (batch.n_paths,):
        raise ValueError("need exactly one exponential draw per trajectory")
    grid = _grid(batch, delta)
    eps = sojourn_times(batch.values, exp_draws, grid)
    return _estimates(direct_statistics(eps, x_grid), x_grid, DIRECT, grid.delta, config_hash)


def estimate_berman_spectral(batch: PathBatch, x_grid, delta: float | None = None, config_hash: str = "") -> list[Estimate]:
    """Mean of ``exp(u*(x)) / S_delta``; needs no exponential draws."""
    grid = _grid(batch, delta)
    k_max = min_count_exceeding(float(max(x_grid)), grid.mesh_mass) if max(x_grid) < grid.window_measure else None
    levels = sorted_levels(batch.values, grid, k_max)
    stats = spectral_statistics(levels, log_pathwise_masses(batch.values, grid), x_grid, grid.mesh_mass, grid.window_measure)
    return _estimates(stats, x_grid, SPECTRAL, grid.delta, config_hash)


def estimate_pickands(batch: PathBatch, exp_draws, delta: float | None = None, config_hash: str = "") -> dict[str, Estimate]:
    """Pickands constant, i.e. both estimators at ``x = 0``."""
    return {
        DIRECT: estimate_berman_direct(batch, exp_draws, [0.0], delta, config_hash)[0],
        SPECTRAL: estimate_berman_spectral(batch, [0.0], delta, config_hash)[0],
    }


def empirical_bounds(eps: np.ndarray, x_grid) -> list[BoundSet]:
    """Sandwich bounds with probabilities and mean taken from the same sample."""
    eps = np.asarray(eps, dtype=float)
    mean = float(eps.mean())
    return [
        bounds_sandwich(float(np.mean(eps > x)), float(np.mean(eps >= x)), mean, float(x), provenance="estimated")
        for x in x_grid
    ]
