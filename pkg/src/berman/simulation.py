"""Estimator-style front end: simulate once, evaluate the Berman curve anywhere.

``BermanEstimator.fit`` streams trajectories in chunks (threads, one RNG
stream per trajectory) and keeps only per-trajectory summaries: sojourn
times, log pathwise masses, sorted top levels and boundary flags for every
requested mesh. ``predict`` / ``estimate`` then evaluate either estimator at
arbitrary ``x`` from those summaries.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimators import DIRECT, SPECTRAL, _estimates, direct_statistics, empirical_bounds, spectral_statistics
from .paths import GridSpec, exponential_draws, sample_paths
from .sojourn import boundary_flags, log_pathwise_masses, min_count_exceeding, sojourn_times, sorted_levels
from .variance_models import VarianceModel, from_spec

# seconds per (trajectory x grid point), measured on one core with margin
COST_PER_POINT = 3e-7
BUDGET_ENV = "BERMAN_BUDGET_SECONDS"


class BudgetExceeded(RuntimeError):
    def __init__(self, estimate: float, budget: float):
        super().__init__(f"estimated cost {estimate:.0f}s exceeds budget {budget:.0f}s")
        self.estimate = estimate
        self.budget = budget


def estimated_cost(n_paths: int, grid: GridSpec, n_deltas: int = 1) -> float:
    return COST_PER_POINT * n_paths * grid.n_points * (1 + 0.5 * n_deltas)


def check_budget(cost: float, budget: float | None = None) -> None:
    if budget is None:
        env = os.environ.get(BUDGET_ENV)
        budget = float(env) if env else None
    if budget is not None and cost > budget:
        raise BudgetExceeded(cost, budget)


def check_x_grid(x, window_measure: float | None = None) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("x values must be finite and non-negative")
    return x


class BermanEstimator(BaseEstimator):
    """Monte Carlo Berman function of ``Z = exp(V - sigma2_V / 2)``.

    Parameters
    ----------
    model : str or VarianceModel
        ``"fbm"`` (needs ``hurst``), ``"integrated-ou"`` or a model instance.
    half_width, step : float
        Window ``[-half_width, half_width]`` sampled with fine step ``step``.
    deltas : sequence of float
        Meshes to evaluate; 0 is the continuous limit on the fine grid.
    n_paths, seed : int
        Number of trajectories and master seed.
    max_x : float, optional
        Largest ``x`` the spectral estimator will be asked for; bounds the
        number of sorted levels kept per trajectory. ``None`` keeps all.
    n_jobs : int, optional
        Worker threads; results do not depend on it.
    """

    def __init__(
        self,
        model="fbm",
        hurst=None,
        half_width=16.0,
        step=2.0**-7,
        deltas=(0.0,),
        n_paths=4000,
        seed=0,
        max_x=None,
        n_jobs=None,
        chunk_size=128,
        budget_seconds=None,
    ):
        self.model = model
        self.hurst = hurst
        self.half_width = half_width
        self.step = step
        self.deltas = deltas
        self.n_paths = n_paths
        self.seed = seed
        self.max_x = max_x
        self.n_jobs = n_jobs
        self.chunk_size = chunk_size
        self.budget_seconds = budget_seconds

    def _variance_model(self) -> VarianceModel:
        if isinstance(self.model, VarianceModel):
            return self.model
        return from_spec(self.model, hurst=self.hurst)

    def config_hash(self) -> str:
        params = self.get_params()
        params["model"] = self._variance_model().describe()
        for k in ("n_jobs", "chunk_size", "budget_seconds"):
            params.pop(k)
        params["deltas"] = [float(d) for d in params["deltas"]]
        blob = json.dumps(params, sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def fit(self, X=None, y=None):
        """Simulate ``n_paths`` trajectories; ``X`` and ``y`` are ignored."""
        model = self._variance_model()
        grid = GridSpec(float(self.half_width), float(self.step))
        if int(self.n_paths) < 2:
            raise ValueError("n_paths must be at least 2")
        deltas = [float(d) for d in self.deltas]
        if not deltas:
            raise ValueError("deltas must not be empty")
        grids = {d: grid.with_delta(d) for d in deltas}
        check_budget(estimated_cost(int(self.n_paths), grid, len(deltas)), self.budget_seconds)

        k_max = {}
        for d, g in grids.items():
            if self.max_x is None or self.max_x >= g.window_measure:
                k_max[d] = None
            else:
                k_max[d] = min_count_exceeding(float(self.max_x), g.mesh_mass)

        def run(start):
            size = min(int(self.chunk_size), int(self.n_paths) - start)
            batch = sample_paths(model, grid, size, int(self.seed), start)
            draws = exponential_draws(size, int(self.seed), start)
            out = {"exp": draws, "flags": boundary_flags(batch.values, draws)}
            for d, g in grids.items():
                out[d] = (
                    sojourn_times(batch.values, draws, g),
                    log_pathwise_masses(batch.values, g),
                    sorted_levels(batch.values, g, k_max[d]),
                )
            return out

        starts = range(0, int(self.n_paths), int(self.chunk_size))
        workers = self.n_jobs or os.cpu_count() or 1
        if workers == 1:
            parts = [run(s) for s in starts]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(run, starts))

        self.model_ = model
        self.grid_ = grid
        self.grids_ = grids
        self.exp_draws_ = np.concatenate([p["exp"] for p in parts])
        self.boundary_flags_ = np.concatenate([p["flags"] for p in parts])
        self.flagged_fraction_ = float(self.boundary_flags_.mean())
        self.eps_ = {d: np.concatenate([p[d][0] for p in parts]) for d in deltas}
        self.log_mass_ = {d: np.concatenate([p[d][1] for p in parts]) for d in deltas}
        self.levels_ = {d: np.concatenate([p[d][2] for p in parts]) for d in deltas}
        self.config_hash_ = self.config_hash()
        return self

    def _delta(self, delta):
        check_is_fitted(self, "eps_")
        delta = float(delta)
        if delta not in self.eps_:
            raise ValueError(f"delta={delta} was not simulated; fitted deltas: {sorted(self.eps_)}")
        return delta

    def statistics(self, x, delta=0.0, estimator=DIRECT) -> np.ndarray:
        """Per-trajectory statistic matrix ``[x, trajectory]``."""
        delta = self._delta(delta)
        x = check_x_grid(x)
        if estimator == DIRECT:
            return direct_statistics(self.eps_[delta], x)
        if estimator == SPECTRAL:
            g = self.grids_[delta]
            return spectral_statistics(self.levels_[delta], self.log_mass_[delta], x, g.mesh_mass, g.window_measure)
        raise ValueError(f"unknown estimator {estimator!r}")

    def predict(self, x, delta=0.0, estimator=DIRECT) -> np.ndarray:
        """Estimated ``B^delta(x)`` at each ``x``."""
        return self.statistics(x, delta, estimator).mean(axis=1)

    def estimate(self, x, delta=0.0, estimator=DIRECT, config_hash=None):
        x = check_x_grid(x)
        stats = self.statistics(x, delta, estimator)
        return _estimates(stats, x, estimator, float(delta), config_hash or self.config_hash_)

    def pickands(self, delta=0.0, config_hash=None):
        return {k: self.estimate([0.0], delta, k, config_hash)[0] for k in (DIRECT, SPECTRAL)}

    def bounds(self, x, delta=0.0):
        return empirical_bounds(self.eps_[self._delta(delta)], check_x_grid(x))

    def mean_sojourn(self, delta=0.0) -> float:
        return float(self.eps_[self._delta(delta)].mean())
