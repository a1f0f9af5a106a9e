"""Pathwise functionals of a drifted log-path ``W`` on a grid.

With ``Y = R Z`` and ``ln R = E`` unit exponential, ``Y(t) > 1`` iff
``W(t) > -E``, so the sojourn of ``Y`` above one is a count of mesh points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .paths import GridSpec


def _mesh(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    if grid.delta == 0:
        return values
    return values[..., grid.mesh_indices()]


def min_count_exceeding(x: float, mass: float) -> int:
    """Smallest ``k`` with ``k * mass > x`` in floating point.

    Matches the float comparison the direct estimator makes, so both
    estimators agree on which sojourns count as "longer than x".
    """
    k = math.floor(x / mass) + 1
    while k > 1 and (k - 1) * mass > x:
        k -= 1
    while k * mass <= x:
        k += 1
    return k


def sojourn_time(w, exp_draw: float, grid: GridSpec) -> float:
    """``lambda_delta{t : W(t) > -E}`` restricted to the window."""
    count = np.count_nonzero(_mesh(np.asarray(w), grid) > -exp_draw)
    return grid.mesh_mass * count


def sojourn_times(values: np.ndarray, exp_draws: np.ndarray, grid: GridSpec) -> np.ndarray:
    counts = np.count_nonzero(_mesh(values, grid) > -np.asarray(exp_draws)[:, None], axis=1)
    return grid.mesh_mass * counts


def _mesh_weights(grid: GridSpec, n: int) -> np.ndarray:
    w = np.full(n, grid.mesh_mass)
    if grid.delta == 0:
        # trapezoid endpoints
        w[0] = w[-1] = 0.5 * grid.step
    return w


def log_pathwise_masses(values: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Row-wise ``ln S_delta``, accumulated relative to the row maximum."""
    mesh = np.atleast_2d(_mesh(values, grid))
    weights = _mesh_weights(grid, mesh.shape[1])
    top = mesh.max(axis=1, keepdims=True)
    # row-wise reduction rather than a BLAS matvec: the result must not depend
    # on how many rows share the call (chunk size)
    return np.log(np.sum(np.exp(mesh - top) * weights, axis=1)) + top[:, 0]


def pathwise_mass(w, grid: GridSpec) -> float:
    """``S_delta(Z)``: trapezoid integral of ``exp(W)`` (delta = 0) or a mesh sum."""
    w = np.asarray(w, dtype=float)
    mesh = _mesh(w, grid)
    if mesh.max() > 700:
        return float(math.exp(log_pathwise_masses(w[None, :], grid)[0]))
    return float(np.sum(np.exp(mesh) * _mesh_weights(grid, mesh.size)))


def sorted_levels(values: np.ndarray, grid: GridSpec, k_max: int | None = None) -> np.ndarray:
    """Mesh values of each row in decreasing order, truncated to ``k_max`` columns."""
    mesh = np.atleast_2d(_mesh(values, grid))
    out = -np.sort(-mesh, axis=1)
    return out if k_max is None else out[:, :k_max]


def level_for_sojourn(w, x: float, grid: GridSpec) -> float:
    """Level ``u*`` such that the sojourn above ``u`` exceeds ``x`` iff ``u < u*``.

    It is the ``k``-th largest mesh value of ``W`` with ``k`` the smallest
    count whose measure exceeds ``x``.
    """
    if x < 0:
        raise ValueError("x must be non-negative")
    if x >= grid.window_measure:
        raise ValueError(f"x={x} is not below the window measure {grid.window_measure}; widen the window")
    k = min_count_exceeding(x, grid.mesh_mass)
    return float(sorted_levels(np.asarray(w, dtype=float), grid, k)[0, k - 1])


def boundary_check(w, exp_draw: float, grid: GridSpec) -> bool:
    """True when the sojourn set reaches an end of the window (truncation risk)."""
    w = np.asarray(w)
    return bool(w[0] > -exp_draw or w[-1] > -exp_draw)


def boundary_flags(values: np.ndarray, exp_draws: np.ndarray) -> np.ndarray:
    e = -np.asarray(exp_draws)
    return (values[:, 0] > e) | (values[:, -1] > e)


@dataclass
class SojournSample:
    eps: float
    mass: float
    u_star: float
    exp_draw: float
    boundary_hit: bool


def sojourn_sample(w, exp_draw: float, grid: GridSpec, x: float = 0.0) -> SojournSample:
    return SojournSample(
        eps=sojourn_time(w, exp_draw, grid),
        mass=pathwise_mass(w, grid),
        u_star=level_for_sojourn(w, x, grid),
        exp_draw=float(exp_draw),
        boundary_hit=boundary_check(w, exp_draw, grid),
    )
