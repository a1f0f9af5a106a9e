"""Exact-in-distribution samplers for the drifted log-process W = V - sigma2/2.

Every trajectory ``i`` of a run draws from its own counter-based stream
``(seed, i)``, so a path depends only on the master seed and its index and
not on batching or worker count.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.signal import lfilter

from .variance_models import FBM, INTEGRATED_OU, VarianceModel, from_spec

PATH_STREAM = 0
EXP_STREAM = 1
EIG_CLIP_RTOL = 1e-12
_MAGIC = b"BERMANPB1\n"


def _as_multiple(value: float, unit: float, what: str) -> int:
    k = round(value / unit)
    if k < 1 or abs(k * unit - value) > 1e-9 * max(1.0, abs(value)):
        raise ValueError(f"{what}={value!r} is not a positive integer multiple of step {unit!r}")
    return k


@dataclass(frozen=True)
class GridSpec:
    """Regular grid ``-T, -T+e, ..., T`` with an optional coarser mesh ``delta``.

    ``delta == 0`` stands for the continuous limit, approximated by the fine
    step itself.
    """

    half_width: float
    step: float
    delta: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if self.dim != 1:
            raise ValueError("only one-dimensional grids are supported")
        if not self.step > 0:
            raise ValueError("step must be positive")
        _as_multiple(self.half_width, self.step, "half_width")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        if self.delta > 0:
            _as_multiple(self.delta, self.step, "delta")

    @property
    def n_steps(self) -> int:
        return 2 * round(self.half_width / self.step)

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    @property
    def center(self) -> int:
        return self.n_steps // 2

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.center) * self.step

    @property
    def stride(self) -> int:
        return 1 if self.delta == 0 else round(self.delta / self.step)

    @property
    def mesh_mass(self) -> float:
        """Measure carried by one mesh point (``e`` or ``delta``)."""
        return self.step if self.delta == 0 else self.delta

    def mesh_indices(self) -> np.ndarray:
        s = self.stride
        j = self.center // s
        return self.center + s * np.arange(-j, j + 1)

    @property
    def window_measure(self) -> float:
        return self.mesh_mass * len(self.mesh_indices())

    def with_delta(self, delta: float) -> "GridSpec":
        return GridSpec(self.half_width, self.step, delta, self.dim)

    def describe(self) -> dict:
        return {"half_width": self.half_width, "step": self.step, "delta": self.delta, "dim": self.dim}


@dataclass
class PathBatch:
    grid: GridSpec
    model: VarianceModel
    values: np.ndarray
    seed: int
    start: int = 0

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def trajectory_ids(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.n_paths)

    def dump(self, path) -> None:
        """Write header (model, grid, seed) followed by row-major float64 values."""
        header = json.dumps(
            {
                "model": self.model.describe(),
                "grid": self.grid.describe(),
                "seed": int(self.seed),
                "start": int(self.start),
                "n_paths": self.n_paths,
                "n_points": self.values.shape[1],
            },
            sort_keys=True,
        ).encode()
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(len(header).to_bytes(4, "little"))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "PathBatch":
        with open(path, "rb") as fh:
            if fh.read(len(_MAGIC)) != _MAGIC:
                raise ValueError(f"{path}: not a path batch dump")
            size = int.from_bytes(fh.read(4), "little")
            head = json.loads(fh.read(size))
            body = np.frombuffer(fh.read(), dtype="<f8")
        values = body.reshape(head["n_paths"], head["n_points"]).astype(float)
        m = dict(head["model"])
        kind = m.pop("kind")
        if "table" in m:
            m["table"] = [tuple(p) for p in m["table"]]
        model = from_spec(kind, **m)
        return cls(GridSpec(**head["grid"]), model, values, head["seed"], head["start"])


def trajectory_rng(seed: int, index: int, stream: int = PATH_STREAM) -> np.random.Generator:
    """Independent generator for trajectory ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def exponential_draws(n: int, seed: int, start: int = 0) -> np.ndarray:
    """One unit-exponential ``E = ln R`` per trajectory."""
    return np.array([trajectory_rng(seed, i, EXP_STREAM).standard_exponential() for i in range(start, start + n)])


def _normals(n_paths: int, size: int, seed: int, start: int) -> np.ndarray:
    out = np.empty((n_paths, size))
    for r in range(n_paths):
        out[r] = trajectory_rng(seed, start + r).standard_normal(size)
    return out


def _finish(model: VarianceModel, grid: GridSpec, v: np.ndarray, seed: int, start: int) -> PathBatch:
    w = v - 0.5 * np.asarray(model.sigma2(grid.times))
    w[:, grid.center] = 0.0
    return PathBatch(grid, model, w, seed, start)


def _recenter(one_sided: np.ndarray, grid: GridSpec) -> np.ndarray:
    # V(t) = U(t + T) - U(T): exact for stationary increments
    return one_sided - one_sided[:, grid.center : grid.center + 1]


def fgn_autocovariance(hurst: float, k):
    """Autocovariance of unit-variance fractional Gaussian noise at lag ``k``."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    out = 0.5 * (np.abs(k + 1) ** h2 - 2.0 * k**h2 + np.abs(k - 1) ** h2)
    return out if out.ndim else float(out)


@lru_cache(maxsize=32)
def _circulant_scale(hurst: float, m: int) -> np.ndarray:
    gamma = fgn_autocovariance(hurst, np.arange(m + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    top = lam.max()
    if lam.min() < -EIG_CLIP_RTOL * top:
        raise np.linalg.LinAlgError(
            f"circulant embedding not PSD: min eigenvalue {lam.min():.3e} (max {top:.3e})"
        )
    return np.sqrt(np.clip(lam, 0.0, None) / row.size)


def sample_fbm_paths(model: VarianceModel, grid: GridSpec, n_paths: int, seed: int, start: int = 0) -> PathBatch:
    """Davies-Harte sampling of ``V = sqrt(2) B_H`` on the grid.

    ``H == 1`` is the degenerate line ``V(t) = sqrt(2) t xi`` and is sampled
    directly from one normal per path.
    """
    if model.kind != FBM:
        raise ValueError("sample_fbm_paths needs an fbm model")
    if model.hurst == 1.0:
        xi = _normals(n_paths, 1, seed, start)
        return _finish(model, grid, math.sqrt(2.0) * xi * grid.times, seed, start)

    m = grid.n_steps
    scale = _circulant_scale(model.hurst, m)
    z = _normals(n_paths, 4 * m, seed, start)
    noise = np.fft.fft(scale * (z[:, : 2 * m] + 1j * z[:, 2 * m :]), axis=1).real[:, :m]
    noise *= math.sqrt(model.sigma2(grid.step))
    one_sided = np.zeros((n_paths, m + 1))
    np.cumsum(noise, axis=1, out=one_sided[:, 1:])
    return _finish(model, grid, _recenter(one_sided, grid), seed, start)


@lru_cache(maxsize=32)
def ou_transition(step: float) -> tuple[float, float, float, float]:
    """Exact one-step law of ``(X(t+e), int_t^{t+e} X)`` given ``X(t)``.

    Returns ``(a, l11, l21, l22)``: ``X' = a X + l11 z1`` and
    ``I = (1 - a) X + l21 z1 + l22 z2``. Computed in extended precision since
    the conditional variance of the integral is O(e^3).
    """
    with mpmath.workdps(60):
        e = mpmath.mpf(step)
        a = mpmath.exp(-e)
        c11 = 1 - a**2
        c12 = (1 - a) ** 2
        c22 = 2 * (e + a - 1) - (1 - a) ** 2
        l11 = mpmath.sqrt(c11)
        l21 = c12 / l11
        l22 = mpmath.sqrt(c22 - l21**2)
        return float(a), float(l11), float(l21), float(l22)


def sample_integrated_ou_paths(
    grid: GridSpec, n_paths: int, seed: int, start: int = 0, model: VarianceModel | None = None, return_ou: bool = False
):
    """Exact sampling of ``V(t) = sqrt(2) int_0^t X`` for a unit stationary OU ``X``.

    With ``return_ou`` the (one-sided, uncentered) OU values are returned as a
    second array aligned with the grid.
    """
    if model is None:
        from .variance_models import integrated_ou

        model = integrated_ou()
    if model.kind != INTEGRATED_OU:
        raise ValueError("sample_integrated_ou_paths needs an integrated-ou model")
    m = grid.n_steps
    a, l11, l21, l22 = ou_transition(grid.step)
    z = _normals(n_paths, 2 * m + 1, seed, start)
    x0, z1, z2 = z[:, 0], z[:, 1 : m + 1], z[:, m + 1 :]
    x_next = lfilter([l11], [1.0, -a], z1, axis=1, zi=(a * x0)[:, None])[0]
    x = np.concatenate([x0[:, None], x_next], axis=1)
    incr = (1.0 - a) * x[:, :-1] + l21 * z1 + l22 * z2
    one_sided = np.zeros((n_paths, m + 1))
    np.cumsum(math.sqrt(2.0) * incr, axis=1, out=one_sided[:, 1:])
    batch = _finish(model, grid, _recenter(one_sided, grid), seed, start)
    return (batch, x) if return_ou else batch


def increment_covariance(model: VarianceModel, times: np.ndarray) -> np.ndarray:
    """``Cov(V(s), V(t)) = (sigma2(s) + sigma2(t) - sigma2(t - s)) / 2``."""
    s2 = np.asarray(model.sigma2(times))
    diff = np.asarray(model.sigma2(times[:, None] - times[None, :]))
    return 0.5 * (s2[:, None] + s2[None, :] - diff)


def _psd_factor(cov: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    lam, q = np.linalg.eigh(cov)
    if lam.min() < -rtol * max(lam.max(), 0.0):
        raise np.linalg.LinAlgError(
            f"covariance not PSD (min eigenvalue {lam.min():.3e}); inadmissible variance model"
        )
    return q * np.sqrt(np.clip(lam, 0.0, None))


def sample_cholesky_paths(model: VarianceModel, grid: GridSpec, n_paths: int, seed: int, start: int = 0) -> PathBatch:
    """Dense-factorization sampler; the validation oracle for the fast samplers.

    Rank-deficient but PSD covariances (e.g. H = 1) fall back to an
    eigendecomposition.
    """
    if grid.n_points > 4096:
        raise ValueError("dense sampler limited to 4096 grid points")
    keep = np.arange(grid.n_points) != grid.center
    factor = _psd_factor(increment_covariance(model, grid.times[keep]))
    z = _normals(n_paths, factor.shape[1], seed, start)
    v = np.zeros((n_paths, grid.n_points))
    # einsum without BLAS keeps each row independent of the batch size
    v[:, keep] = np.einsum("ij,kj->ik", z, factor)
    return _finish(model, grid, v, seed, start)


def sample_paths(model: VarianceModel, grid: GridSpec, n_paths: int, seed: int, start: int = 0) -> PathBatch:
    """Dispatch to the exact sampler appropriate for ``model``."""
    if model.kind == FBM:
        return sample_fbm_paths(model, grid, n_paths, seed, start)
    if model.kind == INTEGRATED_OU:
        return sample_integrated_ou_paths(grid, n_paths, seed, start, model=model)
    return sample_cholesky_paths(model, grid, n_paths, seed, start)
