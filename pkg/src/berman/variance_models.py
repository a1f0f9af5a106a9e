"""Variance functions of centered Gaussian processes with stationary increments.

A model describes ``sigma2(t) = Var V(t)``; the spectral process built on top
of it is ``Z(t) = exp(V(t) - sigma2(t) / 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

FBM = "fbm"
INTEGRATED_OU = "integrated-ou"
POWER_TABLE = "custom-power-table"
KINDS = (FBM, INTEGRATED_OU, POWER_TABLE)


@dataclass(frozen=True)
class VarianceModel:
    """Immutable description of ``sigma2_V``.

    Use the :func:`fbm`, :func:`integrated_ou` and :func:`power_table`
    constructors rather than building instances by hand.
    """

    kind: str
    hurst: float | None = None
    alpha0: float = 2.0
    alpha_inf: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None
    _interp: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variance model kind {self.kind!r}")
        if self.kind == FBM:
            if self.hurst is None or not 0.0 < self.hurst <= 1.0:
                raise ValueError(f"hurst must lie in (0, 1], got {self.hurst!r}")
        for name in ("alpha0", "alpha_inf"):
            a = getattr(self, name)
            if not 0.0 < a <= 2.0:
                raise ValueError(f"{name} must lie in (0, 2], got {a!r}")
        if self.kind == POWER_TABLE:
            object.__setattr__(self, "_interp", _LogLogTable(self.table))

    def sigma2(self, t):
        """Variance ``sigma2_V(|t|)``; accepts scalars or arrays."""
        a = np.abs(np.asarray(t, dtype=float))
        if self.kind == FBM:
            out = 2.0 * a ** (2.0 * self.hurst)
        elif self.kind == INTEGRATED_OU:
            # Taylor branch: a + expm1(-a) cancels catastrophically near 0
            out = np.where(
                a < 1e-4,
                2.0 * a**2 - (2.0 / 3.0) * a**3 + a**4 / 6.0,
                4.0 * (a + np.expm1(-a)),
            )
        else:
            out = self._interp(a)
        return out if np.ndim(out) else float(out)

    def sigma(self, t):
        return np.sqrt(self.sigma2(t))

    def describe(self) -> dict:
        d = {"kind": self.kind, "alpha0": self.alpha0, "alpha_inf": self.alpha_inf}
        if self.hurst is not None:
            d["hurst"] = self.hurst
        if self.table is not None:
            d["table"] = [list(p) for p in self.table]
        return d


class _LogLogTable:
    """Monotone cubic interpolation of a (t, sigma2) table in log-log space.

    Outside the table the first/last segment is continued as a power law, so
    the model stays defined on (0, inf) and ``sigma2(0) == 0``.
    """

    def __init__(self, table):
        if table is None or len(table) < 2:
            raise ValueError("power table needs at least two (t, sigma2) pairs")
        arr = np.asarray(table, dtype=float)
        t, s = arr[:, 0], arr[:, 1]
        if np.any(t <= 0) or np.any(s <= 0):
            raise ValueError("power table entries must be strictly positive")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("power table must be strictly increasing in t and sigma2")
        self.lt, self.ls = np.log(t), np.log(s)
        self.pchip = PchipInterpolator(self.lt, self.ls, extrapolate=False)
        self.slope_lo = (self.ls[1] - self.ls[0]) / (self.lt[1] - self.lt[0])
        self.slope_hi = (self.ls[-1] - self.ls[-2]) / (self.lt[-1] - self.lt[-2])

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        out = np.zeros_like(a)
        pos = a > 0
        la = np.log(a[pos])
        ls = self.pchip(la)
        lo, hi = la < self.lt[0], la > self.lt[-1]
        ls[lo] = self.ls[0] + self.slope_lo * (la[lo] - self.lt[0])
        ls[hi] = self.ls[-1] + self.slope_hi * (la[hi] - self.lt[-1])
        out[pos] = np.exp(ls)
        return out


def fbm(hurst: float, alpha0: float | None = None, alpha_inf: float | None = None) -> VarianceModel:
    """``V = sqrt(2) B_H``, i.e. ``sigma2(t) = 2|t|^(2H)``."""
    a = 2.0 * hurst
    return VarianceModel(
        FBM,
        hurst=hurst,
        alpha0=a if alpha0 is None else alpha0,
        alpha_inf=a if alpha_inf is None else alpha_inf,
    )


def integrated_ou(alpha0: float = 2.0, alpha_inf: float = 1.0) -> VarianceModel:
    """``sqrt(2)`` times the running integral of a unit stationary OU process."""
    return VarianceModel(INTEGRATED_OU, alpha0=alpha0, alpha_inf=alpha_inf)


def power_table(pairs, alpha0: float = 2.0, alpha_inf: float = 1.0) -> VarianceModel:
    table = tuple((float(t), float(s)) for t, s in pairs)
    return VarianceModel(POWER_TABLE, alpha0=alpha0, alpha_inf=alpha_inf, table=table)


def from_spec(kind: str, hurst: float | None = None, **kw) -> VarianceModel:
    """Build a model from loosely-typed config values."""
    kind = kind.lower().replace("_", "-")
    if kind in ("fbm", "fractional-brownian-motion"):
        if hurst is None:
            raise ValueError("fbm model requires a hurst parameter")
        return fbm(float(hurst), **kw)
    if kind in ("ou", "integrated-ou", "iou"):
        return integrated_ou(**kw)
    if kind in ("power-table", POWER_TABLE):
        return power_table(kw.pop("table"), **kw)
    raise ValueError(f"unknown model {kind!r}")


@dataclass
class GrowthReport:
    near_ratios: np.ndarray
    far_ratios: np.ndarray
    near_slope: float
    far_slope: float
    monotone: bool
    a1_ok: bool
    a2_ok: bool

    @property
    def ok(self) -> bool:
        return self.monotone and self.a1_ok and self.a2_ok


def check_growth_conditions(model: VarianceModel, probes, n_tail: int = 3, slope_tol: float = 0.05) -> GrowthReport:
    """Numerical check of the local (alpha0) and global (alpha_inf) growth bounds.

    The ratio ``sigma2(t)/t^alpha0`` stays bounded as ``t -> 0`` iff the local
    log-log slope is at least ``alpha0``; likewise ``sigma2(t)/t^alpha_inf``
    stays away from zero at infinity iff the far slope is at least
    ``alpha_inf``. Slopes are read off the ``n_tail`` smallest/largest probes.
    """
    t = np.unique(np.abs(np.asarray(probes, dtype=float)))
    t = t[t > 0]
    if t.size == 0:
        raise ValueError("probe grid is empty")
    if t.size < 2 * n_tail or t[0] >= 1.0 or t[-1] <= 1.0:
        raise ValueError("probe grid needs points near 0 and large points")
    s2 = np.asarray(model.sigma2(t))
    near, far = t[:n_tail], t[-n_tail:]
    near_r = s2[:n_tail] / near**model.alpha0
    far_r = s2[-n_tail:] / far**model.alpha_inf
    ls = np.log(s2)
    near_slope = float(np.polyfit(np.log(near), ls[:n_tail], 1)[0])
    far_slope = float(np.polyfit(np.log(far), ls[-n_tail:], 1)[0])
    return GrowthReport(
        near_ratios=near_r,
        far_ratios=far_r,
        near_slope=near_slope,
        far_slope=far_slope,
        monotone=bool(np.all(np.diff(s2) > 0)),
        a1_ok=near_slope >= model.alpha0 - slope_tol,
        a2_ok=far_slope >= model.alpha_inf - slope_tol,
    )
