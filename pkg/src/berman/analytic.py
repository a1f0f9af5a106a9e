"""Exact values and bounds: expected sojourn, H = 1 closed forms, sandwich bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .variance_models import FBM, VarianceModel

SQRT2 = math.sqrt(2.0)
SQRT_PI = math.sqrt(math.pi)
BAND_LOWER = -1.0
BAND_UPPER = -(3.0 - 2.0 * SQRT2) / 2.0

# tail cutoff: stop once t * Psi(sigma(t)/2) drops below this
_TAIL_TOL = 1e-13
_DIRECT_TERMS = 10**6


def normal_sf(x):
    """Standard normal survival function Psi."""
    return special.ndtr(np.negative(x))


def log_normal_sf(x):
    """``ln Psi(x)``; finite far beyond the float64 range of Psi itself."""
    return special.log_ndtr(np.negative(x))


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return out if out.ndim else float(out)


def _exceed_prob(model: VarianceModel, t):
    """``P(Y(t) > 1) / 2 = Psi(sigma_V(t) / 2)``."""
    return normal_sf(0.5 * np.sqrt(model.sigma2(t)))


def _tail_cutoff(model: VarianceModel) -> float:
    t = 1.0
    while t * _exceed_prob(model, t) >= _TAIL_TOL:
        t *= 2.0
        if t > 1e300:
            raise ValueError("expected sojourn diverges: sigma_V does not grow (A2 fails)")
    return t


def expected_sojourn(model: VarianceModel, delta: float = 0.0, window: float | None = None) -> float:
    """``E[eps_delta(Y)] = 2 int Psi(sigma_V(t)/2) lambda_delta(dt)``.

    ``delta = 0`` integrates over the line by adaptive Gauss-Kronrod on unit
    panels in ``ln t``; ``delta > 0`` sums over the lattice ``delta * Z``, the
    tail beyond ``10^6`` terms by Euler-Maclaurin. ``window`` restricts the
    measure to ``[-window, window]`` (the expectation of the truncated
    sojourn a finite simulation window actually sees).
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    upper = _tail_cutoff(model)
    if window is not None:
        if window <= 0:
            raise ValueError("window must be positive")
        upper = min(upper, window)
    if delta == 0:
        return 4.0 * _integral(model, 0.0, upper)

    n_terms = math.floor(upper / delta * (1 + 1e-12))
    direct = min(n_terms, _DIRECT_TERMS)
    k = np.arange(1, direct + 1, dtype=float)
    total = math.fsum(_exceed_prob(model, k * delta))
    if n_terms > direct:
        if window is not None:
            k = np.arange(direct + 1, n_terms + 1, dtype=float)
            total += math.fsum(_exceed_prob(model, k * delta))
        else:
            total += _euler_maclaurin_tail(model, delta, direct)
    return 2.0 * delta * (0.5 + 2.0 * total)


def _integral(model: VarianceModel, lo: float, hi: float) -> float:
    """``int_lo^hi Psi(sigma(t)/2) dt`` with the substitution ``t = exp(u)``."""
    f = lambda u: _exceed_prob(model, math.exp(u)) * math.exp(u)
    u_lo = math.log(lo) if lo > 0 else math.log(1e-20)
    u_hi = math.log(hi)
    edges = np.append(np.arange(u_lo, u_hi, 1.0), u_hi)
    return math.fsum(
        integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0] for a, b in zip(edges[:-1], edges[1:]) if b > a
    )


def _euler_maclaurin_tail(model: VarianceModel, delta: float, k0: int) -> float:
    """``sum_{k > k0} f(k)`` for ``f(k) = Psi(sigma(k delta)/2)``."""
    f = lambda k: float(_exceed_prob(model, k * delta))
    integral = _integral(model, k0 * delta, _tail_cutoff(model)) / delta
    h = 1e-3 * k0
    fprime = (f(k0 + h) - f(k0 - h)) / (2.0 * h)
    return integral - 0.5 * f(k0) - fprime / 12.0


def fbm_expected_sojourn_closed(hurst: float, verbatim: bool = False) -> float:
    """``E[eps_0(Y)]`` for ``sigma2(t) = 2|t|^(2H)``.

    The default evaluates ``2^(1/H + 1) Gamma(1/(2H) + 1/2) / sqrt(pi)``,
    which agrees with direct quadrature. ``verbatim=True`` gives the
    variant with the Gamma factor in the denominator; both coincide only at
    ``H = 1``.
    """
    if not 0.0 < hurst <= 1.0:
        raise ValueError("hurst must lie in (0, 1]")
    a = 1.0 / (2.0 * hurst) + 0.5
    if verbatim:
        return 4.0**a / (SQRT_PI * special.gamma(a))
    return 2.0 ** (1.0 / hurst + 1.0) * special.gamma(a) / SQRT_PI


def berman_closed_h1(x):
    """Berman function for ``V(t) = sqrt(2) t xi``: ``sqrt(2) phi(x / sqrt(2))``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("x must be non-negative")
    out = SQRT2 * normal_pdf(x / SQRT2)
    return out if np.ndim(out) else float(out)


def berman_finite_window_h1(window: float, x):
    """``B([0, T], x) = 2 Psi(x/sqrt2) + sqrt2 (T - x) phi(x/sqrt2)`` for ``T > x``."""
    x = np.asarray(x, dtype=float)
    if np.any(window <= x):
        raise ValueError("window length must exceed x")
    out = 2.0 * normal_sf(x / SQRT2) + SQRT2 * (window - x) * normal_pdf(x / SQRT2)
    return out if np.ndim(out) else float(out)


@dataclass
class BoundSet:
    x: float
    lower: float
    upper: float
    markov_upper: dict = field(default_factory=dict)
    provenance: str = "exact"

    @property
    def consistent(self) -> bool:
        return not (math.isfinite(self.lower) and math.isfinite(self.upper)) or self.lower <= self.upper


def bounds_sandwich(prob_greater: float, prob_geq: float, mean_eps: float, x: float, provenance: str = "exact") -> BoundSet:
    """Two-sided bounds ``P(eps > x)^2 / E eps <= B(x) <= P(eps >= x) / x``.

    At ``x = 0`` the lower bound is ``1 / E eps`` and no upper bound exists
    (returned as ``inf``).
    """
    if mean_eps <= 0:
        raise ValueError("mean sojourn must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    for p in (prob_greater, prob_geq):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
    if x == 0:
        return BoundSet(0.0, 1.0 / mean_eps, math.inf, provenance=provenance)
    return BoundSet(float(x), prob_greater**2 / mean_eps, prob_geq / x, provenance=provenance)


def markov_upper_bound(moment: float, p: float, x: float) -> float:
    """``B(x) <= x^(-p-1) E[eps^p]``."""
    if x <= 0:
        raise ValueError("x must be positive")
    if p <= 0:
        raise ValueError("p must be positive")
    if moment < 0:
        raise ValueError("moment must be non-negative")
    return x ** (-p - 1.0) * moment


def mgf_upper_bound(s: float, x_table, b_table, mean_eps: float, tail_tol: float = 1e-12) -> float:
    """Bound on ``E exp(s eps)`` from a tabulated Berman curve.

    ``1 + s sqrt(E eps) int_0^inf exp(s x) sqrt(B(x)) dx``, the integral by
    the trapezoid rule on the table, which must reach the point where the
    integrand falls below ``tail_tol``.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    x = np.asarray(x_table, dtype=float)
    b = np.asarray(b_table, dtype=float)
    if x.shape != b.shape or x.size < 2 or np.any(np.diff(x) <= 0) or x[0] != 0.0:
        raise ValueError("Berman table must be increasing in x and start at x = 0")
    if np.any(b < 0):
        raise ValueError("Berman values must be non-negative")
    integrand = np.exp(s * x) * np.sqrt(b)
    if not np.all(np.isfinite(integrand)) or integrand[-1] >= tail_tol:
        raise ValueError("Berman table too short: integrand has not decayed, integral not converged")
    return 1.0 + s * math.sqrt(mean_eps) * float(np.trapezoid(integrand, x))


@dataclass
class LogRatio:
    x: float
    ratio: float
    lower: float = BAND_LOWER
    upper: float = BAND_UPPER

    @property
    def inside(self) -> bool:
        return self.lower <= self.ratio <= self.upper


def log_asymptote_ratio(berman_value: float, model: VarianceModel, x: float) -> LogRatio:
    """``ln B(x) / sigma2_V(x/2)`` with the asymptotic band ``[-1, -(3 - 2 sqrt2)/2]``.

    ``B(x) = 0`` gives ``-inf`` (never inside the band).
    """
    if x <= 0:
        raise ValueError("x must be positive")
    if berman_value <= 0:
        return LogRatio(float(x), -math.inf)
    return LogRatio(float(x), math.log(berman_value) / float(model.sigma2(x / 2.0)))


def expected_sojourn_table(models: dict, deltas, window: float | None = None) -> list[tuple]:
    """Rows ``(label, delta, E eps, 1/E eps)`` for every model and delta."""
    rows = []
    for label, model in models.items():
        for d in deltas:
            if model.kind == FBM and d == 0 and window is None:
                val = fbm_expected_sojourn_closed(model.hurst)
            else:
                val = expected_sojourn(model, d, window)
            rows.append((label, float(d), val, 1.0 / val))
    return rows
