import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from berman.analytic import berman_closed_h1
from berman.estimators import (
    DIRECT,
    SPECTRAL,
    direct_statistics,
    empirical_bounds,
    estimate_berman_direct,
    estimate_berman_spectral,
    estimate_pickands,
    mean_ci,
    spectral_statistics,
)
from berman.paths import GridSpec, exponential_draws, sample_paths
from berman.simulation import BermanEstimator
from berman.sojourn import log_pathwise_masses, sorted_levels
from berman.variance_models import fbm, integrated_ou


class TestMeanCI:
    def test_known(self):
        m, hw = mean_ci(np.array([1.0, 2.0, 3.0, 4.0]))
        assert m == 2.5
        assert hw == pytest.approx(1.96 * np.std([1, 2, 3, 4], ddof=1) / 2)

    def test_rowwise(self):
        m, hw = mean_ci(np.array([[1.0, 1.0, 1.0], [0.0, 3.0, 6.0]]))
        np.testing.assert_allclose(m, [1.0, 3.0])
        assert hw[0] == 0.0

    def test_needs_two(self):
        with pytest.raises(ValueError):
            mean_ci(np.array([1.0]))


class TestStatistics:
    def test_direct(self):
        eps = np.array([0.5, 1.0, 2.0])
        s = direct_statistics(eps, [0.0, 1.0])
        np.testing.assert_allclose(s, [[2.0, 1.0, 0.5], [0.0, 0.0, 0.5]])

    def test_spectral_single_path(self):
        g = GridSpec(2.0, 0.5)
        w = np.array([[-3.0, -1.0, -0.5, 0.0, -0.2, -1.5, -1.1, -2.0, -3.0]])
        lm = log_pathwise_masses(w, g)
        s = spectral_statistics(sorted_levels(w, g), lm, [0.0, 1.0], g.mesh_mass, g.window_measure)
        np.testing.assert_allclose(s[:, 0], [1.0 / np.exp(lm[0]), np.exp(-0.5) / np.exp(lm[0])])

    def test_spectral_needs_levels(self):
        g = GridSpec(2.0, 0.5)
        w = np.zeros((1, 9))
        with pytest.raises(ValueError):
            spectral_statistics(sorted_levels(w, g, 2), log_pathwise_masses(w, g), [1.0], g.mesh_mass, g.window_measure)
        with pytest.raises(ValueError):
            spectral_statistics(sorted_levels(w, g), log_pathwise_masses(w, g), [4.5], g.mesh_mass, g.window_measure)


class TestBatchAPI:
    def test_direct_and_spectral_on_batch(self):
        g = GridSpec(8.0, 2.0**-5)
        batch = sample_paths(fbm(0.5), g, 400, seed=3)
        e = exponential_draws(400, seed=3)
        d = estimate_berman_direct(batch, e, [0.0, 1.0], config_hash="abc")
        s = estimate_berman_spectral(batch, [0.0, 1.0])
        assert [x.estimator for x in d + s] == [DIRECT] * 2 + [SPECTRAL] * 2
        assert d[0].config_hash == "abc" and d[0].n == 400
        for a, b in zip(d, s):
            assert abs(a.value - b.value) < 3 * math.hypot(a.half_width95, b.half_width95)

    def test_pickands(self):
        g = GridSpec(8.0, 2.0**-5)
        batch = sample_paths(fbm(1.0), g, 500, seed=3)
        out = estimate_pickands(batch, exponential_draws(500, seed=3))
        assert set(out) == {DIRECT, SPECTRAL}
        assert out[SPECTRAL].value == pytest.approx(1 / math.sqrt(math.pi), rel=1e-3)

    def test_delta_override(self):
        g = GridSpec(8.0, 0.25)
        batch = sample_paths(integrated_ou(), g, 300, seed=1)
        e = exponential_draws(300, seed=1)
        (est,) = estimate_berman_direct(batch, e, [0.0], delta=2.0)
        (ref,) = estimate_berman_direct(batch, e, [0.0])
        assert est.delta == 2.0 and est.value != ref.value


class TestEmpiricalBounds:
    def test_bounds_bracket_direct_estimate_exactly(self):
        rng = np.random.default_rng(0)
        eps = rng.choice([0.5, 1.0, 1.5, 2.0, 4.0], size=500)
        xs = [0.5, 1.0, 2.0, 3.0]
        est = direct_statistics(eps, xs).mean(axis=1)
        for b, v in zip(empirical_bounds(eps, xs), est):
            assert b.lower <= v <= b.upper


@pytest.fixture(scope="module")
def h1_errors():
    xs = [0.0, 0.5, 1.0, 2.0]
    out = {}
    for k in (5, 6, 7):
        est = BermanEstimator(hurst=1.0, half_width=16, step=2.0**-k, n_paths=2000, seed=1, max_x=2.0).fit()
        out[k] = est.predict(xs, estimator=SPECTRAL) - berman_closed_h1(np.array(xs))
    return out


class TestH1Discretization:
    """The spectral statistic at H = 1 is almost deterministic, so its grid bias is visible."""

    @pytest.fixture
    def errors(self, h1_errors):
        return h1_errors

    def test_pickands_error_quadratic(self, errors):
        for k in (5, 6):
            assert errors[k][0] / errors[k + 1][0] == pytest.approx(4.0, rel=0.1)

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_positive_x_error_linear(self, errors, i):
        for k in (5, 6):
            assert errors[k][i] / errors[k + 1][i] == pytest.approx(2.0, rel=0.1)

    @pytest.mark.parametrize("i", [1, 2, 3])
    def test_error_sign(self, errors, i):
        # counting points undercounts the sojourn of the line, biasing B^e(x) downward
        assert errors[7][i] < 0


@given(st.lists(st.floats(0.01, 10.0), min_size=2, max_size=50))
def test_direct_statistic_monotone_in_x(eps):
    eps = np.array(eps)
    xs = np.linspace(0, 12, 13)
    est = direct_statistics(eps, xs).mean(axis=1)
    assert np.all(np.diff(est) <= 0)
