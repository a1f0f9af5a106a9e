import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from berman.paths import (
    GridSpec,
    PathBatch,
    exponential_draws,
    fgn_autocovariance,
    increment_covariance,
    ou_transition,
    sample_cholesky_paths,
    sample_fbm_paths,
    sample_integrated_ou_paths,
    sample_paths,
    trajectory_rng,
)
from berman.variance_models import fbm, integrated_ou, power_table

from _sampler_checks import bonferroni_z, moment_z_scores, variance_z

LEVEL = 0.01


def _v(batch):
    """Undo the drift: ``V = W + sigma2 / 2``."""
    return batch.values + 0.5 * np.asarray(batch.model.sigma2(batch.grid.times))


class TestGridSpec:
    def test_basic_properties(self):
        g = GridSpec(2.0, 0.5)
        assert g.n_steps == 8 and g.n_points == 9 and g.center == 4
        np.testing.assert_allclose(g.times, np.linspace(-2, 2, 9))
        # point counting: the largest possible sojourn is 2T + e
        assert g.mesh_mass == 0.5 and g.window_measure == pytest.approx(4.5)

    def test_lattice(self):
        g = GridSpec(2.0, 0.25, delta=1.0)
        assert g.stride == 4 and g.mesh_mass == 1.0
        np.testing.assert_allclose(g.times[g.mesh_indices()], [-2, -1, 0, 1, 2])

    @pytest.mark.parametrize("kw", [{"half_width": 1.0, "step": 0.3}, {"half_width": 1.0, "step": 0.25, "delta": 0.3},
                                    {"half_width": 1.0, "step": 0.0}, {"half_width": -1.0, "step": 0.25}])
    def test_rejects_incommensurate(self, kw):
        with pytest.raises(ValueError):
            GridSpec(**kw)


class TestRng:
    def test_streams_independent_of_batching(self):
        whole = exponential_draws(10, seed=7)
        parts = np.concatenate([exponential_draws(4, seed=7), exponential_draws(6, seed=7, start=4)])
        np.testing.assert_array_equal(whole, parts)

    def test_path_and_exp_streams_differ(self):
        a = trajectory_rng(1, 0, 0).standard_normal(4)
        b = trajectory_rng(1, 0, 1).standard_normal(4)
        assert not np.allclose(a, b)

    @pytest.mark.parametrize("model", [fbm(0.3), fbm(1.0), integrated_ou(), power_table([(0.1, 0.1), (1, 1), (10, 10)])])
    def test_chunking_invariance(self, model):
        g = GridSpec(1.0, 1 / 16)
        whole = sample_paths(model, g, 67, seed=3).values
        split = np.vstack([sample_paths(model, g, 2, 3, 0).values, sample_paths(model, g, 65, 3, 2).values])
        np.testing.assert_array_equal(whole, split)


class TestPathShape:
    @pytest.mark.parametrize("model", [fbm(0.5), fbm(1.0), integrated_ou(), power_table([(0.1, 0.1), (1, 1), (10, 10)])])
    def test_origin_pinned_and_drift(self, model):
        b = sample_paths(model, GridSpec(2.0, 0.125), 5, seed=0)
        assert b.values.shape == (5, 33)
        assert np.all(b.values[:, b.grid.center] == 0.0)

    def test_h1_is_a_line(self):
        b = sample_fbm_paths(fbm(1.0), GridSpec(2.0, 0.25), 3, seed=1)
        v = _v(b)
        slopes = v[:, -1] / 2.0
        np.testing.assert_allclose(v, slopes[:, None] * b.grid.times[None, :], atol=1e-12)

    def test_wrong_model_rejected(self):
        with pytest.raises(ValueError):
            sample_fbm_paths(integrated_ou(), GridSpec(1.0, 0.5), 2, 0)
        with pytest.raises(ValueError):
            sample_integrated_ou_paths(GridSpec(1.0, 0.5), 2, 0, model=fbm(0.5))

    def test_inadmissible_table_refused(self):
        # local slope 2.3 > 2 cannot be the variogram of a Gaussian process
        with pytest.raises(np.linalg.LinAlgError):
            sample_paths(power_table([(0.1, 0.01), (1, 2), (10, 20)]), GridSpec(2.0, 0.125), 2, seed=0)

    def test_dense_size_limit(self):
        with pytest.raises(ValueError):
            sample_cholesky_paths(fbm(0.5), GridSpec(64.0, 2.0**-6), 1, 0)


class TestDumpLoad:
    @pytest.mark.parametrize("model", [fbm(0.7), integrated_ou(), power_table([(0.5, 0.4), (2.0, 3.0)])])
    def test_round_trip(self, tmp_path, model):
        b = sample_paths(model, GridSpec(1.0, 0.25, delta=0.5), 3, seed=9, start=11)
        f = tmp_path / "paths.bin"
        b.dump(f)
        c = PathBatch.load(f)
        np.testing.assert_array_equal(b.values, c.values)
        assert (c.grid, c.model, c.seed, c.start) == (b.grid, b.model, b.seed, b.start)

    def test_bad_magic(self, tmp_path):
        f = tmp_path / "junk.bin"
        f.write_bytes(b"not a dump")
        with pytest.raises(ValueError):
            PathBatch.load(f)


class TestDaviesHarte:
    def test_autocovariance_h_half_is_white(self):
        np.testing.assert_allclose(fgn_autocovariance(0.5, np.arange(5)), [1, 0, 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("hurst", [0.1, 0.3, 0.7, 0.95])
    def test_matches_dense_oracle(self, hurst):
        # 9-point grid with the origin pinned: an 8-dimensional Gaussian vector
        g = GridSpec(2.0, 0.5)
        model = fbm(hurst)
        keep = np.arange(g.n_points) != g.center
        a = _v(sample_fbm_paths(model, g, 20000, seed=101))[:, keep]
        b = _v(sample_cholesky_paths(model, g, 20000, seed=202))[:, keep]
        z = moment_z_scores(a, b)
        assert np.max(np.abs(z)) < bonferroni_z(LEVEL, z.size)

    def test_covariance_against_theory(self):
        g = GridSpec(4.0, 0.5)
        model = fbm(0.3)
        v = _v(sample_fbm_paths(model, g, 20000, seed=5))
        cov = np.cov(v, rowvar=False)
        np.testing.assert_allclose(cov, increment_covariance(model, g.times), atol=0.1)

    def test_h_half_increments_independent(self):
        g = GridSpec(4.0, 0.25)
        v = _v(sample_fbm_paths(fbm(0.5), g, 20000, seed=17))
        inc = np.diff(v, axis=1)
        corr = np.corrcoef(inc, rowvar=False)[np.triu_indices(inc.shape[1], 1)]
        z = corr * math.sqrt(inc.shape[0])
        assert np.max(np.abs(z)) < bonferroni_z(LEVEL, z.size)
        assert variance_z(inc[:, 0], 2 * 0.25) == pytest.approx(0, abs=bonferroni_z(LEVEL, 1))


class TestIntegratedOUSampler:
    def test_transition_small_step(self):
        a, l11, l21, l22 = ou_transition(1e-5)
        e = 1e-5
        assert a == pytest.approx(math.exp(-e), rel=1e-15)
        assert l11**2 == pytest.approx(-math.expm1(-2 * e), rel=1e-12)
        # conditional variance of the integral is e^3 / 12 to leading order
        assert l22**2 == pytest.approx(e**3 / 12, rel=1e-4)

    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_variance(self, t):
        g = GridSpec(2.0, 2.0**-7)
        v = _v(sample_integrated_ou_paths(g, 20000, seed=31))
        i = g.center + round(t / g.step)
        target = integrated_ou().sigma2(t)
        assert abs(variance_z(v[:, i], target)) < bonferroni_z(LEVEL, 3)

    def test_matches_dense_oracle(self):
        g = GridSpec(2.0, 0.5)
        keep = np.arange(g.n_points) != g.center
        a = _v(sample_integrated_ou_paths(g, 20000, seed=41))[:, keep]
        b = _v(sample_cholesky_paths(integrated_ou(), g, 20000, seed=42))[:, keep]
        z = moment_z_scores(a, b)
        assert np.max(np.abs(z)) < bonferroni_z(LEVEL, z.size)

    def test_ou_lag_two_covariance(self):
        g = GridSpec(1.0, 0.25)
        _, x = sample_integrated_ou_paths(g, 20000, seed=8, return_ou=True)
        prod = x[:, 0] * x[:, 2]
        z = (prod.mean() - math.exp(-0.5)) / (prod.std(ddof=1) / math.sqrt(prod.size))
        assert abs(z) < bonferroni_z(LEVEL, 1)
        assert abs(variance_z(x[:, 3], 1.0)) < bonferroni_z(LEVEL, 1)


@given(st.integers(0, 2**31), st.integers(0, 1000))
def test_trajectory_rng_deterministic(seed, index):
    a = trajectory_rng(seed, index).standard_normal(3)
    b = trajectory_rng(seed, index).standard_normal(3)
    np.testing.assert_array_equal(a, b)
