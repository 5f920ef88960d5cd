"""Exact sampling of the observed increments and both latent components."""

from __future__ import annotations

import numpy as np
import pytest

import mfbm.simulate as simulate
from mfbm import ModelParams, SamplingScheme, sample_components


def _setup(n=100, hurst=0.6, alpha=0.4, sigma=1.0):
    params = ModelParams(sigma=sigma, hurst=hurst)
    scheme = SamplingScheme.derive(params, n=n, alpha=alpha)
    return params, scheme


class TestDeterminism:
    def test_bitwise_reproducible(self):
        params, scheme = _setup()
        a = sample_components(params, scheme, seed=7, stream=3)
        b = sample_components(params, scheme, seed=7, stream=3)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.g, b.g)
        assert np.array_equal(a.z, b.z)

    def test_streams_are_distinct(self):
        params, scheme = _setup()
        a = sample_components(params, scheme, seed=7, stream=0)
        b = sample_components(params, scheme, seed=7, stream=1)
        assert not np.array_equal(a.x, b.x)

    def test_seeds_are_distinct(self):
        params, scheme = _setup()
        a = sample_components(params, scheme, seed=7)
        b = sample_components(params, scheme, seed=8)
        assert not np.array_equal(a.x, b.x)

    def test_arrays_are_readonly(self):
        params, scheme = _setup(n=8)
        s = sample_components(params, scheme, seed=1)
        with pytest.raises(ValueError):
            s.x[0] = 0.0


class TestAssembly:
    def test_x_combines_components_exactly(self):
        params, scheme = _setup(n=64, sigma=1.7)
        s = sample_components(params, scheme, seed=11)
        expected = (
            params.sigma * scheme.delta**params.hurst * s.g
            + np.sqrt(scheme.delta) * s.z
        )
        np.testing.assert_array_equal(s.x, expected)

    def test_metadata_recorded(self):
        params, scheme = _setup(n=32)
        s = sample_components(params, scheme, seed=5, stream=9)
        assert (s.seed, s.stream) == (5, 9)
        assert s.method == "cholesky"
        assert s.fallback is False


class TestMethodResolution:
    def test_default_small_n_is_cholesky(self):
        params, scheme = _setup(n=512)
        assert sample_components(params, scheme, seed=1).method == "cholesky"

    def test_default_large_n_is_circulant(self):
        params, scheme = _setup(n=513)
        s = sample_components(params, scheme, seed=1)
        assert s.method == "circulant_embedding"
        assert s.fallback is False

    def test_explicit_method_honored(self):
        params, scheme = _setup(n=64)
        s = sample_components(params, scheme, seed=1, method="circulant_embedding")
        assert s.method == "circulant_embedding"

    def test_unknown_method_rejected(self):
        params, scheme = _setup(n=16)
        with pytest.raises(ValueError):
            sample_components(params, scheme, seed=1, method="spectral")

    def test_negative_embedding_eigenvalue_falls_back(self, monkeypatch):
        params, scheme = _setup(n=16)
        bad = np.full(32, 1.0)
        bad[5] = -1e-3
        monkeypatch.setattr(
            simulate, "circulant_eigenvalues", lambda hurst, n: bad
        )
        s = sample_components(params, scheme, seed=3, method="circulant_embedding")
        assert s.fallback is True
        # the fallback draw is the Cholesky draw for the same substream
        ref = sample_components(params, scheme, seed=3, method="cholesky")
        np.testing.assert_array_equal(s.g, ref.g)


class TestDistribution:
    def test_observed_increment_variance(self):
        # Marginal variance of each x[i] is delta*(1 + gamma) = 0.26814 at
        # (sigma, H, n, alpha) = (1, 0.6, 100, 0.4).
        params, scheme = _setup()
        target = scheme.delta * (1.0 + scheme.gamma)
        assert target == pytest.approx(0.26812, abs=5e-5)
        m = 3000
        draws = np.stack(
            [sample_components(params, scheme, seed=42, stream=i).x for i in range(m)]
        )
        observed = float(np.mean(draws**2))
        assert observed == pytest.approx(target, rel=0.1)

    def test_fgn_lag_one_autocovariance(self):
        # Pooled lag-1 products of g estimate rho_H(1) = 0.148698 at H=0.6.
        params, scheme = _setup(n=256)
        m = 400
        acc = []
        for i in range(m):
            g = sample_components(params, scheme, seed=13, stream=i).g
            acc.append(np.mean(g[:-1] * g[1:]))
        assert float(np.mean(acc)) == pytest.approx(0.148698, abs=0.01)

    def test_fgn_covariance_matches_toeplitz(self):
        from mfbm.covariance import build_toeplitz

        params, scheme = _setup(n=8)
        m = 4000
        draws = np.stack(
            [sample_components(params, scheme, seed=3, stream=i).g for i in range(m)]
        )
        emp = draws.T @ draws / m
        np.testing.assert_allclose(
            emp, build_toeplitz(params.hurst, 8).dense(), atol=5.0 / np.sqrt(m)
        )

    def test_components_have_zero_mean(self):
        params, scheme = _setup(n=16)
        m = 2000
        draws = np.stack(
            [sample_components(params, scheme, seed=9, stream=i).g for i in range(m)]
        )
        np.testing.assert_allclose(draws.mean(axis=0), 0.0, atol=4.0 / np.sqrt(m))

    def test_methods_agree_in_distribution(self):
        # Cholesky and circulant embedding target the same law; their pooled
        # lag-1 estimates must agree within joint Monte Carlo error.
        params, scheme = _setup(n=128, hurst=0.35, alpha=0.6)
        m = 300
        est = {}
        for method in ("cholesky", "circulant_embedding"):
            acc = [
                np.mean(
                    sample_components(
                        params, scheme, seed=31, stream=i, method=method
                    ).g[:-1]
                    * sample_components(
                        params, scheme, seed=31, stream=i, method=method
                    ).g[1:]
                )
                for i in range(m)
            ]
            est[method] = (np.mean(acc), np.std(acc, ddof=1) / np.sqrt(m))
        diff = abs(est["cholesky"][0] - est["circulant_embedding"][0])
        se = np.hypot(est["cholesky"][1], est["circulant_embedding"][1])
        assert diff < 3.0 * se

    def test_white_component_is_standard_normal(self):
        params, scheme = _setup(n=64)
        m = 1000
        draws = np.stack(
            [sample_components(params, scheme, seed=17, stream=i).z for i in range(m)]
        )
        assert float(np.mean(draws**2)) == pytest.approx(1.0, abs=0.02)
        lag1 = float(np.mean(draws[:, :-1] * draws[:, 1:]))
        assert lag1 == pytest.approx(0.0, abs=0.02)
