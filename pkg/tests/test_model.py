"""Parameter containers, regime classification, and sampling-scheme algebra."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfbm import (
    Fisher2x2,
    ModelParams,
    MonteCarloConfig,
    Regime,
    SamplingScheme,
    ScoreVector,
    Sym2x2,
    classify_regime,
)

VALID_H = st.floats(min_value=0.01, max_value=0.74).filter(
    lambda h: abs(h - 0.5) > 1e-3
)


class TestModelParams:
    @pytest.mark.parametrize("sigma", [0.0, -1.0, -1e-12])
    def test_rejects_nonpositive_sigma(self, sigma):
        with pytest.raises(ValueError):
            ModelParams(sigma=sigma, hurst=0.6)

    @pytest.mark.parametrize("sigma", [math.nan, math.inf, -math.inf])
    def test_rejects_nonfinite_sigma(self, sigma):
        with pytest.raises(ValueError):
            ModelParams(sigma=sigma, hurst=0.6)

    @pytest.mark.parametrize("hurst", [0.0, -0.1, 0.75, 0.8, 1.0, math.nan])
    def test_rejects_hurst_outside_open_interval(self, hurst):
        with pytest.raises(ValueError):
            ModelParams(sigma=1.0, hurst=hurst)

    def test_rejects_hurst_half(self):
        with pytest.raises(ValueError):
            ModelParams(sigma=1.0, hurst=0.5)

    def test_accepts_valid_values(self):
        p = ModelParams(sigma=2.5, hurst=0.6)
        assert p.sigma == 2.5
        assert p.hurst == 0.6

    def test_frozen(self):
        p = ModelParams(sigma=1.0, hurst=0.6)
        with pytest.raises(dataclasses.FrozenInstanceError):
            p.sigma = 2.0


class TestRegime:
    @pytest.mark.parametrize("hurst", [0.55, 0.6, 0.74])
    def test_noise_dominated(self, hurst):
        params = ModelParams(sigma=1.0, hurst=hurst)
        assert classify_regime(params) is Regime.NOISE_DOMINATED

    @pytest.mark.parametrize("hurst", [0.26, 0.35, 0.49])
    def test_signal_dominated_upper(self, hurst):
        params = ModelParams(sigma=1.0, hurst=hurst)
        assert classify_regime(params) is Regime.SIGNAL_DOMINATED_UPPER

    @pytest.mark.parametrize("hurst", [0.1, 0.2, 0.25])
    def test_signal_dominated_lower(self, hurst):
        params = ModelParams(sigma=1.0, hurst=hurst)
        assert classify_regime(params) is Regime.SIGNAL_DOMINATED_LOWER


class TestSamplingScheme:
    def test_derive_example(self):
        params = ModelParams(sigma=1.0, hurst=0.6)
        scheme = SamplingScheme.derive(params, n=100, alpha=0.4)
        assert scheme.n == 100
        assert scheme.alpha == 0.4
        assert scheme.delta == pytest.approx(100.0 ** -0.4, rel=1e-15)
        assert scheme.gamma == pytest.approx(
            scheme.delta ** (2 * 0.6 - 1.0), rel=1e-15
        )

    def test_small_hurst_requires_large_alpha(self):
        params = ModelParams(sigma=1.0, hurst=0.2)
        with pytest.raises(ValueError, match="alpha > 1/2"):
            SamplingScheme.derive(params, n=100, alpha=0.4)
        scheme = SamplingScheme.derive(params, n=100, alpha=0.6)
        assert scheme.alpha == 0.6

    def test_boundary_hurst_quarter_triggers_gate(self):
        params = ModelParams(sigma=1.0, hurst=0.25)
        with pytest.raises(ValueError, match="alpha > 1/2"):
            SamplingScheme.derive(params, n=100, alpha=0.5)

    @pytest.mark.parametrize("n", [0, -5])
    def test_rejects_bad_sample_size(self, n):
        params = ModelParams(sigma=1.0, hurst=0.6)
        with pytest.raises(ValueError):
            SamplingScheme.derive(params, n=n, alpha=0.4)

    def test_single_observation_allowed(self):
        params = ModelParams(sigma=1.0, hurst=0.6)
        scheme = SamplingScheme.derive(params, n=1, alpha=0.4)
        assert scheme.delta == 1.0

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.3, 1.5, math.nan])
    def test_rejects_alpha_outside_open_interval(self, alpha):
        params = ModelParams(sigma=1.0, hurst=0.6)
        with pytest.raises(ValueError):
            SamplingScheme.derive(params, n=100, alpha=alpha)

    @given(
        hurst=VALID_H,
        sigma=st.floats(min_value=0.1, max_value=10.0),
        n=st.integers(min_value=2, max_value=4096),
        alpha=st.floats(min_value=0.55, max_value=0.95),
    )
    @settings(max_examples=80, deadline=None)
    def test_derived_quantities_consistent(self, hurst, sigma, n, alpha):
        params = ModelParams(sigma=sigma, hurst=hurst)
        scheme = SamplingScheme.derive(params, n=n, alpha=alpha)
        assert scheme.delta == pytest.approx(float(n) ** -alpha, rel=1e-12)
        assert scheme.gamma * scheme.epsilon == pytest.approx(1.0, rel=1e-12)
        assert scheme.gamma == pytest.approx(
            sigma**2 * scheme.delta ** (2 * hurst - 1), rel=1e-12
        )

    def test_with_delta_records_spacing(self):
        params = ModelParams(sigma=1.0, hurst=0.6)
        scheme = SamplingScheme.with_delta(params, n=1, delta=0.158489)
        assert scheme.n == 1
        assert scheme.delta == 0.158489
        assert scheme.gamma == pytest.approx(0.158489 ** 0.2, rel=1e-14)

    def test_with_delta_matches_derive(self):
        params = ModelParams(sigma=1.3, hurst=0.35)
        derived = SamplingScheme.derive(params, n=200, alpha=0.45)
        direct = SamplingScheme.with_delta(params, n=200, delta=derived.delta)
        assert direct.gamma == pytest.approx(derived.gamma, rel=1e-14)
        assert direct.alpha == pytest.approx(derived.alpha, rel=1e-12)

    @pytest.mark.parametrize("delta", [0.0, -0.1, math.inf, math.nan])
    def test_with_delta_rejects_bad_spacing(self, delta):
        params = ModelParams(sigma=1.0, hurst=0.6)
        with pytest.raises(ValueError):
            SamplingScheme.with_delta(params, n=4, delta=delta)


class TestMonteCarloConfig:
    def _scheme(self):
        params = ModelParams(sigma=1.0, hurst=0.6)
        return params, SamplingScheme.derive(params, n=100, alpha=0.4)

    def test_valid(self):
        params, scheme = self._scheme()
        cfg = MonteCarloConfig(
            params=params, scheme=scheme, replications=100, seed=7
        )
        assert cfg.score_source == "exact"

    @pytest.mark.parametrize("m", [0, 1, -3])
    def test_rejects_too_few_replications(self, m):
        params, scheme = self._scheme()
        with pytest.raises(ValueError):
            MonteCarloConfig(params=params, scheme=scheme, replications=m, seed=7)

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_rejects_out_of_range_seed(self, seed):
        params, scheme = self._scheme()
        with pytest.raises(ValueError):
            MonteCarloConfig(
                params=params, scheme=scheme, replications=10, seed=seed
            )

    def test_rejects_unknown_score_source(self):
        params, scheme = self._scheme()
        with pytest.raises(ValueError):
            MonteCarloConfig(
                params=params,
                scheme=scheme,
                replications=10,
                seed=7,
                score_source="other",
            )


class TestLinearAlgebraContainers:
    def test_score_vector_fields(self):
        s = ScoreVector(d_sigma=1.5, d_h=-0.25)
        assert s.d_sigma == 1.5
        assert s.d_h == -0.25

    def test_sym2x2_round_trip(self):
        m = Sym2x2(a11=2.0, a12=0.5, a22=3.0)
        arr = m.as_array()
        assert arr.shape == (2, 2)
        assert arr[0, 1] == arr[1, 0] == 0.5
        back = Sym2x2.from_array(arr)
        assert back == m
        assert m.det() == pytest.approx(2.0 * 3.0 - 0.25, rel=1e-15)

    def test_sym2x2_from_array_symmetrizes_roundoff(self):
        arr = np.array([[1.0, 0.2 + 1e-16], [0.2 - 1e-16, 1.0]])
        m = Sym2x2.from_array(arr)
        assert m.a12 == pytest.approx(0.2, abs=1e-15)

    def test_sym2x2_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            Sym2x2.from_array(np.zeros((3, 3)))

    def test_fisher_requires_positive_definite(self):
        Fisher2x2(a11=2.0, a12=0.5, a22=3.0)
        with pytest.raises(ValueError):
            Fisher2x2(a11=1.0, a12=2.0, a22=1.0)
        with pytest.raises(ValueError):
            Fisher2x2(a11=-1.0, a12=0.0, a22=1.0)
