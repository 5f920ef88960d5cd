"""Rate matrices, normalized scores, observed information, and LAN remainders.

The rate matrix

    phi_n = scale * [[1, off_diag], [0, 1]],   off_diag = -sigma ln(delta),

with scale = v_n = 1/(sqrt(n) delta^{2H-1}) in the noise-dominated regime and
scale = n^{-1/2} otherwise, orthogonalizes the score vector: the normalized
score phi_n^T grad l has second component scale * (d_H l - sigma ln(delta)
d_sigma l), in which the logarithmically divergent parts of d_H l cancel and
only the structural direction survives.  The normalized observed information
is the congruence phi_n^T (-hessian) phi_n, and the LAN remainder is the
defect of the quadratic expansion

    r_n = [l(theta + phi_n u) - l(theta)] - u^T Delta_n + (1/2) u^T J_n u,

reported both with the observed J_n and with the limiting Fisher matrix.
Parameter perturbations that leave the admissible set abort; they are never
clamped, since a clamped draw would silently bias remainder statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import likelihood, whittle
from .model import (
    ModelParams,
    Regime,
    SamplingScheme,
    Sym2x2,
    classify_regime,
)
from .spectral import fisher_asymptotic

__all__ = [
    "RateMatrix",
    "LanRemainder",
    "rate_matrix",
    "normalized_score",
    "normalized_observed_info",
    "lan_remainder",
    "fisher_asymptotic",
]


@dataclass(frozen=True)
class RateMatrix:
    """Upper-triangular normalization phi_n = scale * [[1, off_diag], [0, 1]]."""

    scale: float
    off_diag: float
    regime: Regime

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if not math.isfinite(self.off_diag):
            raise ValueError(f"off_diag must be finite, got {self.off_diag}")

    def as_array(self) -> np.ndarray:
        return self.scale * np.array([[1.0, self.off_diag], [0.0, 1.0]])

    def transform_score(self, d_sigma, d_h):
        """phi_n^T (d_sigma, d_h), batched over array inputs."""
        first = self.scale * np.asarray(d_sigma, dtype=float)
        second = self.scale * (np.asarray(d_h, dtype=float) + self.off_diag * np.asarray(d_sigma, dtype=float))
        return first, second

    def congruence(self, m: Sym2x2) -> Sym2x2:
        """phi_n^T M phi_n for a symmetric M."""
        s2, o = self.scale**2, self.off_diag
        return Sym2x2(
            a11=s2 * m.a11,
            a12=s2 * (o * m.a11 + m.a12),
            a22=s2 * (o * o * m.a11 + 2.0 * o * m.a12 + m.a22),
        )


@dataclass(frozen=True)
class LanRemainder:
    """Quadratic-expansion defect with observed (r_n) and limiting (r_asymptotic) curvature."""

    r_n: float
    r_asymptotic: float


def rate_matrix(params: ModelParams, scheme: SamplingScheme) -> RateMatrix:
    """Regime-dispatched rate matrix for (params, scheme)."""
    regime = classify_regime(params)
    if regime is Regime.NOISE_DOMINATED:
        scale = 1.0 / (
            math.sqrt(scheme.n) * scheme.delta ** (2.0 * params.hurst - 1.0)
        )
    else:
        scale = 1.0 / math.sqrt(scheme.n)
    off_diag = -params.sigma * math.log(scheme.delta)
    return RateMatrix(scale=scale, off_diag=off_diag, regime=regime)


def normalized_score(
    x, params: ModelParams, scheme: SamplingScheme, source: str = "exact"
) -> np.ndarray:
    """phi_n^T grad l as a 2-vector, from exact or Whittle scores."""
    phi = rate_matrix(params, scheme)
    if source == "exact":
        d_sigma, d_h = likelihood.get_kernel(params, scheme).score(x)
    elif source == "whittle":
        d_sigma, d_h, _ = whittle.get_whittle_kernel(params, scheme).score(x)
    else:
        raise ValueError(f"source must be 'exact' or 'whittle', got {source!r}")
    first, second = phi.transform_score(d_sigma, d_h)
    return np.array([float(first), float(second)])


def normalized_observed_info(
    x, params: ModelParams, scheme: SamplingScheme
) -> Sym2x2:
    """phi_n^T (-hessian) phi_n evaluated on one series."""
    phi = rate_matrix(params, scheme)
    hess = likelihood.hessian_exact(x, params, scheme)
    neg = Sym2x2(a11=-hess.a11, a12=-hess.a12, a22=-hess.a22)
    return phi.congruence(neg)


def _shifted_params(
    params: ModelParams, scheme: SamplingScheme, phi: RateMatrix, u: np.ndarray
) -> ModelParams:
    """theta + phi_n u, aborting when the shift leaves the admissible set."""
    d_sigma = phi.scale * (u[0] + phi.off_diag * u[1])
    d_h = phi.scale * u[1]
    try:
        shifted = ModelParams(sigma=params.sigma + d_sigma, hurst=params.hurst + d_h)
    except ValueError as exc:
        raise ValueError(
            f"perturbation u={u.tolist()} leaves the admissible parameter set: {exc}"
        ) from exc
    if shifted.hurst <= 0.25 and scheme.alpha <= 0.5:
        raise ValueError(
            f"perturbation u={u.tolist()} reaches (hurst, alpha) = "
            f"({shifted.hurst}, {scheme.alpha}): alpha > 1/2 is required when hurst <= 1/4"
        )
    return shifted


def lan_remainder(x, params: ModelParams, scheme: SamplingScheme, u) -> LanRemainder:
    """Defect of the LAN quadratic expansion at perturbation u.

    r = [l(x; theta + phi_n u) - l(x; theta)] - u^T Delta_n + (1/2) u^T J u
    with Delta_n the exact normalized score; r_n uses the observed normalized
    information J_n, r_asymptotic the limiting Fisher matrix.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (2,):
        raise ValueError(f"u must be a 2-vector, got shape {u.shape}")
    phi = rate_matrix(params, scheme)
    if not u.any():
        return LanRemainder(r_n=0.0, r_asymptotic=0.0)
    shifted = _shifted_params(params, scheme, phi, u)

    base = likelihood.get_kernel(params, scheme)
    log_gap = float(
        likelihood.LikelihoodKernel(shifted, scheme).loglik(x) - base.loglik(x)
    )
    d_sigma, d_h = base.score(x)
    first, second = phi.transform_score(d_sigma, d_h)
    linear = float(u[0] * first + u[1] * second)

    j_obs = normalized_observed_info(x, params, scheme).as_array()
    j_lim = fisher_asymptotic(params).as_array()
    quad_obs = 0.5 * float(u @ j_obs @ u)
    quad_lim = 0.5 * float(u @ j_lim @ u)
    return LanRemainder(
        r_n=log_gap - linear + quad_obs,
        r_asymptotic=log_gap - linear + quad_lim,
    )
