"""Parameter and sampling-scheme types shared by every module.

The observation model is an increment sequence of a mixed fractional
Brownian motion: x[i] = sigma * delta^H * g[i] + delta^(1/2) * z[i],
where g is standard fGn with Hurst index H and z is white noise. All
types here are immutable value objects; validity is enforced at
construction so downstream code never re-checks.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "SamplingScheme",
    "Regime",
    "MonteCarloConfig",
    "ScoreVector",
    "Sym2x2",
    "Fisher2x2",
    "classify_regime",
]


class Regime(enum.Enum):
    """Asymptotic regime of the Hurst index.

    NOISE_DOMINATED:          1/2 < H < 3/4  (white noise dominates increments)
    SIGNAL_DOMINATED_UPPER:   1/4 < H < 1/2
    SIGNAL_DOMINATED_LOWER:   0 < H <= 1/4   (requires alpha > 1/2 sampling)
    """

    NOISE_DOMINATED = "noise_dominated"
    SIGNAL_DOMINATED_UPPER = "signal_dominated_upper"
    SIGNAL_DOMINATED_LOWER = "signal_dominated_lower"


@dataclass(frozen=True)
class ModelParams:
    """Unknown parameter pair (sigma, hurst).

    sigma must be positive; hurst must lie in (0, 3/4) excluding 1/2,
    where the two components are indistinguishable from scaled Brownian
    motion and the model is degenerate.
    """

    sigma: float
    hurst: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not (math.isfinite(self.hurst) and 0.0 < self.hurst < 0.75):
            raise ValueError(f"hurst must lie in (0, 3/4), got {self.hurst}")
        if self.hurst == 0.5:
            raise ValueError("hurst = 1/2 is excluded (degenerate model)")


def classify_regime(params: ModelParams) -> Regime:
    """Map the Hurst index to its asymptotic regime (total on the admissible set)."""
    h = params.hurst
    if h > 0.5:
        return Regime.NOISE_DOMINATED
    if h > 0.25:
        return Regime.SIGNAL_DOMINATED_UPPER
    return Regime.SIGNAL_DOMINATED_LOWER


@dataclass(frozen=True)
class SamplingScheme:
    """High-frequency observation grid with its derived scalars.

    n increments at spacing delta = n^(-alpha). gamma = sigma^2 *
    delta^(2H-1) is the signal-to-noise ratio of the fGn component
    against the white noise; epsilon = 1/gamma is the resolvent
    perturbation used in the low-H analysis. Build through
    :meth:`derive` so the scalars stay consistent with the parameters.
    """

    n: int
    alpha: float
    delta: float
    gamma: float
    epsilon: float

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("delta", "gamma", "epsilon"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @classmethod
    def derive(cls, params: ModelParams, n: int, alpha: float) -> "SamplingScheme":
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ValueError(f"n must be a positive integer, got {n}")
        if not (0.0 < alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        # The low-regularity regime is only identifiable on fast grids.
        if params.hurst <= 0.25 and alpha <= 0.5:
            raise ValueError(
                f"inadmissible (hurst, alpha) = ({params.hurst}, {alpha}): "
                "alpha > 1/2 is required when hurst <= 1/4"
            )
        delta = float(n) ** (-alpha)
        gamma = params.sigma**2 * delta ** (2.0 * params.hurst - 1.0)
        epsilon = delta ** (1.0 - 2.0 * params.hurst) / params.sigma**2
        return cls(n=int(n), alpha=float(alpha), delta=delta, gamma=gamma, epsilon=epsilon)

    @classmethod
    def with_delta(cls, params: ModelParams, n: int, delta: float) -> "SamplingScheme":
        """Scheme with an explicitly chosen spacing (alpha recorded nominally).

        Downstream computations consume n and delta only; alpha is kept for
        provenance and set to -ln(delta)/ln(n) when that lies in (0, 1),
        else to a nominal 0.5.
        """
        if not (math.isfinite(delta) and delta > 0):
            raise ValueError(f"delta must be positive and finite, got {delta}")
        alpha = 0.5
        if n >= 2 and delta < 1.0:
            candidate = -math.log(delta) / math.log(n)
            if 0.0 < candidate < 1.0:
                alpha = candidate
        gamma = params.sigma**2 * delta ** (2.0 * params.hurst - 1.0)
        epsilon = delta ** (1.0 - 2.0 * params.hurst) / params.sigma**2
        return cls(n=int(n), alpha=float(alpha), delta=float(delta), gamma=gamma, epsilon=epsilon)


@dataclass(frozen=True)
class MonteCarloConfig:
    """Replication settings for the score experiments."""

    params: ModelParams
    scheme: SamplingScheme
    replications: int
    seed: int
    score_source: str = "exact"

    def __post_init__(self):
        if self.replications < 2:
            raise ValueError("replications must be >= 2 (covariance is estimated)")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.score_source not in ("exact", "whittle"):
            raise ValueError(f"score_source must be 'exact' or 'whittle', got {self.score_source!r}")


@dataclass(frozen=True)
class ScoreVector:
    """Score components (d/d sigma, d/d hurst) of one log-likelihood evaluation."""

    d_sigma: float
    d_h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d_sigma, self.d_h])


@dataclass(frozen=True)
class Sym2x2:
    """Symmetric 2x2 matrix stored by its upper triangle."""

    a11: float
    a12: float
    a22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])

    @classmethod
    def from_array(cls, m) -> "Sym2x2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        # off-diagonals are averaged so roundoff asymmetry cannot leak through
        return cls(a11=float(m[0, 0]), a12=float(0.5 * (m[0, 1] + m[1, 0])), a22=float(m[1, 1]))

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12**2


@dataclass(frozen=True)
class Fisher2x2(Sym2x2):
    """Sym2x2 required to be positive definite (an information matrix)."""

    def __post_init__(self):
        if not (self.a11 > 0 and self.det() > 0):
            raise ValueError(
                f"information matrix must be positive definite, got "
                f"[[{self.a11}, {self.a12}], [{self.a12}, {self.a22}]]"
            )
