"""Periodogram, Whittle scores, structural component, and fourth-moment diagnostics.

The periodogram I(lambda_k) = (1/n)|sum_t x_t e^{-i lambda_k t}|^2 is compared
with the model spectral density of the increments,

    f_obs(lambda) = delta * (1 + gamma * f_H(lambda)),

through D(lambda_k) = I(lambda_k) - f_obs(lambda_k).  The frequency-domain
scores are Riemann sums of kernel * D over the Fourier grid, excluding
lambda_0 and exploiting the evenness of every factor: terms for k and n - k
are equal, so sums run over k = 1..floor(n/2) with weight 2 (the lambda = pi
term counted once when n is even).  With C_sigma = n gamma / (2 pi sigma
delta) and C_z = n gamma / (4 pi delta),

    d_sigma l^W = C_sigma * (2 pi / n) * sum_k  f_H/(1+gamma f_H)^2 * D,
    z           = C_z     * (2 pi / n) * sum_k fdot_H/(1+gamma f_H)^2 * D,
    d_H l^W     = sigma * ln(delta) * d_sigma l^W + z,

the last line holding as an exact identity by construction.  gamma is always
recomputed from the evaluation parameters (sigma^2 delta^{2H-1}), with only
the spacing delta taken from the scheme.

``fourth_moment_ratio`` evaluates tr((A V)^4) / tr((A V)^2)^2 for the exact
score weight matrix A, the finite-n certificate that a centered quadratic
form is asymptotically Gaussian when the ratio vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import likelihood
from .model import ModelParams, SamplingScheme, ScoreVector
from .simulate import IncrementSample
from .spectral import DEFAULT_CONFIG, SpectralEvalConfig, fgn_spectral_density

_TWO_PI = 2.0 * np.pi
_PARSEVAL_RTOL = 1e-10


@dataclass(frozen=True)
class Periodogram:
    """Periodogram values on the Fourier grid lambda_k = 2 pi k / n, k = 1..n-1.

    The zero-frequency ordinate is kept (privately) so the Parseval identity
    I(0) + sum_{k>=1} I(lambda_k) = sum_t x_t^2 can be checked; it is excluded
    from all scoring frequencies.
    """

    freqs: np.ndarray
    values: np.ndarray
    zero_frequency: float

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if freqs.shape != values.shape or freqs.ndim != 1:
            raise ValueError("freqs and values must be 1-d arrays of equal length")
        if np.any(values < 0):
            raise ValueError("periodogram values must be non-negative")
        freqs.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size + 1


def periodogram(x) -> Periodogram:
    """Periodogram of one series via the FFT, Parseval-checked on construction."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("periodogram requires a 1-d series of length >= 2")
    n = x.size
    values = np.abs(np.fft.fft(x)) ** 2 / n
    power = float(x @ x)
    total = float(values.sum())
    if abs(total - power) > _PARSEVAL_RTOL * max(power, 1.0):
        raise FloatingPointError(
            f"Parseval identity violated: spectral sum {total} vs power {power}"
        )
    freqs = _TWO_PI * np.arange(1, n) / n
    return Periodogram(freqs=freqs, values=values[1:], zero_frequency=float(values[0]))


class WhittleKernel:
    """Precomputed frequency-grid weights for Whittle scoring at one (params, scheme).

    Spectral densities are evaluated once on the half grid k = 1..floor(n/2)
    and shared between all replicates; scoring a batch of series is then a
    single FFT plus two dot products.  Public attributes ``lam_half``,
    ``f_half``, ``fdot_half``, ``f_obs_half`` expose the grid for tests.
    """

    def __init__(
        self,
        params: ModelParams,
        scheme: SamplingScheme,
        cfg: SpectralEvalConfig = DEFAULT_CONFIG,
    ):
        if scheme.n < 2:
            raise ValueError("Whittle scoring requires n >= 2")
        self.params = params
        self.scheme = scheme
        n, delta = scheme.n, scheme.delta
        sigma, hurst = params.sigma, params.hurst
        self.gamma = sigma**2 * delta ** (2.0 * hurst - 1.0)
        self.n_half = n // 2

        k = np.arange(1, self.n_half + 1)
        self.lam_half = _TWO_PI * k / n
        self.f_half = fgn_spectral_density(hurst, self.lam_half, order=0, cfg=cfg)
        self.fdot_half = fgn_spectral_density(hurst, self.lam_half, order=1, cfg=cfg)
        one_plus = 1.0 + self.gamma * self.f_half
        self.f_obs_half = delta * one_plus
        self._kernel_sigma = self.f_half / one_plus**2
        self._kernel_z = self.fdot_half / one_plus**2
        self._c_sigma = n * self.gamma / (_TWO_PI * sigma * delta)
        self._c_z = n * self.gamma / (2.0 * _TWO_PI * delta)
        self._log_delta = float(np.log(delta))

    def grid_weights(self, stride: int = 1) -> np.ndarray:
        """Riemann weights over the half grid for the (possibly thinned) Fourier grid.

        ``stride`` s restricts the sum to frequencies of the n/s-point grid
        (every s-th k); weights are 2 * (2 pi s / n) with the lambda = pi term,
        when present, counted once.
        """
        n = self.scheme.n
        if stride < 1 or n % stride:
            raise ValueError("stride must be a positive divisor of n")
        m = n // stride
        w = np.zeros(self.n_half)
        idx = np.arange(stride, self.n_half + 1, stride) - 1
        w[idx] = 2.0
        if m % 2 == 0:
            w[self.n_half - 1] = 1.0
        return w * (_TWO_PI * stride / n)

    def half_values(self, x: np.ndarray) -> np.ndarray:
        """Periodogram ordinates I(lambda_k), k = 1..floor(n/2), batched over leading axes."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.scheme.n:
            raise ValueError(
                f"series length {x.shape[-1]} does not match scheme n={self.scheme.n}"
            )
        spec = np.fft.rfft(x, axis=-1)
        return (spec.real**2 + spec.imag**2)[..., 1 : self.n_half + 1] / self.scheme.n

    def scores_from_half(self, i_half: np.ndarray, stride: int = 1):
        """(d_sigma l^W, d_H l^W, z) from half-grid periodogram ordinates."""
        w = self.grid_weights(stride)
        d = i_half - self.f_obs_half
        s_sigma = self._c_sigma * (d @ (w * self._kernel_sigma))
        z = self._c_z * (d @ (w * self._kernel_z))
        s_h = self.params.sigma * self._log_delta * s_sigma + z
        return s_sigma, s_h, z

    def score(self, x: np.ndarray, stride: int = 1):
        """Whittle score triple for one series or a batch (leading axes preserved)."""
        return self.scores_from_half(self.half_values(x), stride)


@lru_cache(maxsize=8)
def get_whittle_kernel(params: ModelParams, scheme: SamplingScheme) -> WhittleKernel:
    return WhittleKernel(params, scheme)


def score_whittle(
    x, params: ModelParams, scheme: SamplingScheme
) -> tuple[ScoreVector, float]:
    """Whittle score vector and the structural component z for one series."""
    s_sigma, s_h, z = get_whittle_kernel(params, scheme).score(x)
    return ScoreVector(d_sigma=float(s_sigma), d_h=float(s_h)), float(z)


def periodogram_decomposition(
    sample: IncrementSample,
) -> tuple[Periodogram, Periodogram, np.ndarray]:
    """Split periodogram(x) into its signal, noise, and cross parts.

    By linearity of the DFT,

        I_x = sigma^2 delta^{2H} I_g + delta I_z + 2 sigma delta^{H+1/2} Re J_gz,

    where J_gz(lambda_k) = (1/n) (DFT g)_k conj((DFT z)_k).  Returns the
    periodograms of g and z plus Re J_gz on the grid k = 1..n-1; scaling by
    the three coefficients above reconstructs periodogram(x.x) exactly.
    """
    n = sample.scheme.n
    if n < 2:
        raise ValueError("periodogram decomposition requires n >= 2")
    spec_g = np.fft.fft(sample.g)
    spec_z = np.fft.fft(sample.z)
    cross = (spec_g * np.conj(spec_z)).real[1:] / n
    return periodogram(sample.g), periodogram(sample.z), cross


def fourth_moment_ratio(
    params: ModelParams, scheme: SamplingScheme, which: str = "sigma"
) -> float:
    """tr((A V)^4) / tr((A V)^2)^2 for the exact score weight matrix A.

    ``which`` selects the sigma direction or, for 'h', the structural
    direction with Tdot alone; any overall scaling of A cancels in the ratio,
    which equals 1 at n = 1 and decays like O(1/n).
    """
    if which not in ("sigma", "h"):
        raise ValueError(f"which must be 'sigma' or 'h', got {which!r}")
    kernel = likelihood.get_kernel(params, scheme)
    weight = kernel.quad_weight("sigma" if which == "sigma" else "struct")
    b = weight @ kernel.v
    b2 = b @ b
    tr2 = float(np.einsum("ij,ji->", b, b))
    tr4 = float(np.einsum("ij,ji->", b2, b2))
    if tr2 == 0.0:
        # the structural weight is identically zero at n = 1 (the lag-0
        # autocovariance does not depend on H), leaving the ratio undefined
        raise FloatingPointError(
            f"degenerate score direction {which!r}: zero weight matrix at n={scheme.n}"
        )
    return tr4 / tr2**2
