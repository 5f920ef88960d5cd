"""Exact sampling of fractional Gaussian noise, white noise, and the observed increments.

The observed vector follows x[i] = sigma * delta^H * g[i] + delta^(1/2) * z[i]
with g a standard-fGn draw (covariance T_n) and z independent white noise.
Sampling is deterministic given (seed, stream, n, method): every replicate owns
a counter-based Philox substream keyed by (seed, stream), so results do not
depend on evaluation order or parallel scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .covariance import autocovariance_row
from .model import ModelParams, SamplingScheme

#: Largest n for which the default method is dense Cholesky; above this the
#: O(n log n) circulant embedding takes over.
CHOLESKY_DEFAULT_LIMIT = 512

_METHODS = ("cholesky", "circulant_embedding")

#: Relative slack on circulant-embedding eigenvalues: tiny negative values of
#: roundoff size are treated as zero rather than triggering the fallback.
_EIG_TOLERANCE = 1e-12


@dataclass(frozen=True)
class IncrementSample:
    """One simulated replicate: observed increments plus their two components."""

    x: np.ndarray
    g: np.ndarray
    z: np.ndarray
    params: ModelParams
    scheme: SamplingScheme
    seed: int
    stream: int
    method: str
    fallback: bool

    def __post_init__(self):
        for name in ("x", "g", "z"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (len(self.x) == len(self.g) == len(self.z) == self.scheme.n):
            raise ValueError("component vectors must all have length scheme.n")


def _generator(seed: int, stream: int) -> np.random.Generator:
    """Philox substream for one replicate; (seed, stream) is the full key."""
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@lru_cache(maxsize=8)
def _fgn_cholesky(hurst: float, n: int) -> np.ndarray:
    row = autocovariance_row(hurst, n, order=0)
    lower = cholesky(toeplitz(row), lower=True)
    lower.flags.writeable = False
    return lower


@lru_cache(maxsize=8)
def circulant_eigenvalues(hurst: float, n: int):
    """Eigenvalues of the 2n-point even circulant embedding of T_n.

    All-nonnegative eigenvalues make the embedding an exact sampler; a
    negative eigenvalue means the embedding fails for this (hurst, n).
    """
    row = autocovariance_row(hurst, n + 1, order=0)  # lags 0..n
    circ = np.concatenate([row, row[n - 1:0:-1]])  # length 2n, even extension
    eigs = np.fft.fft(circ).real
    eigs.flags.writeable = False
    return eigs


def _sample_fgn_cholesky(hurst: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return _fgn_cholesky(hurst, n) @ rng.standard_normal(n)


def _sample_fgn_circulant(eigs: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    m = 2 * n
    lam = np.clip(eigs, 0.0, None)
    a = rng.standard_normal(n + 1)
    b = rng.standard_normal(n - 1) if n > 1 else np.empty(0)
    y = np.zeros(m, dtype=complex)
    y[0] = np.sqrt(lam[0]) * a[0]
    y[n] = np.sqrt(lam[n]) * a[n]
    if n > 1:
        half = np.sqrt(0.5 * lam[1:n])
        y[1:n] = half * (a[1:n] + 1j * b)
        y[n + 1:] = np.conj(y[1:n][::-1])
    return np.fft.fft(y).real[:n] / np.sqrt(m)


def _resolve_method(n: int, method: str | None) -> str:
    if method is None:
        return "cholesky" if n <= CHOLESKY_DEFAULT_LIMIT else "circulant_embedding"
    if method not in _METHODS:
        raise ValueError(f"method must be one of {_METHODS}, got {method!r}")
    return method


def sample_components(
    params: ModelParams,
    scheme: SamplingScheme,
    seed: int,
    method: str | None = None,
    stream: int = 0,
) -> IncrementSample:
    """Draw (x, g, z) for one replicate.

    g is an exact draw from N(0, T_n): dense Cholesky, or Davies-Harte
    circulant embedding when every embedding eigenvalue is nonnegative
    (otherwise the draw falls back to Cholesky and the sample records
    ``fallback=True``). z is independent standard normal, drawn after g.
    """
    method = _resolve_method(scheme.n, method)
    rng = _generator(seed, stream)
    fallback = False
    if method == "circulant_embedding":
        eigs = circulant_eigenvalues(params.hurst, scheme.n)
        if eigs.min() < -_EIG_TOLERANCE * eigs.max():
            fallback = True
            g = _sample_fgn_cholesky(params.hurst, scheme.n, rng)
        else:
            g = _sample_fgn_circulant(eigs, scheme.n, rng)
    else:
        g = _sample_fgn_cholesky(params.hurst, scheme.n, rng)
    z = rng.standard_normal(scheme.n)
    x = params.sigma * scheme.delta**params.hurst * g + np.sqrt(scheme.delta) * z
    return IncrementSample(
        x=x, g=g, z=z, params=params, scheme=scheme,
        seed=int(seed), stream=int(stream), method=method, fallback=fallback,
    )
