"""Spectral density of fGn, its Hurst derivative, and Fisher-matrix quadrature.

The density is
    f_H(lam) = Gamma(2H+1) sin(pi H) * 2(1-cos lam) * sum_k |lam + 2k pi|^(-2H-1),
normalized so that (1/2pi) integral over (-pi, pi] of f_H equals the unit fGn
variance. The lattice sum is truncated at |k| <= K; the discarded tail is a
pure power-law sum and is restored exactly through the Hurwitz zeta function.
The H-derivative is computed analytically: the prefactor contributes a
digamma/cotangent factor and each lattice term a -2 ln|lam + 2k pi| weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import digamma, gamma as gamma_fn, zeta

from .covariance import build_toeplitz
from .model import Fisher2x2, ModelParams, Regime, SamplingScheme, classify_regime

__all__ = [
    "SpectralEvalConfig",
    "PureFgnConstants",
    "fgn_spectral_density",
    "observation_spectral_density",
    "fisher_asymptotic",
    "pure_fgn_constants",
]

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SpectralEvalConfig:
    """Evaluation controls for the lattice sum and the Fisher quadrature."""

    truncation: int = 1000
    tail_correction: bool = True
    quadrature_points: int = 32
    endpoint_refinement_levels: int = 40

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        if self.quadrature_points < 16:
            raise ValueError("quadrature_points must be >= 16")
        if self.endpoint_refinement_levels < 0:
            raise ValueError("endpoint_refinement_levels must be >= 0")


DEFAULT_CONFIG = SpectralEvalConfig()


def _log_power_tail(s: float, q: np.ndarray) -> np.ndarray:
    """sum_{j>=0} ln(q+j) (q+j)^(-s) by Euler-Maclaurin through the g'/12 term.

    Used only beyond the truncation point, where the next correction is
    O(s^3 ln(q) q^(-s-3)) and far below double-precision relevance.
    """
    lq = np.log(q)
    integral = q ** (1.0 - s) * (lq / (s - 1.0) + 1.0 / (s - 1.0) ** 2)
    half_term = 0.5 * lq * q ** (-s)
    deriv_term = q ** (-s - 1.0) * (1.0 - s * lq) / 12.0
    return integral + half_term - deriv_term


def fgn_spectral_density(hurst: float, lam, order: int = 0, cfg: SpectralEvalConfig = DEFAULT_CONFIG):
    """Spectral density f_H of standard fGn (order 0) or its H-derivative (order 1).

    Parameters
    ----------
    hurst : float in (0, 1)
    lam : float or ndarray, frequencies with 0 < |lam| <= pi
        lam = 0 is rejected: the density has a pole there for H > 1/2 and
        the lattice sum is singular for every H.
    order : {0, 1}
    cfg : SpectralEvalConfig

    Returns a scalar for scalar input, an ndarray for array input.
    """
    if not (0.0 < hurst < 1.0):
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order}")
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=float))
    scalar = np.isscalar(lam) or np.ndim(lam) == 0
    a = np.abs(lam_arr)
    if np.any(a == 0.0):
        raise ValueError("lambda = 0 is outside the domain (spectral pole)")
    if np.any(a > np.pi * (1.0 + 1e-12)):
        raise ValueError("frequencies must satisfy |lambda| <= pi")

    s = 2.0 * hurst + 1.0
    k = np.arange(1, cfg.truncation + 1, dtype=float)[:, None]
    plus = _TWO_PI * k + a[None, :]
    minus = _TWO_PI * k - a[None, :]
    pow_sum = a ** (-s) + np.sum(plus ** (-s) + minus ** (-s), axis=0)
    if cfg.tail_correction:
        x = a / _TWO_PI
        q_hi, q_lo = cfg.truncation + 1.0 + x, cfg.truncation + 1.0 - x
        pow_sum = pow_sum + _TWO_PI ** (-s) * (zeta(s, q_hi) + zeta(s, q_lo))

    # 2(1-cos a) written as 4 sin^2(a/2): immune to the cancellation that
    # rounds 1-cos(a) to zero once a^2/2 drops below machine epsilon.
    shape = 4.0 * np.sin(0.5 * a) ** 2
    c = gamma_fn(2.0 * hurst + 1.0) * math.sin(math.pi * hurst)
    if order == 0:
        out = c * shape * pow_sum
    else:
        log_sum = np.log(a) * a ** (-s) + np.sum(
            np.log(plus) * plus ** (-s) + np.log(minus) * minus ** (-s), axis=0
        )
        if cfg.tail_correction:
            log_sum = log_sum + _TWO_PI ** (-s) * (
                math.log(_TWO_PI) * (zeta(s, q_hi) + zeta(s, q_lo))
                + _log_power_tail(s, q_hi)
                + _log_power_tail(s, q_lo)
            )
        c_dot = c * (2.0 * digamma(2.0 * hurst + 1.0) + math.pi / math.tan(math.pi * hurst))
        out = c_dot * shape * pow_sum - 2.0 * c * shape * log_sum
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite spectral density evaluation")
    return float(out[0]) if scalar else out


def observation_spectral_density(
    params: ModelParams, scheme: SamplingScheme, lam, cfg: SpectralEvalConfig = DEFAULT_CONFIG
):
    """Spectral density delta*(1 + gamma*f_H(lam)) of the observed increments."""
    f = fgn_spectral_density(params.hurst, lam, order=0, cfg=cfg)
    return scheme.delta * (1.0 + scheme.gamma * f)


def _integrate_refined(fn, points: int, levels: int) -> np.ndarray:
    """Integrate fn (vector-valued) over (0, pi] with geometric refinement at 0.

    Composite Gauss-Legendre over panels [pi 2^-(j+1), pi 2^-j]. Panel
    contributions of power-law-singular integrands decay geometrically, so
    the stub below the finest panel is restored by ratio extrapolation; a
    non-decaying tail raises (quadrature non-convergence).
    """
    nodes, weights = np.polynomial.legendre.leggauss(points)
    edges = np.pi * 0.5 ** np.arange(levels + 1)
    contribs = []
    for j in range(levels):
        a, b = edges[j + 1], edges[j]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        vals = np.atleast_2d(fn(mid + half * nodes))
        contribs.append(half * vals @ weights)
    contribs = np.array(contribs)  # (levels, ncomp)
    total = contribs.sum(axis=0)
    if levels >= 2:
        p_last, p_prev = contribs[-1], contribs[-2]
        for i in range(total.size):
            if p_last[i] == 0.0 or p_prev[i] == 0.0:
                continue
            ratio = p_last[i] / p_prev[i]
            if not (0.0 < ratio < 0.97):
                if abs(p_last[i]) <= 1e-13 * abs(total[i]):
                    continue
                raise FloatingPointError(
                    f"quadrature not converging near lambda=0: panel ratio {ratio:.4g}, "
                    f"last contribution {p_last[i]:.3g} against total {total[i]:.3g}"
                )
            total[i] += p_last[i] * ratio / (1.0 - ratio)
    return total


@dataclass(frozen=True)
class PureFgnConstants:
    """Limiting information constants of pure fGn: t1 and t2.

    t1 is the mean of fdot/f over frequency, t2 half the mean of its
    square; computed either by spectral quadrature or by Toeplitz trace
    averages (1/n) tr(T^-1 Tdot) and (1/2n) tr((T^-1 Tdot)^2).
    """

    t1: float
    t2: float
    method: str
    trace_n: int | None = None

    def __post_init__(self):
        if self.t2 <= 0:
            raise ValueError(f"t2 must be positive, got {self.t2}")
        if self.method not in ("spectral", "trace"):
            raise ValueError(f"method must be 'spectral' or 'trace', got {self.method!r}")


def _richardson(v_coarse: float, v_mid: float, v_fine: float) -> float:
    """Extrapolate a sequence at sizes (n/4, n/2, n) with empirical order."""
    d1, d2 = v_mid - v_coarse, v_fine - v_mid
    if d1 == 0.0 or d2 == 0.0 or d1 * d2 < 0 or abs(d2) >= abs(d1):
        return v_fine
    return v_fine + d2 * d2 / (d1 - d2)


@lru_cache(maxsize=32)
def _trace_constants(hurst: float, trace_n: int) -> tuple[float, float]:
    t1_seq, t2_seq = [], []
    for n in (trace_n // 4, trace_n // 2, trace_n):
        t = build_toeplitz(hurst, n, order=0).dense()
        t_dot = build_toeplitz(hurst, n, order=1).dense()
        w = cho_solve(cho_factor(t, lower=True), t_dot)
        t1_seq.append(float(np.trace(w)) / n)
        t2_seq.append(float(np.sum(w * w.T)) / (2.0 * n))
    return _richardson(*t1_seq), _richardson(*t2_seq)


def pure_fgn_constants(
    hurst: float,
    method: str | None = None,
    trace_n: int = 2048,
    cfg: SpectralEvalConfig = DEFAULT_CONFIG,
) -> PureFgnConstants:
    """Information constants t1, t2 of pure fGn at the given Hurst index.

    The spectral route integrates fdot/f and requires hurst > 1/4 (the
    integrands lose integrability below); the trace route works for every
    admissible hurst and Richardson-extrapolates the Szego averages over
    sizes (trace_n/4, trace_n/2, trace_n).
    """
    if method is None:
        method = "spectral" if hurst > 0.25 else "trace"
    if method == "spectral":
        if hurst <= 0.25:
            raise ValueError("spectral method requires hurst > 1/4; use the trace method")

        def ratios(lam):
            f = fgn_spectral_density(hurst, lam, order=0, cfg=cfg)
            fd = fgn_spectral_density(hurst, lam, order=1, cfg=cfg)
            r = fd / f
            return np.vstack([r, r * r])

        i1, i2 = _integrate_refined(ratios, cfg.quadrature_points, cfg.endpoint_refinement_levels)
        return PureFgnConstants(t1=i1 / math.pi, t2=i2 / _TWO_PI, method="spectral")
    if method == "trace":
        if trace_n < 64:
            raise ValueError("trace method requires trace_n >= 64")
        t1, t2 = _trace_constants(float(hurst), int(trace_n))
        return PureFgnConstants(t1=t1, t2=t2, method="trace", trace_n=int(trace_n))
    raise ValueError(f"unknown method {method!r}")


def fisher_asymptotic(params: ModelParams, cfg: SpectralEvalConfig = DEFAULT_CONFIG) -> Fisher2x2:
    """Limiting Fisher information of the normalized score vector.

    Noise-dominated regime: quadrature of (f^2, f*fdot, fdot^2) over (0, pi]
    with entries (2 sigma^2/pi, sigma^3/pi, sigma^4/2pi) times the integrals.
    Signal-dominated regimes: [[2/sigma^2, t1/sigma], [t1/sigma, t2]] from
    pure_fgn_constants (spectral for hurst > 1/4, trace averages below).
    """
    sig, h = params.sigma, params.hurst
    if classify_regime(params) is Regime.NOISE_DOMINATED:

        def products(lam):
            f = fgn_spectral_density(h, lam, order=0, cfg=cfg)
            fd = fgn_spectral_density(h, lam, order=1, cfg=cfg)
            return np.vstack([f * f, f * fd, fd * fd])

        i_ff, i_fd, i_dd = _integrate_refined(
            products, cfg.quadrature_points, cfg.endpoint_refinement_levels
        )
        return Fisher2x2(
            a11=2.0 * sig**2 / math.pi * i_ff,
            a12=sig**3 / math.pi * i_fd,
            a22=sig**4 / _TWO_PI * i_dd,
        )
    method = "spectral" if h > 0.25 else "trace"
    consts = pure_fgn_constants(h, method=method, cfg=cfg)
    return Fisher2x2(a11=2.0 / sig**2, a12=consts.t1 / sig, a22=consts.t2)
