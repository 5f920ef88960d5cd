"""Monte Carlo drivers: normalized-score tables, convergence and regime studies.

Every driver is deterministic given its seed: replicate i of grid entry j
draws from the counter-based stream j * 2**32 + i (j = 0 for the flat score
experiment), so results are independent of execution order and thread count.
Worker threads only parallelize replicate simulation; scoring happens in
vectorized batches after assembly in replicate order.

Failure policy: a replicate whose scores are non-finite is excluded and
counted; a failure rate above 1% aborts the run, since silent exclusion at
that scale would bias the summary statistics.

Artifacts: score tables go to CSV with header ``replicate,s_sigma,s_h`` and
17-significant-digit decimals; summaries and study reports go to JSON.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import likelihood, whittle
from .covariance import build_toeplitz, circulant_approximation
from .lan import LanRemainder, _shifted_params, rate_matrix
from .model import (
    ModelParams,
    MonteCarloConfig,
    Regime,
    SamplingScheme,
    Sym2x2,
    classify_regime,
)
from .simulate import sample_components
from .spectral import fisher_asymptotic, pure_fgn_constants

__all__ = [
    "SampleTable",
    "StudyRow",
    "StudyReport",
    "mc_normalized_scores",
    "convergence_study",
    "regime_study",
    "write_scores_csv",
    "write_summary_json",
    "resolve_threads",
]

_STREAM_BLOCK = 2**32
_FAILURE_ABORT_RATE = 0.01
_STUDY_N_RANGE = (32, 2048)
_STUDY_U = np.array([1.0, 1.0])


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else MFBM_THREADS, else 1."""
    if threads is None:
        env = os.environ.get("MFBM_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def _config_echo(config: MonteCarloConfig) -> dict:
    """Round-trippable description of a Monte Carlo run (thread count excluded:
    it must not affect any output)."""
    return {
        "sigma": config.params.sigma,
        "hurst": config.params.hurst,
        "n": config.scheme.n,
        "alpha": config.scheme.alpha,
        "m": config.replications,
        "seed": config.seed,
        "score_source": config.score_source,
    }


@dataclass(frozen=True)
class SampleTable:
    """Normalized-score replicates plus their summary statistics."""

    replicates: np.ndarray
    scores: np.ndarray
    mean: np.ndarray
    covariance: Sym2x2
    skewness: np.ndarray
    kurtosis: np.ndarray
    target_fisher: Sym2x2
    max_rel_err: float
    excluded: int
    config: MonteCarloConfig

    def __post_init__(self):
        if self.scores.shape != (self.replicates.size, 2):
            raise ValueError("scores must be an (m, 2) array aligned with replicates")
        if self.replicates.size + self.excluded != self.config.replications:
            raise ValueError("row count plus exclusions must equal replications")


def _simulate_batch(
    params: ModelParams,
    scheme: SamplingScheme,
    seed: int,
    streams: np.ndarray,
    threads: int,
    keep_components: bool = False,
):
    """Draw len(streams) replicates into stacked arrays, in stream order."""
    m, n = streams.size, scheme.n
    x = np.empty((m, n))
    g = np.empty((m, n)) if keep_components else None
    z = np.empty((m, n)) if keep_components else None

    def fill(i: int) -> None:
        s = sample_components(params, scheme, seed, stream=int(streams[i]))
        x[i] = s.x
        if keep_components:
            g[i] = s.g
            z[i] = s.z

    # Warm the per-(hurst, n) factor cache once so workers only draw.
    if m:
        fill(0)
    if threads > 1 and m > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(1, m)))
    else:
        for i in range(1, m):
            fill(i)
    return (x, g, z) if keep_components else x


def _score_batch(x: np.ndarray, config: MonteCarloConfig) -> np.ndarray:
    """Normalized scores (m, 2) for a stacked sample batch."""
    phi = rate_matrix(config.params, config.scheme)
    if config.score_source == "exact":
        d_sigma, d_h = likelihood.get_kernel(config.params, config.scheme).score(x)
    else:
        d_sigma, d_h, _ = whittle.get_whittle_kernel(config.params, config.scheme).score(x)
    first, second = phi.transform_score(d_sigma, d_h)
    return np.column_stack([first, second])


def mc_normalized_scores(
    config: MonteCarloConfig, threads: int | None = None
) -> SampleTable:
    """Monte Carlo table of normalized score vectors at the true parameter."""
    threads = resolve_threads(threads)
    m = config.replications
    streams = np.arange(m, dtype=np.uint64)
    x = _simulate_batch(
        config.params, config.scheme, config.seed, streams, threads
    )
    scores = _score_batch(x, config)

    keep = np.isfinite(scores).all(axis=1)
    excluded = int(m - keep.sum())
    if excluded > _FAILURE_ABORT_RATE * m:
        raise FloatingPointError(
            f"{excluded}/{m} replicates produced non-finite scores (> 1% abort threshold)"
        )
    scores = scores[keep]
    replicates = np.nonzero(keep)[0]

    mean = scores.mean(axis=0)
    cov = Sym2x2.from_array(np.cov(scores, rowvar=False, ddof=1))
    target = fisher_asymptotic(config.params)
    rel = np.abs(cov.as_array() - target.as_array()) / np.abs(target.as_array())
    return SampleTable(
        replicates=replicates,
        scores=scores,
        mean=mean,
        covariance=cov,
        skewness=stats.skew(scores, axis=0),
        kurtosis=stats.kurtosis(scores, axis=0, fisher=True),
        target_fisher=target,
        max_rel_err=float(rel.max()),
        excluded=excluded,
        config=config,
    )


def write_scores_csv(table: SampleTable, path) -> None:
    """Persist rows as ``replicate,s_sigma,s_h`` with 17 significant digits."""
    lines = ["replicate,s_sigma,s_h"]
    for rep, (s1, s2) in zip(table.replicates, table.scores):
        lines.append(f"{int(rep)},{s1:.17g},{s2:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_summary_json(table: SampleTable, path) -> None:
    payload = {
        "mean": [float(v) for v in table.mean],
        "covariance": table.covariance.as_array().tolist(),
        "target_fisher": table.target_fisher.as_array().tolist(),
        "max_rel_err": table.max_rel_err,
        "skewness": [float(v) for v in table.skewness],
        "kurtosis": [float(v) for v in table.kurtosis],
        "excluded": table.excluded,
        "config": _config_echo(table.config),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="ascii")


@dataclass(frozen=True)
class StudyRow:
    """Per-n metrics of a convergence or regime study (unused metrics are None)."""

    n: int
    var_gap_sigma: float | None = None
    var_gap_h: float | None = None
    median_abs_remainder: float | None = None
    frobenius_ratio: float | None = None
    fourth_moment_ratio: float | None = None
    noise_magnitude: float | None = None
    cross_magnitude: float | None = None
    cov_max_rel_err: float | None = None
    note: str = ""


@dataclass(frozen=True)
class StudyReport:
    """Grid of study rows plus the generating configuration."""

    kind: str
    grid: tuple[int, ...]
    rows: tuple[StudyRow, ...]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if list(self.grid) != sorted(set(self.grid)):
            raise ValueError(f"grid must be strictly increasing, got {self.grid}")
        if tuple(r.n for r in self.rows) != tuple(self.grid):
            raise ValueError("rows must align with the grid")

    def metric(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def to_json(self, path) -> None:
        payload = {
            "kind": self.kind,
            "grid": list(self.grid),
            "rows": [
                {k: v for k, v in row.__dict__.items()} for row in self.rows
            ],
            "config": self.config,
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="ascii")


def _validate_grid(n_grid) -> tuple[int, ...]:
    grid = tuple(int(n) for n in n_grid)
    if not grid or list(grid) != sorted(set(grid)):
        raise ValueError(f"n_grid must be non-empty and strictly increasing, got {n_grid}")
    lo, hi = _STUDY_N_RANGE
    if grid[0] < lo or grid[-1] > hi:
        raise ValueError(f"n_grid must lie within [{lo}, {hi}], got {n_grid}")
    return grid


def _batch_remainders(
    x: np.ndarray, params: ModelParams, scheme: SamplingScheme, u: np.ndarray
) -> np.ndarray:
    """Vector of observed-information LAN remainders r_n over a sample batch.

    Batched version of :func:`mfbm.lan.lan_remainder` (r_n variant); raises
    ValueError when theta + phi_n u is inadmissible.
    """
    phi = rate_matrix(params, scheme)
    shifted = _shifted_params(params, scheme, phi, u)
    base = likelihood.get_kernel(params, scheme)
    log_gap = likelihood.LikelihoodKernel(shifted, scheme).loglik(x) - base.loglik(x)
    d_sigma, d_h = base.score(x)
    first, second = phi.transform_score(d_sigma, d_h)
    linear = u[0] * first + u[1] * second
    hss, hsh, hhh = base.hessian_entries(x)
    s2, o = phi.scale**2, phi.off_diag
    j11 = s2 * -hss
    j12 = s2 * (o * -hss + -hsh)
    j22 = s2 * (o * o * -hss + 2.0 * o * -hsh + -hhh)
    quad = 0.5 * (u[0] ** 2 * j11 + 2.0 * u[0] * u[1] * j12 + u[1] ** 2 * j22)
    return log_gap - linear + quad


def convergence_study(
    params: ModelParams,
    alpha: float,
    n_grid,
    m: int,
    seed: int,
    threads: int | None = None,
) -> StudyReport:
    """Per-n diagnostics for the exact/Whittle equivalence and LAN remainder.

    For each n: variance of the normalized exact-minus-Whittle score gap
    (both components), median |r_n| at u = (1, 1) (None with a note when the
    perturbed parameter is inadmissible at that n), the circulant
    approximation gap ||T - C||_F^2 / n, and the sigma fourth-moment ratio.
    """
    threads = resolve_threads(threads)
    grid = _validate_grid(n_grid)
    if m < 2:
        raise ValueError("m must be >= 2")
    rows = []
    for j, n in enumerate(grid):
        scheme = SamplingScheme.derive(params, n, alpha)
        streams = j * _STREAM_BLOCK + np.arange(m, dtype=np.uint64)
        x = _simulate_batch(params, scheme, seed, streams, threads)

        phi = rate_matrix(params, scheme)
        e_sigma, e_h = likelihood.get_kernel(params, scheme).score(x)
        w_sigma, w_h, _ = whittle.get_whittle_kernel(params, scheme).score(x)
        gap1, gap2 = phi.transform_score(e_sigma - w_sigma, e_h - w_h)

        note = ""
        try:
            median_r = float(np.median(np.abs(
                _batch_remainders(x, params, scheme, _STUDY_U)
            )))
        except ValueError as exc:
            median_r = None
            note = f"remainder skipped: {exc}"

        rows.append(StudyRow(
            n=n,
            var_gap_sigma=float(np.var(gap1, ddof=1)),
            var_gap_h=float(np.var(gap2, ddof=1)),
            median_abs_remainder=median_r,
            frobenius_ratio=float(
                circulant_approximation(build_toeplitz(params.hurst, n)).frobenius_gap_sq / n
            ),
            fourth_moment_ratio=whittle.fourth_moment_ratio(params, scheme, "sigma"),
            note=note,
        ))
    config = {
        "sigma": params.sigma, "hurst": params.hurst, "alpha": alpha,
        "n_grid": list(grid), "m": m, "seed": seed, "u": _STUDY_U.tolist(),
    }
    return StudyReport(kind="convergence", grid=grid, rows=tuple(rows), config=config)


def regime_study(
    params: ModelParams,
    alpha: float,
    n_grid,
    m: int,
    seed: int,
    threads: int | None = None,
) -> StudyReport:
    """Signal-dominated diagnostics: component contributions and covariance limit.

    Requires H < 1/2 (the inherited alpha > 1/2 gate applies when H <= 1/4).
    Per n, from the periodogram decomposition weighted by the limiting
    whitening kernel 1/f_H on the scoring grid:

      noise_magnitude  = mean over replicates of
                         (2pi/n) sum_k delta I_z(l_k)/f_H(l_k) / (sigma^2 delta^{2H}),
                         which scales as epsilon_n = delta^{1-2H}/sigma^2;
      cross_magnitude  = sqrt(n) * std over replicates of the same functional
                         with 2 sigma delta^{H+1/2} Re J_gz in place of
                         delta I_z, which scales as delta^{1/2-H}.

    The sqrt(n) factor removes the CLT shrinkage of the mean-zero cross sum so
    that ratios across n isolate the delta-power law.  cov_max_rel_err is the
    entrywise max relative distance of the normalized exact-score covariance
    from the pure-fGn Fisher limit.
    """
    threads = resolve_threads(threads)
    if params.hurst >= 0.5:
        raise ValueError(
            f"regime study requires a signal-dominated H < 1/2, got {params.hurst}"
        )
    grid = _validate_grid(n_grid)
    if m < 2:
        raise ValueError("m must be >= 2")
    assert classify_regime(params) is not Regime.NOISE_DOMINATED

    consts = pure_fgn_constants(
        params.hurst, method="spectral" if params.hurst > 0.25 else "trace"
    )
    j_pure = np.array([
        [2.0 / params.sigma**2, consts.t1 / params.sigma],
        [consts.t1 / params.sigma, consts.t2],
    ])

    rows = []
    for j, n in enumerate(grid):
        scheme = SamplingScheme.derive(params, n, alpha)
        streams = j * _STREAM_BLOCK + np.arange(m, dtype=np.uint64)
        x, g, z = _simulate_batch(
            params, scheme, seed, streams, threads, keep_components=True
        )
        kernel = whittle.get_whittle_kernel(params, scheme)
        w = kernel.grid_weights()
        inv_f = w / kernel.f_half
        sigma, delta, hurst = params.sigma, scheme.delta, params.hurst
        signal_scale = sigma**2 * delta ** (2.0 * hurst)

        i_z = kernel.half_values(z)
        spec_g = np.fft.rfft(g, axis=-1)[..., 1 : kernel.n_half + 1]
        spec_z = np.fft.rfft(z, axis=-1)[..., 1 : kernel.n_half + 1]
        re_cross = (spec_g.real * spec_z.real + spec_g.imag * spec_z.imag) / n

        noise_fun = (delta * i_z) @ inv_f / signal_scale
        cross_fun = (2.0 * sigma * delta ** (hurst + 0.5) * re_cross) @ inv_f / signal_scale

        phi = rate_matrix(params, scheme)
        d_sigma, d_h = likelihood.get_kernel(params, scheme).score(x)
        first, second = phi.transform_score(d_sigma, d_h)
        cov = np.cov(np.vstack([first, second]), ddof=1)
        rel = np.abs(cov - j_pure) / np.abs(j_pure)

        rows.append(StudyRow(
            n=n,
            noise_magnitude=float(np.mean(noise_fun)),
            cross_magnitude=float(math.sqrt(n) * np.std(cross_fun, ddof=1)),
            cov_max_rel_err=float(rel.max()),
            fourth_moment_ratio=whittle.fourth_moment_ratio(params, scheme, "sigma"),
        ))
    config = {
        "sigma": params.sigma, "hurst": params.hurst, "alpha": alpha,
        "n_grid": list(grid), "m": m, "seed": seed,
    }
    return StudyReport(kind="regime", grid=grid, rows=tuple(rows), config=config)
