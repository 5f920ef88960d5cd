"""Increment model of mixed fractional Brownian motion observed at high frequency.

The package covers the full verification chain for the model
x[i] = sigma * delta^H * g[i] + delta^(1/2) * z[i]:

- ``model``: parameter/scheme value types, regime classification;
- ``spectral``: fGn spectral density with exact power-law tails, limiting
  Fisher matrices by adaptive quadrature, pure-fGn constants;
- ``covariance``: fGn autocovariances and their H-derivatives, Toeplitz /
  circulant machinery, resolvent and trace diagnostics;
- ``simulate``: exact Gaussian sampling (Cholesky and circulant embedding)
  with counter-based reproducible streams;
- ``likelihood``: exact log-likelihood, scores, Hessian expansion, and
  finite-n Fisher information;
- ``whittle``: periodogram, frequency-domain scores, structural component,
  fourth-moment diagnostics;
- ``lan``: rate matrices, normalized scores and observed information, LAN
  remainder evaluation;
- ``experiments``: Monte Carlo drivers with CSV/JSON persistence;
- ``cli``: the ``mfbm`` command-line entry point.
"""

from .covariance import (
    CirculantApprox,
    ObservationCovariance,
    SymmetricToeplitz,
    build_toeplitz,
    circulant_approximation,
    fgn_autocovariance,
    observation_covariance,
    resolvent_identity_residual,
    trace_product,
)
from .experiments import (
    SampleTable,
    StudyReport,
    StudyRow,
    convergence_study,
    mc_normalized_scores,
    regime_study,
    write_scores_csv,
    write_summary_json,
)
from .lan import (
    LanRemainder,
    RateMatrix,
    lan_remainder,
    normalized_observed_info,
    normalized_score,
    rate_matrix,
)
from .likelihood import (
    LikelihoodKernel,
    expected_fisher,
    hessian_exact,
    loglik,
    score_exact,
    score_structural,
)
from .model import (
    Fisher2x2,
    ModelParams,
    MonteCarloConfig,
    Regime,
    SamplingScheme,
    ScoreVector,
    Sym2x2,
    classify_regime,
)
from .simulate import IncrementSample, circulant_eigenvalues, sample_components
from .spectral import (
    PureFgnConstants,
    SpectralEvalConfig,
    fgn_spectral_density,
    fisher_asymptotic,
    observation_spectral_density,
    pure_fgn_constants,
)
from .whittle import (
    Periodogram,
    WhittleKernel,
    fourth_moment_ratio,
    periodogram,
    periodogram_decomposition,
    score_whittle,
)

__version__ = "0.1.0"

__all__ = [
    "CirculantApprox",
    "Fisher2x2",
    "IncrementSample",
    "LanRemainder",
    "LikelihoodKernel",
    "ModelParams",
    "MonteCarloConfig",
    "ObservationCovariance",
    "Periodogram",
    "PureFgnConstants",
    "RateMatrix",
    "Regime",
    "SampleTable",
    "SamplingScheme",
    "ScoreVector",
    "SpectralEvalConfig",
    "StudyReport",
    "StudyRow",
    "Sym2x2",
    "SymmetricToeplitz",
    "WhittleKernel",
    "build_toeplitz",
    "circulant_approximation",
    "circulant_eigenvalues",
    "classify_regime",
    "convergence_study",
    "expected_fisher",
    "fgn_autocovariance",
    "fgn_spectral_density",
    "fisher_asymptotic",
    "fourth_moment_ratio",
    "hessian_exact",
    "lan_remainder",
    "loglik",
    "mc_normalized_scores",
    "normalized_observed_info",
    "normalized_score",
    "observation_covariance",
    "observation_spectral_density",
    "periodogram",
    "periodogram_decomposition",
    "pure_fgn_constants",
    "rate_matrix",
    "regime_study",
    "resolvent_identity_residual",
    "sample_components",
    "score_exact",
    "score_structural",
    "score_whittle",
    "trace_product",
    "write_scores_csv",
    "write_summary_json",
]
