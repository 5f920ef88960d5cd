"""fGn autocovariance, its Hurst derivatives, and dense Toeplitz kernels.

Everything at desk scale runs through dense Cholesky factorizations
(n <= 2048); no explicit matrix inverses are formed, quadratic forms and
traces go through triangular solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, toeplitz

from .model import ModelParams, SamplingScheme

__all__ = [
    "SymmetricToeplitz",
    "ObservationCovariance",
    "CirculantApprox",
    "fgn_autocovariance",
    "autocovariance_row",
    "build_toeplitz",
    "observation_covariance",
    "circulant_approximation",
    "resolvent_identity_residual",
    "trace_product",
]


def _power_term(j: np.ndarray, hurst: float, order: int) -> np.ndarray:
    """d^m/dH^m of |j|^(2H), elementwise; the j=0 term is identically zero."""
    j = np.asarray(j, dtype=float)
    out = np.zeros_like(j)
    nz = j != 0
    a = np.abs(j[nz])
    val = a ** (2.0 * hurst)
    if order > 0:
        val = val * (2.0 * np.log(a)) ** order
    out[nz] = val
    return out


def autocovariance_row(hurst: float, n: int, order: int = 0) -> np.ndarray:
    """First n autocovariances of standard fGn (or their order-th H-derivative).

    Entry k is (1/2) d^m/dH^m (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
    """
    if not (0.0 < hurst < 1.0):
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    k = np.arange(n)
    return 0.5 * (
        _power_term(k + 1, hurst, order)
        - 2.0 * _power_term(k, hurst, order)
        + _power_term(k - 1, hurst, order)
    )


def fgn_autocovariance(hurst: float, lag: int, order: int = 0) -> float:
    """Autocovariance of standard fGn at a single non-negative lag.

    order 1 and 2 return the first and second derivative with respect to
    the Hurst index, using d^m/dH^m |j|^{2H} = (2 ln|j|)^m |j|^{2H}.
    """
    if lag < 0:
        raise ValueError(f"lag must be non-negative, got {lag}")
    return float(autocovariance_row(hurst, lag + 1, order)[lag])


@dataclass(frozen=True)
class SymmetricToeplitz:
    """Symmetric Toeplitz matrix held by its first row."""

    first_row: np.ndarray
    n: int

    def __post_init__(self):
        row = np.asarray(self.first_row, dtype=float)
        if row.shape != (self.n,):
            raise ValueError(f"first_row must have length n={self.n}, got {row.shape}")
        row = row.copy()
        row.setflags(write=False)
        object.__setattr__(self, "first_row", row)

    def dense(self) -> np.ndarray:
        return toeplitz(self.first_row)


def build_toeplitz(hurst: float, n: int, order: int = 0) -> SymmetricToeplitz:
    """fGn covariance matrix (order 0) or its H-derivative matrices (order 1, 2)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return SymmetricToeplitz(first_row=autocovariance_row(hurst, n, order), n=n)


@dataclass(frozen=True)
class ObservationCovariance:
    """Covariance delta*(I + gamma*T) of the observed increments, with its Cholesky factor."""

    v: np.ndarray
    chol: np.ndarray  # lower triangular, v = chol @ chol.T
    params: ModelParams
    scheme: SamplingScheme

    def solve(self, b: np.ndarray) -> np.ndarray:
        return cho_solve((self.chol, True), b)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.chol))))


def observation_covariance(params: ModelParams, scheme: SamplingScheme) -> ObservationCovariance:
    t = build_toeplitz(params.hurst, scheme.n, order=0)
    v = scheme.delta * (np.eye(scheme.n) + scheme.gamma * t.dense())
    try:
        chol = cholesky(v, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - V is SPD by construction
        raise FloatingPointError(f"covariance factorization failed: {exc}") from exc
    return ObservationCovariance(v=v, chol=chol, params=params, scheme=scheme)


@dataclass(frozen=True)
class CirculantApprox:
    """Circulant matrix sharing the Toeplitz band, plus the squared Frobenius gap."""

    first_row: np.ndarray
    frobenius_gap_sq: float

    def dense(self) -> np.ndarray:
        c = np.asarray(self.first_row)
        n = len(c)
        i, j = np.ogrid[:n, :n]
        return c[(j - i) % n]


def circulant_approximation(t: SymmetricToeplitz) -> CirculantApprox:
    """Even-extension circulant c_j = r_min(j, n-j) and its exact distance to T.

    Only bands with |offset| > n/2 differ between the two matrices, so the
    gap is accumulated directly from those band differences.
    """
    if t.n < 2:
        raise ValueError("circulant approximation needs n >= 2")
    n, r = t.n, t.first_row
    idx = np.arange(n)
    c = r[np.minimum(idx, n - idx)]
    d = np.arange(n // 2 + 1, n)
    gap_sq = 2.0 * float(np.sum((n - d) * (r[d] - r[n - d]) ** 2))
    return CirculantApprox(first_row=c, frobenius_gap_sq=gap_sq)


def resolvent_identity_residual(hurst: float, n: int, epsilon: float) -> float:
    """Frobenius norm of K - T^-1 + eps T^-2 - eps^2 K T^-2 with K = (T+eps I)^-1.

    The expression is algebraically zero at every n; the returned value is
    pure floating-point residual.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    t = build_toeplitz(hurst, n, order=0).dense()
    eye = np.eye(n)
    try:
        c_t = cho_factor(t, lower=True)
        c_k = cho_factor(t + epsilon * eye, lower=True)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(f"singular covariance at hurst={hurst}, n={n}: {exc}") from exc
    k = cho_solve(c_k, eye)
    t_inv = cho_solve(c_t, eye)
    t_inv2 = cho_solve(c_t, t_inv)
    resid = k - t_inv + epsilon * t_inv2 - epsilon**2 * (k @ t_inv2)
    return float(np.linalg.norm(resid, "fro"))


def _as_dense(m) -> np.ndarray:
    if isinstance(m, SymmetricToeplitz):
        return m.dense()
    if isinstance(m, ObservationCovariance):
        return m.v
    out = np.asarray(m, dtype=float)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"factors must be square matrices, got shape {out.shape}")
    return out


def trace_product(*factors) -> float:
    """Trace of a product of symmetric factors, e.g. trace_product(A, ("inv", B), C).

    A factor is a dense array, a SymmetricToeplitz, an ObservationCovariance,
    or ("inv", M) meaning M^-1 applied through a Cholesky solve (M must be
    SPD). The trace's cyclic invariance is used to rotate a plain factor to
    the front, so inverses are never materialized unless every factor is one.
    """
    if not factors:
        raise ValueError("trace_product needs at least one factor")
    resolved = []
    for f in factors:
        if isinstance(f, tuple) and len(f) == 2 and f[0] == "inv":
            resolved.append((True, _as_dense(f[1])))
        else:
            resolved.append((False, _as_dense(f)))
    n = resolved[0][1].shape[0]
    if any(m.shape != (n, n) for _, m in resolved):
        raise ValueError("all factors must share the same dimension")
    lead = next((i for i, (inv, _) in enumerate(resolved) if not inv), None)
    if lead is None:
        prod, rest = np.eye(n), resolved
    else:
        rotated = resolved[lead:] + resolved[:lead]
        prod, rest = rotated[0][1], rotated[1:]
    for inv, m in rest:
        if inv:
            c = cho_factor(m, lower=True)
            prod = cho_solve(c, prod.T).T  # prod @ m^-1 for symmetric m
        else:
            prod = prod @ m
    return float(np.trace(prod))
