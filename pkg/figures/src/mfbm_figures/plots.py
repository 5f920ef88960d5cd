"""Joint-density rendering from normalized-score artifacts.

Input contract (produced by the scoring pipeline):

* ``scores.csv`` — header ``replicate,s_sigma,s_h``, one row per Monte Carlo
  replicate, ``.`` decimal separator.
* ``summary.json`` — JSON object whose ``target_fisher`` entry holds the 2x2
  limiting covariance matrix; an optional ``covariance`` entry holds the
  empirical one.  Both must be symmetric positive definite.

Rendering is deterministic for fixed input and bandwidth: no RNG is used and
the evaluation grid is a pure function of the data.  The module only writes
PNG files, so the Agg backend is selected at import.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure
from scipy.stats import gaussian_kde, multivariate_normal, norm

_REQUIRED_COLUMNS = ("s_sigma", "s_h")
_GRID_POINTS = 121
_GRID_SPAN_SD = 3.5
_MIN_ROWS = 100
_PNG_METADATA = {"Software": "mfbm-figures"}


class InputError(ValueError):
    """A problem with the input artifacts (missing, malformed, degenerate)."""


def load_scores(path) -> np.ndarray:
    """Read the score columns of a ``scores.csv`` into an (m, 2) array."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"scores file does not exist: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise InputError(f"scores file is empty: {path}")
    rows = list(csv.reader(text.strip().splitlines()))
    header = [name.strip() for name in rows[0]]
    missing = [name for name in _REQUIRED_COLUMNS if name not in header]
    if missing:
        raise InputError(f"scores file {path} lacks columns {missing}; header={header}")
    idx = [header.index(name) for name in _REQUIRED_COLUMNS]
    try:
        data = np.array([[float(row[j]) for j in idx] for row in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise InputError(f"cannot parse scores file {path}: {exc}") from exc
    if data.size == 0:
        raise InputError(f"scores file has a header but no rows: {path}")
    if not np.isfinite(data).all():
        raise InputError(f"scores file {path} contains non-finite values")
    return data


def _check_spd(matrix: np.ndarray, label: str, path) -> np.ndarray:
    if matrix.shape != (2, 2):
        raise InputError(f"{label} in {path} must be 2x2, got shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise InputError(f"{label} in {path} contains non-finite values")
    if abs(matrix[0, 1] - matrix[1, 0]) > 1e-8 * max(1.0, abs(matrix[0, 1])):
        raise InputError(f"{label} in {path} is not symmetric: {matrix.tolist()}")
    sym = 0.5 * (matrix + matrix.T)
    eigvals = np.linalg.eigvalsh(sym)
    if eigvals.min() <= 0:
        raise InputError(
            f"{label} in {path} is not positive definite (eigenvalues {eigvals.tolist()})"
        )
    return sym


def load_summary(path) -> dict:
    """Read ``summary.json``; validates the covariance matrices it carries."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"summary file does not exist: {path}")
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise InputError(f"summary file is empty: {path}")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"cannot parse summary file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "target_fisher" not in payload:
        raise InputError(f"summary file {path} lacks a 'target_fisher' entry")
    payload["target_fisher"] = _check_spd(
        np.asarray(payload["target_fisher"], dtype=float), "target_fisher", path
    )
    if "covariance" in payload:
        payload["covariance"] = _check_spd(
            np.asarray(payload["covariance"], dtype=float), "covariance", path
        )
    return payload


@dataclass(frozen=True)
class PlotJob:
    """A rendering request; validates its inputs on construction."""

    scores_csv: Path
    summary_json: Path
    out_prefix: Path
    bandwidth: float | None = None
    scores: np.ndarray = field(init=False, repr=False, compare=False)
    summary: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.bandwidth is not None and not (
            isinstance(self.bandwidth, (int, float))
            and math.isfinite(self.bandwidth)
            and self.bandwidth > 0
        ):
            raise InputError(f"bandwidth must be a positive real, got {self.bandwidth}")
        object.__setattr__(self, "scores_csv", Path(self.scores_csv))
        object.__setattr__(self, "summary_json", Path(self.summary_json))
        object.__setattr__(self, "out_prefix", Path(self.out_prefix))
        object.__setattr__(self, "scores", load_scores(self.scores_csv))
        object.__setattr__(self, "summary", load_summary(self.summary_json))

    @property
    def target(self) -> np.ndarray:
        return self.summary["target_fisher"]


def _kde(job: PlotJob) -> gaussian_kde:
    # Scott's rule when no bandwidth is given; a scalar scales the
    # data-covariance bandwidth matrix (scipy semantics).
    bw = "scott" if job.bandwidth is None else job.bandwidth
    return gaussian_kde(job.scores.T, bw_method=bw)


def _evaluation_grid(job: PlotJob):
    """Axis-aligned grid covering the data and the theoretical 3.5-sd box."""
    sd = np.sqrt(np.diag(job.target))
    lo = np.minimum(job.scores.min(axis=0), -_GRID_SPAN_SD * sd)
    hi = np.maximum(job.scores.max(axis=0), _GRID_SPAN_SD * sd)
    xs = np.linspace(lo[0], hi[0], _GRID_POINTS)
    ys = np.linspace(lo[1], hi[1], _GRID_POINTS)
    return np.meshgrid(xs, ys)


def _density_surfaces(job: PlotJob):
    gx, gy = _evaluation_grid(job)
    points = np.vstack([gx.ravel(), gy.ravel()])
    z_kde = _kde(job)(points).reshape(gx.shape)
    z_theory = (
        multivariate_normal(mean=[0.0, 0.0], cov=job.target)
        .pdf(points.T)
        .reshape(gx.shape)
    )
    return gx, gy, z_kde, z_theory


def kde_mode(job: PlotJob) -> np.ndarray:
    """Location of the KDE maximum: coarse grid argmax plus local refinement.

    The refinement pass re-evaluates the density on a fine grid spanning one
    coarse cell around the coarse argmax, reducing quantization of the mode
    estimate to about 1/40 of a coarse grid step.  Fully deterministic.
    """
    gx, gy, z_kde, _ = _density_surfaces(job)
    flat = int(np.argmax(z_kde))
    cx, cy = gx.ravel()[flat], gy.ravel()[flat]
    step_x = gx[0, 1] - gx[0, 0]
    step_y = gy[1, 0] - gy[0, 0]
    fine = np.meshgrid(
        np.linspace(cx - step_x, cx + step_x, 41),
        np.linspace(cy - step_y, cy + step_y, 41),
    )
    points = np.vstack([fine[0].ravel(), fine[1].ravel()])
    dens = _kde(job)(points)
    best = int(np.argmax(dens))
    return np.array([points[0, best], points[1, best]])


def _render_2d(job: PlotJob, gx, gy, z_kde, z_theory, path: Path) -> None:
    fig = Figure(figsize=(7.0, 7.0))
    gs = fig.add_gridspec(
        2, 2, width_ratios=(4, 1), height_ratios=(1, 4), hspace=0.05, wspace=0.05
    )
    ax = fig.add_subplot(gs[1, 0])
    ax_top = fig.add_subplot(gs[0, 0], sharex=ax)
    ax_right = fig.add_subplot(gs[1, 1], sharey=ax)

    ax.contourf(gx, gy, z_kde, levels=12, cmap="Blues")
    ax.contour(gx, gy, z_theory, levels=8, colors="red", linewidths=1.0)
    ax.set_xlabel(r"$s_\sigma$")
    ax.set_ylabel(r"$s_H$")

    sd = np.sqrt(np.diag(job.target))
    for axis, marginal, component in ((ax_top, "x", 0), (ax_right, "y", 1)):
        values = job.scores[:, component]
        grid = (gx[0, :] if component == 0 else gy[:, 0])
        pdf = norm(loc=0.0, scale=sd[component]).pdf(grid)
        if marginal == "x":
            axis.hist(values, bins=40, density=True, color="steelblue", alpha=0.6)
            axis.plot(grid, pdf, color="red", linewidth=1.0)
            axis.tick_params(labelbottom=False)
        else:
            axis.hist(
                values,
                bins=40,
                density=True,
                color="steelblue",
                alpha=0.6,
                orientation="horizontal",
            )
            axis.plot(pdf, grid, color="red", linewidth=1.0)
            axis.tick_params(labelleft=False)
    fig.suptitle("Joint density of normalized scores: KDE vs Gaussian limit")
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)


def _render_3d(job: PlotJob, gx, gy, z_kde, z_theory, path: Path) -> None:
    fig = Figure(figsize=(7.5, 6.0))
    ax = fig.add_subplot(projection="3d")
    ax.plot_surface(
        gx, gy, z_kde, cmap="viridis", rcount=60, ccount=60, alpha=0.92, linewidth=0
    )
    stride = max(1, _GRID_POINTS // 24)
    ax.plot_wireframe(
        gx, gy, z_theory, color="black", linewidth=0.5,
        rstride=stride, cstride=stride,
    )
    ax.set_xlabel(r"$s_\sigma$")
    ax.set_ylabel(r"$s_H$")
    ax.set_zlabel("density")
    ax.set_title("KDE surface vs theoretical wireframe")
    fig.savefig(path, dpi=150, metadata=_PNG_METADATA)


def render_joint_kde(job: PlotJob) -> tuple[Path, Path]:
    """Write ``<prefix>_2d.png`` and ``<prefix>_3d.png``; returns both paths."""
    if job.scores.shape[0] < _MIN_ROWS:
        raise InputError(
            f"need at least {_MIN_ROWS} score rows for a stable density, "
            f"got {job.scores.shape[0]}"
        )
    job.out_prefix.parent.mkdir(parents=True, exist_ok=True)
    surfaces = _density_surfaces(job)
    path_2d = job.out_prefix.parent / f"{job.out_prefix.name}_2d.png"
    path_3d = job.out_prefix.parent / f"{job.out_prefix.name}_3d.png"
    _render_2d(job, *surfaces, path_2d)
    _render_3d(job, *surfaces, path_3d)
    return path_2d, path_3d
