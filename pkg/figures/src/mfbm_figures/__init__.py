"""Figures for normalized-score Monte Carlo output.

Consumes the ``scores.csv`` / ``summary.json`` artifact pair written by the
scoring pipeline and renders the joint-density comparison figures: a 2D
kernel density estimate with theoretical Gaussian contours and marginal
histograms, and a 3D KDE surface against the theoretical wireframe.
"""

from .plots import (
    InputError,
    PlotJob,
    kde_mode,
    load_scores,
    load_summary,
    render_joint_kde,
)

__all__ = [
    "InputError",
    "PlotJob",
    "kde_mode",
    "load_scores",
    "load_summary",
    "render_joint_kde",
]
