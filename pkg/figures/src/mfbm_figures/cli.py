"""Command-line wrapper: render the joint-density figures from artifacts.

Exit codes: 0 success, 2 input error (missing/malformed/degenerate files or
arguments).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import InputError, PlotJob, render_joint_kde

_EXIT_OK = 0
_EXIT_INPUT = 2


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mfbm-figures",
        description="Render 2D KDE-with-contours and 3D surface-vs-wireframe "
        "figures from scores.csv + summary.json.",
    )
    parser.add_argument("scores_csv", type=Path)
    parser.add_argument("summary_json", type=Path)
    parser.add_argument("out_prefix", type=Path)
    parser.add_argument("--bandwidth", type=float, default=None,
                        help="KDE bandwidth factor (default: Scott's rule)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_INPUT if exc.code else _EXIT_OK
    try:
        job = PlotJob(
            scores_csv=args.scores_csv,
            summary_json=args.summary_json,
            out_prefix=args.out_prefix,
            bandwidth=args.bandwidth,
        )
        path_2d, path_3d = render_joint_kde(job)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return _EXIT_INPUT
    print(f"wrote {path_2d} and {path_3d}")
    return _EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
