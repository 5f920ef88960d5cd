"""Command-line interface: simulation, scoring, Fisher matrices, and studies.

Configuration precedence is flags > config file (--config, same keys as the
long flag names with underscores) > defaults.  All numeric validation happens
in the model types before dispatch.  Exit codes: 0 success, 2 validation
error (bad flags or inadmissible parameters), 3 numerical error.

Outputs are written under --out-dir: sample.csv (simulate), fisher.json
(fisher), scores.csv + summary.json (mc-score), study.json (convergence,
regime).  The thread count (--threads or MFBM_THREADS) never changes any
output byte; it only parallelizes replicate simulation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, likelihood, whittle
from .lan import normalized_score, rate_matrix
from .model import ModelParams, MonteCarloConfig, SamplingScheme, classify_regime
from .simulate import sample_components
from .spectral import fisher_asymptotic

_EXIT_OK = 0
_EXIT_VALIDATION = 2
_EXIT_NUMERICAL = 3

_DEFAULTS = {
    "sigma": 1.0,
    "hurst": 0.6,
    "n": 100,
    "alpha": 0.4,
    "m": 3000,
    "seed": 1,
    "score": "exact",
    "out_dir": ".",
    "format": "csv",
    "threads": None,
    "input": None,
    "n_grid": "64,128,256,512",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfbm",
        description="Mixed fractional Brownian motion increment model: "
        "simulation, likelihood scores, Fisher information, Monte Carlo studies.",
    )
    parser.add_argument(
        "command",
        choices=["simulate", "loglik", "score", "fisher", "mc-score", "convergence", "regime"],
    )
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file with default values for the flags below")
    parser.add_argument("--sigma", type=float, default=None)
    parser.add_argument("--hurst", type=float, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--m", type=int, default=None, help="Monte Carlo replications")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--score", choices=["exact", "whittle"], default=None,
                        dest="score", help="score source for mc-score")
    parser.add_argument("--score-source", choices=["exact", "whittle"], default=None,
                        dest="score", help=argparse.SUPPRESS)
    parser.add_argument("--out-dir", type=str, default=None)
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--input", type=str, default=None,
                        help="CSV of increments for loglik/score (default: simulate from seed)")
    parser.add_argument("--n-grid", type=str, default=None,
                        help="comma-separated n values for convergence/regime")
    return parser


def _effective_config(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over defaults."""
    cfg = dict(_DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValueError(f"cannot read config file {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        unknown = set(loaded) - set(cfg) - {"score_source"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "score_source" in loaded:
            loaded["score"] = loaded.pop("score_source")
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _model_pieces(cfg: dict) -> tuple[ModelParams, SamplingScheme]:
    params = ModelParams(sigma=float(cfg["sigma"]), hurst=float(cfg["hurst"]))
    scheme = SamplingScheme.derive(params, int(cfg["n"]), float(cfg["alpha"]))
    return params, scheme


def _parse_grid(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"cannot parse n-grid {text!r}: {exc}") from exc


def _load_series(path: str, n: int) -> np.ndarray:
    """Read the x column of a sample.csv (or a single-column CSV)."""
    rows = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not rows:
        raise ValueError(f"input file {path} is empty")
    header = rows[0].lower().split(",")
    if "x" in header:
        col = header.index("x")
        data = [float(line.split(",")[col]) for line in rows[1:]]
    else:
        data = [float(line.split(",")[0]) for line in rows]
    x = np.array(data)
    if x.size != n:
        raise ValueError(f"input series has length {x.size}, expected n={n}")
    if not np.isfinite(x).all():
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise FloatingPointError(f"input series has a non-finite value at row {bad}")
    return x


def _write_sample_csv(path: Path, sample) -> None:
    lines = ["index,x,g,z"]
    for i in range(sample.scheme.n):
        lines.append(f"{i},{sample.x[i]:.17g},{sample.g[i]:.17g},{sample.z[i]:.17g}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _cmd_simulate(cfg: dict, out: Path) -> str:
    params, scheme = _model_pieces(cfg)
    sample = sample_components(params, scheme, int(cfg["seed"]))
    target = out / "sample.csv"
    _write_sample_csv(target, sample)
    return (
        f"simulate: n={scheme.n} delta={scheme.delta:.6g} method={sample.method} "
        f"-> {target}"
    )


def _series_for(cfg: dict, params: ModelParams, scheme: SamplingScheme) -> np.ndarray:
    if cfg["input"]:
        return _load_series(str(cfg["input"]), scheme.n)
    return sample_components(params, scheme, int(cfg["seed"])).x


def _cmd_loglik(cfg: dict, out: Path) -> str:
    params, scheme = _model_pieces(cfg)
    x = _series_for(cfg, params, scheme)
    value = float(likelihood.loglik(x, params, scheme))
    if not np.isfinite(value):
        raise FloatingPointError(f"log-likelihood is not finite: {value}")
    return f"loglik: {value:.17g}"


def _cmd_score(cfg: dict, out: Path) -> str:
    params, scheme = _model_pieces(cfg)
    x = _series_for(cfg, params, scheme)
    if cfg["score"] == "whittle":
        vec, z = whittle.score_whittle(x, params, scheme)
    else:
        vec = likelihood.score_exact(x, params, scheme)
    norm = normalized_score(x, params, scheme, source=cfg["score"])
    return (
        f"score[{cfg['score']}]: d_sigma={vec.d_sigma:.17g} d_h={vec.d_h:.17g} "
        f"normalized=({norm[0]:.17g}, {norm[1]:.17g})"
    )


def _cmd_fisher(cfg: dict, out: Path) -> str:
    params, scheme = _model_pieces(cfg)
    fisher = fisher_asymptotic(params)
    phi = rate_matrix(params, scheme)
    payload = {
        "regime": classify_regime(params).value,
        "fisher_asymptotic": fisher.as_array().tolist(),
        "rate_scale": phi.scale,
        "rate_off_diag": phi.off_diag,
    }
    target = out / "fisher.json"
    target.write_text(json.dumps(payload, indent=2) + "\n", encoding="ascii")
    m = fisher.as_array()
    return (
        f"fisher: [[{m[0,0]:.8g}, {m[0,1]:.8g}], [{m[1,0]:.8g}, {m[1,1]:.8g}]] "
        f"-> {target}"
    )


def _cmd_mc_score(cfg: dict, out: Path) -> str:
    params, scheme = _model_pieces(cfg)
    mc = MonteCarloConfig(
        params=params,
        scheme=scheme,
        replications=int(cfg["m"]),
        seed=int(cfg["seed"]),
        score_source=str(cfg["score"]),
    )
    table = experiments.mc_normalized_scores(mc, threads=cfg["threads"])
    scores_path = out / "scores.csv"
    summary_path = out / "summary.json"
    experiments.write_scores_csv(table, scores_path)
    experiments.write_summary_json(table, summary_path)
    cov = table.covariance.as_array()
    return (
        f"mc-score: m={mc.replications} excluded={table.excluded} "
        f"cov=[[{cov[0,0]:.4g}, {cov[0,1]:.4g}], [{cov[1,0]:.4g}, {cov[1,1]:.4g}]] "
        f"max_rel_err={table.max_rel_err:.4g} -> {scores_path}, {summary_path}"
    )


def _cmd_convergence(cfg: dict, out: Path) -> str:
    params, _ = _model_pieces(cfg)
    report = experiments.convergence_study(
        params,
        float(cfg["alpha"]),
        _parse_grid(cfg["n_grid"]),
        int(cfg["m"]),
        int(cfg["seed"]),
        threads=cfg["threads"],
    )
    target = out / "study.json"
    report.to_json(target)
    return f"convergence: grid={list(report.grid)} -> {target}"


def _cmd_regime(cfg: dict, out: Path) -> str:
    params, _ = _model_pieces(cfg)
    report = experiments.regime_study(
        params,
        float(cfg["alpha"]),
        _parse_grid(cfg["n_grid"]),
        int(cfg["m"]),
        int(cfg["seed"]),
        threads=cfg["threads"],
    )
    target = out / "study.json"
    report.to_json(target)
    return f"regime: grid={list(report.grid)} -> {target}"


_COMMANDS = {
    "simulate": _cmd_simulate,
    "loglik": _cmd_loglik,
    "score": _cmd_score,
    "fisher": _cmd_fisher,
    "mc-score": _cmd_mc_score,
    "convergence": _cmd_convergence,
    "regime": _cmd_regime,
}


def run(argv=None) -> int:
    """Entry point; returns the process exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_VALIDATION if exc.code else _EXIT_OK
    try:
        cfg = _effective_config(args)
        out = Path(cfg["out_dir"])
        out.mkdir(parents=True, exist_ok=True)
        summary = _COMMANDS[args.command](cfg, out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    print(summary)
    return _EXIT_OK


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
