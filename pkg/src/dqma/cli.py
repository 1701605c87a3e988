"""Command line entry point: ``dqma simulate|fit|dma|score|config``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dgp
from .config import RunConfig, load_config
from .data import load_csv
from .errors import ConfigError, DomainError
from .logs import setup_logging
from .pipeline import (
    dma_summary,
    run_dma,
    run_fit,
    score_forecasts,
    tau_tag,
    write_dma_csv,
    write_fit_csv,
    write_json,
)

log = logging.getLogger("dqma.cli")


def _read_table(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read one of our CSV outputs: returns (header metadata, columns)."""
    meta = {}
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    if not rows:
        raise DomainError(f"{path}: no table found")
    head, body = rows[0], rows[1:]
    cols = {h: np.array([float(r[j]) for r in body]) for j, h in enumerate(head)}
    return meta, cols


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = RunConfig(**{**cfg.to_dict(), "tau": tuple(cfg.tau), "seed": args.seed})
    return cfg


def cmd_simulate(args) -> int:
    gen = {"smooth": dgp.simulate_smooth, "abrupt": dgp.simulate_abrupt}[args.example]
    out = gen(args.T, seed=args.seed)
    data_path, truth_path = dgp.write_csv(out, args.out)
    print(f"wrote {data_path} and {truth_path}")
    return 0


def _truth_path(args, tau):
    if not args.truth:
        return None
    beta, nu2 = dgp.read_truth(args.truth)
    return dgp.true_quantile_path(dgp.DGPOutput(np.zeros(len(nu2)), np.ones_like(beta), beta, nu2), tau)


def cmd_fit(args) -> int:
    cfg = _config(args)
    data = load_csv(args.data, cfg.lags)
    cols = None
    if args.columns:
        names = list(data.column_names)
        try:
            cols = [0] + [names.index(c) for c in args.columns if c != "const"]
        except ValueError as exc:
            raise ConfigError(f"unknown column: {exc}") from None
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    results = run_fit(data, cfg, cols)
    for tau, res in results.items():
        p = write_fit_csv(res, outdir / f"fit_{tau_tag(tau)}.csv", cfg)
        print(f"wrote {p}")
        truth = _truth_path(args, tau)
        if truth is not None and cols is None:
            cov = {n: score_forecasts(res.forecast, res.realized, tau, res.lo[:, j], res.hi[:, j], truth[:, j]).coverage
                   for j, n in enumerate(res.column_names)}
            print("HPD coverage of the true path: " + ", ".join(f"{k}={v:.3f}" for k, v in cov.items()))
        if args.plot:
            from .plotting import plot_fit

            print(f"wrote {plot_fit(res, outdir / f'fit_{tau_tag(tau)}.png', truth if cols is None else None)}")
    return 0


def cmd_dma(args) -> int:
    cfg = _config(args)
    data = load_csv(args.data, cfg.lags)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for tau, res in run_dma(data, cfg).items():
        p = write_dma_csv(res, outdir / f"dma_{tau_tag(tau)}.csv", cfg, tau)
        s = write_json(dma_summary(res, cfg, tau, data.column_names), outdir / f"dma_{tau_tag(tau)}_summary.json")
        print(f"wrote {p} and {s}")
        if args.plot:
            from .plotting import plot_dma

            print(f"wrote {plot_dma(res, outdir / f'dma_{tau_tag(tau)}.png', tau)}")
    return 0


def cmd_score(args) -> int:
    meta, cols = _read_table(args.forecasts)
    tau = args.tau if args.tau is not None else float(meta.get("tau", "nan"))
    if not 0 < tau < 1:
        raise ConfigError("tau not given and not found in the file header")
    fcol = args.forecast_col or ("dma_forecast" if "dma_forecast" in cols else "forecast")
    for c in (fcol, args.realized_col):
        if c not in cols:
            raise ConfigError(f"column {c!r} not in {args.forecasts}")
    out = {"tau": tau, "mean_pinball": score_forecasts(cols[fcol], cols[args.realized_col], tau).pinball}
    if args.truth:
        truth = _truth_path(args, tau)
        names = [c[: -len("_median")] for c in cols if c.endswith("_median")]
        out["hpd_coverage"] = {
            n: score_forecasts(cols[fcol], cols[args.realized_col], tau,
                               cols[f"{n}_lo"], cols[f"{n}_hi"], truth[:, j]).coverage
            for j, n in enumerate(names)
        }
    print(json.dumps(out, indent=2))
    return 0


def cmd_config(args) -> int:
    print(RunConfig().to_ini())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqma", description="Dynamic quantile regression and model averaging.")
    p.add_argument("--log", help="write JSON-lines log here (default: stderr)")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a synthetic series and its truth sidecar")
    s.add_argument("--example", choices=["smooth", "abrupt"], default="smooth")
    s.add_argument("--T", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    for name, func, helptext in (("fit", cmd_fit, "posterior paths for one model"),
                                 ("dma", cmd_dma, "model averaging over all regressor subsets")):
        f = sub.add_parser(name, help=helptext)
        f.add_argument("data")
        f.add_argument("--config")
        f.add_argument("--seed", type=int, help="override the config seed")
        f.add_argument("--out", default="out")
        f.add_argument("--plot", action="store_true", help="also write PNG figures")
        if name == "fit":
            f.add_argument("--columns", nargs="+", help="regressor names to include (default: all)")
            f.add_argument("--truth", help="truth sidecar from `simulate`, for coverage and plots")
        f.set_defaults(func=func)

    sc = sub.add_parser("score", help="pinball loss and HPD coverage of a fit/dma CSV")
    sc.add_argument("forecasts")
    sc.add_argument("--tau", type=float)
    sc.add_argument("--forecast-col")
    sc.add_argument("--realized-col", default="realized")
    sc.add_argument("--truth")
    sc.set_defaults(func=cmd_score)

    c = sub.add_parser("config", help="print the default configuration")
    c.set_defaults(func=cmd_config)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log, args.log_level.upper())
    try:
        return args.func(args)
    except (ConfigError, DomainError, OSError) as exc:
        log.error(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
