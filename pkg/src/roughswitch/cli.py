"""Command-line entry point: ``roughswitch {price,simulate,hurst,selftest}``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import tempfile
from pathlib import Path
from typing import List, Optional

import numpy as np

from .calibration import EngineParams
from .config import PipelineConfig
from .engines import HurstPath, simulate_heston, simulate_rbergomi
from .errors import RoughSwitchError, StageError
from .market_data import format_date, load_price_series
from .pipeline import render_csv, render_table, run_pipeline
from .roughness import hurst_for_prices

log = logging.getLogger("roughswitch")


def _band(text: str):
    lo, hi = (int(x) for x in text.split(","))
    return (lo, hi)


def _gamma(text: str):
    return None if text == "auto" else float(text)


# flag -> (config field, type, help)
PRICE_FLAGS = [
    ("--options", "options", str, "option chain CSV"),
    ("--prices", "prices", str, "price history CSV"),
    ("--ticker", "ticker", str, "ticker to price"),
    ("--date", "date", str, "quote date (YYYY-MM-DD)"),
    ("--dte", "dte", int, "trading days to expiry"),
    ("--cp", "cp", str, "put or call"),
    ("--atm-dte-band", "atm_dte_band", _band, "lo,hi days band for the ATM vol series"),
    ("--hurst-window", "hurst_window", int, "R/S window length"),
    ("--forecast-lags", "forecast_lags", int, "lagged Hurst inputs per forecaster"),
    ("--gbt-rounds", "gbt_rounds", int, "boosting rounds"),
    ("--gbt-lr", "gbt_lr", float, "boosting learning rate"),
    ("--gbt-depth", "gbt_depth", int, "tree depth"),
    ("--rough-threshold", "rough_threshold", float, "mean-Hurst threshold for the rough engine"),
    ("--inject-hurst", "inject_hurst", float, "replace the forecast with a constant path"),
    ("--calib-window", "calib_window", int, "trailing days for rho/eta"),
    ("--kappa", "kappa", float, "Heston mean-reversion speed"),
    ("--risk-free-rate", "risk_free_rate", float, "continuously compounded rate"),
    ("--engine", "engine", str, "auto|rbergomi|heston"),
    ("--paths", "paths", int, "paths per ensemble"),
    ("--steps", "steps", int, "simulation steps (default: dte)"),
    ("--seed", "seed", int, "base seed (ensembles use seed, seed+1, seed+2)"),
    ("--compensator", "compensator", str, "exact|paper"),
    ("--sig-channels", "sig_channels", str, "comma list from time,vol,price"),
    ("--sig-depth", "sig_depth", int, "signature depth (3 only)"),
    ("--regressor", "regressor", str, "all|linear|extended|deeplog|deepkernel"),
    ("--rff-dim", "rff_dim", int, "random Fourier frequencies D"),
    ("--rff-gamma", "rff_gamma", _gamma, "auto or a bandwidth"),
    ("--ridge-lambda", "ridge_lambda", float, "ridge penalty for the kernel variant"),
    ("--dual-iters", "dual_iters", int, "subgradient iterations for the dual"),
    ("--dual-step", "dual_step", float, "subgradient step constant"),
    ("--mlp-width", "mlp_width", int, "hidden width of the log-signature network"),
    ("--mlp-epochs", "mlp_epochs", int, "training epochs of the log-signature network"),
    ("--output", "output", str, "json|table|csv"),
]


def _add_price_parser(sub):
    p = sub.add_parser("price", help="run the full pricing pipeline",
                       argument_default=argparse.SUPPRESS)
    p.add_argument("--config", type=Path, help="JSON config file; explicit flags override it")
    for flag, dest, typ, help_ in PRICE_FLAGS:
        p.add_argument(flag, dest=dest, type=typ, help=help_)
    p.add_argument("--include-timings", action="store_true", help="add per-stage timings to JSON")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    return p


def resolve_config(ns: argparse.Namespace) -> PipelineConfig:
    base = {}
    if getattr(ns, "config", None):
        base = json.loads(Path(ns.config).read_text())
    fields = {dest for _, dest, _, _ in PRICE_FLAGS}
    base.update({k: v for k, v in vars(ns).items() if k in fields})
    return PipelineConfig.from_dict(base)


def cmd_price(ns) -> int:
    config = resolve_config(ns)
    if getattr(ns, "dump_config", False):
        sys.stdout.write(config.to_json() + "\n")
        return 0
    report = run_pipeline(config)
    if config.output == "json":
        text = report.to_json(include_timings=getattr(ns, "include_timings", False))
    elif config.output == "table":
        text = render_table(report)
    else:
        text = render_csv(report)
    out = getattr(ns, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(ns) -> int:
    params = EngineParams(rho=ns.rho, eta=ns.eta, xi0=ns.xi0, kappa=ns.kappa,
                          theta=ns.theta, v0=ns.v0, r=ns.r)
    T = ns.dte / 252
    steps = ns.steps or ns.dte
    if ns.engine == "rbergomi":
        ens = simulate_rbergomi(params, HurstPath.constant(ns.hurst, steps), ns.spot, T,
                                ns.paths, steps, ns.seed, ns.compensator)
    else:
        ens = simulate_heston(params, ns.spot, T, ns.paths, steps, ns.seed)
    disc = math.exp(-params.r * T) * ens.asset[:, -1]
    M = ens.n_paths
    summary = {
        "engine_tag": ens.engine_tag.value,
        "paths": M,
        "steps": steps,
        "maturity_years": T,
        "seed": ns.seed,
        "discounted_terminal_mean": float(disc.mean()),
        "discounted_terminal_se": float(disc.std(ddof=1) / math.sqrt(M)),
        "terminal_variance_mean": float(ens.variance[:, -1].mean()),
        "terminal_variance_se": float(ens.variance[:, -1].std(ddof=1) / math.sqrt(M)),
    }
    if ns.out:
        np.savez_compressed(ns.out, asset=ens.asset, variance=ens.variance, dW=ens.dW, grid=ens.grid)
        summary["written"] = str(ns.out)
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_hurst(ns) -> int:
    prices = load_price_series(ns.prices, ns.ticker)
    series = hurst_for_prices(prices, ns.window)
    sys.stdout.write("date,hurst\n")
    for d, h in zip(series.dates, series.values):
        sys.stdout.write(f"{format_date(d)},{h!r}\n")
    return 0


def cmd_selftest(ns) -> int:
    from .synthetic import make_synthetic_market

    prices_csv, options_csv, days = make_synthetic_market(ticker="SYN", n_days=260, seed=ns.seed)
    ok = True
    with tempfile.TemporaryDirectory() as tmp:
        pp = Path(tmp) / "prices.csv"
        op = Path(tmp) / "options.csv"
        pp.write_text(prices_csv)
        op.write_text(options_csv)
        cfg = PipelineConfig(options=str(op), prices=str(pp), ticker="SYN", date=days[-20],
                             dte=10, paths=ns.paths, seed=ns.seed, dual_iters=50, mlp_epochs=5)
        first = run_pipeline(cfg).to_json()
        second = run_pipeline(cfg).to_json()
        report = json.loads(first)
    checks = [("deterministic report", first == second)]
    for b in report["bounds"]:
        slack = 3 * (b["lower_se"] + b["upper_se"])
        checks.append((f"bound ordering {b['kind']}", b["upper"] + slack >= b["lower"]))
    checks.append(("regime matches mean Hurst",
                   (report["regime"]["kind"] == "Rough") == (report["regime"]["mean_hurst"] < 0.5)))
    for name, passed in checks:
        ok &= bool(passed)
        sys.stdout.write(f"{'PASS' if passed else 'FAIL'}  {name}\n")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roughswitch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    _add_price_parser(sub)

    s = sub.add_parser("simulate", help="simulate one ensemble and summarize it")
    s.add_argument("--engine", choices=("rbergomi", "heston"), default="heston")
    s.add_argument("--spot", type=float, default=100.0)
    s.add_argument("--dte", type=int, default=10)
    s.add_argument("--steps", type=int, default=None)
    s.add_argument("--paths", type=int, default=2 ** 14)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--rho", type=float, default=-0.7)
    s.add_argument("--eta", type=float, default=0.3)
    s.add_argument("--xi0", type=float, default=0.04)
    s.add_argument("--kappa", type=float, default=2.0)
    s.add_argument("--theta", type=float, default=None)
    s.add_argument("--v0", type=float, default=None)
    s.add_argument("--r", type=float, default=0.045)
    s.add_argument("--hurst", type=float, default=0.1, help="constant Hurst for rbergomi")
    s.add_argument("--compensator", choices=("exact", "paper"), default="exact")
    s.add_argument("--out", type=Path, default=None, help="write paths to an .npz file")

    h = sub.add_parser("hurst", help="print the rolling Hurst series")
    h.add_argument("--prices", required=True)
    h.add_argument("--ticker", required=True)
    h.add_argument("--window", "--hurst-window", dest="window", type=int, default=32)

    t = sub.add_parser("selftest", help="run the pipeline on synthetic data and check invariants")
    t.add_argument("--paths", type=int, default=2 ** 10)
    t.add_argument("--seed", type=int, default=7)
    return parser


COMMANDS = {"price": cmd_price, "simulate": cmd_simulate, "hurst": cmd_hurst, "selftest": cmd_selftest}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[ns.command](ns)
    except StageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (RoughSwitchError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: [{ns.command}] {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
