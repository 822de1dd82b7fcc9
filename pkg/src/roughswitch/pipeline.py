"""End-to-end orchestration: data -> Hurst -> forecast -> regime -> calibrate ->
simulate -> signatures -> bounds, producing a self-contained run report."""

from __future__ import annotations

import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .calibration import calibrate
from .config import PipelineConfig
from .engines import HurstPath, hurst_path_from_forecast, simulate
from .errors import LengthMismatch, RoughSwitchError, StageError
from .forecaster import ForecastPath, Regime, predict_path, select_regime, train_horizon_models
from .market_data import (extract_atm_vol_series, format_date, load_price_series, parse_date,
                          select_contract)
from .pricing import (ExerciseGrid, european_value, parse_regressors, path_features,
                      price_with_all_variants)
from .roughness import hurst_for_prices

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


def forecast_diagnostics(forecast, realized) -> Tuple[float, float]:
    """Mean absolute and mean squared error of a forecast path against realized values."""
    f = np.asarray(getattr(forecast, "values", forecast), dtype=float)
    h = np.asarray(realized, dtype=float)
    if f.shape != h.shape:
        raise LengthMismatch(f"forecast {f.shape} vs realized {h.shape}")
    err = f - h
    return float(np.mean(np.abs(err))), float(np.mean(err * err))


@dataclass
class RunReport:
    body: dict
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        out = dict(self.body)
        if include_timings:
            out["timings"] = dict(self.timings)
        return out

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(_jsonable(self.to_dict(include_timings)), indent=2, sort_keys=True,
                          allow_nan=False) + "\n"

    @property
    def regime(self) -> str:
        return self.body["regime"]["kind"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


class _Stages:
    def __init__(self):
        self.timings: Dict[str, float] = {}

    @contextmanager
    def __call__(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except StageError:
            raise
        except (RoughSwitchError, ValueError, ArithmeticError, LookupError, OSError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - start
            log.debug("stage %s took %.3fs", name, self.timings[name])


def run_pipeline(config: PipelineConfig) -> RunReport:
    stage = _Stages()
    quote = parse_date(config.date)

    with stage("data"):
        if not config.prices or not config.options:
            raise ValueError("both --prices and --options are required")
        prices = load_price_series(config.prices, config.ticker)
        contract = select_contract(config.options, config.ticker, quote, config.dte, config.cp)
        atm = extract_atm_vol_series(config.options, config.ticker, config.atm_dte_band)
        spot = prices.close_on(quote)

    with stage("hurst"):
        full = hurst_for_prices(prices, config.hurst_window)
        past = full.dates <= quote
        hist = full.values[past]
        if hist.size == 0:
            raise ValueError("no Hurst estimates on or before the quote date")
        hurst_current = float(hist[-1])

    tau = config.dte
    with stage("forecast"):
        if config.inject_hurst is not None:
            forecast = ForecastPath(np.full(tau, float(config.inject_hurst)), float(config.inject_hurst))
        else:
            ensemble = train_horizon_models(hist, tau, config.forecast_lags, config.gbt())
            forecast = predict_path(ensemble, hist[-config.forecast_lags:])
        realized = full.values[~past][:tau]
        diagnostics = None
        if realized.size == tau:
            mae, mse = forecast_diagnostics(forecast, realized)
            diagnostics = {"mae": mae, "mse": mse, "realized": realized, "errors": forecast.values - realized}

    with stage("regime"):
        regime = select_regime(forecast.mean, config.engine, config.rough_threshold)

    with stage("calibrate"):
        params = calibrate(prices, atm, quote, contract.implied_vol, hurst_current,
                           config.calib_window, config.kappa, config.risk_free_rate)

    steps = config.n_steps
    T = contract.maturity_years
    seeds = [config.seed, config.seed + 1, config.seed + 2]
    with stage("simulate"):
        hpath: Optional[HurstPath] = None
        if regime is Regime.ROUGH:
            hpath = hurst_path_from_forecast(forecast.values, steps)
        ensembles = [simulate(regime, params, spot, T, config.paths, steps, s, hpath, config.compensator)
                     for s in seeds]

    pcfg = config.pricing()
    with stage("signatures"):
        grid = ExerciseGrid.daily(ensembles[0].grid)
        feats = [path_features(e, grid, contract.strike, contract.cp_flag, params.r, pcfg.channels)
                 for e in ensembles]
        euro, euro_se = european_value(feats[2])

    with stage("pricing"):
        results = price_with_all_variants(*feats, premium=contract.premium,
                                          kinds=parse_regressors(config.regressor), config=pcfg)

    body = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "contract": {
            "ticker": contract.ticker,
            "quote_date": format_date(contract.quote_date),
            "dte": contract.dte,
            "maturity_years": T,
            "strike": contract.strike,
            "forward_price": contract.forward_price,
            "premium": contract.premium,
            "implied_vol": contract.implied_vol,
            "cp_flag": contract.cp_flag,
            "spot": spot,
        },
        "data": {
            "price_rows": len(prices),
            "price_duplicates": prices.duplicates,
            "return_discrepancy": prices.return_discrepancy,
            "atm_vol_dates": len(atm),
        },
        "hurst": {
            "window": config.hurst_window,
            "latest": hurst_current,
            "history_length": int(hist.size),
            "degenerate_windows": full.degenerate,
        },
        "forecast": {
            "values": forecast.values,
            "mean": forecast.mean,
            "horizon": tau,
            "lags": config.forecast_lags,
            "injected": config.inject_hurst is not None,
        },
        "regime": {
            "kind": regime.value,
            "mean_hurst": forecast.mean,
            "threshold": config.rough_threshold,
            "override": config.engine,
        },
        "params": params.to_dict(),
        "simulation": {
            "engine_tag": ensembles[0].engine_tag.value,
            "paths": config.paths,
            "steps": steps,
            "seeds": {"primal_train": seeds[0], "dual_train": seeds[1], "evaluation": seeds[2]},
            "compensator": config.compensator if regime is Regime.ROUGH else None,
            "hurst_path": hpath.values if hpath is not None else None,
            "european_value": euro,
            "european_se": euro_se,
        },
        "bounds": [
            {
                "method": r.kind.label,
                "kind": r.kind.value,
                **r.bounds.to_dict(),
                "flags": r.flags,
                "dual_train_zero_control": r.dual_train_zero,
                "dual_train_fitted": r.dual_train_fitted,
            }
            for r in results
        ],
        "diagnostics": diagnostics,
    }
    return RunReport(_jsonable(body), stage.timings)


TABLE_COLUMNS = ("Method", "Lower", "Upper", "Std Error", "Gap", "Gap %", "Premium Status")


def bounds_rows(report: RunReport) -> List[List[str]]:
    rows = []
    for b in report.body["bounds"]:
        pct = b["gap_pct"]
        rows.append([
            b["method"],
            f"{b['lower']:.4f}",
            f"{b['upper']:.4f}",
            f"{b['lower_se']:.4f}/{b['upper_se']:.4f}",
            f"{b['gap']:.4f}",
            "n/a" if pct is None else f"{100 * pct:.2f}%",
            b["premium_status"] or "n/a",
        ])
    return rows


def render_table(report: RunReport) -> str:
    rows = [list(TABLE_COLUMNS)] + bounds_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(len(TABLE_COLUMNS))]
    lines = []
    for k, r in enumerate(rows):
        lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    b = report.body
    head = (f"{b['contract']['ticker']} {b['contract']['quote_date']} {b['contract']['cp_flag']} "
            f"K={b['contract']['strike']} dte={b['contract']['dte']} premium={b['contract']['premium']}\n"
            f"regime={b['regime']['kind']} mean_hurst={b['regime']['mean_hurst']:.4f} "
            f"engine={b['simulation']['engine_tag']}\n")
    return head + "\n".join(lines) + "\n"


def render_csv(report: RunReport) -> str:
    import csv
    import io
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["method", "lower", "lower_se", "upper", "upper_se", "gap", "gap_pct", "premium_status"])
    for b in report.body["bounds"]:
        w.writerow([b["method"], repr(b["lower"]), repr(b["lower_se"]), repr(b["upper"]),
                    repr(b["upper_se"]), repr(b["gap"]),
                    "" if b["gap_pct"] is None else repr(b["gap_pct"]), b["premium_status"] or ""])
    return out.getvalue()
