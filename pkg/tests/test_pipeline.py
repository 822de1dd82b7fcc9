import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from roughswitch.config import PipelineConfig
from roughswitch.errors import LengthMismatch, StageError
from roughswitch.pipeline import forecast_diagnostics, render_csv, render_table, run_pipeline


def quick(market, **kw):
    prices, options, days = market
    base = dict(options=options, prices=prices, ticker="SYN", date=days[-20], dte=10, paths=512,
                dual_iters=20, mlp_epochs=3, rff_dim=32, gbt_rounds=20)
    base.update(kw)
    return PipelineConfig(**base)


def test_diagnostics_cases():
    assert forecast_diagnostics(np.full(10, 0.4), np.full(10, 0.4)) == (0.0, 0.0)
    mae, mse = forecast_diagnostics(np.full(10, 0.5), np.full(10, 0.4))
    assert mae == pytest.approx(0.1) and mse == pytest.approx(0.01)
    with pytest.raises(LengthMismatch):
        forecast_diagnostics(np.zeros(3), np.zeros(4))


@given(st.lists(st.floats(0, 1), min_size=1, max_size=20), st.randoms())
def test_diagnostic_bounds(realized, rnd):
    forecast = [rnd.random() for _ in realized]
    mae, mse = forecast_diagnostics(forecast, realized)
    worst = float(np.max(np.abs(np.subtract(forecast, realized))))
    assert mae >= 0 and mse >= 0
    assert mse <= worst * mae + 1e-15


def test_injected_rough_forecast(market):
    report = run_pipeline(quick(market, inject_hurst=0.3, regressor="linear"))
    assert report.regime == "Rough"
    assert report.body["simulation"]["engine_tag"] == "RoughBergomi"
    assert report.body["forecast"]["mean"] == pytest.approx(0.3)


def test_byte_identical_reports_and_mae(market):
    cfg = quick(market)
    first, second = run_pipeline(cfg).to_json(), run_pipeline(cfg).to_json()
    assert first == second
    body = json.loads(first)
    assert len(body["bounds"]) == 4
    diag = body["diagnostics"]
    f = np.array(body["forecast"]["values"])
    h = np.array(diag["realized"])
    assert h.size == 10
    assert diag["mae"] == pytest.approx(np.mean(np.abs(f - h)), abs=1e-15)
    assert diag["mse"] == pytest.approx(np.mean((f - h) ** 2), abs=1e-15)
    # the embedded config reproduces the report
    again = run_pipeline(PipelineConfig.from_dict(body["config"])).to_json()
    assert again == first
    assert body["schema_version"] == "1.0"
    assert body["simulation"]["seeds"] == {"primal_train": 42, "dual_train": 43, "evaluation": 44}


def test_engine_override_leaves_forecast_alone(market):
    rough = run_pipeline(quick(market, inject_hurst=0.3, regressor="linear")).body
    forced = run_pipeline(quick(market, inject_hurst=0.3, regressor="linear", engine="heston")).body
    for key in ("forecast", "hurst", "diagnostics", "params", "contract"):
        assert rough[key] == forced[key]
    assert forced["regime"]["kind"] == "Smooth"
    assert forced["simulation"]["engine_tag"] == "Heston"
    assert rough["bounds"] != forced["bounds"]


def test_stage_labels(market):
    with pytest.raises(StageError) as exc:
        run_pipeline(quick(market, ticker="NOPE"))
    assert exc.value.stage == "data"
    with pytest.raises(StageError) as exc:
        run_pipeline(quick(market, date=market[2][40]))
    assert exc.value.stage == "forecast"


def test_renderers(market):
    report = run_pipeline(quick(market, regressor="linear,extended"))
    table = render_table(report)
    assert "Premium Status" in table and "Extended Linear Signature" in table
    lines = render_csv(report).splitlines()
    assert lines[0].startswith("method,lower,lower_se")
    assert len(lines) == 3
    timed = json.loads(report.to_json(include_timings=True))
    assert set(timed["timings"]) == {"data", "hurst", "forecast", "regime", "calibrate", "simulate",
                                     "signatures", "pricing"}


def test_config_round_trip():
    cfg = PipelineConfig(ticker="AAPL", date="2023-08-31", atm_dte_band=(5, 30), rff_gamma=0.2,
                         inject_hurst=0.45, sig_channels="time,price")
    assert PipelineConfig.from_json(cfg.to_json()) == cfg
    assert cfg.paths == 2 ** 15 and cfg.n_steps == 10 and cfg.sig_depth == 3 and cfg.rff_dim == 128
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"not_a_field": 1})
    with pytest.raises(ValueError):
        PipelineConfig(sig_depth=4)
