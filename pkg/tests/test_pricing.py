import math

import numpy as np
import pytest

from roughswitch.calibration import EngineParams
from roughswitch.engines import simulate_heston
from roughswitch.errors import InvalidParams
from roughswitch.mlp import MlpConfig
from roughswitch.pricing import (ConstantSlice, ExerciseGrid, FittedContinuation, MartingaleControl,
                                 PricingConfig, RegressorKind, assemble_bounds, dual_upper_bound,
                                 european_value, fit_continuation, fit_martingale_control,
                                 lower_bound, martingale_paths, parse_regressors, path_features,
                                 payoff, premium_status, price_with_all_variants, variant_features)

T10 = 10 / 252
FAST = PricingConfig(mlp=MlpConfig(epochs=4), dual_iters=40, rff_dim=32)
HESTON = EngineParams(rho=-0.7, eta=0.3, xi0=0.04, kappa=2.0, theta=0.04, v0=0.04, r=0.045)


def features(strike=100.0, seed=1, M=2 ** 11, params=HESTON, spot=100.0, grid_idx=None, cp="put"):
    ens = simulate_heston(params, spot, T10, M, 10, seed)
    grid = ExerciseGrid.daily(ens.grid) if grid_idx is None else ExerciseGrid.from_indices(ens.grid, grid_idx)
    return path_features(ens, grid, strike, cp, params.r)


def test_payoff_cases():
    assert payoff(90, 100, "put") == 10
    assert payoff(110, 100, "put") == 0
    assert payoff(110, 100, "call") == 10
    assert payoff(np.array([90.0, 110.0]), 100, "call").tolist() == [0, 10]
    with pytest.raises(InvalidParams):
        payoff(1, 1, "straddle")


def test_parse_regressors():
    assert parse_regressors("all") == list(RegressorKind)
    assert parse_regressors("linear, deepkernel") == [RegressorKind.LINEAR, RegressorKind.DEEPKERNEL]
    with pytest.raises(InvalidParams):
        parse_regressors("quantum")
    assert RegressorKind.DEEPKERNEL.label == "Deep Kernel Method"


def test_grid_must_end_at_maturity():
    with pytest.raises(InvalidParams):
        ExerciseGrid.from_indices(np.linspace(0, 1, 5), [0, 2])


def test_variant_feature_widths():
    pf = features(M=16)
    assert variant_features(RegressorKind.LINEAR, pf).shape == (16, 11, 39)
    assert variant_features(RegressorKind.EXTENDED, pf).shape == (16, 11, 45)
    assert variant_features(RegressorKind.DEEPLOG, pf).shape == (16, 11, 39)


def test_deep_itm_put_exercises_now():
    params = EngineParams(rho=0.0, eta=0.0, xi0=1e-12, kappa=0.0, r=0.0)
    pf = features(seed=3, M=512, params=params, spot=80.0)
    for kind in (RegressorKind.LINEAR, RegressorKind.DEEPKERNEL):
        lo, _ = lower_bound(pf, fit_continuation(pf, kind, FAST))
        assert lo == pytest.approx(20.0, abs=1e-4)


def test_zero_strike_is_worthless():
    pf = features(strike=0.0, M=256)
    fitted = fit_continuation(pf, RegressorKind.LINEAR, FAST)
    assert lower_bound(pf, fitted) == (0.0, 0.0)
    control = fit_martingale_control(pf, RegressorKind.LINEAR, FAST)
    assert control.best_objective == 0.0 and np.all(control.coefs == 0)
    assert all(f == "no_itm_paths" for f in fitted.flags.values())


def test_zero_continuation_exercises_at_start():
    pf = features(strike=120.0, M=256)
    n_ex = pf.payoff.shape[1]
    rule = FittedContinuation(RegressorKind.LINEAR, [ConstantSlice(0.0)] * n_ex)
    lo, se = lower_bound(pf, rule)
    assert lo == pytest.approx(20.0) and se == 0.0


def test_single_exercise_date_is_european():
    pf = features(grid_idx=[10])
    euro, euro_se = european_value(pf)
    for kind in RegressorKind:
        lo, _ = lower_bound(pf, fit_continuation(pf, kind, FAST))
        up, _ = dual_upper_bound(pf, fit_martingale_control(pf, kind, FAST))
        assert abs(lo - euro) <= 3 * euro_se
        assert abs(up - euro) <= 3 * euro_se


def test_dual_zero_control_and_budget():
    pf = features()
    control = fit_martingale_control(pf, RegressorKind.LINEAR, PricingConfig(dual_iters=0))
    assert np.all(control.coefs == 0)
    up, _ = dual_upper_bound(pf, control)
    assert up == pytest.approx(pf.disc_payoff.max(axis=1).mean(), abs=1e-14)
    G = np.ones((pf.n_paths, 10, 3))
    Mt = martingale_paths(G, pf.dZ, np.ones((10, 3)))
    assert np.all(Mt[:, 0] == 0)


@pytest.mark.parametrize("kind", list(RegressorKind))
def test_fitted_dual_never_worse_on_training(kind):
    pf = features(seed=4)
    control = fit_martingale_control(pf, kind, FAST)
    assert control.best_objective <= control.zero_objective
    assert min(control.objective_trace) == control.best_objective
    up, _ = dual_upper_bound(pf, control)
    assert up == pytest.approx(control.best_objective, rel=1e-12)


def test_martingale_is_mean_zero_on_fresh_paths():
    train, test = features(seed=5), features(seed=6, M=2 ** 13)
    control = fit_martingale_control(train, RegressorKind.LINEAR, FAST)
    from roughswitch.pricing import _dual_design
    Mt = martingale_paths(_dual_design(test, control.kind, control.maps), test.dZ, control.coefs)[:, -1]
    assert abs(Mt.mean()) <= 4 * Mt.std(ddof=1) / math.sqrt(Mt.size)


def test_lower_bound_monotone_in_strike():
    lows = []
    for k in (95.0, 100.0, 105.0):
        train, ev = features(strike=k, seed=7), features(strike=k, seed=8)
        lows.append(lower_bound(ev, fit_continuation(train, RegressorKind.LINEAR, FAST))[0])
    assert lows[0] <= lows[1] <= lows[2]


def test_all_variants_bound_ordering():
    primal, dual, ev = features(seed=10), features(seed=11), features(seed=12)
    results = price_with_all_variants(primal, dual, ev, premium=2.0, config=FAST)
    assert [r.kind for r in results] == list(RegressorKind)
    for r in results:
        b = r.bounds
        assert b.upper + 3 * b.upper_se >= b.lower - 3 * b.lower_se
        assert b.lower_se > 0 and b.upper_se > 0
        assert b.gap == b.upper - b.lower
        assert r.dual_train_fitted <= r.dual_train_zero


def test_table_arithmetic():
    b = assemble_bounds(2.04, 0.01, 2.39, 0.01, premium=2.08)
    assert round(b.gap, 2) == 0.35
    assert round(100 * b.gap_pct, 2) == 17.16
    assert b.premium_status == "Within"
    assert premium_status(10.16, 15.97, 5.61) == "Outside"
    assert premium_status(5.29, 8.01, 5.61) == "Within"
    assert premium_status(1.0, 2.0, 1.0) == "Within"
    assert premium_status(1.0, 2.0, None) is None
    assert assemble_bounds(0.0, 0, 1.0, 0).gap_pct is None
