"""Pipeline configuration with a lossless JSON file format."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from typing import Optional, Tuple

from .calibration import DEFAULT_CALIB_WINDOW, DEFAULT_KAPPA, DEFAULT_RATE
from .forecaster import GbtConfig
from .kernels import DEFAULT_D, DEFAULT_LAMBDA
from .mlp import MlpConfig
from .pricing import PricingConfig
from .roughness import DEFAULT_WINDOW
from .signatures import parse_channels


@dataclass(frozen=True)
class PipelineConfig:
    # data
    options: Optional[str] = None
    prices: Optional[str] = None
    ticker: str = "AAPL"
    date: str = "2023-08-31"
    dte: int = 10
    cp: str = "put"
    atm_dte_band: Tuple[int, int] = (1, 90)
    # roughness and forecast
    hurst_window: int = DEFAULT_WINDOW
    forecast_lags: int = 5
    gbt_rounds: int = 100
    gbt_lr: float = 0.1
    gbt_depth: int = 3
    gbt_min_rows: int = 16
    rough_threshold: float = 0.5
    inject_hurst: Optional[float] = None
    # calibration
    calib_window: int = DEFAULT_CALIB_WINDOW
    kappa: float = DEFAULT_KAPPA
    risk_free_rate: float = DEFAULT_RATE
    # simulation
    engine: str = "auto"
    paths: int = 2 ** 15
    steps: Optional[int] = None  # None: one step per trading day to expiry
    seed: int = 42
    compensator: str = "exact"
    # signatures and regression
    sig_channels: str = "time,vol,price"
    sig_depth: int = 3
    regressor: str = "all"
    rff_dim: int = DEFAULT_D
    rff_gamma: Optional[float] = None
    ridge_lambda: float = DEFAULT_LAMBDA
    linear_lambda: float = 1e-6
    min_itm: int = 32
    dual_iters: int = 200
    dual_step: float = 0.3
    mlp_width: int = 32
    mlp_epochs: int = 30
    mlp_lr: float = 5e-3
    mlp_batch: int = 256
    # output
    output: str = "json"

    def __post_init__(self):
        if self.sig_depth != 3:
            raise ValueError("only signature depth 3 is supported")
        if self.engine not in ("auto", "rbergomi", "heston"):
            raise ValueError(f"engine must be auto|rbergomi|heston, got {self.engine!r}")
        if self.compensator not in ("exact", "paper"):
            raise ValueError(f"compensator must be exact|paper, got {self.compensator!r}")
        if self.output not in ("json", "table", "csv"):
            raise ValueError(f"output must be json|table|csv, got {self.output!r}")
        if self.dte < 1 or self.paths < 2:
            raise ValueError("dte must be >= 1 and paths >= 2")
        parse_channels(self.sig_channels)
        object.__setattr__(self, "atm_dte_band", tuple(int(x) for x in self.atm_dte_band))

    @property
    def n_steps(self) -> int:
        return self.steps if self.steps is not None else self.dte

    def gbt(self) -> GbtConfig:
        return GbtConfig(self.gbt_rounds, self.gbt_lr, self.gbt_depth, self.gbt_min_rows)

    def pricing(self) -> PricingConfig:
        mlp = MlpConfig(hidden=(self.mlp_width, self.mlp_width), epochs=self.mlp_epochs,
                        batch_size=self.mlp_batch, learning_rate=self.mlp_lr, seed=self.seed)
        return PricingConfig(
            linear_lambda=self.linear_lambda,
            ridge_lambda=self.ridge_lambda,
            rff_dim=self.rff_dim,
            rff_gamma=self.rff_gamma,
            mlp=mlp,
            min_itm=self.min_itm,
            dual_iters=self.dual_iters,
            dual_step=self.dual_step,
            channels=parse_channels(self.sig_channels),
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["atm_dte_band"] = list(self.atm_dte_band)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls.from_dict(json.loads(text))
