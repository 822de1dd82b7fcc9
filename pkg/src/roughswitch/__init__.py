"""American option price bounds under time-varying volatility roughness."""

from .calibration import EngineParams
from .config import PipelineConfig
from .engines import HurstPath, PathEnsemble, simulate, simulate_heston, simulate_rbergomi
from .forecaster import Regime, select_regime
from .pipeline import RunReport, run_pipeline
from .pricing import PriceBounds, RegressorKind

__version__ = "0.1.0"

__all__ = [
    "EngineParams",
    "HurstPath",
    "PathEnsemble",
    "PipelineConfig",
    "PriceBounds",
    "Regime",
    "RegressorKind",
    "RunReport",
    "run_pipeline",
    "select_regime",
    "simulate",
    "simulate_heston",
    "simulate_rbergomi",
]
