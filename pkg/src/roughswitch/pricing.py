"""Primal (lower) and dual (upper) American option bounds on signature features.

The primal is least-squares Monte Carlo: continuation values are regressed on
features at each exercise date over in-the-money paths, backwards from maturity,
and the resulting stopping rule is applied to an independent ensemble. The dual
subtracts a martingale whose integrand against the recorded vol-driver increments
is linear in the same features, and whose coefficients are fitted by minimizing
the empirical dual objective with normalized subgradient steps.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParams, NonFiniteLoss
from .kernels import (DEFAULT_D, DEFAULT_LAMBDA, RffMap, RidgeModel, Standardizer,
                      median_heuristic_gamma, rff_embed, ridge_fit, sample_rff)
from .mlp import MlpConfig, MlpModel, deep_mlp_fit
from .signatures import CHANNELS, levels, signature_stream, tensor_log, time_augment

log = logging.getLogger(__name__)


class RegressorKind(str, enum.Enum):
    LINEAR = "LinearSignature"
    EXTENDED = "ExtendedLinearSignature"
    DEEPLOG = "DeepLogSignature"
    DEEPKERNEL = "DeepKernelRff"

    @property
    def label(self) -> str:
        return {
            "LinearSignature": "Linear Signature",
            "ExtendedLinearSignature": "Extended Linear Signature",
            "DeepLogSignature": "Deep Log-Signature",
            "DeepKernelRff": "Deep Kernel Method",
        }[self.value]


REGRESSOR_ALIASES = {
    "linear": RegressorKind.LINEAR,
    "extended": RegressorKind.EXTENDED,
    "deeplog": RegressorKind.DEEPLOG,
    "deepkernel": RegressorKind.DEEPKERNEL,
}


def parse_regressors(text: str) -> List[RegressorKind]:
    if text == "all":
        return list(RegressorKind)
    out = []
    for name in text.split(","):
        name = name.strip().lower()
        if name not in REGRESSOR_ALIASES:
            raise InvalidParams(f"unknown regressor {name!r}")
        out.append(REGRESSOR_ALIASES[name])
    return out


@dataclass(frozen=True)
class PricingConfig:
    linear_lambda: float = 1e-6
    ridge_lambda: float = DEFAULT_LAMBDA
    rff_dim: int = DEFAULT_D
    rff_gamma: Optional[float] = None  # None: median heuristic
    mlp: MlpConfig = MlpConfig()
    min_itm: int = 32
    dual_iters: int = 200
    dual_step: float = 0.3
    channels: Tuple[str, ...] = CHANNELS
    seed: int = 0


# ---------------------------------------------------------------- payoffs and grid

def payoff(x, strike: float, cp_flag: str = "put"):
    x = np.asarray(x, dtype=float)
    if cp_flag == "put":
        out = np.maximum(strike - x, 0.0)
    elif cp_flag == "call":
        out = np.maximum(x - strike, 0.0)
    else:
        raise InvalidParams(f"cp_flag must be 'put' or 'call', got {cp_flag!r}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExerciseGrid:
    times: np.ndarray
    indices: np.ndarray  # into the simulation grid

    def __post_init__(self):
        if len(self.times) == 0 or np.any(np.diff(self.times) <= 0):
            raise InvalidParams("exercise times must be strictly increasing and non-empty")

    def __len__(self) -> int:
        return len(self.indices)

    @classmethod
    def daily(cls, sim_grid) -> "ExerciseGrid":
        sim_grid = np.asarray(sim_grid)
        return cls(sim_grid.copy(), np.arange(sim_grid.size))

    @classmethod
    def from_indices(cls, sim_grid, indices: Sequence[int]) -> "ExerciseGrid":
        sim_grid = np.asarray(sim_grid)
        idx = np.asarray(indices, dtype=np.int64)
        if idx[-1] != sim_grid.size - 1:
            raise InvalidParams("last exercise date must be maturity")
        return cls(sim_grid[idx], idx)


# ---------------------------------------------------------------- features

@dataclass(frozen=True)
class PathFeatures:
    """Everything the regressions need from one ensemble, sampled on the exercise grid."""

    sig: np.ndarray  # (M, n_ex, m) signatures incl. the scalar level
    d: int
    payoff: np.ndarray  # (M, n_ex)
    disc_payoff: np.ndarray  # (M, n_ex), discounted to time 0
    dZ: np.ndarray  # (M, n_ex - 1) vol-driver increments between dates, unit variance
    grid: ExerciseGrid

    @property
    def n_paths(self) -> int:
        return self.sig.shape[0]


def path_features(ensemble, grid: ExerciseGrid, strike: float, cp_flag: str, r: float,
                  channels=CHANNELS) -> PathFeatures:
    aug = time_augment(ensemble, channels)
    idx = grid.indices
    sig = signature_stream(aug.points[:, : idx[-1] + 1])[:, idx]
    pay = payoff(ensemble.asset[:, idx], strike, cp_flag)
    disc = pay * np.exp(-r * grid.times)[None, :]
    cumw = np.concatenate([np.zeros((ensemble.n_paths, 1)), np.cumsum(ensemble.dW, axis=1)], axis=1)
    dw = np.diff(cumw[:, idx], axis=1)
    dz = dw / np.sqrt(np.diff(grid.times))[None, :]
    return PathFeatures(sig, aug.d, pay, disc, dz, grid)


def variant_features(kind: RegressorKind, pf: PathFeatures) -> np.ndarray:
    """(M, n_ex, p) regression inputs; the constant scalar level is dropped."""
    kind = RegressorKind(kind)
    raw = pf.sig[..., 1:]
    if kind in (RegressorKind.LINEAR, RegressorKind.DEEPKERNEL):
        return raw
    if kind is RegressorKind.EXTENDED:
        lvl1 = levels(pf.sig, pf.d)[1]
        iu, ju = np.triu_indices(pf.d)
        return np.concatenate([raw, lvl1[..., iu] * lvl1[..., ju]], axis=-1)
    return tensor_log(pf.sig, pf.d)[..., 1:]


# ---------------------------------------------------------------- per-date models

class ConstantSlice:
    def __init__(self, value: float):
        self.value = float(value)

    def predict(self, F):
        return np.full(np.asarray(F).shape[0], self.value)


class RidgeSlice:
    def __init__(self, model: RidgeModel):
        self.model = model

    def predict(self, F):
        return self.model.predict(F)


class KernelSlice:
    def __init__(self, std: Standardizer, rff: RffMap, model: RidgeModel):
        self.std, self.rff, self.model = std, rff, model

    def predict(self, F):
        return self.model.predict(rff_embed(self.std(F), self.rff))


class MlpSlice:
    def __init__(self, model: MlpModel):
        self.model = model

    def predict(self, F):
        return self.model.predict(F)


def _kernel_inputs(F: np.ndarray, config: PricingConfig, seed: int):
    std = Standardizer.fit(F)
    Z = std(F)
    gamma = config.rff_gamma if config.rff_gamma else median_heuristic_gamma(Z, seed)
    rff = sample_rff(F.shape[1], config.rff_dim, gamma, seed)
    return std, rff


def _fit_slice(kind: RegressorKind, F: np.ndarray, y: np.ndarray, F_linear: np.ndarray,
               config: PricingConfig, seed: int):
    """Returns (model, flag); flag names a fallback when one happened."""
    if kind in (RegressorKind.LINEAR, RegressorKind.EXTENDED):
        return RidgeSlice(ridge_fit(F, y, config.linear_lambda)), None
    if kind is RegressorKind.DEEPKERNEL:
        std, rff = _kernel_inputs(F, config, seed)
        return KernelSlice(std, rff, ridge_fit(rff_embed(std(F), rff), y, config.ridge_lambda)), None
    try:
        return MlpSlice(deep_mlp_fit(F, y, replace(config.mlp, seed=seed))), None
    except NonFiniteLoss:
        return RidgeSlice(ridge_fit(F_linear, y, config.linear_lambda)), "mlp_diverged_linear_fallback"


@dataclass
class FittedContinuation:
    kind: RegressorKind
    models: List[Optional[object]]  # one per exercise date; None = never exercise there
    flags: Dict[int, str] = field(default_factory=dict)
    # slices that fell back to the linear signature need raw signature inputs
    linear_slices: set = field(default_factory=set)


def fit_continuation(train: PathFeatures, kind: RegressorKind,
                     config: PricingConfig = PricingConfig()) -> FittedContinuation:
    """Backward induction over the exercise grid on the training ensemble."""
    kind = RegressorKind(kind)
    F = variant_features(kind, train)
    F_lin = variant_features(RegressorKind.LINEAR, train)
    n_ex = F.shape[1]
    cash = train.disc_payoff[:, -1].copy()
    models: List[Optional[object]] = [None] * n_ex
    fitted = FittedContinuation(kind, models)
    for i in range(n_ex - 2, -1, -1):
        itm = train.payoff[:, i] > 0
        n_itm = int(itm.sum())
        if n_itm == 0:
            fitted.flags[i] = "no_itm_paths"
            continue
        rows = itm if n_itm >= config.min_itm else np.ones_like(itm)
        if n_itm < config.min_itm:
            fitted.flags[i] = "few_itm_all_paths"
        model, flag = _fit_slice(kind, F[rows, i], cash[rows], F_lin[rows, i], config,
                                 config.seed + 7919 * (i + 1))
        if flag:
            fitted.flags[i] = flag
            fitted.linear_slices.add(i)
        models[i] = model
        slice_in = F_lin[:, i] if i in fitted.linear_slices else F[:, i]
        cont = model.predict(slice_in)
        dh = train.disc_payoff[:, i]
        ex = itm & (dh >= cont)
        cash[ex] = dh[ex]
    return fitted


def stopping_values(pf: PathFeatures, fitted: FittedContinuation) -> Tuple[np.ndarray, np.ndarray]:
    """Discounted payoff at the fitted stopping time and the exercise index (-1: never)."""
    F = variant_features(fitted.kind, pf)
    F_lin = variant_features(RegressorKind.LINEAR, pf) if fitted.linear_slices else None
    n_ex = F.shape[1]
    value = np.zeros(pf.n_paths)
    stop = np.full(pf.n_paths, -1, dtype=np.int64)
    alive = np.ones(pf.n_paths, dtype=bool)
    for i in range(n_ex):
        itm = alive & (pf.payoff[:, i] > 0)
        if not itm.any():
            continue
        if i == n_ex - 1:
            ex = itm
        else:
            model = fitted.models[i]
            if model is None:
                continue
            inputs = F_lin[:, i] if i in fitted.linear_slices else F[:, i]
            cont = model.predict(inputs)
            ex = itm & (pf.disc_payoff[:, i] >= cont)
        value[ex] = pf.disc_payoff[ex, i]
        stop[ex] = i
        alive &= ~ex
    return value, stop


def _mean_se(x: np.ndarray) -> Tuple[float, float]:
    n = x.size
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(x)), se


def lower_bound(pf: PathFeatures, fitted: FittedContinuation) -> Tuple[float, float]:
    value, _ = stopping_values(pf, fitted)
    return _mean_se(value)


def european_value(pf: PathFeatures) -> Tuple[float, float]:
    return _mean_se(pf.disc_payoff[:, -1])


# ---------------------------------------------------------------- dual

@dataclass
class DualFeatureMap:
    std: Standardizer
    rff: Optional[RffMap] = None

    def __call__(self, F: np.ndarray) -> np.ndarray:
        Z = self.std(F)
        if self.rff is not None:
            Z = rff_embed(Z, self.rff)
        return np.concatenate([np.ones((Z.shape[0], 1)), Z], axis=1)


@dataclass
class MartingaleControl:
    kind: RegressorKind
    maps: List[DualFeatureMap]  # one per exercise date except the last
    coefs: np.ndarray  # (n_ex - 1, q)
    objective_trace: List[float] = field(default_factory=list)
    zero_objective: float = float("nan")
    best_objective: float = float("nan")

    @classmethod
    def zero(cls, kind, maps, q) -> "MartingaleControl":
        return cls(RegressorKind(kind), maps, np.zeros((len(maps), q)))


def _dual_design(pf: PathFeatures, kind: RegressorKind, maps: List[DualFeatureMap]) -> np.ndarray:
    F = variant_features(kind, pf)
    return np.stack([maps[j](F[:, j]) for j in range(len(maps))], axis=1)  # (M, n_ex-1, q)


def _fit_dual_maps(pf: PathFeatures, kind: RegressorKind, config: PricingConfig) -> List[DualFeatureMap]:
    F = variant_features(kind, pf)
    maps = []
    for j in range(F.shape[1] - 1):
        if kind is RegressorKind.DEEPKERNEL:
            std, rff = _kernel_inputs(F[:, j], config, config.seed + 104729 + 7919 * j)
            maps.append(DualFeatureMap(std, rff))
        else:
            maps.append(DualFeatureMap(Standardizer.fit(F[:, j])))
    return maps


def martingale_paths(G: np.ndarray, dZ: np.ndarray, coefs: np.ndarray) -> np.ndarray:
    """M at each exercise date, (M, n_ex); M[:, 0] == 0."""
    integrand = np.einsum("pjq,jq->pj", G, coefs)
    inc = integrand * dZ
    return np.concatenate([np.zeros((G.shape[0], 1)), np.cumsum(inc, axis=1)], axis=1)


def _dual_objective(disc_payoff, G, dZ, coefs):
    U = disc_payoff - martingale_paths(G, dZ, coefs)
    return U.max(axis=1), U.argmax(axis=1)


def fit_martingale_control(train: PathFeatures, kind: RegressorKind,
                           config: PricingConfig = PricingConfig()) -> MartingaleControl:
    """Minimize mean_paths max_i(disc payoff_i - M_i) over linear integrands.

    Normalized subgradient steps of length dual_step * scale / sqrt(k); the best
    iterate by training objective is returned, starting from the zero control.
    """
    kind = RegressorKind(kind)
    maps = _fit_dual_maps(train, kind, config)
    if not maps:
        return MartingaleControl(kind, maps, np.zeros((0, 1)), [], *([float(train.disc_payoff.max(axis=1).mean())] * 2))
    G = _dual_design(train, kind, maps)
    n_paths, n_int, q = G.shape
    coefs = np.zeros((n_int, q))
    best_vals, arg = _dual_objective(train.disc_payoff, G, train.dZ, coefs)
    zero_obj = best_obj = float(best_vals.mean())
    best = coefs.copy()
    trace = [zero_obj]
    scale = float(np.std(best_vals))
    if scale == 0.0:
        scale = float(np.abs(train.disc_payoff).max())
    j_index = np.arange(n_int)[None, :]
    for k in range(1, config.dual_iters + 1):
        if scale == 0.0:
            break
        # d/dcoefs_j of -M_{i*} is -G_j dZ_j for j < i*
        w = (j_index < arg[:, None]) * train.dZ
        grad = -np.einsum("pj,pjq->jq", w, G) / n_paths
        norm = float(np.sqrt(np.sum(grad * grad)))
        if norm == 0.0:
            break
        coefs = coefs - (config.dual_step * scale / math.sqrt(k)) * grad / norm
        vals, arg = _dual_objective(train.disc_payoff, G, train.dZ, coefs)
        obj = float(vals.mean())
        trace.append(obj)
        if obj < best_obj:
            best_obj, best = obj, coefs.copy()
    return MartingaleControl(kind, maps, best, trace, zero_obj, best_obj)


def dual_upper_bound(pf: PathFeatures, control: MartingaleControl) -> Tuple[float, float]:
    if control.coefs.shape[0] == 0:
        return _mean_se(pf.disc_payoff.max(axis=1))
    G = _dual_design(pf, control.kind, control.maps)
    vals, _ = _dual_objective(pf.disc_payoff, G, pf.dZ, control.coefs)
    return _mean_se(vals)


# ---------------------------------------------------------------- bounds and reporting

@dataclass(frozen=True)
class PriceBounds:
    lower: float
    lower_se: float
    upper: float
    upper_se: float
    gap: float
    gap_pct: Optional[float]  # fraction of the lower bound
    premium_status: Optional[str]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def premium_status(lower: float, upper: float, premium: Optional[float]) -> Optional[str]:
    if premium is None:
        return None
    return "Within" if lower <= premium <= upper else "Outside"


def assemble_bounds(lower: float, lower_se: float, upper: float, upper_se: float,
                    premium: Optional[float] = None) -> PriceBounds:
    gap = upper - lower
    gap_pct = gap / lower if lower > 0 else None
    return PriceBounds(lower, lower_se, upper, upper_se, gap, gap_pct,
                       premium_status(lower, upper, premium))


@dataclass
class VariantResult:
    kind: RegressorKind
    bounds: PriceBounds
    flags: Dict[str, str]
    dual_train_zero: float
    dual_train_fitted: float


def price_with_all_variants(primal: PathFeatures, dual: PathFeatures, evaluation: PathFeatures,
                            premium: Optional[float] = None,
                            kinds: Sequence[RegressorKind] = tuple(RegressorKind),
                            config: PricingConfig = PricingConfig()) -> List[VariantResult]:
    """Run every requested variant on the same three disjoint ensembles."""
    out = []
    for kind in kinds:
        kind = RegressorKind(kind)
        fitted = fit_continuation(primal, kind, config)
        lo, lo_se = lower_bound(evaluation, fitted)
        control = fit_martingale_control(dual, kind, config)
        up, up_se = dual_upper_bound(evaluation, control)
        flags = {str(i): f for i, f in sorted(fitted.flags.items())}
        out.append(VariantResult(kind, assemble_bounds(lo, lo_se, up, up_se, premium), flags,
                                 control.zero_objective, control.best_objective))
        log.info("%s: lower %.4f (%.4f) upper %.4f (%.4f)", kind.value, lo, lo_se, up, up_se)
    return out
