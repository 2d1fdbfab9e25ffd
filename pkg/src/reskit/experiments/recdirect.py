"""Closed-loop feedback vs. one-shot stacked-horizon prediction.

Both readouts share the same reservoir and the same feature rows.  The
closed-loop model predicts one frame and is iterated; the direct model maps
each feature row straight to the next ``horizon`` frames stacked into one
long target vector.  Variance ratios against the true trajectory expose the
mean-reversion of direct long-range predictions.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, DivergenceError
from ..ks_data import load_dataset
from ..learning import (ReservoirForecaster, forecast_closed_loop, forecast_direct,
                        nmse_curve, reservoir_features, ridge_fit)
from ..reservoir import ReservoirParams, init_weights
from .prediction import decorrelated_normalizer, normalize_series


def stacked_targets(series: np.ndarray, first: int, count: int, horizon: int) -> np.ndarray:
    """Rows of ``horizon`` consecutive frames flattened, starting at ``first``."""
    view = sliding_window_view(series, horizon, axis=0)[first:first + count]
    return np.ascontiguousarray(view.transpose(0, 2, 1)).reshape(count, -1)


def run_recdirect(cfg, out_dir=None):
    if not cfg.dataset:
        raise ConfigError("recdirect needs a dataset path (set `dataset`)")
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    ds = load_dataset(cfg.dataset)
    series = ds.series
    d = series.shape[1]
    train_end = cfg.warmup + cfg.train_len + 1
    block = cfg.warm_len + cfg.horizon
    needed = train_end + cfg.horizon + len(cfg.seeds) * block + 2 * cfg.normalizer_len + 200
    if series.shape[0] < needed:
        raise ConfigError(f"dataset has {series.shape[0]} frames, needs >= {needed}")
    series = normalize_series(series, train_end, cfg.input_gain)
    normalizer = decorrelated_normalizer(series, cfg.normalizer_len)

    rows = []
    curves = {}
    for k, seed in enumerate(cfg.seeds):
        params = ReservoirParams(
            size=cfg.size, input_dim=d,
            sigma_r=math.sqrt(cfg.sigma_r2), sigma_i=math.sqrt(cfg.sigma_i2),
            sigma_b=math.sqrt(cfg.sigma_b2), activation=cfg.activation,
            backend="dense", seed=seed)
        w = init_weights(params)
        feats, targets = reservoir_features(series[:train_end], params, w,
                                            cfg.concat_scale, cfg.warmup)
        model_loop = ridge_fit(feats, targets, cfg.alpha, r=cfg.concat_scale)

        n_direct = feats.shape[0] - cfg.horizon + 1
        if n_direct < 2:
            raise ConfigError("train_len too short for the direct horizon")
        stacked = stacked_targets(series, cfg.warmup + 1, n_direct, cfg.horizon)
        model_direct = ridge_fit(feats[:n_direct], stacked, cfg.alpha,
                                 r=cfg.concat_scale,
                                 meta={"output_dim": d, "horizon": cfg.horizon})

        start = train_end + k * block + cfg.warm_len
        warm = series[start - cfg.warm_len:start]
        truth = series[start:start + cfg.horizon]

        forecaster = ReservoirForecaster(params, w, cfg.concat_scale)
        row = {"seed": seed, "normalizer": normalizer,
               "nmse_loop_end": math.inf, "nmse_direct_end": math.inf,
               "var_ratio_loop": math.nan, "var_ratio_direct": math.nan,
               "diverged_at": -1}
        try:
            preds_loop = forecast_closed_loop(model_loop, forecaster, warm, cfg.horizon)
        except DivergenceError as exc:
            row["diverged_at"] = exc.step
            preds_loop = None

        forecaster_d = ReservoirForecaster(params, w, cfg.concat_scale)
        forecaster_d.warm(warm)
        preds_direct = forecast_direct(model_direct, forecaster_d.features(), cfg.horizon)

        curve_direct = nmse_curve(preds_direct, truth, normalizer)
        row["nmse_direct_end"] = float(curve_direct[-1])
        row["var_ratio_direct"] = float(preds_direct.var() / truth.var())
        if preds_loop is not None:
            curve_loop = nmse_curve(preds_loop, truth, normalizer)
            row["nmse_loop_end"] = float(curve_loop[-1])
            row["var_ratio_loop"] = float(preds_loop.var() / truth.var())
        else:
            curve_loop = np.full(cfg.horizon, np.nan)
        rows.append(row)
        curves[f"nmse_seed{seed}"] = (
            ["step", "nmse_loop", "nmse_direct"],
            [np.arange(cfg.horizon), curve_loop, curve_direct])
    return rows, curves
