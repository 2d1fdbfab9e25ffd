"""Wall-clock comparison of dense, structured, and kernel pipelines.

Each (algorithm, size, phase) cell is timed as the median of ``repeats``
runs after one untimed warm-up.  Phases: ``forward`` covers the state (or
Gram) computation over a fixed input stretch, ``train`` the ridge solve on
precomputed features, and ``predict`` a short closed-loop forecast.  Cells
that exhaust memory are reported as rows with status ``memory_error``
rather than aborting the run.
"""

from __future__ import annotations

import math
import time

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..ks_data import load_dataset, windowize
from ..learning import (KernelForecaster, ReservoirForecaster, forecast_closed_loop,
                        reservoir_features, ridge_fit)
from ..recurrent_kernel import RKParams, add_linear_kernel, build_gram_train, kind_for_activation
from ..reservoir import ReservoirParams, init_weights, run
from ..rng import make_rng
from .prediction import normalize_series


def median_seconds(fn, repeats: int) -> float:
    """Median wall-clock over ``repeats`` calls, after one untimed warm-up."""
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _reservoir_cells(cfg, size, backend, series, rows):
    algorithm = "src" if backend == "structured" else "rc"
    params = ReservoirParams(
        size=size, input_dim=series.shape[1],
        sigma_r=math.sqrt(cfg.sigma_r2), sigma_i=math.sqrt(cfg.sigma_i2),
        sigma_b=math.sqrt(cfg.sigma_b2), activation=cfg.activation,
        backend=backend, seed=cfg.seed)
    try:
        w = init_weights(params)
        forward_in = series[:cfg.forward_steps]
        if "forward" in cfg.phases:
            sec = median_seconds(lambda: run(forward_in, params, w), cfg.repeats)
            rows.append(_row(algorithm, size, "forward", sec, cfg.repeats))
        if "train" in cfg.phases or "predict" in cfg.phases:
            train_end = cfg.warmup + cfg.train_len + 1
            feats, targets = reservoir_features(series[:train_end], params, w,
                                                cfg.concat_scale, cfg.warmup)
            if "train" in cfg.phases:
                sec = median_seconds(lambda: ridge_fit(feats, targets, cfg.alpha),
                                     cfg.repeats)
                rows.append(_row(algorithm, size, "train", sec, cfg.repeats))
            if "predict" in cfg.phases:
                model = ridge_fit(feats, targets, cfg.alpha, r=cfg.concat_scale)
                warm = series[train_end:train_end + cfg.warmup]

                def loop():
                    fc = ReservoirForecaster(params, w, cfg.concat_scale)
                    try:
                        forecast_closed_loop(model, fc, warm, cfg.horizon)
                    except DivergenceError:
                        pass

                sec = median_seconds(loop, cfg.repeats)
                rows.append(_row(algorithm, size, "predict", sec, cfg.repeats))
    except MemoryError:
        rows.append(_row(algorithm, size, "any", float("nan"), 0, "memory_error"))


def _kernel_cells(cfg, series, rows):
    n = cfg.rk_train_windows
    train_end = cfg.warmup + cfg.train_len + 1
    windows, targets = windowize(series[:train_end], cfg.tau)
    if windows.shape[0] < n:
        raise ConfigError(f"only {windows.shape[0]} windows for rk_train_windows={n}")
    pick = make_rng(cfg.seed, stream=11).choice(windows.shape[0], size=n, replace=False)
    pick.sort()
    sub = np.ascontiguousarray(windows[pick])
    params = RKParams(kind=kind_for_activation(cfg.activation),
                      sigma_r2=cfg.sigma_r2, sigma_i2=cfg.sigma_i2, sigma_b2=cfg.sigma_b2)
    try:
        if "forward" in cfg.phases:
            sec = median_seconds(lambda: build_gram_train(sub, params), cfg.repeats)
            rows.append(_row("rk", n, "forward", sec, cfg.repeats))
        if "train" in cfg.phases or "predict" in cfg.phases:
            gram = build_gram_train(sub, params)
            lasts = np.ascontiguousarray(sub[:, -1, :])
            gram = add_linear_kernel(gram, lasts, lasts, cfg.concat_scale)
            y = targets[pick]
            if "train" in cfg.phases:
                sec = median_seconds(
                    lambda: ridge_fit(gram, y, cfg.alpha, mode="dual"), cfg.repeats)
                rows.append(_row("rk", n, "train", sec, cfg.repeats))
            if "predict" in cfg.phases:
                model = ridge_fit(gram, y, cfg.alpha, mode="dual", r=cfg.concat_scale)
                warm = series[train_end:train_end + cfg.tau]

                def loop():
                    fc = KernelForecaster(sub, params, cfg.concat_scale)
                    try:
                        forecast_closed_loop(model, fc, warm, cfg.horizon)
                    except DivergenceError:
                        pass

                sec = median_seconds(loop, cfg.repeats)
                rows.append(_row("rk", n, "predict", sec, cfg.repeats))
    except MemoryError:
        rows.append(_row("rk", n, "any", float("nan"), 0, "memory_error"))


def _row(algorithm, size, phase, seconds, repeats, status="ok"):
    return {"algorithm": algorithm, "size": size, "phase": phase,
            "seconds": seconds, "repeats": repeats, "status": status}


def run_timing(cfg, out_dir=None):
    if not cfg.sizes:
        return [], {}
    if not cfg.dataset:
        raise ConfigError("timing needs a dataset path (set `dataset`)")
    series = load_dataset(cfg.dataset).series
    train_end = cfg.warmup + cfg.train_len + 1
    needed = max(cfg.forward_steps, train_end + cfg.warmup + cfg.horizon)
    if series.shape[0] < needed:
        raise ConfigError(f"dataset has {series.shape[0]} frames, needs >= {needed}")
    series = normalize_series(series, train_end, cfg.input_gain)

    rows: list[dict] = []
    for size in cfg.sizes:
        if "rc" in cfg.algorithms:
            _reservoir_cells(cfg, size, "dense", series, rows)
        if "src" in cfg.algorithms:
            _reservoir_cells(cfg, size, "structured", series, rows)
    if "rk" in cfg.algorithms:
        _kernel_cells(cfg, series, rows)
    return rows, {}
