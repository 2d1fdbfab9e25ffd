"""Closed-loop forecasting of a saved chaotic dataset.

Reservoirs (dense and structured) train a primal ridge readout on streaming
features; the recurrent kernel trains a dual readout over a subsample of
training windows.  Each seed gets its own weight draw (or window subsample);
every seed and every algorithm forecasts the same held-out stretches so the
curves are comparable, and each seed's curve is the average over those
stretches.  Errors are normalized by the mean squared difference between two
well-separated stretches of the same dataset, so 1.0 means "no better than an
unrelated state".
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..ks_data import load_dataset, windowize
from ..learning import (KernelForecaster, ReservoirForecaster, forecast_closed_loop,
                        nmse_curve, reservoir_features, ridge_fit)
from ..recurrent_kernel import RKParams, add_linear_kernel, build_gram_train, kind_for_activation
from ..reservoir import ReservoirParams, init_weights
from ..rng import make_rng

_SUBSAMPLE_STREAM = 11


def _reservoir_params(cfg, backend: str, seed: int, input_dim: int) -> ReservoirParams:
    return ReservoirParams(
        size=cfg.size, input_dim=input_dim,
        sigma_r=math.sqrt(cfg.sigma_r2), sigma_i=math.sqrt(cfg.sigma_i2),
        sigma_b=math.sqrt(cfg.sigma_b2), activation=cfg.activation,
        backend=backend, seed=seed)


def decorrelated_normalizer(series: np.ndarray, length: int, gap: int = 200,
                            max_stretches: int = 8) -> float:
    """Mean squared difference between decorrelated stretches of the series.

    Stretches of ``length`` frames, mutually separated by at least ``gap``
    frames, are spread evenly over the whole series and the squared
    difference is averaged over all pairs.  A single pair (the minimum the
    length check allows) is a noisy, slightly correlated estimate; on a long
    dataset the pair average converges to the error between independent
    trajectories.
    """
    t_len = series.shape[0]
    if t_len < 2 * length + gap:
        raise ConfigError("dataset too short for the error normalizer")
    m = min(max_stretches, 1 + (t_len - length) // (length + gap))
    starts = np.linspace(0, t_len - length, m).astype(int)
    stretches = [series[s:s + length] for s in starts]
    pairs = [(a, b) for k, a in enumerate(stretches) for b in stretches[k + 1:]]
    return float(np.mean([np.mean((a - b) ** 2) for a, b in pairs]))


def _nanmean_rows(rows) -> np.ndarray:
    """Columnwise mean ignoring NaNs; all-NaN columns stay NaN (no warning)."""
    stack = np.stack(rows)
    mask = np.isnan(stack)
    count = np.sum(~mask, axis=0)
    total = np.sum(np.where(mask, 0.0, stack), axis=0)
    return np.where(count > 0, total / np.maximum(count, 1), np.nan)


def normalize_series(series: np.ndarray, train_end: int, gain: float) -> np.ndarray:
    """Rescale so the RMS frame norm over ``series[:train_end]`` equals ``gain``.

    A gain of zero disables the rescaling.  Normalized errors are invariant
    under this map; it only sets the working point of the activations, which
    otherwise depends on the arbitrary amplitude of the stored dataset.
    """
    if gain <= 0:
        return series
    msq = float(np.mean(np.sum(series[:train_end] ** 2, axis=1)))
    if msq <= 0:
        raise ConfigError("cannot rescale a training segment that is all zeros")
    return series * (gain / math.sqrt(msq))


def _train_reservoir(cfg, backend, seed, series, train_end):
    params = _reservoir_params(cfg, backend, seed, series.shape[1])
    w = init_weights(params)
    feats, targets = reservoir_features(series[:train_end], params, w,
                                        cfg.concat_scale, cfg.warmup)
    model = ridge_fit(feats, targets, cfg.alpha, mode="primal", r=cfg.concat_scale)
    return model, ReservoirForecaster(params, w, cfg.concat_scale)


def _train_kernel(cfg, seed, series, train_end):
    windows, targets = windowize(series[:train_end], cfg.tau)
    n_all = windows.shape[0]
    if n_all < cfg.rk_train_windows:
        raise ConfigError(
            f"{n_all} training windows available, {cfg.rk_train_windows} requested")
    # Evenly strided subsample (best attractor coverage for a fixed budget);
    # the seed only rotates the phase of the stride.
    offset = int(make_rng(seed, stream=_SUBSAMPLE_STREAM).integers(n_all))
    pick = (offset + (np.arange(cfg.rk_train_windows) * n_all)
            // cfg.rk_train_windows) % n_all
    pick.sort()
    sub = np.ascontiguousarray(windows[pick])
    params = RKParams(kind=kind_for_activation(cfg.activation),
                      sigma_r2=cfg.sigma_r2, sigma_i2=cfg.sigma_i2, sigma_b2=cfg.sigma_b2)
    gram = build_gram_train(sub, params)
    lasts = np.ascontiguousarray(sub[:, -1, :])
    gram = add_linear_kernel(gram, lasts, lasts, cfg.concat_scale)
    model = ridge_fit(gram, targets[pick], cfg.alpha, mode="dual", r=cfg.concat_scale)
    return model, KernelForecaster(sub, params, cfg.concat_scale)


def run_prediction(cfg, out_dir=None):
    if not cfg.dataset:
        raise ConfigError("predict needs a dataset path (set `dataset`)")
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    if not cfg.algorithms:
        raise ConfigError("algorithm set must be non-empty")
    ds = load_dataset(cfg.dataset)
    series = ds.series
    if ds.lyapunov is None or ds.lyapunov <= 0:
        raise ConfigError("dataset has no positive Lyapunov estimate; "
                          "regenerate it with lyapunov_probes > 0")
    steps_per_ltime = 1.0 / (ds.lyapunov * ds.dt_effective)
    idx1 = int(round(steps_per_ltime))
    idx3 = int(round(3.0 * steps_per_ltime))
    if cfg.horizon == 0:
        return [], {}
    if idx3 >= cfg.horizon:
        raise ConfigError(f"horizon {cfg.horizon} shorter than three "
                          f"divergence times ({idx3} steps)")

    train_end = cfg.warmup + cfg.train_len + 1
    block = cfg.warm_len + cfg.horizon
    needed = train_end + cfg.test_blocks * block + 2 * cfg.normalizer_len + 200
    if series.shape[0] < needed:
        raise ConfigError(f"dataset has {series.shape[0]} frames, needs >= {needed}")
    series = normalize_series(series, train_end, cfg.input_gain)
    normalizer = decorrelated_normalizer(series, cfg.normalizer_len)
    starts = [train_end + s * block + cfg.warm_len for s in range(cfg.test_blocks)]

    rows = []
    curves = {}
    for algorithm in cfg.algorithms:
        seed_curves = []
        for seed in cfg.seeds:
            if algorithm in ("rc", "src"):
                backend = "structured" if algorithm == "src" else "dense"
                model, forecaster = _train_reservoir(cfg, backend, seed, series, train_end)
            elif algorithm == "rk":
                model, forecaster = _train_kernel(cfg, seed, series, train_end)
            else:
                raise ConfigError(f"unknown algorithm {algorithm!r}")

            block_curves = []
            row = {"algorithm": algorithm, "seed": seed, "diverged_at": -1,
                   "diverged_blocks": 0, "nmse_1lt": math.inf, "nmse_3lt": math.inf,
                   "lyapunov": ds.lyapunov, "normalizer": normalizer,
                   "jitter_alpha": model.meta["jitter_alpha"]}
            for start in starts:
                warm = series[start - cfg.warm_len:start]
                truth = series[start:start + cfg.horizon]
                try:
                    preds = forecast_closed_loop(model, forecaster, warm, cfg.horizon)
                except DivergenceError as exc:
                    row["diverged_blocks"] += 1
                    if row["diverged_at"] < 0:
                        row["diverged_at"] = exc.step
                    block_curves.append(np.full(cfg.horizon, np.nan))
                else:
                    block_curves.append(nmse_curve(preds, truth, normalizer))
            curve = _nanmean_rows(block_curves)
            seed_curves.append(curve)
            if np.isfinite(curve[idx1]):
                row["nmse_1lt"] = float(curve[idx1])
            if np.isfinite(curve[idx3]):
                row["nmse_3lt"] = float(curve[idx3])
            rows.append(row)

        steps = np.arange(cfg.horizon)
        header = ["step", "t_lyap"] + [f"seed{s}" for s in cfg.seeds] + ["mean"]
        columns = [steps, steps / steps_per_ltime, *seed_curves,
                   _nanmean_rows(seed_curves)]
        curves[f"nmse_{algorithm}"] = (header, columns)
    return rows, curves
