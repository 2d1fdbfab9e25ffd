"""How fast empirical reservoir Grams approach the recurrent-kernel limit.

For each (activation, recurrent variance, seed) a batch of Gaussian input
series is pushed through reservoirs of increasing size, and the mean squared
deviation between the empirical state Gram and the deterministic kernel
recursion is recorded at chosen times.  Dense and structured reservoirs run
on identical inputs, so their deviations are directly comparable.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..errors import ConfigError, KindError
from ..recurrent_kernel import (RKParams, family, init_rk_state, kind_for_activation,
                                rk_update_ri, rk_update_ti)
from ..reservoir import ReservoirParams, init_weights, step, zero_state
from ..rng import make_rng

_SERIES_STREAM = 7


def _draw_series(seed: int, n_series: int, series_len: int, dim: int) -> np.ndarray:
    g = make_rng(seed, stream=_SERIES_STREAM)
    return g.standard_normal((n_series, series_len, dim))


def limit_grams(kind: str, sigma_r2: float, sigma_i2: float, sigma_b2: float,
                series: np.ndarray, record_at) -> dict[int, np.ndarray]:
    """Kernel-recursion Grams over all series pairs at the recorded times."""
    params = RKParams(kind=kind, sigma_r2=sigma_r2, sigma_i2=sigma_i2, sigma_b2=sigma_b2)
    n, t_len, _ = series.shape
    state = init_rk_state(params, n, n)
    record = set(record_at)
    out: dict[int, np.ndarray] = {}
    for t in range(t_len):
        frames = series[:, t, :]
        if family(kind) == "ri":
            drive = sigma_i2 * (frames @ frames.T) + sigma_b2
            diag = np.ascontiguousarray(np.diag(drive))
            state = rk_update_ri(state, drive, diag, diag)
        else:
            sq = np.einsum("ij,ij->i", frames, frames)
            dist = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (frames @ frames.T), 0.0)
            state = rk_update_ti(state, sigma_i2 * dist)
        if state.t in record:
            out[state.t] = state.gram.copy()
    return out


def empirical_grams(algorithm: str, activation: str, sigma_r2: float, sigma_i2: float,
                    sigma_b2: float, size: int, series: np.ndarray, record_at,
                    redraw: bool, seed: int) -> dict[int, np.ndarray]:
    """State Grams of one sampled reservoir driven by every series in the batch."""
    params = ReservoirParams(
        size=size, input_dim=series.shape[2],
        sigma_r=math.sqrt(sigma_r2), sigma_i=math.sqrt(sigma_i2), sigma_b=math.sqrt(sigma_b2),
        activation=activation, backend="structured" if algorithm == "src" else "dense",
        redraw=redraw, seed=seed)
    w = init_weights(params)
    n, t_len, _ = series.shape
    state = zero_state(params, batch=n)
    record = set(record_at)
    out: dict[int, np.ndarray] = {}
    for t in range(t_len):
        state = step(state, np.ascontiguousarray(series[:, t, :].T), w, params)
        if state.t in record:
            out[state.t] = state.x.T @ state.x
    return out


def _run_group(args) -> list[dict]:
    (activation, sigma_r2, redraw, seed, cfg) = args
    series = _draw_series(seed, cfg.n_series, cfg.series_len, cfg.series_dim)
    kind = kind_for_activation(activation)
    limits = limit_grams(kind, sigma_r2, cfg.sigma_i2, cfg.sigma_b2, series, cfg.record_at)
    rows = []
    for algorithm in cfg.algorithms:
        for size in cfg.sizes:
            emp = empirical_grams(algorithm, activation, sigma_r2, cfg.sigma_i2,
                                  cfg.sigma_b2, size, series, cfg.record_at,
                                  bool(redraw), seed)
            for t in cfg.record_at:
                mse = float(np.mean((emp[t] - limits[t]) ** 2))
                rows.append({
                    "algorithm": algorithm, "activation": activation,
                    "sigma_r2": sigma_r2, "size": size, "t": t,
                    "redraw": int(redraw), "seed": seed, "mse": mse,
                })
    return rows


def run_convergence(cfg, out_dir=None):
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    for act in cfg.activations:
        try:
            kind_for_activation(act)
        except KindError as exc:
            raise ConfigError(f"no kernel recursion for activation {act!r}") from exc
    groups = [(act, sr2, rd, seed, cfg)
              for act in cfg.activations
              for sr2 in cfg.sigma_r2_grid
              for rd in cfg.redraw_modes
              for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            fragments = list(pool.map(_run_group, groups))
    else:
        fragments = [_run_group(g) for g in groups]
    rows = [row for fragment in fragments for row in fragment]

    curves = {}
    for act in cfg.activations:
        for sr2 in cfg.sigma_r2_grid:
            for rd in cfg.redraw_modes:
                header = ["size"]
                columns = [list(cfg.sizes)]
                for algorithm in cfg.algorithms:
                    for t in cfg.record_at:
                        header.append(f"mse_{algorithm}_t{t}")
                        per_size = []
                        for size in cfg.sizes:
                            vals = [r["mse"] for r in rows
                                    if r["algorithm"] == algorithm and r["activation"] == act
                                    and r["sigma_r2"] == sr2 and r["redraw"] == int(rd)
                                    and r["size"] == size and r["t"] == t]
                            per_size.append(float(np.mean(vals)))
                        columns.append(per_size)
                name = f"convergence_{act}_sr{sr2:g}" + ("_redraw" if rd else "")
                curves[name] = (header, columns)
    return rows, curves
