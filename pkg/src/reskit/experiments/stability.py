"""Sensitivity to initial conditions, for reservoirs and kernel recursions.

Reservoir part: two random unit initial states are driven by the same input
stream and the same weights; the squared distance between them, normalized
by its initial value, is averaged over many weight draws.  Low recurrent
variance should erase the initial condition; high variance should keep the
trajectories apart.

Kernel part: the Gram recursion is started once from all zeros and once from
all ones on identical windows; the recursion is initial-condition
independent when the two runs meet.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError
from ..ks_data import load_dataset, windowize
from ..recurrent_kernel import RKParams, RKState, init_rk_state, rk_update_ri
from ..reservoir import ReservoirParams, ReservoirState, init_weights, random_state, step
from ..rng import make_rng


def reservoir_divergence(params: ReservoirParams, inputs: np.ndarray,
                         init_seed: int) -> np.ndarray:
    """Normalized squared distance between two trajectories, per step.

    Returns ``horizon + 1`` values starting at 1.0 (the two random initial
    states, before any input).
    """
    w = init_weights(params)
    x0 = random_state(params, seed=init_seed, batch=2).x
    state = ReservoirState(x=x0, t=0)
    dist = np.empty(inputs.shape[0] + 1)
    dist[0] = float(np.sum((x0[:, 0] - x0[:, 1]) ** 2))
    for t, frame in enumerate(inputs):
        state = step(state, np.repeat(frame[:, None], 2, axis=1), w, params)
        dist[t + 1] = float(np.sum((state.x[:, 0] - state.x[:, 1]) ** 2))
    return dist / dist[0]


def gram_init_gap(params: RKParams, windows: np.ndarray) -> np.ndarray:
    """Max |Gram difference| per step between all-zeros and all-ones starts."""
    n = windows.shape[0]
    tau = windows.shape[1]
    lo = init_rk_state(params, n, n)
    hi = RKState(gram=np.ones((n, n)), diag_u=np.ones(n), diag_v=np.ones(n),
                 t=0, params=params)
    gaps = np.empty(tau)
    for t in range(tau):
        frames = windows[:, t, :]
        drive = params.sigma_i2 * (frames @ frames.T) + params.sigma_b2
        diag = np.ascontiguousarray(np.diag(drive))
        lo = rk_update_ri(lo, drive, diag, diag)
        hi = rk_update_ri(hi, drive, diag, diag)
        gaps[t] = float(np.max(np.abs(lo.gram - hi.gram)))
    return gaps


def run_stability(cfg, out_dir=None):
    if not cfg.dataset:
        raise ConfigError("stability needs a dataset path (set `dataset`)")
    ds = load_dataset(cfg.dataset)
    if ds.series.shape[1] < cfg.input_dim:
        raise ConfigError(f"dataset has {ds.series.shape[1]} coordinates, "
                          f"input_dim={cfg.input_dim} requested")
    drive = np.ascontiguousarray(ds.series[:cfg.horizon, :cfg.input_dim])
    if drive.shape[0] < cfg.horizon:
        raise ConfigError("dataset shorter than the stability horizon")

    rows = []
    curves = {}
    for sr2 in cfg.sigma_r2_grid:
        per_seed = np.empty((cfg.n_seeds, cfg.horizon + 1))
        for s in range(cfg.n_seeds):
            params = ReservoirParams(
                size=cfg.size, input_dim=cfg.input_dim,
                sigma_r=math.sqrt(sr2), sigma_i=math.sqrt(cfg.sigma_i2),
                activation=cfg.activation, backend="dense", seed=s)
            per_seed[s] = reservoir_divergence(params, drive, init_seed=s)
        mean_curve = per_seed.mean(axis=0)
        t_axis = np.arange(cfg.horizon + 1)
        curves[f"reservoir_sr{sr2:g}"] = (
            ["t", "mean_norm_dist", "min_norm_dist", "max_norm_dist"],
            [t_axis, mean_curve, per_seed.min(axis=0), per_seed.max(axis=0)])
        rows.append({"part": "reservoir", "sigma_r2": sr2,
                     "seed": f"0..{cfg.n_seeds - 1}",
                     "final_mean_norm_dist": float(mean_curve[-1]),
                     "final_max_norm_dist": float(per_seed[:, -1].max()),
                     "n_seeds": cfg.n_seeds})

    # the kernel recursion sees full frames, as in the prediction pipeline;
    # input_dim only trims the reservoir probe above
    need = cfg.rk_tau + cfg.rk_windows
    if ds.series.shape[0] < need:
        raise ConfigError(f"dataset too short for {cfg.rk_windows} kernel windows")
    windows, _ = windowize(ds.series[:need, :], cfg.rk_tau)
    windows = np.ascontiguousarray(windows[:cfg.rk_windows])
    for sr2 in cfg.rk_sigma_r2_grid:
        params = RKParams(kind="arcsine_erf", sigma_r2=sr2, sigma_i2=cfg.sigma_i2)
        gaps = gram_init_gap(params, windows)
        curves[f"kernel_sr{sr2:g}"] = (
            ["t", "max_gram_gap"], [np.arange(1, cfg.rk_tau + 1), gaps])
        rows.append({"part": "kernel", "sigma_r2": sr2, "seed": "none",
                     "final_max_gram_gap": float(gaps[-1]),
                     "n_seeds": 0})
    return rows, curves
