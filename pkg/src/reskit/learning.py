"""Linear readout training and autonomous forecasting.

Readouts are ridge regressions.  ``primal`` mode solves the normal equations
``(A^T A + alpha I) w = A^T y`` over explicit feature rows (reservoir state
concatenated with ``r *`` input frame); when there are fewer rows than
features the algebraically identical identity
``w = A^T (A A^T + alpha I)^{-1} y`` is used so the factorization stays at
the smaller size.  ``dual`` mode solves ``(G + alpha I) w = y`` over a kernel
Gram matrix, giving one weight per training window.

Both modes share an SPD solver with jitter escalation: if the Cholesky
factorization fails at ``alpha`` it is retried at ``10 alpha`` and
``100 alpha``; the jitter actually used is recorded on the model.  Closed
loop forecasting feeds each prediction back as the next input; the direct
variant maps one feature vector to a whole stacked horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import recurrent_kernel as rk
from ._binfmt import read_array, write_array
from .errors import (ConditioningError, DimensionError, DivergenceError, FormatError,
                     NumericError)
from .reservoir import ReservoirParams, ReservoirState, WeightSet, concat_state, step, zero_state

_COND_LIMIT = 1e12


@dataclass
class RidgeModel:
    """Trained readout: ``weights`` has one row per output coordinate."""

    mode: str
    alpha: float
    r: float
    weights: np.ndarray
    meta: dict = field(default_factory=dict)


def _solve_spd(m: np.ndarray, rhs: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """Solve (m + jitter I) x = rhs, escalating jitter alpha -> 100 alpha."""
    if alpha < 0:
        raise NumericError(f"ridge penalty must be non-negative, got {alpha}")
    if alpha == 0:
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] <= 0 or eigs[-1] / eigs[0] > _COND_LIMIT:
            raise ConditioningError(
                f"alpha=0 requires a well-conditioned system; smallest pivot {eigs[0]:.3e}",
                smallest_pivot=float(eigs[0]))
        factors = [0.0]
    else:
        factors = [1.0, 10.0, 100.0]
    work = m.copy()
    diag = np.einsum("ii->i", work)
    base = np.einsum("ii->i", m)
    last_jitter = 0.0
    for f in factors:
        last_jitter = f * alpha
        diag[:] = base + last_jitter
        try:
            c = scipy.linalg.cho_factor(work, lower=True, check_finite=False)
            return scipy.linalg.cho_solve(c, rhs, check_finite=False), last_jitter
        except np.linalg.LinAlgError:
            continue
    smallest = float(np.linalg.eigvalsh(work)[0])
    raise ConditioningError(
        f"SPD solve failed up to jitter {last_jitter:.3e}; smallest pivot {smallest:.3e}",
        smallest_pivot=smallest)


def ridge_fit(design: np.ndarray, targets: np.ndarray, alpha: float,
              mode: str = "primal", r: float = 0.0, meta: dict | None = None) -> RidgeModel:
    """Fit readout weights from a feature matrix (primal) or Gram (dual)."""
    design = np.asarray(design, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if design.ndim != 2 or targets.ndim not in (1, 2):
        raise DimensionError("design must be 2-d and targets 1-d or 2-d")
    if targets.shape[0] != design.shape[0]:
        raise DimensionError(
            f"{targets.shape[0]} target rows for {design.shape[0]} design rows")
    if not (np.all(np.isfinite(design)) and np.all(np.isfinite(targets))):
        raise NumericError("non-finite values in training data")
    y = targets[:, None] if targets.ndim == 1 else targets

    if mode == "primal":
        n, width = design.shape
        if n >= width:
            w_cols, jitter = _solve_spd(design.T @ design, design.T @ y, alpha)
        else:
            coef, jitter = _solve_spd(design @ design.T, y, alpha)
            w_cols = design.T @ coef
    elif mode == "dual":
        if design.shape[0] != design.shape[1]:
            raise DimensionError(f"dual mode needs a square Gram, got {design.shape}")
        w_cols, jitter = _solve_spd(design, y, alpha)
    else:
        raise DimensionError(f"unknown ridge mode {mode!r}")

    model_meta = dict(meta or {})
    model_meta["jitter_alpha"] = jitter
    model_meta["n_train"] = design.shape[0]
    return RidgeModel(mode=mode, alpha=float(alpha), r=float(r),
                      weights=np.ascontiguousarray(w_cols.T), meta=model_meta)


def predict_step(model: RidgeModel, features: np.ndarray) -> np.ndarray:
    """Apply the readout to one feature vector (or a column batch)."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != model.weights.shape[1]:
        raise DimensionError(
            f"feature length {features.shape[0]} != weight width {model.weights.shape[1]}")
    return model.weights @ features


class ReservoirForecaster:
    """Streams frames through a reservoir; features are [state; r * last frame]."""

    def __init__(self, params: ReservoirParams, weights: WeightSet, r: float):
        self.params = params
        self.weights = weights
        self.r = float(r)
        self.state: ReservoirState = zero_state(params)
        self.last: np.ndarray | None = None

    def warm(self, series: np.ndarray) -> None:
        series = np.asarray(series, dtype=np.float64)
        if series.ndim != 2 or series.shape[0] < 1:
            raise DimensionError("warm-up series must be a non-empty (T, d) array")
        self.state = zero_state(self.params)
        for frame in series:
            self.push(frame)

    def push(self, frame: np.ndarray) -> None:
        self.state = step(self.state, frame, self.weights, self.params)
        self.last = np.asarray(frame, dtype=np.float64)

    def features(self) -> np.ndarray:
        if self.last is None:
            raise DimensionError("forecaster must be warmed before use")
        return concat_state(self.state.x, self.last, self.r)


class KernelForecaster:
    """Streams frames through a sliding window; features are Gram columns.

    Against a fixed set of training windows, the feature vector for the
    current window is the recurrent-kernel column plus the linear
    concatenation term ``r^2 <last frame, last frame>``.
    """

    def __init__(self, train_windows: np.ndarray, params: rk.RKParams, r: float):
        self.train = np.ascontiguousarray(train_windows, dtype=np.float64)
        if self.train.ndim != 3:
            raise DimensionError("train_windows must be (n, tau, d)")
        self.params = params
        self.r = float(r)
        self.tau = self.train.shape[1]
        self.train_last = np.ascontiguousarray(self.train[:, -1, :])
        self.window: np.ndarray | None = None

    def warm(self, series: np.ndarray) -> None:
        series = np.asarray(series, dtype=np.float64)
        if series.ndim != 2 or series.shape[0] < self.tau:
            raise DimensionError(f"need at least tau={self.tau} warm-up frames")
        self.window = np.array(series[-self.tau:], dtype=np.float64)

    def push(self, frame: np.ndarray) -> None:
        if self.window is None:
            raise DimensionError("forecaster must be warmed before use")
        self.window = np.vstack([self.window[1:], np.asarray(frame, dtype=np.float64)])

    def features(self) -> np.ndarray:
        if self.window is None:
            raise DimensionError("forecaster must be warmed before use")
        col = rk.build_gram_test(self.train, self.window[None, :, :], self.params)[:, 0]
        if self.r:
            col = col + (self.r ** 2) * (self.train_last @ self.window[-1])
        return col


def forecast_closed_loop(model: RidgeModel, forecaster, warm_series: np.ndarray,
                         horizon: int) -> np.ndarray:
    """Autonomous multi-step forecast, feeding each prediction back in."""
    if horizon < 0:
        raise DimensionError(f"horizon must be non-negative, got {horizon}")
    if horizon == 0:
        return np.empty((0, model.weights.shape[0]))
    forecaster.warm(warm_series)
    out = np.empty((horizon, model.weights.shape[0]))
    for k in range(horizon):
        pred = predict_step(model, forecaster.features())
        if not np.all(np.isfinite(pred)):
            raise DivergenceError(f"forecast diverged at step {k}", step=k)
        out[k] = pred
        forecaster.push(pred)
    return out


def forecast_direct(model: RidgeModel, features: np.ndarray, horizon: int) -> np.ndarray:
    """Emit a whole horizon from one feature vector (stacked-target readout)."""
    d = model.meta.get("output_dim")
    if d is None:
        raise DimensionError("direct forecasting needs meta['output_dim']")
    flat = predict_step(model, features)
    if flat.ndim != 1 or flat.size % d:
        raise DimensionError("stacked prediction does not divide into frames")
    frames = flat.reshape(-1, d)
    if horizon > frames.shape[0]:
        raise DimensionError(
            f"horizon {horizon} exceeds trained span {frames.shape[0]}")
    return frames[:horizon]


def nmse_curve(pred: np.ndarray, truth: np.ndarray, normalizer) -> np.ndarray:
    """Per-step mean squared error over coordinates, divided by ``normalizer``."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 2:
        raise DimensionError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    norm = np.broadcast_to(np.asarray(normalizer, dtype=np.float64), (pred.shape[0],))
    if np.any(norm <= 0) or not np.all(np.isfinite(norm)):
        raise NumericError("normalizer must be positive and finite")
    return ((pred - truth) ** 2).mean(axis=1) / norm


def reservoir_features(series: np.ndarray, params: ReservoirParams, w: WeightSet,
                       r: float, warmup: int) -> tuple[np.ndarray, np.ndarray]:
    """Feature/target rows for next-frame training over one input series.

    Row ``t`` holds ``[x(t+1); r * i(t)]`` with target ``i(t+1)``, for ``t``
    from ``warmup`` to ``T - 2``.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise DimensionError(f"series must be (T, d), got {series.shape}")
    t_len, d = series.shape
    if t_len < warmup + 2:
        raise DimensionError(f"series of length {t_len} too short for warmup {warmup}")
    n_rows = t_len - 1 - warmup
    feats = np.empty((n_rows, params.state_dim + d))
    st = zero_state(params)
    for t in range(t_len - 1):
        st = step(st, series[t], w, params)
        if t >= warmup:
            feats[t - warmup, :params.state_dim] = st.x
            feats[t - warmup, params.state_dim:] = r * series[t]
    return feats, series[warmup + 1:]


def save_model(model: RidgeModel, path) -> None:
    meta = {"kind": "ridge_model", "mode": model.mode, "alpha": model.alpha,
            "r": model.r, "extra": _plain(model.meta)}
    write_array(path, model.weights, meta)


def load_model(path) -> RidgeModel:
    arr, meta = read_array(path)
    if meta.get("kind") != "ridge_model":
        raise FormatError(f"{path}: not a model file (kind={meta.get('kind')!r})")
    return RidgeModel(mode=str(meta["mode"]), alpha=float(meta["alpha"]),
                      r=float(meta["r"]), weights=arr, meta=dict(meta.get("extra", {})))


def _plain(obj):
    """Recursively convert numpy scalars so the metadata is JSON-clean."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj
