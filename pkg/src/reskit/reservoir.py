"""Random-feature reservoirs with dense or structured internal weights.

The state update is

    x(t+1) = (1/sqrt(N)) f( W_r x(t) + W_i i(t) + b )

with fixed Gaussian weights (entrywise variances sigma_r^2, sigma_i^2 and
bias variance sigma_b^2).  The ``structured`` backend replaces the dense
concatenated matrix ``[W_r, W_i]`` by a Hadamard sign-chain operator applied
to the scaled concatenation ``[sigma_r x; sigma_i i]``; the bias stays dense.
For the ``rff`` activation the state is ``(1/sqrt(N)) [cos(z); sin(z)]`` with
``N`` frequency rows, hence exactly unit norm.

``redraw=True`` resamples ``W_r`` and ``W_i`` (or the sign diagonals) at every
time step from ``seed XOR t``; the bias is never redrawn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf as _erf

from .errors import DimensionError, KindError, NumericError
from .rng import make_rng, step_seed
from .transforms import StructuredOperator, next_pow2, structured_matvec

ACTIVATIONS = ("erf", "tanh", "sign", "heaviside", "relu", "rff")
BACKENDS = ("dense", "structured")


@dataclass(frozen=True)
class ReservoirParams:
    """Sizes, scales and sampling options for one reservoir."""

    size: int
    input_dim: int
    sigma_r: float
    sigma_i: float
    sigma_b: float = 0.0
    activation: str = "erf"
    backend: str = "dense"
    redraw: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise DimensionError(f"reservoir size must be positive, got {self.size}")
        if self.input_dim < 1:
            raise DimensionError(f"input dimension must be positive, got {self.input_dim}")
        if min(self.sigma_r, self.sigma_i, self.sigma_b) < 0:
            raise NumericError("weight scales must be non-negative")
        if self.activation not in ACTIVATIONS:
            raise KindError(f"unknown activation {self.activation!r}")
        if self.backend not in BACKENDS:
            raise KindError(f"unknown backend {self.backend!r}")

    @property
    def state_dim(self) -> int:
        """Length of the state vector (2N for rff cos/sin pairs, else N)."""
        return 2 * self.size if self.activation == "rff" else self.size

    @property
    def fan_in(self) -> int:
        return self.state_dim + self.input_dim


@dataclass(frozen=True)
class WeightSet:
    """Sampled weights; dense matrices or a structured operator, plus bias."""

    b: np.ndarray
    w_r: np.ndarray | None = None
    w_i: np.ndarray | None = None
    op: StructuredOperator | None = None


@dataclass
class ReservoirState:
    """State vector (or ``(state_dim, k)`` batch) and its time index."""

    x: np.ndarray
    t: int = 0


def zero_state(params: ReservoirParams, batch: int | None = None) -> ReservoirState:
    shape = (params.state_dim,) if batch is None else (params.state_dim, batch)
    return ReservoirState(x=np.zeros(shape), t=0)


def random_state(params: ReservoirParams, seed: int, batch: int | None = None) -> ReservoirState:
    """Uniform point(s) on the unit sphere; used by the stability experiment."""
    shape = (params.state_dim,) if batch is None else (params.state_dim, batch)
    x = make_rng(seed, stream=2).standard_normal(shape)
    x /= np.linalg.norm(x, axis=0)
    return ReservoirState(x=x, t=0)


def _sample_inner(params: ReservoirParams, seed: int) -> tuple:
    """Draw (w_r, w_i, op) for one time step; the bias is sampled elsewhere."""
    if params.backend == "dense":
        g = make_rng(seed)
        w_r = params.sigma_r * g.standard_normal((params.size, params.state_dim))
        w_i = params.sigma_i * g.standard_normal((params.size, params.input_dim))
        return w_r, w_i, None
    p = next_pow2(params.fan_in)
    return None, None, StructuredOperator.sample(p, sigma_eff=1.0, seed=seed)


def init_weights(params: ReservoirParams) -> WeightSet:
    """Draw the weight set for ``params.seed`` (time step 0 when redrawing)."""
    w_r, w_i, op = _sample_inner(params, params.seed)
    b = params.sigma_b * make_rng(params.seed, stream=1).standard_normal(params.size)
    return WeightSet(b=b, w_r=w_r, w_i=w_i, op=op)


def _weights_for_step(params: ReservoirParams, w: WeightSet, t: int) -> WeightSet:
    if not params.redraw:
        return w
    w_r, w_i, op = _sample_inner(params, step_seed(params.seed, t))
    return WeightSet(b=w.b, w_r=w_r, w_i=w_i, op=op)


def _apply_activation(z: np.ndarray, params: ReservoirParams) -> np.ndarray:
    root_n = np.sqrt(params.size)
    a = params.activation
    if a == "rff":
        return np.concatenate([np.cos(z), np.sin(z)], axis=0) / root_n
    if a == "erf":
        return _erf(z) / root_n
    if a == "tanh":
        return np.tanh(z) / root_n
    if a == "sign":
        return np.sign(z) / root_n
    if a == "heaviside":
        return np.heaviside(z, 0.5) / root_n
    if a == "relu":
        return np.maximum(z, 0.0) / root_n
    raise KindError(f"unknown activation {a!r}")


def step(state: ReservoirState, inputs: np.ndarray, w: WeightSet,
         params: ReservoirParams) -> ReservoirState:
    """One reservoir update; ``state.x`` may be a vector or a column batch."""
    x = state.x
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.shape[0] != params.input_dim:
        raise DimensionError(
            f"input frame has length {inputs.shape[0]}, expected {params.input_dim}")
    if x.shape[0] != params.state_dim:
        raise DimensionError(
            f"state has length {x.shape[0]}, expected {params.state_dim}")
    if x.ndim != inputs.ndim or (x.ndim == 2 and x.shape[1] != inputs.shape[1]):
        raise DimensionError("state and input batch shapes do not match")
    if not np.all(np.isfinite(inputs)):
        raise NumericError(f"non-finite input at step {state.t}")

    wt = _weights_for_step(params, w, state.t)
    if params.backend == "dense":
        z = wt.w_r @ x + wt.w_i @ inputs
    else:
        p = wt.op.p
        u_shape = (p,) if x.ndim == 1 else (p, x.shape[1])
        u = np.zeros(u_shape)
        u[:params.state_dim] = params.sigma_r * x
        u[params.state_dim:params.fan_in] = params.sigma_i * inputs
        z = structured_matvec(wt.op, u)[:params.size]
    z += wt.b if z.ndim == 1 else wt.b[:, None]
    return ReservoirState(x=_apply_activation(z, params), t=state.t + 1)


def run(series: np.ndarray, params: ReservoirParams, w: WeightSet,
        record_from: int = 0, initial: ReservoirState | None = None) -> np.ndarray:
    """Drive the reservoir over ``series`` (shape ``(T, d)``) from rest.

    Returns the states produced after each input frame, i.e. x(1)..x(T),
    skipping the first ``record_from`` of them.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise DimensionError(f"series must be (T, d), got shape {series.shape}")
    t_len = series.shape[0]
    if not 0 <= record_from <= t_len:
        raise DimensionError(f"record_from {record_from} outside [0, {t_len}]")
    st = initial if initial is not None else zero_state(params)
    out = np.empty((t_len - record_from, params.state_dim))
    for t in range(t_len):
        st = step(st, series[t], w, params)
        if t >= record_from:
            out[t - record_from] = st.x
    return out


def concat_state(x: np.ndarray, inputs: np.ndarray, r: float) -> np.ndarray:
    """Readout features ``[x; r * inputs]`` (works on column batches too)."""
    if r < 0:
        raise NumericError(f"concatenation weight must be non-negative, got {r}")
    return np.concatenate([x, r * np.asarray(inputs, dtype=np.float64)], axis=0)
