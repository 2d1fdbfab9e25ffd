"""Deterministic kernel limits of wide random-feature reservoirs.

As the number of neurons grows, inner products between reservoir states
driven by two input sequences concentrate around a deterministic sequence of
kernel values.  For rotation-invariant (RI) activations the recursion is

    k(t+1) = k( sigma_r^2 * k(t) + l(t) ),    l(t) = sigma_i^2 <i(t), j(t)> + sigma_b^2

together with matching recursions for the self-kernels (squared norms) that
the closed forms below need.  For the translation-invariant (TI) random
Fourier feature map, states have exactly unit norm and

    k(t+1) = exp( -( sigma_r^2 * (2 - 2 k(t)) + delta(t) ) / 2 ),
    delta(t) = sigma_i^2 * ||i(t) - j(t)||^2,

with base case k(1) = exp(-delta(0)/2) since both states start at zero.  The
bias never enters the TI recursion because it cancels in differences.

Closed forms (u, v are the scaled pre-activation inputs; ``dot`` their inner
product and ``sq_u``, ``sq_v`` their squared norms; rho the cosine):

    arcsine_erf   (2/pi) asin( 2 dot / sqrt((1+2 sq_u)(1+2 sq_v)) )
    gaussian_rff  exp( -(sq_u + sq_v - 2 dot) / 2 )
    arcsine_sign  (2/pi) asin(rho)
    heaviside     1/2 - acos(rho) / (2 pi)
    arccos1_relu  (1/(2 pi)) ( dot * acos(-rho) + sqrt(sq_u sq_v) sqrt(1-rho^2) )

When a norm vanishes, rho is taken as 0 (so arcsine_sign -> 0, heaviside ->
1/4, arccos1_relu -> 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf as _erf

from .errors import DimensionError, KindError, NumericError
from .rng import make_rng

RI_KINDS = ("arcsine_erf", "arcsine_sign", "heaviside", "arccos1_relu")
TI_KINDS = ("gaussian_rff",)
KINDS = RI_KINDS + TI_KINDS

_ACTIVATION_KIND = {
    "erf": "arcsine_erf",
    "rff": "gaussian_rff",
    "sign": "arcsine_sign",
    "heaviside": "heaviside",
    "relu": "arccos1_relu",
}


def kind_for_activation(activation: str) -> str:
    """Closed-form kernel kind for a reservoir activation; tanh has none."""
    try:
        return _ACTIVATION_KIND[activation]
    except KeyError:
        raise KindError(f"no closed-form kernel for activation {activation!r}") from None


def family(kind: str) -> str:
    if kind in RI_KINDS:
        return "ri"
    if kind in TI_KINDS:
        return "ti"
    raise KindError(f"unknown kernel kind {kind!r}")


def kernel_scalar(kind: str, dot, sq_u, sq_v):
    """Closed-form kernel value(s); broadcasts over array arguments."""
    family(kind)
    dot = np.asarray(dot, dtype=np.float64)
    sq_u = np.asarray(sq_u, dtype=np.float64)
    sq_v = np.asarray(sq_v, dtype=np.float64)
    if np.any(sq_u < 0) or np.any(sq_v < 0):
        raise NumericError("squared norms must be non-negative")

    if kind == "arcsine_erf":
        arg = 2.0 * dot / np.sqrt((1.0 + 2.0 * sq_u) * (1.0 + 2.0 * sq_v))
        out = (2.0 / np.pi) * np.arcsin(np.clip(arg, -1.0, 1.0))
    elif kind == "gaussian_rff":
        out = np.exp(-0.5 * np.maximum(sq_u + sq_v - 2.0 * dot, 0.0))
    else:
        # sqrt before multiplying: sq_u * sq_v can underflow for tiny norms
        norm = np.sqrt(sq_u) * np.sqrt(sq_v)
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(norm > 0.0, dot / np.where(norm > 0.0, norm, 1.0), 0.0)
        rho = np.clip(rho, -1.0, 1.0)
        if kind == "arcsine_sign":
            out = (2.0 / np.pi) * np.arcsin(rho)
        elif kind == "heaviside":
            out = 0.5 - np.arccos(rho) / (2.0 * np.pi)
        else:  # arccos1_relu
            out = (dot * np.arccos(-rho) + norm * np.sqrt(1.0 - rho ** 2)) / (2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RKParams:
    """Kernel kind plus the variance hyperparameters of the reservoir limit."""

    kind: str
    sigma_r2: float
    sigma_i2: float
    sigma_b2: float = 0.0

    def __post_init__(self):
        family(self.kind)
        if min(self.sigma_r2, self.sigma_i2, self.sigma_b2) < 0:
            raise NumericError("variances must be non-negative")


@dataclass
class RKState:
    """Gram block, self-kernel diagonals and time index of one recursion."""

    gram: np.ndarray
    diag_u: np.ndarray
    diag_v: np.ndarray
    t: int
    params: RKParams


def init_rk_state(params: RKParams, n: int, m: int) -> RKState:
    """Recursion start: states are zero, so all kernels begin at zero."""
    return RKState(gram=np.zeros((n, m)), diag_u=np.zeros(n), diag_v=np.zeros(m),
                   t=0, params=params)


def rk_update_ri(state: RKState, l_cross: np.ndarray, l_self_u: np.ndarray,
                 l_self_v: np.ndarray) -> RKState:
    """One RI update given input terms l = sigma_i^2 <i, j> + sigma_b^2."""
    p = state.params
    if family(p.kind) != "ri":
        raise KindError(f"{p.kind!r} is not a rotation-invariant kernel")
    l_cross = np.asarray(l_cross, dtype=np.float64)
    if l_cross.shape != state.gram.shape:
        raise DimensionError(f"l_cross shape {l_cross.shape} != gram {state.gram.shape}")
    qu = p.sigma_r2 * state.diag_u + np.asarray(l_self_u, dtype=np.float64)
    qv = p.sigma_r2 * state.diag_v + np.asarray(l_self_v, dtype=np.float64)
    dot = p.sigma_r2 * state.gram + l_cross
    gram = kernel_scalar(p.kind, dot, qu[:, None], qv[None, :])
    diag_u = kernel_scalar(p.kind, qu, qu, qu)
    diag_v = kernel_scalar(p.kind, qv, qv, qv)
    return RKState(gram=gram, diag_u=np.atleast_1d(diag_u), diag_v=np.atleast_1d(diag_v),
                   t=state.t + 1, params=p)


def rk_update_ti(state: RKState, d_cross: np.ndarray) -> RKState:
    """One TI update given d = sigma_i^2 ||i - j||^2 (no bias term)."""
    p = state.params
    if family(p.kind) != "ti":
        raise KindError(f"{p.kind!r} is not a translation-invariant kernel")
    d_cross = np.asarray(d_cross, dtype=np.float64)
    if d_cross.shape != state.gram.shape:
        raise DimensionError(f"d_cross shape {d_cross.shape} != gram {state.gram.shape}")
    if state.t == 0:
        arg = d_cross
    else:
        arg = p.sigma_r2 * np.maximum(2.0 - 2.0 * state.gram, 0.0) + d_cross
    gram = np.exp(-0.5 * np.maximum(arg, 0.0))
    return RKState(gram=gram, diag_u=np.ones_like(state.diag_u),
                   diag_v=np.ones_like(state.diag_v), t=state.t + 1, params=p)


def _check_windows(w: np.ndarray, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 3:
        raise DimensionError(f"{name} must be (n, tau, d), got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise NumericError(f"non-finite values in {name}")
    return w


def _gram_iterate(wu: np.ndarray, wv: np.ndarray, params: RKParams) -> RKState:
    tau = wu.shape[1]
    state = init_rk_state(params, wu.shape[0], wv.shape[0])
    ti = family(params.kind) == "ti"
    sq_u = np.einsum("ntd,ntd->nt", wu, wu)
    sq_v = np.einsum("ntd,ntd->nt", wv, wv)
    for t in range(tau):
        iu = wu[:, t, :]
        iv = wv[:, t, :]
        cross = iu @ iv.T
        if ti:
            dist = np.maximum(sq_u[:, t, None] + sq_v[None, :, t] - 2.0 * cross, 0.0)
            state = rk_update_ti(state, params.sigma_i2 * dist)
        else:
            state = rk_update_ri(
                state,
                params.sigma_i2 * cross + params.sigma_b2,
                params.sigma_i2 * sq_u[:, t] + params.sigma_b2,
                params.sigma_i2 * sq_v[:, t] + params.sigma_b2,
            )
    return state


def build_gram_train(windows: np.ndarray, params: RKParams) -> np.ndarray:
    """Iterate the recursion over all window pairs; returns the (n, n) Gram."""
    w = _check_windows(windows, "windows")
    return _gram_iterate(w, w, params).gram


def build_gram_test(train_windows: np.ndarray, test_windows: np.ndarray,
                    params: RKParams) -> np.ndarray:
    """Kernel block between train and test windows, shape (n_train, n_test)."""
    wu = _check_windows(train_windows, "train_windows")
    wv = _check_windows(test_windows, "test_windows")
    if wu.shape[1:] != wv.shape[1:]:
        raise DimensionError(
            f"window shapes differ: {wu.shape[1:]} vs {wv.shape[1:]}")
    return _gram_iterate(wu, wv, params).gram


def add_linear_kernel(gram: np.ndarray, last_u: np.ndarray, last_v: np.ndarray,
                      r: float) -> np.ndarray:
    """Add the readout concatenation term r^2 <i_u, i_v> of the last frames."""
    if r < 0:
        raise NumericError(f"concatenation weight must be non-negative, got {r}")
    last_u = np.asarray(last_u, dtype=np.float64)
    last_v = np.asarray(last_v, dtype=np.float64)
    addition = (r * r) * (last_u @ last_v.T)
    if addition.shape != gram.shape:
        raise DimensionError(f"linear term shape {addition.shape} != gram {gram.shape}")
    return gram + addition


def mc_kernel_estimate(kind: str, u: np.ndarray, v: np.ndarray, n_features: int,
                       seed: int = 0, with_stderr: bool = False):
    """Monte-Carlo estimate of kernel_scalar from explicit random features."""
    family(kind)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionError("u and v must be vectors of equal length")
    w = make_rng(seed).standard_normal((int(n_features), u.shape[0]))
    zu = w @ u
    zv = w @ v
    if kind == "gaussian_rff":
        products = np.cos(zu) * np.cos(zv) + np.sin(zu) * np.sin(zv)
    elif kind == "arcsine_erf":
        products = _erf(zu) * _erf(zv)
    elif kind == "arcsine_sign":
        products = np.sign(zu) * np.sign(zv)
    elif kind == "heaviside":
        products = np.heaviside(zu, 0.5) * np.heaviside(zv, 0.5)
    else:  # arccos1_relu
        products = np.maximum(zu, 0.0) * np.maximum(zv, 0.0)
    est = float(products.mean())
    if with_stderr:
        return est, float(products.std(ddof=1) / np.sqrt(len(products)))
    return est


def estimate_lipschitz(kind: str, a_lo: float, a_hi: float, sq_u: float = 1.0,
                       sq_v: float = 1.0, num: int = 4001) -> float:
    """Max finite-difference slope of the scalar kernel map over [a_lo, a_hi].

    For RI kinds the argument is the inner-product slot with self-kernels
    held at (sq_u, sq_v); for TI kinds it is the exponent argument of
    exp(-a/2).  Used to measure the contraction factor in the concentration
    bound empirically.
    """
    if a_hi <= a_lo:
        raise NumericError("need a_hi > a_lo for a slope estimate")
    a = np.linspace(a_lo, a_hi, num)
    if family(kind) == "ti":
        k = np.exp(-0.5 * np.maximum(a, 0.0))
    else:
        k = kernel_scalar(kind, a, sq_u, sq_v)
    slopes = np.abs(np.diff(k) / np.diff(a))
    return float(slopes.max())
