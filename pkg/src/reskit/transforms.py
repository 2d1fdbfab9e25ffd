"""Fast Walsh-Hadamard transform and structured random projections.

The structured operator replaces a dense Gaussian matrix by

    W = scale * H D1 H D2 H D3

where ``H`` is the orthonormal Hadamard matrix (entries +-1/sqrt(p)) applied
via the fast transform and ``D1, D2, D3`` are independent Rademacher sign
diagonals.  The chain ``H D1 H D2 H D3`` is orthonormal and its entries have
second moment ``1/p``, so with ``scale = sqrt(p) * sigma_eff`` the rows of
``W`` behave like rows with i.i.d. ``N(0, sigma_eff^2)`` entries while a
matvec costs ``O(p log p)`` instead of ``O(p^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError
from .rng import make_rng


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    if n < 1:
        raise DimensionError(f"next_pow2 needs a positive size, got {n}")
    p = 1
    while p < n:
        p <<= 1
    return p


def fwht_in_place(v: np.ndarray) -> np.ndarray:
    """Orthonormal Walsh-Hadamard transform along axis 0, mutating ``v``.

    Accepts a ``(p,)`` vector or a ``(p, k)`` batch of columns; ``p`` must be
    a power of two and ``v`` must be a float64 array.  Butterflies run in
    place and the single ``1/sqrt(p)`` normalization is applied at the end,
    so the transform is an involution and preserves Euclidean norms.
    """
    p = v.shape[0]
    if not is_pow2(p):
        raise DimensionError(f"transform length must be a power of two, got {p}")
    if v.dtype != np.float64:
        raise NumericError(f"fwht_in_place requires float64 data, got {v.dtype}")
    contiguous = v.flags.c_contiguous
    work = v if contiguous else np.ascontiguousarray(v)
    cols = work.reshape(p, -1)
    h = 1
    while h < p:
        blocks = cols.reshape(-1, 2 * h, cols.shape[1])
        top = blocks[:, :h, :]
        bot = blocks[:, h:, :]
        s = top + bot
        d = top - bot
        blocks[:, :h, :] = s
        blocks[:, h:, :] = d
        h *= 2
    cols *= 1.0 / np.sqrt(p)
    if not contiguous:
        v[...] = work
    return v


def fwht(v: np.ndarray) -> np.ndarray:
    """Copying wrapper around :func:`fwht_in_place`."""
    out = np.array(v, dtype=np.float64, copy=True, order="C")
    fwht_in_place(out)
    return out


def pad_input(v: np.ndarray, p: int) -> np.ndarray:
    """Zero-pad ``v`` along axis 0 up to length ``p``."""
    n = v.shape[0]
    if n > p:
        raise DimensionError(f"cannot pad length {n} down to {p}")
    v = np.asarray(v, dtype=np.float64)
    if n == p:
        return v
    out = np.zeros((p,) + v.shape[1:], dtype=np.float64)
    out[:n] = v
    return out


@dataclass(frozen=True)
class StructuredOperator:
    """Sign diagonals and scale for a Hadamard sign-chain projection.

    ``scale`` equals ``sqrt(p) * sigma_eff`` so that output coordinates have
    the same second moment as a dense Gaussian projection with entrywise
    standard deviation ``sigma_eff``.
    """

    p: int
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    scale: float
    seed: int

    @classmethod
    def sample(cls, p: int, sigma_eff: float = 1.0, seed: int = 0) -> "StructuredOperator":
        if not is_pow2(p):
            raise DimensionError(f"structured operator size must be a power of two, got {p}")
        g = make_rng(seed)
        signs = g.integers(0, 2, size=(3, p)).astype(np.float64) * 2.0 - 1.0
        return cls(p=p, d1=signs[0], d2=signs[1], d3=signs[2],
                   scale=float(np.sqrt(p) * sigma_eff), seed=int(seed))


def structured_matvec(op: StructuredOperator, v: np.ndarray) -> np.ndarray:
    """Apply ``scale * H D1 H D2 H D3`` to a ``(p,)`` vector or ``(p, k)`` batch."""
    if v.shape[0] != op.p:
        raise DimensionError(f"operator size {op.p} does not match input length {v.shape[0]}")
    flat = v.ndim == 1
    work = np.array(v, dtype=np.float64, copy=True, order="C").reshape(op.p, -1)
    for d in (op.d3, op.d2, op.d1):
        work *= d[:, None]
        fwht_in_place(work)
    work *= op.scale
    return work[:, 0] if flat else work


def materialize(op: StructuredOperator) -> np.ndarray:
    """Dense ``(p, p)`` matrix of the operator (tests and diagnostics only)."""
    return structured_matvec(op, np.eye(op.p))
