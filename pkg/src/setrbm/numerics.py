"""Numerically stable scalar primitives and seeded random streams.

Every model in this package is built from four scalar functions
(softplus, softminus, sigmoid, log_sum_exp) and a deterministic,
splittable random stream. The functions accept floats or numpy arrays
and always compute in float64.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "softplus",
    "softminus",
    "sigmoid",
    "log_sum_exp",
    "RngStream",
]

_MASK64 = (1 << 64) - 1


def _check_finite(a: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name}: input must be finite")


def _as_float(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


def softplus(v):
    """log(1 + exp(v)), overflow-free via max(v, 0) + log1p(exp(-|v|))."""
    a = _as_float(v)
    _check_finite(a, "softplus")
    out = np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))
    return float(out) if out.ndim == 0 else out


def softminus(v):
    """v - softplus(v), equivalently -softplus(-v)."""
    a = _as_float(v)
    _check_finite(a, "softminus")
    out = np.minimum(a, 0.0) - np.log1p(np.exp(-np.abs(a)))
    return float(out) if out.ndim == 0 else out


def sigmoid(v):
    """1 / (1 + exp(-v)) without overflow; values in (0, 1)."""
    a = _as_float(v)
    _check_finite(a, "sigmoid")
    t = np.exp(-np.abs(a))  # exp of a non-positive number: never overflows
    out = np.where(a >= 0, 1.0 / (1.0 + t), t / (1.0 + t))
    return float(out) if out.ndim == 0 else out


def log_sum_exp(values, axis=None):
    """log of the sum of exp(values), computed with the max-shift trick.

    ``axis=None`` reduces everything to a scalar; an integer axis reduces
    along that axis, as with numpy reductions. Raises on empty input.
    """
    a = _as_float(values)
    if a.size == 0 or (axis is not None and a.shape[axis] == 0):
        raise ValueError("log_sum_exp: empty input")
    _check_finite(a, "log_sum_exp")
    m = np.max(a, axis=axis, keepdims=True)
    s = np.log(np.sum(np.exp(a - m), axis=axis))
    if axis is None:
        return float(m.reshape(()) + s)
    out = np.squeeze(m, axis=axis) + s
    return float(out) if out.ndim == 0 else out


def _splitmix64(z: int) -> int:
    # Finalizer from the splitmix64 generator; bijective on 64-bit ints.
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class RngStream:
    """Deterministic random stream identified by (seed, stream_id).

    Backed by the counter-based Philox generator with the 128-bit key
    ``(stream_id << 64) | seed``, so the draw sequence depends only on
    the key and never on when or where the stream was created. Distinct
    stream ids therefore give independent sequences that can be consumed
    concurrently. ``derive`` produces a child stream by mixing an integer
    label into the stream id with splitmix64.
    """

    __slots__ = ("seed", "stream_id", "_gen")

    def __init__(self, seed: int, stream_id: int = 0):
        if not (0 <= int(seed) <= _MASK64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not (0 <= int(stream_id) <= _MASK64):
            raise ValueError("stream_id must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = (self.stream_id << 64) | self.seed
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, label: int) -> "RngStream":
        """Child stream for e.g. a fold index or epoch; independent of order."""
        mixed = _splitmix64(self.stream_id ^ _splitmix64(int(label) & _MASK64))
        return RngStream(self.seed, mixed)

    def uniform(self) -> float:
        """One float64 draw from [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, shape) -> np.ndarray:
        """Array of float64 draws from [0, 1)."""
        return self._gen.random(shape)

    def bernoulli(self, p: float) -> int:
        """1 with probability p; consumes exactly one uniform draw."""
        p = float(p)
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"bernoulli: p={p} outside [0, 1]")
        return 1 if self.uniform() < p else 0

    def categorical(self, weights) -> int:
        """Index i with probability weights[i] / sum(weights); one draw."""
        w = _as_float(weights)
        if w.size == 0:
            raise ValueError("categorical: empty weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("categorical: weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("categorical: weights sum to zero")
        cum = np.cumsum(w)
        idx = int(np.searchsorted(cum, self.uniform() * total, side="right"))
        if idx >= w.size:  # guard against rounding at the top edge
            idx = int(np.max(np.nonzero(w > 0)))
        return idx

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
