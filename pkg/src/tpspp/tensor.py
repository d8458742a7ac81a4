"""Dense numeric primitives used by every other module.

Feature maps are stored channels-first (C, H, W) as float32 arrays;
matrices are (rows, cols). Accumulation happens in float64 and results
are cast back to the input dtype, so float32 storage never limits the
arithmetic below its documented tolerances.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError, SingularMatrixError

PIVOT_EPS = 1e-12
MAX_RANK = 4


def astensor(data, dtype=np.float32):
    """Validate and return a rank-1..4 finite array of the given dtype."""
    arr = np.asarray(data, dtype=dtype)
    if arr.ndim < 1 or arr.ndim > MAX_RANK:
        raise ShapeError(f"tensor rank must be 1..{MAX_RANK}, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("tensor contains non-finite values")
    return arr


def matmul(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects matrices, got ranks {a.ndim} and {b.ndim}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dims differ: {a.shape} x {b.shape}")
    out = a.astype(np.float64) @ b.astype(np.float64)
    return out.astype(np.result_type(a, b))


def solve_linear(m, rhs):
    """Solve m @ x = rhs by LU with partial pivoting (float64 internally).

    A pivot with magnitude below PIVOT_EPS raises SingularMatrixError.
    """
    a = np.array(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"coefficient matrix must be square, got {a.shape}")
    n = a.shape[0]
    b = np.array(rhs, dtype=np.float64)
    vector_rhs = b.ndim == 1
    if vector_rhs:
        b = b[:, None]
    if b.ndim != 2 or b.shape[0] != n:
        raise ShapeError(f"rhs rows {b.shape} do not match system size {n}")

    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < PIVOT_EPS:
            raise SingularMatrixError(f"pivot {a[p, k]:.3e} below {PIVOT_EPS} at column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        if k + 1 < n:
            factors = a[k + 1:, k] / a[k, k]
            a[k + 1:, k:] -= np.outer(factors, a[k, k:])
            b[k + 1:] -= np.outer(factors, b[k])

    x = np.empty_like(b)
    for k in range(n - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x[:, 0] if vector_rhs else x


def conv2d(x, kernel, bias, stride=1, pad=0):
    """2D cross-correlation with zero padding, channels-first."""
    x = np.asarray(x)
    kernel = np.asarray(kernel)
    bias = np.asarray(bias)
    if x.ndim != 3 or kernel.ndim != 4:
        raise ShapeError(f"conv2d expects (C,H,W) input and (O,C,kh,kw) kernel, got {x.shape}, {kernel.shape}")
    o, c, kh, kw = kernel.shape
    if c != x.shape[0]:
        raise ShapeError(f"kernel channels {c} != input channels {x.shape[0]}")
    if bias.shape != (o,):
        raise ShapeError(f"bias shape {bias.shape} != ({o},)")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    h, w = x.shape[1], x.shape[2]
    if kh > h + 2 * pad or kw > w + 2 * pad:
        raise ShapeError(f"kernel {kh}x{kw} larger than padded input {h + 2 * pad}x{w + 2 * pad}")

    xp = np.pad(x.astype(np.float64), ((0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    out = np.einsum("chwij,ocij->ohw", win, kernel.astype(np.float64))
    out += bias.astype(np.float64)[:, None, None]
    return out.astype(x.dtype)


def upsample_x2(x):
    """Nearest-neighbor 2x upsampling of a (C,H,W) map."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"upsample_x2 expects (C,H,W), got {x.shape}")
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def reduce_mean(x, axis):
    x = np.asarray(x)
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"axis {axis} out of range for rank {x.ndim}")
    return x.mean(axis=axis, dtype=np.float64).astype(x.dtype)


def softmax(x, axis):
    x = np.asarray(x)
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"axis {axis} out of range for rank {x.ndim}")
    z = x.astype(np.float64)
    z = z - z.max(axis=axis, keepdims=True)  # overflow guard
    e = np.exp(z)
    out = (e / e.sum(axis=axis, keepdims=True)).astype(x.dtype)
    # exp underflows to 0 for very spread inputs; keep entries in (0, 1]
    return np.clip(out, np.finfo(out.dtype).smallest_subnormal, 1.0)


def _open_interval_clip(y, lo, hi):
    # saturation rounds to the closed endpoints in floating point; keep
    # the documented open-interval range
    one = np.ones((), dtype=y.dtype)
    return np.clip(y, np.nextafter(lo * one, hi * one), np.nextafter(hi * one, lo * one))


def tanh(x):
    x = np.asarray(x)
    y = np.tanh(x.astype(np.float64)).astype(x.dtype)
    return _open_interval_clip(y, -1.0, 1.0)


def sigmoid(x):
    x = np.asarray(x)
    # tanh form avoids overflow of exp for large negative inputs
    y = (0.5 * (1.0 + np.tanh(0.5 * x.astype(np.float64)))).astype(x.dtype)
    return _open_interval_clip(y, 0.0, 1.0)


def relu(x):
    x = np.asarray(x)
    return np.maximum(x, 0)


def concat(a, b, axis):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != b.ndim:
        raise ShapeError(f"concat rank mismatch: {a.ndim} vs {b.ndim}")
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"axis {axis} out of range for rank {a.ndim}")
    ax = axis % a.ndim
    for d in range(a.ndim):
        if d != ax and a.shape[d] != b.shape[d]:
            raise ShapeError(f"concat shape mismatch on axis {d}: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=ax)
