"""Attention-enhanced transform evaluation, grid generation, warping.

Every kernel term of the TPS basis is multiplied by (lam * a_k + beta)
where a_k is the attention score between the output location and control
point k. With lam = 0 (or an all-zero score row and beta = 1) this is
exactly the classic TPS evaluation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .tps import kernel_u


@dataclass(frozen=True)
class AttentionMatrix:
    """Per-(output location, control point) scores, strictly in (-1, 1)."""

    scores: np.ndarray  # (M, K), row-major over the output lattice

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2:
            raise ShapeError(f"attention scores must be a matrix, got rank {s.ndim}")
        bad = np.argwhere(~(np.abs(s) < 1.0))
        if bad.size:
            i, j = bad[0]
            raise ValidationError(f"attention score out of (-1,1) at row {i}, col {j}: {s[i, j]}")
        s.flags.writeable = False
        object.__setattr__(self, "scores", s)

    @property
    def m_locations(self):
        return self.scores.shape[0]

    @property
    def k_points(self):
        return self.scores.shape[1]

    @classmethod
    def zeros(cls, m, k):
        return cls(np.zeros((m, k)))


@dataclass(frozen=True)
class SamplingGrid:
    """Per output location, the normalized source coordinate to sample."""

    height: int
    width: int
    coords: np.ndarray  # (height*width, 2), may leave [-1,1]^2

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.shape != (self.height * self.width, 2):
            raise ShapeError(f"coords shape {c.shape} != ({self.height * self.width}, 2)")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)


def output_lattice(out_h, out_w):
    """Row-major (M, 2) lattice of normalized output coordinates."""
    xs = np.linspace(-1.0, 1.0, out_w) if out_w > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, out_h) if out_h > 1 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def basis_vector(p, transform, attention_row):
    """[1, x, y, U(|p-c_k|) * (lam * a_k + beta) for each center k]."""
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(attention_row, dtype=np.float64)
    if a.shape != (transform.k,):
        raise ShapeError(f"attention row length {a.shape} != K={transform.k}")
    d = transform.centers - p
    u = kernel_u(np.sqrt((d * d).sum(axis=1)))
    return np.concatenate([[1.0, p[0], p[1]], u * (transform.lam * a + transform.beta)])


def map_point(p, transform, attention_row):
    return transform.t_matrix @ basis_vector(p, transform, attention_row)


def build_sampling_grid(transform, attention, out_h, out_w):
    """Map the whole output lattice through the transform at once."""
    m = out_h * out_w
    if attention.m_locations != m:
        raise ShapeError(f"attention has {attention.m_locations} rows, lattice has {m}")
    if attention.k_points != transform.k:
        raise ShapeError(f"attention has {attention.k_points} cols, transform has K={transform.k}")
    pts = output_lattice(out_h, out_w)  # (M, 2)
    d = pts[:, None, :] - transform.centers[None, :, :]
    u = kernel_u(np.sqrt((d * d).sum(axis=2)))  # (M, K)
    basis = np.hstack([np.ones((m, 1)), pts, u * (transform.lam * attention.scores + transform.beta)])
    return SamplingGrid(out_h, out_w, basis @ transform.t_matrix.T)


def warp(source, grid, border="zeros"):
    """Bilinear sampling of a (C,H,W) map at the grid's source coords.

    border="zeros": out-of-range neighbors contribute 0;
    border="clamp": coordinates are clipped to the valid box first.
    """
    source = np.asarray(source)
    if source.ndim != 3:
        raise ShapeError(f"warp expects (C,H,W) source, got {source.shape}")
    if border not in ("zeros", "clamp"):
        raise ValidationError(f"unknown border policy {border!r}")
    _, h, w = source.shape
    xs = (grid.coords[:, 0] + 1.0) / 2.0 * (w - 1)
    ys = (grid.coords[:, 1] + 1.0) / 2.0 * (h - 1)
    if border == "clamp":
        xs = np.clip(xs, 0.0, w - 1)
        ys = np.clip(ys, 0.0, h - 1)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    out = np.zeros((source.shape[0], xs.shape[0]), dtype=np.float64)
    src = source.astype(np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            xi = x0 + dx
            yi = y0 + dy
            wgt = (fx if dx else 1.0 - fx) * (fy if dy else 1.0 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            xi_c = np.clip(xi, 0, w - 1)
            yi_c = np.clip(yi, 0, h - 1)
            out += np.where(valid, wgt, 0.0) * src[:, yi_c, xi_c]
    return out.reshape(source.shape[0], grid.height, grid.width).astype(source.dtype)
