"""Classic thin-plate spline machinery.

Control points live in normalized [-1, 1]^2 coordinates, x rightward and
y downward. The interpolation system is assembled from the BASE grid
points; the right-hand side holds the REGRESSED points, so zero offsets
solve to the exact identity map. RBF centers for later evaluation are the
base points.
"""

from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import DegenerateGridError, DomainError, InvalidGridError, SingularMatrixError

DEFAULT_ROWS = 4
DEFAULT_COLS = 16
DEFAULT_LAMBDA = 0.5
DEFAULT_BETA = 1.0


def _frozen(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ControlPointGrid:
    """K = rows*cols lattice points plus per-point regression offsets."""

    rows: int
    cols: int
    base: np.ndarray     # (K, 2) lattice, row-major over (row, col)
    offsets: np.ndarray  # (K, 2)

    @property
    def k(self):
        return self.rows * self.cols

    @property
    def regressed(self):
        return self.base + self.offsets

    def with_offsets(self, offsets):
        offsets = np.asarray(offsets, dtype=np.float64)
        if offsets.shape != self.base.shape:
            raise InvalidGridError(f"offsets shape {offsets.shape} != {self.base.shape}")
        return ControlPointGrid(self.rows, self.cols, self.base, _frozen(offsets))


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric K x K matrix of kernel_u over pairwise base distances."""

    s: np.ndarray


@dataclass(frozen=True)
class TpsTransform:
    """Solved 2 x (K+3) transform plus its evaluation parameters."""

    t_matrix: np.ndarray  # rows = (x, y), columns = [1, x, y, w_1..w_K]
    centers: np.ndarray   # (K, 2) base points
    lam: float = DEFAULT_LAMBDA
    beta: float = DEFAULT_BETA

    @property
    def k(self):
        return self.centers.shape[0]


def make_grid(rows, cols):
    """Uniform lattice on [-1,1]^2; a degenerate axis sits at 0."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise InvalidGridError(f"grid {rows}x{cols} has fewer than 2 points")
    xs = np.linspace(-1.0, 1.0, cols) if cols > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, rows) if rows > 1 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys)  # row-major: k = i*cols + j
    base = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return ControlPointGrid(rows, cols, _frozen(base), _frozen(np.zeros_like(base)))


def kernel_u(r):
    """Thin-plate radial kernel U(r) = r^2 * ln(r^2), U(0) = 0."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DomainError("kernel_u requires r >= 0")
    r2 = r * r
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r2 > 0, r2 * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def build_kernel_matrix(grid):
    d = grid.base[:, None, :] - grid.base[None, :, :]
    dist = np.sqrt((d * d).sum(axis=2))
    s = kernel_u(dist)
    np.fill_diagonal(s, 0.0)
    return KernelMatrix(_frozen(s))


def solve_transform(grid, lam=DEFAULT_LAMBDA, beta=DEFAULT_BETA):
    """Solve the (K+3)x(K+3) interpolation system for the transform.

    Rows 0..K-1 enforce interpolation of the regressed points; the last
    three rows are the side conditions sum(w) = sum(w*x) = sum(w*y) = 0.
    """
    k = grid.k
    s = build_kernel_matrix(grid).s
    p = np.hstack([np.ones((k, 1)), grid.base])  # (K, 3): [1, x, y]

    m = np.zeros((k + 3, k + 3))
    m[:k, :3] = p
    m[:k, 3:] = s
    m[k:, 3:] = p.T

    rhs = np.zeros((k + 3, 2))
    rhs[:k] = grid.regressed

    try:
        w = tensor.solve_linear(m, rhs)  # (K+3, 2), columns = (x, y)
    except SingularMatrixError as exc:
        raise DegenerateGridError(f"control points yield a singular system: {exc}") from exc
    return TpsTransform(_frozen(w.T), grid.base, float(lam), float(beta))
