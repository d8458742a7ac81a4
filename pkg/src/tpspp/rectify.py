"""End-to-end rectification of images and feature maps."""

import numpy as np

from . import network
from .errors import ValidationError
from .tps import solve_transform
from .warp import AttentionMatrix, build_sampling_grid, warp

ZERO_ATTENTION = None  # sentinel meaning "all-zero scores at any lattice"


def attention_for_lattice(attention, out_h, out_w):
    """Return scores aligned with an out_h x out_w output lattice.

    None yields all-zero scores. Scores on the decoded 16x64 lattice are
    nearest-neighbor resampled when the output lattice differs; any other
    row count must match the lattice exactly.
    """
    m = out_h * out_w
    if attention is None:
        return None  # callers use zeros without materializing M x K
    if attention.m_locations == m:
        return attention
    if attention.m_locations == network.DEC_H * network.DEC_W:
        scores = attention.scores.reshape(network.DEC_H, network.DEC_W, -1)
        ri = np.minimum((np.arange(out_h) * network.DEC_H) // out_h, network.DEC_H - 1)
        ci = np.minimum((np.arange(out_w) * network.DEC_W) // out_w, network.DEC_W - 1)
        resampled = scores[ri][:, ci].reshape(m, -1)
        return AttentionMatrix(resampled)
    raise ValidationError(
        f"attention has {attention.m_locations} rows; expected {m} or "
        f"{network.DEC_H * network.DEC_W}")


def rectify_map(source, grid, attention, lam, beta, out_h, out_w, border="zeros"):
    """Solve the transform for a regressed grid and warp a (C,H,W) map."""
    transform = solve_transform(grid, lam=lam, beta=beta)
    aligned = attention_for_lattice(attention, out_h, out_w)
    if aligned is None:
        aligned = AttentionMatrix.zeros(out_h * out_w, grid.k)
    sampling = build_sampling_grid(transform, aligned, out_h, out_w)
    return warp(source, sampling, border=border), sampling


def rectify_with_network(image, weights, grid, lam, beta, out_h, out_w, border="zeros"):
    """Run the forward networks, then rectify the raw image."""
    _, regressed, attention = network.rectification_forward(image, weights, grid)
    warped, sampling = rectify_map(image, regressed, attention, lam, beta, out_h, out_w, border)
    return warped, sampling, regressed, attention


def annotate_points(image, grid, radius=1):
    """Copy of a (1,H,W) image with regressed points marked bright."""
    img = np.array(image[0], dtype=np.float32)
    h, w = img.shape
    for x, y in grid.regressed:
        cx = int(round((x + 1.0) / 2.0 * (w - 1)))
        cy = int(round((y + 1.0) / 2.0 * (h - 1)))
        y0, y1 = max(cy - radius, 0), min(cy + radius + 1, h)
        x0, x1 = max(cx - radius, 0), min(cx + radius + 1, w)
        if y0 < y1 and x0 < x1:
            img[y0:y1, x0:x1] = 1.0
    return img[None, :, :]


def deformation_grid_image(sampling, src_h, src_w, step=4):
    """Source-sized map with every step-th sampled location marked."""
    img = np.zeros((src_h, src_w), dtype=np.float32)
    coords = sampling.coords.reshape(sampling.height, sampling.width, 2)
    for i in range(0, sampling.height, step):
        for j in range(0, sampling.width, step):
            x, y = coords[i, j]
            px = int(round((x + 1.0) / 2.0 * (src_w - 1)))
            py = int(round((y + 1.0) / 2.0 * (src_h - 1)))
            if 0 <= px < src_w and 0 <= py < src_h:
                img[py, px] = 1.0
    return img[None, :, :]
