"""Bilinear/nearest sampling and resizing on image arrays (border-clamped)."""

from __future__ import annotations

import numpy as np


def sample_bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample img (H, W[, C]) at pixel-center coordinates, clamping to the border."""
    h, w = img.shape[:2]
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, w - 1.0)
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    v00 = img[y0, x0]
    v01 = img[y0, x1]
    v10 = img[y1, x0]
    v11 = img[y1, x1]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bot * fy


def sample_nearest(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Nearest-neighbor sample of img (H, W[, C]) at pixel-center coordinates."""
    h, w = img.shape[:2]
    xi = np.clip(np.round(np.asarray(x, dtype=np.float64)).astype(np.int64), 0, w - 1)
    yi = np.clip(np.round(np.asarray(y, dtype=np.float64)).astype(np.int64), 0, h - 1)
    return img[yi, xi]


def _dst_grid(out_h: int, out_w: int, src_h: int, src_w: int):
    # half-pixel-centered mapping, i.e. align_corners=False
    xs = (np.arange(out_w) + 0.5) * (src_w / out_w) - 0.5
    ys = (np.arange(out_h) + 0.5) * (src_h / out_h) - 0.5
    return np.meshgrid(xs, ys)


def resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape[:2]
    if (out_h, out_w) == (h, w):
        return img.copy()
    x, y = _dst_grid(out_h, out_w, h, w)
    return sample_bilinear(img, x, y)


def resize_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = img.shape[:2]
    if (out_h, out_w) == (h, w):
        return img.copy()
    x, y = _dst_grid(out_h, out_w, h, w)
    return sample_nearest(img, x, y)
