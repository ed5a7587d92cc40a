"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's code paths: the packing oracle
enumerates lattice placements, the depth oracle casts orthographic rays
against every triangle, and the fill oracle scans all valid texels.
"""

from __future__ import annotations

import numpy as np

from viewpack.raster import BACKGROUND_DEPTH


def brute_force_packable(dims: list[tuple[int, int]], bin_w: int, bin_h: int) -> bool:
    """Exhaustive fixed-orientation packing search over all lattice placements."""
    if any(w > bin_w or h > bin_h for w, h in dims):
        return False
    if sum(w * h for w, h in dims) > bin_w * bin_h:
        return False
    order = sorted(dims, key=lambda d: -d[0] * d[1])
    occ = np.zeros((bin_h, bin_w), dtype=bool)

    def place(k: int, min_pos: int) -> bool:
        if k == len(order):
            return True
        w, h = order[k]
        # identical rectangles are forced into lexicographic position order
        start = min_pos if k and order[k - 1] == (w, h) else 0
        for pos in range(start, (bin_h - h + 1) * (bin_w - w + 1)):
            y, x = divmod(pos, bin_w - w + 1)
            if occ[y : y + h, x : x + w].any():
                continue
            occ[y : y + h, x : x + w] = True
            if place(k + 1, pos):
                return True
            occ[y : y + h, x : x + w] = False
        return False

    return place(0, 0)


def raycast_depth(mesh, view, resolution: int) -> np.ndarray:
    """Per-pixel nearest-triangle depth via orthographic ray/plane intersection."""
    h = w = resolution
    right, up, fwd = view.right, view.up, view.direction
    xs = ((np.arange(w) + 0.5) / w * 2.0 - 1.0) * view.ortho_scale
    ys = (1.0 - (np.arange(h) + 0.5) / h * 2.0) * view.ortho_scale
    X, Y = np.meshgrid(xs, ys)
    origin = X[..., None] * right + Y[..., None] * up
    depth = np.full((h, w), BACKGROUND_DEPTH, dtype=np.float64)
    tri = mesh.vertices[mesh.faces]
    for a, b, c in tri:
        n = np.cross(b - a, c - a)
        nn = float(n @ n)
        if nn < 1e-24:
            continue
        denom = float(n @ fwd)
        if abs(denom) < 1e-15:
            continue
        s = ((a - origin) @ n) / denom
        p = origin + s[..., None] * fwd
        c0 = np.cross(b - a, p - a) @ n
        c1 = np.cross(c - b, p - b) @ n
        c2 = np.cross(a - c, p - c) @ n
        eps = -1e-9 * nn
        inside = (c0 >= eps) & (c1 >= eps) & (c2 >= eps)
        np.minimum(depth, np.where(inside, s, BACKGROUND_DEPTH), out=depth)
    return depth


def nearest_valid_fill(data: np.ndarray, valid: np.ndarray, coverage: np.ndarray) -> np.ndarray:
    """Per-hole breadth-first search for the nearest valid texel.

    Distance is geodesic chessboard within the traversable region
    (valid or covered texels); among equidistant sources the lowest
    row-major index wins. Runs one independent search per hole.
    """
    h, w = valid.shape
    out = data.copy()
    traversable = valid | coverage
    for r, c in np.argwhere(coverage & ~valid):
        seen = np.zeros((h, w), dtype=bool)
        seen[r, c] = True
        frontier = [(r, c)]
        found = None
        while frontier and found is None:
            nxt = []
            hits = []
            for (y, x) in frontier:
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx_ = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx_ < w and not seen[ny, nx_]:
                            seen[ny, nx_] = True
                            if not traversable[ny, nx_]:
                                continue
                            if valid[ny, nx_]:
                                hits.append(ny * w + nx_)
                            nxt.append((ny, nx_))
            if hits:
                found = min(hits)
            frontier = nxt
        if found is not None:
            out[r, c] = data[found // w, found % w]
    return out
