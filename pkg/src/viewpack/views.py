"""Canonical orthographic view definitions and camera-space projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Frozen view basis convention:
#   frontal looks along -z with +y up; rear/left/right are yawed copies;
#   top looks along -y with -z up; bottom looks along +y with +z up.
# screen_x = p . right, screen_y = p . up, depth = p . direction
# (depth grows away from the camera). right = direction x up.
_VIEW_AXES = {
    "frontal": ((0.0, 0.0, -1.0), (0.0, 1.0, 0.0)),
    "rear": ((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)),
    "left": ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "right": ((-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
    "top": ((0.0, -1.0, 0.0), (0.0, 0.0, -1.0)),
    "bottom": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
}

VIEW_IDS = ("frontal", "rear", "left", "right", "top", "bottom")

# Opposing views share silhouette bounding-box sizes under orthographic
# projection and are always enlarged together.
OPPOSING_PAIRS = (("frontal", "rear"), ("left", "right"), ("top", "bottom"))

# Only top and bottom may be rotated 90 degrees on the atlas.
ROTATABLE_VIEWS = ("top", "bottom")

# Views eligible as the guidance source, in tie-break priority order.
GUIDANCE_CANDIDATE_VIEWS = ("frontal", "left", "top")


@dataclass(frozen=True)
class ViewSpec:
    """One orthographic camera: id, gaze direction, up vector, half-viewport scale."""

    view_id: str
    view_direction: tuple[float, float, float]
    up_vector: tuple[float, float, float]
    ortho_scale: float

    def __post_init__(self):
        d = np.asarray(self.view_direction, dtype=np.float64)
        u = np.asarray(self.up_vector, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9 or abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise ValueError("view_direction and up_vector must be unit length")
        if abs(float(d @ u)) > 1e-9:
            raise ValueError("view_direction and up_vector must be orthogonal")
        if not self.ortho_scale > 0:
            raise ValueError("ortho_scale must be positive")

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.view_direction, dtype=np.float64)

    @property
    def up(self) -> np.ndarray:
        return np.asarray(self.up_vector, dtype=np.float64)

    @property
    def right(self) -> np.ndarray:
        return np.cross(self.direction, self.up)

    def basis(self) -> np.ndarray:
        """3x3 matrix with rows (right, up, direction)."""
        return np.stack([self.right, self.up, self.direction])

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project world points (N, 3) to (ndc_x, ndc_y, depth).

        ndc_x/ndc_y span [-1, 1] across the viewport; depth is the linear
        camera-space distance along the gaze direction (larger = farther).
        """
        pts = np.asarray(points, dtype=np.float64)
        x = pts @ self.right / self.ortho_scale
        y = pts @ self.up / self.ortho_scale
        d = pts @ self.direction
        return np.stack([x, y, d], axis=-1)

    def camera_normals(self, normals: np.ndarray) -> np.ndarray:
        """Rotate world normals into camera space; +z points toward the camera."""
        n = np.asarray(normals, dtype=np.float64)
        return np.stack([n @ self.right, n @ self.up, -(n @ self.direction)], axis=-1)


def canonical_views(ortho_scale: float) -> dict[str, ViewSpec]:
    """The six fixed views (frontal, rear, left, right, top, bottom) at one shared scale."""
    return {
        vid: ViewSpec(vid, direction, up, ortho_scale)
        for vid, (direction, up) in _VIEW_AXES.items()
    }


def ndc_to_pixel(ndc_xy: np.ndarray, width: int, height: int) -> np.ndarray:
    """Map NDC [-1, 1]^2 (+y up) to pixel-center coordinates (col, row)."""
    xy = np.asarray(ndc_xy, dtype=np.float64)
    col = (xy[..., 0] + 1.0) * 0.5 * width - 0.5
    row = (1.0 - xy[..., 1]) * 0.5 * height - 0.5
    return np.stack([col, row], axis=-1)


def pixel_to_ndc(pixel_xy: np.ndarray, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`ndc_to_pixel`."""
    xy = np.asarray(pixel_xy, dtype=np.float64)
    x = (xy[..., 0] + 0.5) / width * 2.0 - 1.0
    y = 1.0 - (xy[..., 1] + 0.5) / height * 2.0
    return np.stack([x, y], axis=-1)
