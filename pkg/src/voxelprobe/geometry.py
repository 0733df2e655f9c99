"""Camera model, depth unprojection into aligned world coordinates, frame sampling.

Conventions fixed here and relied on everywhere else:

* pixel (u, v) means column u, row v; rays pass through the pixel center,
  so the camera-frame direction is ((u + 0.5 - cx)/fx, (v + 0.5 - cy)/fy, 1);
* depth is the camera-frame z coordinate in meters, stored float32;
* world coordinates are axis-aligned: p_world = axis_align @ cam_to_world @ p_cam.

Zero-depth pixels unproject through the same formula (landing on the
transformed camera origin) and are flagged invalid; whether they still feed
downstream pooling is the caller's choice via the two pooling modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import adaptive_avg_pool2d, anchored_indices, pool_windows


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


def rotation_deviation(transform: np.ndarray) -> float:
    """Max absolute deviation of the 3x3 rotation block from orthonormality."""
    r = np.asarray(transform, dtype=np.float64)[:3, :3]
    return float(np.max(np.abs(r.T @ r - np.eye(3))))


@dataclass(frozen=True)
class PosedFrame:
    """One RGB-D view: depth map, intrinsics, camera-to-world pose, validity.

    Well-formed poses have an orthonormal rotation block (deviation below
    1e-6). Construction checks shapes and non-negative depth only; loaders
    that accept third-party data warn on sloppy rotations instead of
    failing, so strict callers should assert :func:`rotation_deviation`
    themselves.
    """

    depth: np.ndarray
    intrinsics: Intrinsics
    cam_to_world: np.ndarray
    valid_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        depth = np.asarray(self.depth, dtype=np.float32)
        if depth.ndim != 2:
            raise ValueError(f"depth must be H x W, got shape {depth.shape}")
        if np.any(depth < 0):
            raise ValueError("depth must be non-negative")
        pose = np.asarray(self.cam_to_world, dtype=np.float64)
        if pose.shape != (4, 4):
            raise ValueError(f"cam_to_world must be 4 x 4, got {pose.shape}")
        mask = self.valid_mask
        if mask is None:
            mask = depth > 0
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != depth.shape:
            raise ValueError("valid_mask shape must match depth")
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "cam_to_world", pose)
        object.__setattr__(self, "valid_mask", mask)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class PosedScene:
    """A set of posed frames sharing one axis-alignment transform."""

    frames: tuple[PosedFrame, ...]
    axis_align: np.ndarray = field(default_factory=lambda: np.eye(4))
    scene_id: str = "scene"

    def __post_init__(self) -> None:
        if len(self.frames) < 1:
            raise ValueError("a scene needs at least one frame")
        align = np.asarray(self.axis_align, dtype=np.float64)
        if align.shape != (4, 4):
            raise ValueError(f"axis_align must be 4 x 4, got {align.shape}")
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "axis_align", align)


def unproject_depth(
    frame: PosedFrame, axis_align: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Unproject a depth map into axis-aligned world coordinates.

    Returns (coords, mask): an H x W x 3 float64 array and an H x W boolean
    mask that is False where depth is zero or the frame marks the pixel
    invalid. Zero-depth pixels still receive a coordinate (the transformed
    camera origin) so that pipelines which keep them behave exactly like
    ones that feed every pixel forward.
    """
    align = np.eye(4) if axis_align is None else np.asarray(axis_align, dtype=np.float64)
    cam2world = align @ frame.cam_to_world
    k = frame.intrinsics
    h, w = frame.depth.shape

    u = (np.arange(w, dtype=np.float64) + 0.5 - k.cx) / k.fx
    v = (np.arange(h, dtype=np.float64) + 0.5 - k.cy) / k.fy
    dirs = np.empty((h, w, 3), dtype=np.float64)
    dirs[:, :, 0] = u[None, :]
    dirs[:, :, 1] = v[:, None]
    dirs[:, :, 2] = 1.0

    p_cam = frame.depth.astype(np.float64)[:, :, None] * dirs
    coords = p_cam @ cam2world[:3, :3].T + cam2world[:3, 3]
    mask = (frame.depth > 0) & frame.valid_mask
    return coords, mask


def project_world(
    points: np.ndarray, frame: PosedFrame, axis_align: np.ndarray | None = None
) -> np.ndarray:
    """Project axis-aligned world points back to continuous pixel coordinates.

    Returns (..., 3): pixel-center-continuous (u + 0.5, v + 0.5) plus the
    camera-frame depth z. Inverse of :func:`unproject_depth` on valid pixels.
    """
    align = np.eye(4) if axis_align is None else np.asarray(axis_align, dtype=np.float64)
    world2cam = np.linalg.inv(align @ frame.cam_to_world)
    pts = np.asarray(points, dtype=np.float64)
    p_cam = pts @ world2cam[:3, :3].T + world2cam[:3, 3]
    k = frame.intrinsics
    z = p_cam[..., 2]
    out = np.empty_like(p_cam)
    out[..., 0] = k.fx * p_cam[..., 0] / z + k.cx
    out[..., 1] = k.fy * p_cam[..., 1] / z + k.cy
    out[..., 2] = z
    return out


def pool_world_coords(
    coords: np.ndarray,
    mask: np.ndarray,
    out_h: int,
    out_w: int,
    mode: str = "include_zero_depth",
) -> tuple[np.ndarray, np.ndarray]:
    """Pool dense per-pixel world coordinates down to token coordinates.

    Modes:
      * ``include_zero_depth`` (default): every pixel contributes to its
        window mean and every token is valid, matching pipelines that do
        not discard invalid-depth pixels;
      * ``masked``: only valid pixels are averaged and a token with no
        valid pixel in its window is flagged invalid (not an error).

    Returns (tokens, token_mask): out_h x out_w x 3 and out_h x out_w bool.
    """
    pts = np.asarray(coords, dtype=np.float64)
    msk = np.asarray(mask, dtype=bool)
    if pts.ndim != 3 or pts.shape[2] != 3:
        raise ValueError(f"coords must be H x W x 3, got {pts.shape}")
    if msk.shape != pts.shape[:2]:
        raise ValueError("mask shape must match coords")

    if mode == "include_zero_depth":
        tokens = adaptive_avg_pool2d(pts, out_h, out_w)
        return tokens, np.ones((out_h, out_w), dtype=bool)
    if mode != "masked":
        raise ValueError(f"unknown pooling mode {mode!r}")

    row_b = pool_windows(pts.shape[0], out_h)
    col_b = pool_windows(pts.shape[1], out_w)
    tokens = np.zeros((out_h, out_w, 3), dtype=np.float64)
    token_mask = np.zeros((out_h, out_w), dtype=bool)
    for i, (r0, r1) in enumerate(row_b):
        for j, (c0, c1) in enumerate(col_b):
            window_mask = msk[r0:r1, c0:c1]
            count = int(window_mask.sum())
            if count == 0:
                continue
            window = pts[r0:r1, c0:c1][window_mask]
            tokens[i, j] = window.sum(axis=0, dtype=np.float64) / count
            token_mask[i, j] = True
    return tokens, token_mask


def sample_frames(total: int, limit: int = 32) -> np.ndarray:
    """Uniformly sample up to ``limit`` frame indices from ``total`` frames.

    Keeps every frame when total <= limit; otherwise picks endpoint-anchored
    indices round(i*(total-1)/(limit-1)), which are strictly increasing.
    """
    if total < 1:
        raise ValueError("need at least one frame")
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if total <= limit:
        return np.arange(total, dtype=np.int64)
    return anchored_indices(total, limit)
