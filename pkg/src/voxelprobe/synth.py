"""Synthetic posed scenes and token clouds with known consistency ground truth.

Two generators drive the test oracles:

* :func:`gen_token_scene` samples world points on the walls of a cuboid
  room, hands each view a random subset, and builds token features as
  ``phi(voxel_key(x)) + sigma * eta``: ``phi`` is a fixed pseudo-random unit
  embedding per voxel key, so at sigma = 0 the correspondence score is 1 by
  construction, with i.i.d. noise as the null alternative;
* :func:`gen_rgbd_room` places an orbit of cameras inside the room and
  renders exact depth maps by intersecting pixel rays with the axis-aligned
  walls, so unprojection oracles have closed-form answers.

All randomness flows from a single seeded generator in a sigma-independent
draw order, so a corruption sweep over the same seed perturbs one fixed
scene instead of resampling it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .correspondence import TokenCloud, voxel_keys
from .geometry import Intrinsics, PosedFrame, PosedScene, pool_world_coords, unproject_depth
from .tensor_core import NORM_EPS, TokenGrid

_DEG_ORBIT = "degenerate orbit: cameras must sit away from the room center axis"


@dataclass(frozen=True)
class TokenSceneConfig:
    """Configuration for the token-cloud generator."""

    n_views: int = 8
    tokens_per_view: int = 196
    feature_dim: int = 32
    voxel_size: float = 0.1
    room_extent: tuple[float, float, float] = (4.0, 4.0, 3.0)
    sigma: float = 0.0
    seed: int = 0
    n_points: int | None = None  # shared surface-point pool, default 2x tokens_per_view
    iid_features: bool = False  # replace phi with per-token noise (null model)

    def __post_init__(self) -> None:
        if min(self.n_views, self.tokens_per_view, self.feature_dim) < 1:
            raise ValueError("counts must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.voxel_size <= 0 or min(self.room_extent) <= 0:
            raise ValueError("voxel size and room extents must be positive")


@dataclass(frozen=True)
class RoomConfig:
    """Configuration for the RGB-D cuboid-room renderer."""

    extent: tuple[float, float, float] = (5.0, 4.0, 3.0)
    n_views: int = 8
    orbit_radius: float = 1.2
    orbit_height: float = 1.5
    image_hw: tuple[int, int] = (48, 64)
    intrinsics: Intrinsics | None = None
    axis_align: np.ndarray | None = None
    scene_id: str = "synth-room"

    def __post_init__(self) -> None:
        if min(self.extent) <= 0:
            raise ValueError("room extents must be positive")
        if self.n_views < 1:
            raise ValueError("need at least one view")
        if self.orbit_radius <= 0:
            raise ValueError(_DEG_ORBIT)
        if self.orbit_radius >= min(self.extent[0], self.extent[1]) / 2:
            raise ValueError("orbit must stay inside the room")
        if not 0 < self.orbit_height < self.extent[2]:
            raise ValueError("orbit height must be inside the room")
        if min(self.image_hw) < 1:
            raise ValueError("image size must be positive")

    def resolved_intrinsics(self) -> Intrinsics:
        if self.intrinsics is not None:
            return self.intrinsics
        h, w = self.image_hw
        return Intrinsics(fx=0.8 * w, fy=0.8 * w, cx=w / 2.0, cy=h / 2.0)


def voxel_key_embedding(key, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic pseudo-random unit vector for one non-negative voxel key."""
    kx, ky, kz = (int(v) for v in key)
    if min(kx, ky, kz) < 0:
        raise ValueError("voxel keys must be non-negative (origin-shifted)")
    sub = np.random.default_rng([seed, kx, ky, kz])
    vec = sub.standard_normal(dim)
    norm = float(np.linalg.norm(vec))
    if norm < NORM_EPS:  # vanishing draw; cannot happen in practice
        vec[0] = 1.0
        norm = 1.0
    return vec / norm


def assign_voxel_features(
    coords: np.ndarray,
    voxel_size: float,
    feature_dim: int,
    seed: int = 0,
    sigma: float = 0.0,
    noise: np.ndarray | None = None,
) -> np.ndarray:
    """phi(voxel key) per coordinate, optionally corrupted by sigma * noise.

    Keys use the elementwise coordinate minimum as origin, matching the
    scorer's own voxelization, which makes the sigma = 0 score exactly 1.
    """
    coords = np.asarray(coords, dtype=np.float64)
    keys = voxel_keys(coords, coords.min(axis=0), voxel_size)
    cache: dict[tuple[int, int, int], np.ndarray] = {}
    feats = np.empty((coords.shape[0], feature_dim))
    for i, key in enumerate(map(tuple, keys)):
        emb = cache.get(key)
        if emb is None:
            emb = voxel_key_embedding(key, feature_dim, seed)
            cache[key] = emb
        feats[i] = emb
    if sigma > 0:
        if noise is None:
            raise ValueError("sigma > 0 requires a noise array")
        feats = feats + sigma * np.asarray(noise, dtype=np.float64)
    return feats


def _surface_points(rng: np.random.Generator, extent, count: int) -> np.ndarray:
    """Uniform points on the six faces of the [0, extent] cuboid."""
    ext = np.asarray(extent, dtype=np.float64)
    faces = rng.integers(0, 6, size=count)
    uv = rng.uniform(0.0, 1.0, size=(count, 2))
    pts = np.empty((count, 3))
    axis = faces // 2
    side = (faces % 2).astype(np.float64)
    for a in range(3):
        others = [b for b in range(3) if b != a]
        on = axis == a
        pts[on, a] = side[on] * ext[a]
        pts[on, others[0]] = uv[on, 0] * ext[others[0]]
        pts[on, others[1]] = uv[on, 1] * ext[others[1]]
    return pts


def gen_token_scene(cfg: TokenSceneConfig) -> TokenCloud:
    """Sample a multi-view token cloud with voxel-keyed (or i.i.d.) features."""
    rng = np.random.default_rng(cfg.seed)
    pool = cfg.n_points if cfg.n_points is not None else 2 * cfg.tokens_per_view
    if pool < cfg.tokens_per_view:
        raise ValueError("point pool smaller than tokens per view")
    points = _surface_points(rng, cfg.room_extent, pool)
    chosen = [
        rng.choice(pool, size=cfg.tokens_per_view, replace=False)
        for _ in range(cfg.n_views)
    ]
    coords = points[np.concatenate(chosen)]
    view_ids = np.repeat(np.arange(cfg.n_views, dtype=np.int64), cfg.tokens_per_view)
    # eta is always drawn so the sweep over sigma reuses one fixed scene
    eta = rng.standard_normal((coords.shape[0], cfg.feature_dim))
    if cfg.iid_features:
        features = eta
    else:
        features = assign_voxel_features(
            coords, cfg.voxel_size, cfg.feature_dim, cfg.seed,
            sigma=cfg.sigma, noise=eta if cfg.sigma > 0 else None,
        )
    return TokenCloud(features, coords, view_ids)


def _look_at(eye: np.ndarray, target: np.ndarray, up=(0.0, 0.0, 1.0)) -> np.ndarray:
    forward = np.asarray(target, dtype=np.float64) - eye
    dist = np.linalg.norm(forward)
    if dist < 1e-9:
        raise ValueError(_DEG_ORBIT)
    z_axis = forward / dist
    x_axis = np.cross(np.asarray(up, dtype=np.float64), z_axis)
    nx = np.linalg.norm(x_axis)
    if nx < 1e-9:
        raise ValueError(_DEG_ORBIT)
    x_axis = x_axis / nx
    y_axis = np.cross(z_axis, x_axis)
    return np.column_stack([x_axis, y_axis, z_axis])


def raycast_box_depth(
    eye: np.ndarray,
    rotation: np.ndarray,
    intrinsics: Intrinsics,
    image_hw: tuple[int, int],
    extent,
) -> np.ndarray:
    """Exact z-depth of the cuboid walls seen from a camera inside the room.

    Each pixel ray (through the pixel center, camera-frame z component 1) is
    intersected with the three exit planes of the [0, extent] box; the exit
    parameter equals the camera-frame depth directly.
    """
    ext = np.asarray(extent, dtype=np.float64)
    eye = np.asarray(eye, dtype=np.float64)
    if np.any(eye <= 0) or np.any(eye >= ext):
        raise ValueError("camera must be strictly inside the room")
    h, w = image_hw
    u = (np.arange(w, dtype=np.float64) + 0.5 - intrinsics.cx) / intrinsics.fx
    v = (np.arange(h, dtype=np.float64) + 0.5 - intrinsics.cy) / intrinsics.fy
    dirs = np.empty((h, w, 3))
    dirs[:, :, 0] = u[None, :]
    dirs[:, :, 1] = v[:, None]
    dirs[:, :, 2] = 1.0
    world_dirs = dirs @ np.asarray(rotation, dtype=np.float64).T

    t_exit = np.full((h, w), np.inf)
    for axis in range(3):
        d = world_dirs[:, :, axis]
        target = np.where(d > 0, ext[axis], 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (target - eye[axis]) / d
        t = np.where(np.abs(d) > 1e-15, t, np.inf)
        t_exit = np.minimum(t_exit, t)
    return t_exit


def gen_rgbd_room(cfg: RoomConfig) -> PosedScene:
    """Render an orbit of exact-depth views inside a cuboid room.

    The room lives in the axis-aligned frame. When ``cfg.axis_align`` is a
    rigid transform A, stored poses are pre-multiplied by A^-1 so that
    A @ cam_to_world recovers the aligned orbit, exercising the alignment
    path end to end.
    """
    ext = np.asarray(cfg.extent, dtype=np.float64)
    center = ext / 2.0
    intr = cfg.resolved_intrinsics()
    align = np.eye(4) if cfg.axis_align is None else np.asarray(cfg.axis_align, dtype=np.float64)
    align_inv = np.linalg.inv(align)

    frames = []
    for i in range(cfg.n_views):
        theta = 2.0 * np.pi * i / cfg.n_views
        eye = np.array(
            [
                center[0] + cfg.orbit_radius * np.cos(theta),
                center[1] + cfg.orbit_radius * np.sin(theta),
                cfg.orbit_height,
            ]
        )
        rotation = _look_at(eye, center)
        depth = raycast_box_depth(eye, rotation, intr, cfg.image_hw, ext)
        pose = np.eye(4)
        pose[:3, :3] = rotation
        pose[:3, 3] = eye
        frames.append(
            PosedFrame(depth.astype(np.float32), intr, align_inv @ pose)
        )
    return PosedScene(tuple(frames), align, cfg.scene_id)


def voxel_keyed_grid(
    scene: PosedScene,
    grid_hw: tuple[int, int] = (14, 14),
    feature_dim: int = 32,
    voxel_size: float = 0.1,
    seed: int = 0,
    sigma: float = 0.0,
    mode: str = "include_zero_depth",
) -> TokenGrid:
    """Feature grid whose tokens carry phi(voxel key of their pooled 3D point).

    This closes the loop for the full pipeline: scoring the grid against the
    same scene reproduces the sigma = 0 perfect-consistency bound.
    """
    h, w = grid_hw
    per_frame = []
    for frame in scene.frames:
        dense, mask = unproject_depth(frame, scene.axis_align)
        tokens, _ = pool_world_coords(dense, mask, h, w, mode=mode)
        per_frame.append(tokens.reshape(-1, 3))
    coords = np.concatenate(per_frame)
    noise = None
    if sigma > 0:
        noise = np.random.default_rng(seed).standard_normal(
            (coords.shape[0], feature_dim)
        )
    feats = assign_voxel_features(coords, voxel_size, feature_dim, seed, sigma, noise)
    values = feats.reshape(len(scene.frames), h, w, feature_dim).astype(np.float32)
    return TokenGrid(values)
