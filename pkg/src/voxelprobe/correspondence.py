"""Multi-view correspondence scoring over a shared voxel grid.

Tokens carry a feature vector, a world coordinate, and a view id. Tokens
from the same view falling into one voxel are mean-pooled and L2-normalized
into a per-view prototype; only voxels observed by at least two views
contribute, and the scene score is the pair-weighted average of all
cross-view prototype cosines:

    S = sum_k sum_{t<t' in V_k} p_k_t . p_k_t'  /  sum_k C(|V_k|, 2)

A scene with no multi-view voxel scores NaN (a value, not an error), and
dataset statistics are computed over the non-NaN scenes only.

Two independent implementations are kept deliberately distinct: the main
path groups tokens with a hash map and reduces each voxel through the
sum-of-prototypes identity, while :func:`scene_score_bruteforce` groups by
sort-and-scan and enumerates every cross-view pair explicitly. Tests hold
them within 1e-9 of each other.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import PosedScene, pool_world_coords, unproject_depth
from .tensor_core import NORM_EPS, TokenGrid, anchored_indices

DEFAULT_VOXEL_SIZE = 0.1


@dataclass(frozen=True)
class TokenCloud:
    """Flattened tokens of one scene: features, coordinates, view ids, validity."""

    features: np.ndarray  # (N, C)
    coords: np.ndarray  # (N, 3) meters
    view_ids: np.ndarray  # (N,) int
    valid: np.ndarray | None = None  # (N,) bool, default all True

    def __post_init__(self) -> None:
        feats = np.asarray(self.features)
        coords = np.asarray(self.coords, dtype=np.float64)
        views = np.asarray(self.view_ids, dtype=np.int64)
        if feats.ndim != 2:
            raise ValueError(f"features must be N x C, got {feats.shape}")
        n = feats.shape[0]
        if coords.shape != (n, 3):
            raise ValueError(f"coords must be N x 3, got {coords.shape}")
        if views.shape != (n,):
            raise ValueError(f"view_ids must be length N, got {views.shape}")
        if np.any(views < 0):
            raise ValueError("view ids must be non-negative")
        valid = self.valid
        valid = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
        if valid.shape != (n,):
            raise ValueError(f"valid must be length N, got {valid.shape}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "view_ids", views)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return self.features.shape[0]


class Prototype(NamedTuple):
    """Per-view voxel prototype: unit feature vector plus bookkeeping."""

    view_id: int
    vector: np.ndarray
    members: int


@dataclass(frozen=True)
class VoxelTable:
    """Per-scene map from integer voxel key to per-view prototypes."""

    voxel_size: float
    origin: np.ndarray  # (3,) elementwise minimum of the token coords
    entries: dict[tuple[int, int, int], list[Prototype]]


@dataclass(frozen=True)
class SceneScore:
    """Scene-level correspondence score with its pair/voxel accounting."""

    score: float  # NaN iff pair_count == 0
    pair_count: int
    voxel_count: int
    multiview_voxel_count: int


class DatasetScore(NamedTuple):
    mean: float
    std: float
    valid_count: int
    nan_count: int


def voxel_keys(coords: np.ndarray, origin: np.ndarray, voxel_size: float) -> np.ndarray:
    """Integer voxel index floor((x - origin) / s) per token, shape (N, 3)."""
    return np.floor((np.asarray(coords, dtype=np.float64) - origin) / voxel_size).astype(
        np.int64
    )


def _active(cloud: TokenCloud) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Valid-token views of the cloud arrays; invalid tokens never voxelize."""
    if len(cloud) == 0:
        raise ValueError("empty token cloud")
    sel = cloud.valid
    if not np.any(sel):
        raise ValueError("token cloud has no valid tokens")
    return cloud.features[sel], cloud.coords[sel], cloud.view_ids[sel]


def voxelize(cloud: TokenCloud, voxel_size: float = DEFAULT_VOXEL_SIZE) -> VoxelTable:
    """Group valid tokens into voxels and build per-view unit prototypes.

    The grid origin is the elementwise minimum of the valid token
    coordinates, so keys are non-negative. Same-view tokens in one voxel
    are averaged (float64) before normalization; a degenerate mean (norm
    below 1e-12) is dropped and that (voxel, view) counts as unobserved.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel size must be positive, got {voxel_size}")
    feats, coords, views = _active(cloud)
    origin = coords.min(axis=0)
    keys = voxel_keys(coords, origin, voxel_size)

    sums: dict[tuple[int, int, int], dict[int, list]] = {}
    for i in range(feats.shape[0]):
        key = (int(keys[i, 0]), int(keys[i, 1]), int(keys[i, 2]))
        per_view = sums.setdefault(key, {})
        acc = per_view.get(int(views[i]))
        if acc is None:
            per_view[int(views[i])] = [feats[i].astype(np.float64), 1]
        else:
            acc[0] = acc[0] + feats[i].astype(np.float64)
            acc[1] += 1

    entries: dict[tuple[int, int, int], list[Prototype]] = {}
    for key, per_view in sums.items():
        protos = []
        for view_id, (total, count) in per_view.items():
            mean = total / count
            norm = float(np.linalg.norm(mean))
            if norm < NORM_EPS:
                continue
            protos.append(Prototype(view_id, mean / norm, count))
        if protos:
            entries[key] = protos
    return VoxelTable(float(voxel_size), origin, entries)


def _content_order(vectors: list[np.ndarray]) -> list[int]:
    """Indices sorting vectors by raw bytes; label-independent reduction order."""
    return sorted(range(len(vectors)), key=lambda i: vectors[i].tobytes())


def scene_score(table: VoxelTable) -> SceneScore:
    """Pair-weighted cross-view consistency over a voxel table.

    Per voxel the pair-cosine sum is computed through the identity
    sum_{t<t'} p_t . p_t' = (|sum p|^2 - sum |p|^2) / 2, with prototypes
    reduced in content order so relabeling views cannot perturb float
    summation. Voxels seen by fewer than two views contribute nothing;
    same-view tokens were already merged into one prototype and therefore
    never self-match.
    """
    numerator = 0.0
    pair_count = 0
    multiview = 0
    for protos in table.entries.values():
        if len(protos) < 2:
            continue
        multiview += 1
        vectors = [p.vector for p in protos]
        stacked = np.stack([vectors[i] for i in _content_order(vectors)])
        total = stacked.sum(axis=0)
        sq = float(np.einsum("ij,ij->", stacked, stacked))
        numerator += (float(total @ total) - sq) / 2.0
        v = len(protos)
        pair_count += v * (v - 1) // 2
    score = numerator / pair_count if pair_count > 0 else math.nan
    return SceneScore(score, pair_count, len(table.entries), multiview)


def scene_score_bruteforce(
    cloud: TokenCloud, voxel_size: float = DEFAULT_VOXEL_SIZE
) -> SceneScore:
    """Reference scorer: sort-and-scan grouping, explicit pair enumeration.

    Independent of the hash-table path: tokens are ordered by lexicographic
    (voxel key, view id) sort, prototype means come from scanning the sorted
    runs, and every cross-view pair cosine is computed one dot product at a
    time with explicit renormalization. Quadratic in prototypes per voxel.
    """
    if voxel_size <= 0:
        raise ValueError(f"voxel size must be positive, got {voxel_size}")
    feats, coords, views = _active(cloud)
    origin = coords.min(axis=0)
    keys = voxel_keys(coords, origin, voxel_size)

    order = np.lexsort((views, keys[:, 2], keys[:, 1], keys[:, 0]))
    keys = keys[order]
    views = views[order]
    feats = feats[order].astype(np.float64)

    numerator = 0.0
    pair_count = 0
    voxel_count = 0
    multiview = 0
    n = feats.shape[0]
    start = 0
    while start < n:
        stop = start
        while stop < n and np.array_equal(keys[stop], keys[start]):
            stop += 1
        protos: list[np.ndarray] = []
        run = start
        while run < stop:
            run_stop = run
            while run_stop < stop and views[run_stop] == views[run]:
                run_stop += 1
            mean = feats[run:run_stop].sum(axis=0) / (run_stop - run)
            if float(np.linalg.norm(mean)) >= NORM_EPS:
                protos.append(mean)
            run = run_stop
        if protos:
            voxel_count += 1
        if len(protos) >= 2:
            multiview += 1
            protos = [protos[i] for i in _content_order(protos)]
            for a in range(len(protos)):
                for b in range(a + 1, len(protos)):
                    pa, pb = protos[a], protos[b]
                    numerator += float(pa @ pb) / (
                        float(np.linalg.norm(pa)) * float(np.linalg.norm(pb))
                    )
                    pair_count += 1
        start = stop

    score = numerator / pair_count if pair_count > 0 else math.nan
    return SceneScore(score, pair_count, voxel_count, multiview)


def dataset_score(scores: Sequence[SceneScore]) -> DatasetScore:
    """Mean and sample standard deviation over the non-NaN scene scores.

    NaN scenes are counted but excluded; with fewer than two valid scenes
    the standard deviation is undefined and reported as NaN, and an empty
    or all-NaN input yields a NaN mean.
    """
    values = [s.score for s in scores if not math.isnan(s.score)]
    nan_count = len(scores) - len(values)
    if not values:
        return DatasetScore(math.nan, math.nan, 0, nan_count)
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size >= 2 else math.nan
    return DatasetScore(mean, std, len(values), nan_count)


def write_score_report(
    path, scene_ids: Sequence[str], scores: Sequence[SceneScore]
) -> None:
    """Per-scene CSV report: scene_id, score, pair_count, multiview_voxel_count."""
    if len(scene_ids) != len(scores):
        raise ValueError("scene_ids and scores must align")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scene_id", "score", "pair_count", "multiview_voxel_count"])
        for sid, s in zip(scene_ids, scores):
            writer.writerow([sid, repr(s.score), s.pair_count, s.multiview_voxel_count])


def build_token_cloud(
    scene: PosedScene,
    grid: TokenGrid,
    mode: str = "include_zero_depth",
) -> TokenCloud:
    """Pair a scene's pooled 3D coordinates with a feature token grid.

    When the grid's frame count differs from the scene's, the scene frames
    are resampled with endpoint-anchored nearest indices to match. Each
    selected frame becomes one view: its depth is unprojected, pooled down
    to the grid's h x w token layout in the requested mode, and flattened
    alongside the frame's feature tokens.
    """
    idx = anchored_indices(len(scene.frames), grid.frames)
    feats = []
    coords = []
    views = []
    valid = []
    for out_pos, frame_idx in enumerate(idx):
        frame = scene.frames[int(frame_idx)]
        dense, dense_mask = unproject_depth(frame, scene.axis_align)
        tokens, token_mask = pool_world_coords(
            dense, dense_mask, grid.rows, grid.cols, mode=mode
        )
        feats.append(grid.values[out_pos].reshape(-1, grid.channels))
        coords.append(tokens.reshape(-1, 3))
        views.append(np.full(grid.tokens_per_frame, out_pos, dtype=np.int64))
        valid.append(token_mask.reshape(-1))
    return TokenCloud(
        np.concatenate(feats),
        np.concatenate(coords),
        np.concatenate(views),
        np.concatenate(valid),
    )
